use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::marketdata::Candle;

pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriceModel {
    #[default]
    Gbm,
    JumpDiffusion,
}

/// Exogenous underlying: log-price diffusion sampled `steps_per_day` times a day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceProcess {
    pub model: PriceModel,
    pub initial_price: f64,
    /// Annual drift of the log price.
    pub drift: f64,
    /// Annualized volatility.
    pub volatility: f64,
    /// Jumps per year.
    pub jump_intensity: f64,
    pub jump_mean: f64,
    pub jump_std: f64,
    pub steps_per_day: u32,
    pub seed: u64,
}

impl Default for PriceProcess {
    fn default() -> Self {
        PriceProcess {
            model: PriceModel::Gbm,
            initial_price: 30_000.0,
            drift: 0.0,
            volatility: 0.6,
            jump_intensity: 0.0,
            jump_mean: 0.0,
            jump_std: 0.0,
            steps_per_day: 48,
            seed: 0,
        }
    }
}

impl PriceProcess {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.initial_price > 0.0 && self.initial_price.is_finite()) {
            return Err(AgentError::Config(format!("initial price {} must be positive", self.initial_price)));
        }
        if !(self.volatility >= 0.0 && self.volatility.is_finite()) {
            return Err(AgentError::Config(format!("volatility {} must be non-negative", self.volatility)));
        }
        if !self.drift.is_finite() {
            return Err(AgentError::Config("drift must be finite".into()));
        }
        if self.steps_per_day == 0 {
            return Err(AgentError::Config("steps per day must be at least 1".into()));
        }
        if self.model == PriceModel::JumpDiffusion
            && !(self.jump_intensity >= 0.0 && self.jump_std >= 0.0 && self.jump_mean.is_finite())
        {
            return Err(AgentError::Config("jump intensity and size spread must be non-negative".into()));
        }
        Ok(())
    }

    /// Per-step standard deviation of the log price.
    pub fn step_volatility(&self) -> f64 {
        self.volatility / (DAYS_PER_YEAR * self.steps_per_day as f64).sqrt()
    }
}

/// Prices at every step boundary: `days * steps_per_day + 1` points.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub start: NaiveDate,
    pub steps_per_day: u32,
    pub points: Vec<f64>,
}

impl PricePath {
    pub fn days(&self) -> usize {
        (self.points.len() - 1) / self.steps_per_day as usize
    }

    /// Daily OHLC from the sampled points; day `d` spans points
    /// `d * n ..= (d + 1) * n`.
    pub fn candles(&self) -> Vec<Candle> {
        candles_from_points(self.start, self.steps_per_day, &self.points)
    }
}

pub fn candles_from_points(start: NaiveDate, steps_per_day: u32, points: &[f64]) -> Vec<Candle> {
    let n = steps_per_day as usize;
    let days = points.len().saturating_sub(1) / n;
    (0..days)
        .map(|d| {
            let window = &points[d * n..=(d + 1) * n];
            let high = window.iter().copied().fold(f64::MIN, f64::max);
            let low = window.iter().copied().fold(f64::MAX, f64::min);
            Candle {
                date: start + Duration::days(d as i64),
                open: window[0],
                high,
                low,
                close: window[n],
            }
        })
        .collect()
}

pub fn simulate_path(process: &PriceProcess, start: NaiveDate, days: usize) -> Result<PricePath, AgentError> {
    process.validate()?;
    if days == 0 {
        return Err(AgentError::Config("days must be at least 1".into()));
    }
    let n = process.steps_per_day as usize;
    let dt = 1.0 / (DAYS_PER_YEAR * n as f64);
    let sd = process.volatility * dt.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(process.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let jumps = match process.model {
        PriceModel::JumpDiffusion if process.jump_intensity > 0.0 => {
            Some(Poisson::new(process.jump_intensity * dt).map_err(|e| AgentError::Config(e.to_string()))?)
        }
        _ => None,
    };
    // Compensate jumps so the drift parameter keeps its meaning.
    let kappa = (process.jump_mean + 0.5 * process.jump_std * process.jump_std).exp() - 1.0;
    let compensator = if jumps.is_some() { process.jump_intensity * kappa } else { 0.0 };
    let mu = (process.drift - 0.5 * process.volatility * process.volatility - compensator) * dt;

    let mut points = Vec::with_capacity(days * n + 1);
    let mut log_return = 0.0;
    points.push(process.initial_price);
    for _ in 0..days * n {
        let mut step = mu + sd * normal.sample(&mut rng);
        if let Some(poisson) = &jumps {
            let count = poisson.sample(&mut rng) as u64;
            for _ in 0..count {
                step += process.jump_mean + process.jump_std * normal.sample(&mut rng);
            }
        }
        log_return += step;
        points.push(process.initial_price * f64::exp(log_return));
    }
    Ok(PricePath { start, steps_per_day: process.steps_per_day, points })
}

/// Daily candles of a freshly simulated path.
pub fn generate_path(process: &PriceProcess, start: NaiveDate, days: usize) -> Result<Vec<Candle>, AgentError> {
    Ok(simulate_path(process, start, days)?.candles())
}
