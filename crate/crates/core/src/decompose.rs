//! ARIMA(p,d,q) fits by conditional sum of squares and the split of an
//! activity series into expected (fitted) and unexpected (residual) parts.
//!
//! The differenced series is standardized before estimation. Pre-sample
//! observations sit at the sample mean and pre-sample innovations at zero.
//! The sum of squares is minimized by Levenberg-Marquardt, with the Jacobian
//! obtained from the innovation recursion. Parameter vectors outside the
//! stationary/invertible region are rejected during the search.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{inverse_spd, qr_least_squares, solve_spd};
use crate::marketdata::{ActivityField, ActivitySeries};
use crate::stats;

const MAX_ITERATIONS: usize = 300;
/// Sup-norm of the gradient of the mean squared standardized innovation.
const GRADIENT_TOLERANCE: f64 = 1e-8;
/// Accepted at a stall (damping exhausted) when the gradient is still this small.
const STALL_TOLERANCE: f64 = 1e-4;
/// Reflection coefficients must stay inside `1 - ROOT_MARGIN`.
const ROOT_MARGIN: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArimaError {
    #[error("series too short: need {needed} observations after differencing, have {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("no convergence after {iterations} iterations (gradient norm {gradient:.3e})")]
    NonConvergence { iterations: usize, gradient: f64 },
    #[error("estimated AR polynomial is not stationary")]
    NonStationary,
    #[error("no candidate order could be fitted: {0}")]
    NoCandidate(String),
    #[error("{0} dates for {1} observations")]
    LengthMismatch(usize, usize),
    #[error("series `{0}` is not present in the activity data")]
    MissingField(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    /// Constant term on the differenced scale (a mean when `d = 0`).
    pub drift: bool,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        ArimaOrder { p, d, q, drift: true }
    }

    /// `(0,0,0)` with a constant: the sample-mean model.
    pub fn white_noise() -> Self {
        ArimaOrder::new(0, 0, 0)
    }

    pub fn n_params(&self) -> usize {
        self.p + self.q + usize::from(self.drift)
    }

    fn validate(&self) -> Result<(), ArimaError> {
        if self.p + self.q == 0 && !self.drift {
            return Err(ArimaError::InvalidOrder(format!("{self} has no parameters")));
        }
        Ok(())
    }

    /// Ordering key for breaking AIC ties.
    fn tie_key(&self) -> (usize, usize, usize) {
        (self.d, self.p + self.q, self.p)
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)?;
        if self.drift {
            f.write_str("+c")?;
        }
        Ok(())
    }
}

/// Inclusive upper bounds on the order search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaGrid {
    pub max_p: usize,
    pub max_d: usize,
    pub max_q: usize,
    /// Whether `(0,0,0)` is a candidate. Its expected component is a
    /// constant, which duplicates the intercept of a downstream regression.
    #[serde(default = "yes")]
    pub mean_model: bool,
}

fn yes() -> bool {
    true
}

impl Default for ArimaGrid {
    fn default() -> Self {
        ArimaGrid { max_p: 5, max_d: 1, max_q: 5, mean_model: true }
    }
}

impl ArimaGrid {
    pub fn new(max_p: usize, max_d: usize, max_q: usize) -> Self {
        ArimaGrid { max_p, max_d, max_q, mean_model: true }
    }

    /// The same bounds without the constant-expectation model.
    pub fn for_regression(self) -> Self {
        ArimaGrid { mean_model: false, ..self }
    }

    pub fn orders(&self) -> Vec<ArimaOrder> {
        let mut out = Vec::new();
        for d in 0..=self.max_d {
            for p in 0..=self.max_p {
                for q in 0..=self.max_q {
                    if p + d + q == 0 && !self.mean_model {
                        continue;
                    }
                    out.push(ArimaOrder::new(p, d, q));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub ar_std_errors: Vec<f64>,
    pub ma_std_errors: Vec<f64>,
    /// Constant `c` in `w_t = c + sum phi_i w_{t-i} + e_t + sum theta_j e_{t-j}`.
    pub intercept: f64,
    /// Innovation variance `RSS / n` on the differenced scale.
    pub sigma2: f64,
    pub rss: f64,
    /// Gaussian log-likelihood evaluated at the CSS estimate.
    pub log_likelihood: f64,
    pub aic: f64,
    /// Effective sample size (length of the differenced series).
    pub nobs: usize,
    pub iterations: usize,
    /// One-step-ahead expectations on the original scale.
    pub fitted: Vec<f64>,
    /// `observed - fitted`; zero on the first `d` (warm-up) dates.
    pub residuals: Vec<f64>,
}

impl ArimaFit {
    pub fn warmup(&self) -> usize {
        self.order.d
    }
}

fn difference(series: &[f64], d: usize) -> Vec<f64> {
    let mut w = series.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|p| p[1] - p[0]).collect();
    }
    w
}

/// Stationarity of `1 - a_1 z - ... - a_k z^k` by the step-down
/// (reverse Levinson-Durbin) recursion on reflection coefficients.
pub fn is_stationary(coefficients: &[f64]) -> bool {
    let mut a = coefficients.to_vec();
    while let Some(&r) = a.last() {
        if !r.is_finite() || r.abs() >= 1.0 - ROOT_MARGIN {
            return false;
        }
        let k = a.len() - 1;
        let denom = 1.0 - r * r;
        a = (0..k).map(|j| (a[j] + r * a[k - 1 - j]) / denom).collect();
    }
    true
}

/// Invertibility of `1 + b_1 z + ... + b_k z^k`.
pub fn is_invertible(ma: &[f64]) -> bool {
    let neg: Vec<f64> = ma.iter().map(|b| -b).collect();
    is_stationary(&neg)
}

struct Css<'a> {
    z: &'a [f64],
    p: usize,
    q: usize,
    drift: bool,
}

impl Css<'_> {
    fn k(&self) -> usize {
        self.p + self.q + usize::from(self.drift)
    }

    fn split<'b>(&self, theta: &'b [f64]) -> (f64, &'b [f64], &'b [f64]) {
        let off = usize::from(self.drift);
        let c = if self.drift { theta[0] } else { 0.0 };
        (c, &theta[off..off + self.p], &theta[off + self.p..])
    }

    fn admissible(&self, theta: &[f64]) -> bool {
        let (_, ar, ma) = self.split(theta);
        theta.iter().all(|v| v.is_finite()) && is_stationary(ar) && is_invertible(ma)
    }

    fn innovations(&self, theta: &[f64]) -> Vec<f64> {
        let (c, ar, ma) = self.split(theta);
        let z = self.z;
        let mut e = vec![0.0; z.len()];
        for t in 0..z.len() {
            let mut v = z[t] - c;
            for (i, phi) in ar.iter().enumerate() {
                if t > i {
                    v -= phi * z[t - i - 1];
                }
            }
            for (j, th) in ma.iter().enumerate() {
                if t > j {
                    v -= th * e[t - j - 1];
                }
            }
            e[t] = v;
        }
        e
    }

    /// Innovations and `jac[k][t] = d e_t / d theta_k`.
    fn jacobian(&self, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let e = self.innovations(theta);
        let (_, _, ma) = self.split(theta);
        let n = e.len();
        let k = self.k();
        let off = usize::from(self.drift);
        let mut jac = vec![vec![0.0; n]; k];
        for t in 0..n {
            for (col, jc) in jac.iter_mut().enumerate() {
                let mut v = if self.drift && col == 0 {
                    -1.0
                } else if col < off + self.p {
                    let lag = col - off + 1;
                    if t >= lag {
                        -self.z[t - lag]
                    } else {
                        0.0
                    }
                } else {
                    let lag = col - off - self.p + 1;
                    if t >= lag {
                        -e[t - lag]
                    } else {
                        0.0
                    }
                };
                for (j, th) in ma.iter().enumerate() {
                    if t > j {
                        v -= th * jc[t - j - 1];
                    }
                }
                jc[t] = v;
            }
        }
        (e, jac)
    }

    /// Hannan-Rissanen: a long autoregression supplies innovation proxies,
    /// then one regression on lagged values and lagged proxies.
    fn start(&self) -> Vec<f64> {
        let k = self.k();
        let zeros = vec![0.0; k];
        let n = self.z.len();
        let long = if self.q > 0 { (2 * self.p.max(self.q) + 4).min(n / 5) } else { 0 };
        let mut ehat = vec![0.0; n];
        if long > 0 {
            let rows = long..n;
            let mut cols = vec![vec![1.0; rows.len()]];
            for lag in 1..=long {
                cols.push(rows.clone().map(|t| self.z[t - lag]).collect());
            }
            let y: Vec<f64> = rows.clone().map(|t| self.z[t]).collect();
            match qr_least_squares(&cols, &y, 1e-10) {
                Ok(fit) => ehat[long..].copy_from_slice(&fit.residuals),
                Err(_) => return zeros,
            }
        }
        let first = (long + self.q).max(self.p);
        if first + k + 1 >= n {
            return zeros;
        }
        let rows = first..n;
        let mut cols = Vec::with_capacity(k);
        if self.drift {
            cols.push(vec![1.0; rows.len()]);
        }
        for lag in 1..=self.p {
            cols.push(rows.clone().map(|t| self.z[t - lag]).collect());
        }
        for lag in 1..=self.q {
            cols.push(rows.clone().map(|t| ehat[t - lag]).collect());
        }
        let y: Vec<f64> = rows.map(|t| self.z[t]).collect();
        let mut theta = match qr_least_squares(&cols, &y, 1e-10) {
            Ok(fit) => fit.coefficients,
            Err(_) => return zeros,
        };
        let off = usize::from(self.drift);
        for _ in 0..60 {
            if self.admissible(&theta) {
                return theta;
            }
            for v in &mut theta[off..] {
                *v *= 0.9;
            }
        }
        zeros
    }
}

struct Optimum {
    theta: Vec<f64>,
    innovations: Vec<f64>,
    jtj: Vec<Vec<f64>>,
    iterations: usize,
}

fn normal_equations(e: &[f64], jac: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = jac.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut g = vec![0.0; k];
    for i in 0..k {
        g[i] = jac[i].iter().zip(e).map(|(j, e)| j * e).sum();
        for l in 0..=i {
            let v: f64 = jac[i].iter().zip(&jac[l]).map(|(a, b)| a * b).sum();
            a[i][l] = v;
            a[l][i] = v;
        }
    }
    (a, g)
}

fn levenberg_marquardt(problem: &Css<'_>) -> Result<Optimum, ArimaError> {
    let n = problem.z.len() as f64;
    let mut theta = problem.start();
    let mut lambda = 1e-3;
    let (mut e, mut jac) = problem.jacobian(&theta);
    let mut f: f64 = e.iter().map(|v| v * v).sum();
    for iteration in 0..MAX_ITERATIONS {
        let (a, g) = normal_equations(&e, &jac);
        let gradient = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / n;
        if gradient <= GRADIENT_TOLERANCE {
            return Ok(Optimum { theta, innovations: e, jtj: a, iterations: iteration });
        }
        let mut accepted = None;
        while lambda <= 1e12 {
            let mut damped = a.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * a[i][i].max(1e-12);
            }
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            if let Some(step) = solve_spd(&damped, &neg_g) {
                let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
                if problem.admissible(&cand) {
                    let ec = problem.innovations(&cand);
                    let fc: f64 = ec.iter().map(|v| v * v).sum();
                    if fc <= f {
                        accepted = Some((cand, fc));
                        lambda = (lambda / 10.0).max(1e-12);
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        match accepted {
            Some((cand, fc)) => {
                let flat = f - fc <= 1e-15 * f.max(f64::MIN_POSITIVE);
                theta = cand;
                f = fc;
                (e, jac) = problem.jacobian(&theta);
                if flat && gradient <= STALL_TOLERANCE {
                    let (a, _) = normal_equations(&e, &jac);
                    return Ok(Optimum { theta, innovations: e, jtj: a, iterations: iteration + 1 });
                }
            }
            None => {
                if gradient <= STALL_TOLERANCE {
                    return Ok(Optimum { theta, innovations: e, jtj: a, iterations: iteration });
                }
                return Err(ArimaError::NonConvergence { iterations: iteration, gradient });
            }
        }
    }
    let (_, g) = normal_equations(&e, &jac);
    let gradient = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / n;
    Err(ArimaError::NonConvergence { iterations: MAX_ITERATIONS, gradient })
}

/// Fits one order by conditional sum of squares.
pub fn fit_arima(series: &[f64], order: ArimaOrder) -> Result<ArimaFit, ArimaError> {
    order.validate()?;
    if series.iter().any(|v| !v.is_finite()) {
        return Err(ArimaError::NonFinite);
    }
    let needed = 10 * (order.p + order.q + 1);
    let got = series.len().saturating_sub(order.d);
    if got < needed {
        return Err(ArimaError::TooShort { needed, got });
    }
    let w = difference(series, order.d);
    let n = w.len();
    let mean = stats::mean(&w);
    let scale = stats::variance(&w).sqrt();
    let k = order.n_params();

    let (ar, ma, intercept, ar_se, ma_se, innovations, iterations) = if scale <= 1e-12 * mean.abs() || scale == 0.0 {
        // Constant after differencing: every order reproduces it exactly.
        let intercept = if order.drift { mean } else { 0.0 };
        (vec![0.0; order.p], vec![0.0; order.q], intercept, vec![0.0; order.p], vec![0.0; order.q], vec![0.0; n], 0)
    } else {
        let z: Vec<f64> = w.iter().map(|v| (v - mean) / scale).collect();
        let problem = Css { z: &z, p: order.p, q: order.q, drift: order.drift };
        let opt = levenberg_marquardt(&problem)?;
        let (c, ar, ma) = problem.split(&opt.theta);
        if !is_stationary(ar) {
            return Err(ArimaError::NonStationary);
        }
        let s2: f64 = opt.innovations.iter().map(|v| v * v).sum::<f64>() / (n as f64 - k as f64).max(1.0);
        let cov = inverse_spd(&opt.jtj);
        let off = usize::from(order.drift);
        let se = |i: usize| cov.as_ref().map_or(f64::NAN, |m| (s2 * m[i][i]).max(0.0).sqrt());
        let ar_se = (0..order.p).map(|i| se(off + i)).collect();
        let ma_se = (0..order.q).map(|i| se(off + order.p + i)).collect();
        let phi_sum: f64 = ar.iter().sum();
        // Back to the differenced scale: w - m = s z.
        let intercept = if order.drift { mean * (1.0 - phi_sum) + scale * c } else { 0.0 };
        let innovations = opt.innovations.iter().map(|e| scale * e).collect();
        (ar.to_vec(), ma.to_vec(), intercept, ar_se, ma_se, innovations, opt.iterations)
    };

    let mut residuals = vec![0.0; series.len()];
    residuals[order.d..].copy_from_slice(&innovations);
    let fitted: Vec<f64> = series.iter().zip(&residuals).map(|(y, r)| y - r).collect();
    let rss: f64 = innovations.iter().map(|v| v * v).sum();
    let nf = n as f64;
    let sigma2 = rss / nf;
    let log_likelihood = -0.5 * nf * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let aic = nf * sigma2.ln() + 2.0 * k as f64;
    Ok(ArimaFit {
        order,
        ar,
        ma,
        ar_std_errors: ar_se,
        ma_std_errors: ma_se,
        intercept,
        sigma2,
        rss,
        log_likelihood,
        aic,
        nobs: n,
        iterations,
        fitted,
        residuals,
    })
}

/// Fits every order in the grid (in parallel) and keeps the lowest AIC;
/// ties go to the smallest `(d, p+q, p)`.
pub fn select_fit(series: &[f64], grid: &ArimaGrid) -> Result<ArimaFit, ArimaError> {
    let orders = grid.orders();
    let fits: Vec<Result<ArimaFit, ArimaError>> = orders.par_iter().map(|o| fit_arima(series, *o)).collect();
    let mut best: Option<ArimaFit> = None;
    let mut last_error = None;
    for fit in fits {
        match fit {
            Ok(fit) => {
                let better = match &best {
                    None => true,
                    Some(b) => fit.aic < b.aic || (fit.aic == b.aic && fit.order.tie_key() < b.order.tie_key()),
                };
                if better {
                    best = Some(fit);
                }
            }
            Err(e) => last_error = Some(e),
        }
    }
    best.ok_or_else(|| ArimaError::NoCandidate(last_error.map(|e| e.to_string()).unwrap_or_else(|| "empty grid".into())))
}

pub fn select_order(series: &[f64], grid: &ArimaGrid) -> Result<ArimaOrder, ArimaError> {
    select_fit(series, grid).map(|f| f.order)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposedSeries {
    pub name: ActivityField,
    pub dates: Vec<NaiveDate>,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
    pub unexpected: Vec<f64>,
    /// Dates consumed by differencing; excluded from regressions.
    pub warmup: Vec<bool>,
    pub order: ArimaOrder,
    pub aic: f64,
}

impl DecomposedSeries {
    fn from_fit(name: ActivityField, dates: &[NaiveDate], observed: &[f64], fit: ArimaFit) -> Self {
        let d = fit.order.d;
        DecomposedSeries {
            name,
            dates: dates.to_vec(),
            observed: observed.to_vec(),
            expected: fit.fitted,
            unexpected: fit.residuals,
            warmup: (0..observed.len()).map(|t| t < d).collect(),
            order: fit.order,
            aic: fit.aic,
        }
    }
}

pub fn decompose(
    name: ActivityField,
    dates: &[NaiveDate],
    series: &[f64],
    grid: &ArimaGrid,
) -> Result<DecomposedSeries, ArimaError> {
    if dates.len() != series.len() {
        return Err(ArimaError::LengthMismatch(dates.len(), series.len()));
    }
    let fit = select_fit(series, grid)?;
    Ok(DecomposedSeries::from_fit(name, dates, series, fit))
}

/// Decomposes several columns of one activity series, in parallel.
pub fn decompose_activity(
    activity: &ActivitySeries,
    fields: &[ActivityField],
    grid: &ArimaGrid,
) -> Result<Vec<DecomposedSeries>, ArimaError> {
    let dates = activity.dates();
    fields
        .par_iter()
        .map(|f| {
            let column = activity.column(*f).ok_or_else(|| ArimaError::MissingField(f.name().into()))?;
            decompose(*f, &dates, &column, grid)
        })
        .collect()
}

/// `date,expected,unexpected,warmup_flag`.
pub fn write_decomposed(series: &DecomposedSeries) -> String {
    let mut out = String::from("date,expected,unexpected,warmup_flag\n");
    for t in 0..series.dates.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            series.dates[t],
            series.expected[t],
            series.unexpected[t],
            u8::from(series.warmup[t])
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderSidecar {
    pub name: String,
    pub order: ArimaOrder,
    pub aic: f64,
    pub warmup: usize,
}

pub fn order_sidecar(series: &DecomposedSeries) -> OrderSidecar {
    OrderSidecar {
        name: series.name.name().to_string(),
        order: series.order,
        aic: series.aic,
        warmup: series.warmup.iter().filter(|w| **w).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let e = noise(seed, n + 200);
        let mut x = 0.0;
        let mut out = Vec::with_capacity(n);
        for (t, v) in e.iter().enumerate() {
            x = phi * x + v;
            if t >= 200 {
                out.push(x);
            }
        }
        out
    }

    fn day(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + chrono::Days::new(i as u64)
    }

    #[test]
    fn constant_series_mean_model() {
        let y = vec![4.25; 40];
        let fit = fit_arima(&y, ArimaOrder::white_noise()).unwrap();
        assert!(fit.fitted.iter().all(|v| *v == 4.25));
        assert!(fit.residuals.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn white_noise_mean_model_demeans() {
        let y: Vec<f64> = noise(11, 300).iter().map(|v| 3.0 + v).collect();
        let m = stats::mean(&y);
        let fit = fit_arima(&y, ArimaOrder::white_noise()).unwrap();
        for t in 0..y.len() {
            assert!((fit.fitted[t] - m).abs() < 1e-10);
            assert!((fit.residuals[t] - (y[t] - m)).abs() < 1e-10);
        }
    }

    #[test]
    fn ar1_coefficient_recovered() {
        let y = ar1(2024, 2000, 0.8);
        let fit = fit_arima(&y, ArimaOrder::new(1, 0, 0)).unwrap();
        let tol = 3.0 * ((1.0 - 0.64) / 2000.0f64).sqrt();
        assert!((fit.ar[0] - 0.8).abs() <= tol, "phi = {}", fit.ar[0]);
        assert!((fit.ar_std_errors[0] - (0.36f64 / 2000.0).sqrt()).abs() < 0.003);
    }

    #[test]
    fn ma1_coefficient_recovered() {
        let e = noise(5, 3001);
        let y: Vec<f64> = (1..3001).map(|t| e[t] + 0.5 * e[t - 1]).collect();
        let fit = fit_arima(&y, ArimaOrder::new(0, 0, 1)).unwrap();
        assert!((fit.ma[0] - 0.5).abs() < 0.06, "theta = {}", fit.ma[0]);
    }

    #[test]
    fn white_noise_selection_prefers_mean_model() {
        let y = noise(99, 2000);
        let grid = ArimaGrid::new(2, 0, 2);
        let base = fit_arima(&y, ArimaOrder::white_noise()).unwrap().aic;
        for order in grid.orders() {
            if let Ok(fit) = fit_arima(&y, order) {
                assert!(base <= fit.aic + 4.0, "{order}: {} vs {base}", fit.aic);
            }
        }
    }

    #[test]
    fn ar1_selection_is_stationary_with_ar_term() {
        let y = ar1(7, 2000, 0.8);
        let order = select_order(&y, &ArimaGrid::new(2, 1, 2)).unwrap();
        assert!(order.p >= 1 && order.d == 0, "{order}");
    }

    #[test]
    fn short_series_has_no_candidate() {
        let y = noise(1, 8);
        assert!(matches!(select_order(&y, &ArimaGrid::default()), Err(ArimaError::NoCandidate(_))));
        assert!(matches!(fit_arima(&y, ArimaOrder::new(1, 0, 0)), Err(ArimaError::TooShort { needed: 20, got: 8 })));
    }

    #[test]
    fn invalid_orders() {
        let o = ArimaOrder { p: 0, d: 0, q: 0, drift: false };
        assert!(matches!(fit_arima(&[1.0; 50], o), Err(ArimaError::InvalidOrder(_))));
        assert!(matches!(fit_arima(&[1.0, f64::NAN, 2.0], ArimaOrder::white_noise()), Err(ArimaError::NonFinite)));
    }

    #[test]
    fn random_walk_warmup_and_reconstruction() {
        let steps = noise(3, 400);
        let y: Vec<f64> = steps.iter().scan(100.0, |s, v| {
            *s += v;
            Some(*s)
        }).collect();
        let fit = fit_arima(&y, ArimaOrder::new(1, 1, 0)).unwrap();
        assert_eq!(fit.residuals[0], 0.0);
        assert_eq!(fit.fitted[0], y[0]);
        for t in 0..y.len() {
            assert!((fit.fitted[t] + fit.residuals[t] - y[t]).abs() <= 1e-12 * y[t].abs());
        }
        assert_eq!(fit.nobs, 399);
    }

    #[test]
    fn innovation_variance_ratio() {
        let y = ar1(31, 2000, 0.8);
        let dates: Vec<NaiveDate> = (0..y.len()).map(day).collect();
        let d = decompose(ActivityField::Volume, &dates, &y, &ArimaGrid::default()).unwrap();
        let ratio = stats::variance(&d.unexpected) / stats::variance(&y);
        assert!((ratio / 0.36 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn stationarity_checks() {
        assert!(is_stationary(&[0.8]));
        assert!(!is_stationary(&[1.0]));
        assert!(!is_stationary(&[0.5, 0.6]));
        assert!(is_stationary(&[0.5, 0.3]));
        assert!(is_stationary(&[1.2, -0.5]));
        assert!(is_invertible(&[0.9]));
        assert!(!is_invertible(&[-1.1]));
    }

    #[test]
    fn regression_grid_drops_mean_model() {
        let g = ArimaGrid::new(1, 1, 1);
        assert_eq!(g.orders().len(), 8);
        let r = g.for_regression().orders();
        assert_eq!(r.len(), 7);
        assert!(!r.contains(&ArimaOrder::white_noise()));
        let y = noise(12, 400);
        assert_ne!(select_order(&y, &ArimaGrid::new(1, 0, 1).for_regression()).unwrap(), ArimaOrder::white_noise());
    }

    #[test]
    fn csv_and_sidecar() {
        let y = ar1(8, 120, 0.5);
        let dates: Vec<NaiveDate> = (0..y.len()).map(day).collect();
        let d = decompose(ActivityField::OiShort, &dates, &y, &ArimaGrid::new(1, 1, 1)).unwrap();
        let csv = write_decomposed(&d);
        assert!(csv.starts_with("date,expected,unexpected,warmup_flag\n2021-01-01,"));
        assert_eq!(csv.lines().count(), 121);
        let side = order_sidecar(&d);
        assert_eq!(side.name, "oi_short");
        assert_eq!(side.warmup, d.order.d);
    }
}
