//! Extreme-value (Garman-Klass) daily volatility from OHLC candles.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marketdata::Candle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolatilityError {
    #[error("degenerate candle on {date}: negative radicand {radicand:e}")]
    NegativeRadicand { date: NaiveDate, radicand: f64 },
}

/// What to do when the open/close term outweighs the high/low term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadicandPolicy {
    #[default]
    Error,
    /// Treat a negative radicand as zero volatility.
    ClampToZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityPoint {
    pub date: NaiveDate,
    pub sigma: f64,
}

/// `2 ln 2 - 1`, evaluated rather than written out.
pub fn open_close_weight() -> f64 {
    2.0 * std::f64::consts::LN_2 - 1.0
}

/// Radicand `0.5 ln(H/L)^2 - (2 ln 2 - 1) ln(O/C)^2`.
pub fn gk_radicand(candle: &Candle) -> f64 {
    let range = (candle.high / candle.low).ln();
    let body = (candle.open / candle.close).ln();
    0.5 * range * range - open_close_weight() * body * body
}

pub fn garman_klass(candle: &Candle) -> Result<VolatilityPoint, VolatilityError> {
    garman_klass_with(candle, RadicandPolicy::Error)
}

pub fn garman_klass_with(candle: &Candle, policy: RadicandPolicy) -> Result<VolatilityPoint, VolatilityError> {
    let radicand = gk_radicand(candle);
    let radicand = if radicand >= 0.0 {
        radicand
    } else {
        match policy {
            RadicandPolicy::Error => return Err(VolatilityError::NegativeRadicand { date: candle.date, radicand }),
            RadicandPolicy::ClampToZero => 0.0,
        }
    };
    Ok(VolatilityPoint { date: candle.date, sigma: radicand.sqrt() })
}

pub fn volatility_series(candles: &[Candle], policy: RadicandPolicy) -> Result<Vec<VolatilityPoint>, VolatilityError> {
    candles.iter().map(|c| garman_klass_with(c, policy)).collect()
}

/// `volatility.csv`: `date,sigma`.
pub fn write_volatility(points: &[VolatilityPoint]) -> String {
    let mut out = String::from("date,sigma\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.date, p.sigma));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn candle(o: f64, h: f64, l: f64, c: f64) -> Candle {
        Candle::new(NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(), o, h, l, c).unwrap()
    }

    #[test]
    fn flat_candle_is_zero() {
        assert_eq!(garman_klass(&candle(100.0, 100.0, 100.0, 100.0)).unwrap().sigma, 0.0);
    }

    #[test]
    fn reference_candle() {
        // 30-digit evaluation: radicand 0.00450730795725947, sigma 0.0671364875254840
        let s = garman_klass(&candle(105.0, 110.0, 100.0, 106.0)).unwrap().sigma;
        assert!((s - 0.067_136_487_525_484_04).abs() < 1e-15, "{s}");
    }

    #[test]
    fn weight_matches_literal() {
        assert!((open_close_weight() - 0.386_294_361_119_890_6).abs() < 1e-16);
    }

    #[test]
    fn negative_radicand_policy() {
        // A valid candle keeps |ln(O/C)| <= ln(H/L), so the radicand is at
        // least 0.114 ln(H/L)^2; only malformed inputs reach the error path.
        let full_body = candle(100.0, 110.0, 100.0, 110.0);
        assert!(gk_radicand(&full_body) > 0.0);
        let bad = Candle { close: 100.0 * 1.0000001, ..candle(100.0, 100.0, 100.0, 100.0) };
        assert!(gk_radicand(&bad) < 0.0);
        assert!(matches!(garman_klass(&bad), Err(VolatilityError::NegativeRadicand { .. })));
        assert_eq!(garman_klass_with(&bad, RadicandPolicy::ClampToZero).unwrap().sigma, 0.0);
    }

    #[test]
    fn series_cases() {
        assert!(volatility_series(&[], RadicandPolicy::Error).unwrap().is_empty());
        let flat = candle(5.0, 5.0, 5.0, 5.0);
        let v = volatility_series(&[flat, flat, flat], RadicandPolicy::Error).unwrap();
        assert!(v.iter().all(|p| p.sigma == 0.0));
    }

    proptest! {
        #[test]
        fn scale_invariant(o in 0.5f64..2.0, c in 0.5f64..2.0, up in 0.0f64..0.5, down in 0.0f64..0.3, k in 1e-3f64..1e6) {
            let h = o.max(c) * (1.0 + up);
            let l = o.min(c) * (1.0 - down);
            let base = Candle { date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(), open: o, high: h, low: l, close: c };
            let a = garman_klass_with(&base, RadicandPolicy::ClampToZero).unwrap().sigma;
            let b = garman_klass_with(&base.scaled(k), RadicandPolicy::ClampToZero).unwrap().sigma;
            prop_assert!(a >= 0.0 && !a.is_nan());
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) || (a - b).abs() < 1e-15);
        }

        #[test]
        fn widening_range_increases_sigma(w1 in 1e-4f64..0.2, extra in 1e-4f64..0.2) {
            let mk = |w: f64| Candle { date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(), open: 100.0, high: 100.0 * (1.0 + w), low: 100.0, close: 100.0 };
            let a = garman_klass(&mk(w1)).unwrap().sigma;
            let b = garman_klass(&mk(w1 + extra)).unwrap().sigma;
            prop_assert!(b > a);
        }
    }
}
