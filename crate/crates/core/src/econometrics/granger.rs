use serde::{Deserialize, Serialize};

use super::{ols, EconError};
use crate::stats;

/// F-test that lags of `cause` add explanatory power for `effect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub cause: String,
    pub effect: String,
    pub max_lag: usize,
    pub f_stat: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub nobs: usize,
}

impl GrangerResult {
    /// `x→y` label.
    pub fn direction(&self) -> String {
        format!("{}→{}", self.cause, self.effect)
    }

    pub fn null_hypothesis(&self) -> String {
        format!("{} does not Granger-cause {}", self.cause, self.effect)
    }
}

pub fn granger_test(x: &[f64], y: &[f64], max_lag: usize) -> Result<GrangerResult, EconError> {
    granger_test_named(x, y, max_lag, "x", "y")
}

/// Restricted model: `y_t` on a constant and `y_{t-1..t-L}`. Unrestricted
/// adds `x_{t-1..t-L}`. `F = ((RSS_r - RSS_u) / L) / (RSS_u / (n - 2L - 1))`.
pub fn granger_test_named(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
    cause: &str,
    effect: &str,
) -> Result<GrangerResult, EconError> {
    if x.len() != y.len() {
        return Err(EconError::Invalid(format!("series lengths differ: {} vs {}", x.len(), y.len())));
    }
    if max_lag == 0 {
        return Err(EconError::Invalid("max lag must be at least 1".into()));
    }
    let len = y.len();
    if len <= 3 * max_lag + 5 {
        return Err(EconError::InsufficientObservations { rows: len, cols: 2 * max_lag + 1 });
    }
    let n = len - max_lag;
    let response: Vec<f64> = y[max_lag..].to_vec();
    let lagged = |s: &[f64], lag: usize| -> Vec<f64> { (max_lag..len).map(|t| s[t - lag]).collect() };

    let mut names = vec!["const".to_string()];
    let mut columns = vec![vec![1.0; n]];
    for lag in 1..=max_lag {
        names.push(format!("{effect}_lag{lag}"));
        columns.push(lagged(y, lag));
    }
    let restricted = ols(&names, &columns, &response)?;
    for lag in 1..=max_lag {
        names.push(format!("{cause}_lag{lag}"));
        columns.push(lagged(x, lag));
    }
    let unrestricted = ols(&names, &columns, &response)?;

    let df_den = n - 2 * max_lag - 1;
    let f_stat = ((restricted.rss - unrestricted.rss) / max_lag as f64) / (unrestricted.rss / df_den as f64);
    let f_stat = f_stat.max(0.0);
    let p_value = stats::f_sf(f_stat, max_lag as f64, df_den as f64).clamp(0.0, 1.0);
    Ok(GrangerResult {
        cause: cause.to_string(),
        effect: effect.to_string(),
        max_lag,
        f_stat,
        p_value,
        df_num: max_lag,
        df_den,
        nobs: n,
    })
}
