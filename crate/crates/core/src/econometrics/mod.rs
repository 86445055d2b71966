//! Least squares, the volatility-activity regressions and Granger causality.

mod design;
mod granger;
mod table;

pub use design::{
    build_design, fit_volatility_model, Design, ExchangeKind, ModelSpec, Regressor, RegressorGroup, VolModel,
};
pub use granger::{granger_test, granger_test_named, GrangerResult};
pub use table::{granger_table_csv, granger_table_text, regression_table_csv, regression_table_text, stars};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::qr_least_squares;
use crate::stats;

/// Diagonal-to-norm ratio below which a standardized column counts as
/// linearly dependent on the columns before it.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconError {
    #[error("rank deficient design: `{column}` is collinear with [{}]", .partners.join(", "))]
    RankDeficient { column: String, partners: Vec<String> },
    #[error("insufficient observations: {rows} rows for {cols} columns")]
    InsufficientObservations { rows: usize, cols: usize },
    #[error("date misalignment in `{series}`: {detail}")]
    DateMisalignment { series: String, detail: String },
    #[error("roster entry `{0}` missing from the decomposed set")]
    RosterMissing(String),
    #[error("roster violation: {0}")]
    RosterViolation(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no lag order in the grid could be fitted: {0}")]
    NoFeasibleLag(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Covariance {
    /// Homoskedastic `s^2 (X'X)^{-1}`.
    #[default]
    Classical,
    /// White HC1 sandwich with the `n / (n - k)` correction.
    Hc1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub aic: f64,
    pub rss: f64,
    pub residuals: Vec<f64>,
    pub nobs: usize,
    pub covariance: Covariance,
    /// Lag order chosen by [`fit_volatility_model`]; `None` for plain fits.
    pub lags: Option<usize>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.std_errors[i])
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// OLS with classical standard errors.
pub fn ols(names: &[String], columns: &[Vec<f64>], response: &[f64]) -> Result<RegressionResult, EconError> {
    ols_with(names, columns, response, Covariance::Classical)
}

/// OLS on a column-major design.
///
/// Columns are divided by their root-mean-square before factorization and
/// the estimates are mapped back (`b_j = b*_j / s_j`, `se_j = se*_j / s_j`);
/// t-statistics are unaffected by the scaling.
pub fn ols_with(
    names: &[String],
    columns: &[Vec<f64>],
    response: &[f64],
    covariance: Covariance,
) -> Result<RegressionResult, EconError> {
    let n = response.len();
    let k = columns.len();
    if names.len() != k {
        return Err(EconError::Invalid(format!("{} names for {} columns", names.len(), k)));
    }
    if k == 0 || n < k + 1 {
        return Err(EconError::InsufficientObservations { rows: n, cols: k });
    }
    if let Some(bad) = columns.iter().position(|c| c.len() != n) {
        return Err(EconError::Invalid(format!("column `{}` has {} rows, response has {n}", names[bad], columns[bad].len())));
    }
    if response.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(EconError::Invalid("non-finite value in design or response".into()));
    }

    let scales: Vec<f64> = columns
        .iter()
        .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt())
        .collect();
    let scaled: Vec<Vec<f64>> = columns
        .iter()
        .zip(&scales)
        .map(|(c, s)| if *s > 0.0 { c.iter().map(|v| v / s).collect() } else { c.clone() })
        .collect();

    let fit = qr_least_squares(&scaled, response, RANK_TOLERANCE).map_err(|c| EconError::RankDeficient {
        column: names[c.index].clone(),
        partners: c.partners.iter().map(|&i| names[i].clone()).collect(),
    })?;

    let rss: f64 = fit.residuals.iter().map(|e| e * e).sum();
    let df = (n - k) as f64;
    let xtx_inv = fit.xtx_inverse();
    let var_scaled: Vec<f64> = match covariance {
        Covariance::Classical => {
            let s2 = rss / df;
            (0..k).map(|j| s2 * xtx_inv[j][j]).collect()
        }
        Covariance::Hc1 => {
            // meat = sum_i e_i^2 x_i x_i'
            let mut meat = vec![vec![0.0; k]; k];
            for i in 0..n {
                let e2 = fit.residuals[i] * fit.residuals[i];
                for a in 0..k {
                    let xa = scaled[a][i] * e2;
                    for b in a..k {
                        meat[a][b] += xa * scaled[b][i];
                    }
                }
            }
            for a in 0..k {
                for b in 0..a {
                    meat[a][b] = meat[b][a];
                }
            }
            let correction = n as f64 / df;
            (0..k)
                .map(|j| {
                    let mut acc = 0.0;
                    for a in 0..k {
                        for b in 0..k {
                            acc += xtx_inv[j][a] * meat[a][b] * xtx_inv[b][j];
                        }
                    }
                    acc * correction
                })
                .collect()
        }
    };

    let coefficients: Vec<f64> = fit.coefficients.iter().zip(&scales).map(|(b, s)| b / s).collect();
    let std_errors: Vec<f64> = var_scaled.iter().zip(&scales).map(|(v, s)| v.max(0.0).sqrt() / s).collect();
    let t_stats: Vec<f64> = coefficients.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let p_values: Vec<f64> = t_stats.iter().map(|t| stats::t_two_sided_p(*t, df)).collect();

    let has_intercept = columns.iter().any(|c| {
        let first = c[0];
        first != 0.0 && c.iter().all(|v| *v == first)
    });
    let tss: f64 = if has_intercept {
        let m = stats::mean(response);
        response.iter().map(|y| (y - m) * (y - m)).sum()
    } else {
        response.iter().map(|y| y * y).sum()
    };
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let dof_total = if has_intercept { n as f64 - 1.0 } else { n as f64 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * dof_total / df;
    let aic = n as f64 * (rss / n as f64).ln() + 2.0 * k as f64;

    Ok(RegressionResult {
        names: names.to_vec(),
        coefficients,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        aic,
        rss,
        residuals: fit.residuals,
        nobs: n,
        covariance,
        lags: None,
    })
}
