use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ols_with, Covariance, EconError, RegressionResult};
use crate::decompose::DecomposedSeries;
use crate::marketdata::ActivityField;
use crate::volatility::VolatilityPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeKind {
    /// Order-book venue; long and short open interest coincide.
    #[serde(alias = "lob")]
    Cex,
    Vamm,
    Oracle,
}

impl ExchangeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExchangeKind::Cex => "cex",
            ExchangeKind::Vamm => "vamm",
            ExchangeKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for ExchangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExchangeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cex" | "lob" | "lob-cex" => Ok(ExchangeKind::Cex),
            "vamm" => Ok(ExchangeKind::Vamm),
            "oracle" => Ok(ExchangeKind::Oracle),
            other => Err(format!("unknown exchange kind `{other}` (expected cex|vamm|oracle)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolModel {
    /// Lagged volatility plus open interest, volume and liquidations.
    Activity,
    /// `Activity` plus average leverage per side.
    Leverage,
}

impl VolModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            VolModel::Activity => "activity",
            VolModel::Leverage => "leverage",
        }
    }
}

impl FromStr for VolModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "activity" => Ok(VolModel::Activity),
            "leverage" => Ok(VolModel::Leverage),
            other => Err(format!("unknown model `{other}` (expected activity|leverage)")),
        }
    }
}

/// Regressor families, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RegressorGroup {
    Activity,
    Liquidation,
    Leverage,
}

impl RegressorGroup {
    fn members(&self) -> &'static [ActivityField] {
        match self {
            RegressorGroup::Activity => &[ActivityField::OiLong, ActivityField::OiShort, ActivityField::Volume],
            RegressorGroup::Liquidation => &[ActivityField::LiqLong, ActivityField::LiqShort],
            RegressorGroup::Leverage => &[ActivityField::LevLong, ActivityField::LevShort],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regressor {
    Expected(ActivityField),
    Unexpected(ActivityField),
}

impl Regressor {
    pub fn column_name(&self) -> String {
        match self {
            Regressor::Expected(f) => format!("expected_{}", f.name()),
            Regressor::Unexpected(f) => format!("unexpected_{}", f.name()),
        }
    }

    pub fn field(&self) -> ActivityField {
        match self {
            Regressor::Expected(f) | Regressor::Unexpected(f) => *f,
        }
    }
}

/// Lag count plus the set of activity series entering the regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub lags: usize,
    pub roster: Vec<ActivityField>,
    pub exchange: ExchangeKind,
}

impl ModelSpec {
    /// Standard roster for a model/exchange pair. Order-book venues drop
    /// long open interest; leverage is undefined on the virtual AMM.
    pub fn template(model: VolModel, exchange: ExchangeKind, lags: usize) -> Result<Self, EconError> {
        let mut roster = vec![
            ActivityField::OiLong,
            ActivityField::OiShort,
            ActivityField::Volume,
            ActivityField::LiqLong,
            ActivityField::LiqShort,
        ];
        if exchange == ExchangeKind::Cex {
            roster.retain(|f| *f != ActivityField::OiLong);
        }
        if model == VolModel::Leverage {
            if exchange == ExchangeKind::Vamm {
                return Err(EconError::UnsupportedModel(
                    "the leverage model needs per-position leverage, which cross-margined vamm venues do not define".into(),
                ));
            }
            roster.extend([ActivityField::LevLong, ActivityField::LevShort]);
        }
        let spec = ModelSpec { lags, roster, exchange };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), EconError> {
        if self.lags == 0 {
            return Err(EconError::Invalid("lag count must be at least 1".into()));
        }
        if self.exchange == ExchangeKind::Cex && self.roster.contains(&ActivityField::OiLong) {
            return Err(EconError::RosterViolation(
                "order-book venues carry identical long/short open interest; oi_long may not enter".into(),
            ));
        }
        if self.exchange == ExchangeKind::Vamm
            && self.roster.iter().any(|f| matches!(f, ActivityField::LevLong | ActivityField::LevShort))
        {
            return Err(EconError::UnsupportedModel("leverage regressors on a vamm venue".into()));
        }
        Ok(())
    }

    pub fn with_lags(&self, lags: usize) -> Self {
        ModelSpec { lags, ..self.clone() }
    }

    /// Regressors in column order: for each family, expected then unexpected.
    pub fn regressors(&self) -> Vec<Regressor> {
        let mut out = Vec::new();
        for group in [RegressorGroup::Activity, RegressorGroup::Liquidation, RegressorGroup::Leverage] {
            let present: Vec<ActivityField> =
                group.members().iter().copied().filter(|f| self.roster.contains(f)).collect();
            out.extend(present.iter().map(|f| Regressor::Expected(*f)));
            out.extend(present.iter().map(|f| Regressor::Unexpected(*f)));
        }
        out
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec!["mu".to_string()];
        names.extend((1..=self.lags).map(|i| format!("sigma_lag{i}")));
        names.extend(self.regressors().iter().map(Regressor::column_name));
        names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub response: Vec<f64>,
    pub dates: Vec<NaiveDate>,
}

impl Design {
    pub fn rows(&self) -> usize {
        self.response.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }
}

/// Assembles the response `sigma_t` and the columns
/// `[1, sigma_{t-1..t-m}, regressors...]`.
///
/// Rows lacking a full lag history or touching a warm-up observation of any
/// regressor are dropped.
pub fn build_design(
    vol: &[VolatilityPoint],
    decomposed: &[DecomposedSeries],
    spec: &ModelSpec,
) -> Result<Design, EconError> {
    build_design_from(vol, decomposed, spec, spec.lags)
}

fn build_design_from(
    vol: &[VolatilityPoint],
    decomposed: &[DecomposedSeries],
    spec: &ModelSpec,
    first_row: usize,
) -> Result<Design, EconError> {
    spec.validate()?;
    let regressors = spec.regressors();
    let mut sources: Vec<(&DecomposedSeries, Regressor)> = Vec::with_capacity(regressors.len());
    for r in &regressors {
        let series = decomposed
            .iter()
            .find(|d| d.name == r.field())
            .ok_or_else(|| EconError::RosterMissing(r.field().name().to_string()))?;
        sources.push((series, *r));
    }
    for (series, _) in &sources {
        if series.dates.len() != vol.len() {
            return Err(EconError::DateMisalignment {
                series: series.name.name().into(),
                detail: format!("{} observations vs {} volatility points", series.dates.len(), vol.len()),
            });
        }
        if let Some(i) = series.dates.iter().zip(vol).position(|(d, v)| *d != v.date) {
            return Err(EconError::DateMisalignment {
                series: series.name.name().into(),
                detail: format!("row {i}: {} vs volatility date {}", series.dates[i], vol[i].date),
            });
        }
    }

    let names = spec.column_names();
    let k = names.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut response = Vec::new();
    let mut dates = Vec::new();
    for t in first_row.max(spec.lags)..vol.len() {
        if sources.iter().any(|(s, _)| s.warmup[t]) {
            continue;
        }
        response.push(vol[t].sigma);
        dates.push(vol[t].date);
        columns[0].push(1.0);
        for i in 1..=spec.lags {
            columns[i].push(vol[t - i].sigma);
        }
        for (j, (s, r)) in sources.iter().enumerate() {
            let v = match r {
                Regressor::Expected(_) => s.expected[t],
                Regressor::Unexpected(_) => s.unexpected[t],
            };
            columns[1 + spec.lags + j].push(v);
        }
    }
    Ok(Design { names, columns, response, dates })
}

/// Fits the model for every lag count in `lag_grid` and keeps the lowest
/// AIC (ties go to the smaller lag).
///
/// Candidates are compared on the common sample that starts after the
/// largest lag in the grid; the winner is then refitted on every row it can
/// use.
pub fn fit_volatility_model(
    vol: &[VolatilityPoint],
    decomposed: &[DecomposedSeries],
    template: &ModelSpec,
    lag_grid: &[usize],
    covariance: Covariance,
) -> Result<RegressionResult, EconError> {
    let mut grid: Vec<usize> = lag_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() || grid[0] == 0 {
        return Err(EconError::Invalid("lag grid must be non-empty with lags >= 1".into()));
    }
    let common_start = *grid.last().unwrap();

    let scored: Vec<(usize, Result<f64, EconError>)> = grid
        .par_iter()
        .map(|&m| {
            let spec = template.with_lags(m);
            let aic = build_design_from(vol, decomposed, &spec, common_start)
                .and_then(|d| ols_with(&d.names, &d.columns, &d.response, covariance))
                .map(|fit| fit.aic);
            (m, aic)
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut last_err = None;
    for (m, aic) in scored {
        match aic {
            Ok(aic) if best.is_none_or(|(_, b)| aic < b) => best = Some((m, aic)),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let (m, _) = match (best, last_err) {
        (Some(b), _) => b,
        // Input problems are the same for every lag; report them as they are.
        (None, Some(e @ (EconError::DateMisalignment { .. } | EconError::RosterMissing(_) | EconError::RosterViolation(_)))) => {
            return Err(e)
        }
        (None, e) => {
            return Err(EconError::NoFeasibleLag(e.map(|e| e.to_string()).unwrap_or_else(|| "empty grid".into())))
        }
    };
    let spec = template.with_lags(m);
    let design = build_design(vol, decomposed, &spec)?;
    let mut fit = ols_with(&design.names, &design.columns, &design.response, covariance)?;
    fit.lags = Some(m);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::ArimaOrder;

    fn day(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 1, 1).unwrap() + chrono::Days::new(i as u64)
    }

    fn series(field: ActivityField, n: usize, offset: f64) -> DecomposedSeries {
        let expected: Vec<f64> = (0..n).map(|i| offset + i as f64).collect();
        let unexpected: Vec<f64> = (0..n).map(|i| ((i * 7 + offset as usize) % 11) as f64 - 5.0).collect();
        DecomposedSeries {
            name: field,
            dates: (0..n).map(day).collect(),
            observed: expected.iter().zip(&unexpected).map(|(a, b)| a + b).collect(),
            expected,
            unexpected,
            warmup: vec![false; n],
            order: ArimaOrder::white_noise(),
            aic: 0.0,
        }
    }

    fn vol(n: usize) -> Vec<VolatilityPoint> {
        (0..n).map(|i| VolatilityPoint { date: day(i), sigma: 0.02 + 0.001 * ((i * 13) % 7) as f64 }).collect()
    }

    fn full_set(n: usize) -> Vec<DecomposedSeries> {
        ActivityField::ALL.iter().enumerate().map(|(i, f)| series(*f, n, 100.0 * (i + 1) as f64)).collect()
    }

    #[test]
    fn dex_roster_shape() {
        let spec = ModelSpec::template(VolModel::Activity, ExchangeKind::Oracle, 2).unwrap();
        let d = build_design(&vol(100), &full_set(100), &spec).unwrap();
        assert_eq!((d.rows(), d.cols()), (98, 13));
        assert_eq!(
            d.names,
            vec![
                "mu",
                "sigma_lag1",
                "sigma_lag2",
                "expected_oi_long",
                "expected_oi_short",
                "expected_volume",
                "unexpected_oi_long",
                "unexpected_oi_short",
                "unexpected_volume",
                "expected_liq_long",
                "expected_liq_short",
                "unexpected_liq_long",
                "unexpected_liq_short",
            ]
        );
    }

    #[test]
    fn row_spot_check() {
        let spec = ModelSpec::template(VolModel::Activity, ExchangeKind::Cex, 2).unwrap();
        let v = vol(30);
        let set = full_set(30);
        let d = build_design(&v, &set, &spec).unwrap();
        // Row 0 is day 2.
        let vol_series = set.iter().find(|s| s.name == ActivityField::Volume).unwrap();
        let row: Vec<f64> = d.columns.iter().map(|c| c[0]).collect();
        assert_eq!(d.dates[0], day(2));
        assert_eq!(d.response[0], v[2].sigma);
        assert_eq!(row[1], v[1].sigma);
        assert_eq!(row[2], v[0].sigma);
        let idx = d.names.iter().position(|n| n == "unexpected_volume").unwrap();
        assert_eq!(row[idx], vol_series.unexpected[2]);
    }

    #[test]
    fn cex_roster_rejects_long_oi() {
        let spec = ModelSpec { lags: 1, roster: vec![ActivityField::OiLong], exchange: ExchangeKind::Cex };
        assert!(matches!(build_design(&vol(10), &full_set(10), &spec), Err(EconError::RosterViolation(_))));
        let cex = ModelSpec::template(VolModel::Activity, ExchangeKind::Cex, 1).unwrap();
        assert!(!cex.column_names().iter().any(|n| n.contains("oi_long")));
    }

    #[test]
    fn leverage_model_adds_four_columns() {
        let e2 = ModelSpec::template(VolModel::Activity, ExchangeKind::Oracle, 1).unwrap();
        let e3 = ModelSpec::template(VolModel::Leverage, ExchangeKind::Oracle, 1).unwrap();
        assert_eq!(e3.column_names().len(), e2.column_names().len() + 4);
        assert!(matches!(
            ModelSpec::template(VolModel::Leverage, ExchangeKind::Vamm, 1),
            Err(EconError::UnsupportedModel(_))
        ));
    }

    #[test]
    fn misalignment_and_missing_roster() {
        let spec = ModelSpec::template(VolModel::Activity, ExchangeKind::Oracle, 1).unwrap();
        let mut set = full_set(20);
        set[0].dates[5] = day(40);
        assert!(matches!(build_design(&vol(20), &set, &spec), Err(EconError::DateMisalignment { .. })));
        let set: Vec<DecomposedSeries> = full_set(20).into_iter().filter(|s| s.name != ActivityField::LiqShort).collect();
        assert_eq!(build_design(&vol(20), &set, &spec).unwrap_err(), EconError::RosterMissing("liq_short".into()));
    }

    #[test]
    fn warmup_rows_dropped() {
        let spec = ModelSpec::template(VolModel::Activity, ExchangeKind::Oracle, 1).unwrap();
        let mut set = full_set(20);
        set[2].warmup[0] = true;
        set[2].warmup[1] = true;
        let d = build_design(&vol(20), &set, &spec).unwrap();
        assert_eq!(d.rows(), 18);
        assert_eq!(d.dates[0], day(2));
    }
}
