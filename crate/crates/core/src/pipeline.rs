//! Candles and activity in, volatility regression out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{decompose_activity, ArimaError, ArimaGrid, DecomposedSeries};
use crate::econometrics::{fit_volatility_model, Covariance, EconError, ExchangeKind, ModelSpec, RegressionResult, VolModel};
use crate::marketdata::{ActivitySeries, Candle};
use crate::volatility::{volatility_series, RadicandPolicy, VolatilityError, VolatilityPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Volatility(#[from] VolatilityError),
    #[error(transparent)]
    Arima(#[from] ArimaError),
    #[error(transparent)]
    Econ(#[from] EconError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub model: VolModel,
    pub exchange: ExchangeKind,
    pub lag_grid: Vec<usize>,
    pub arima: ArimaGrid,
    pub covariance: Covariance,
    pub radicand: RadicandPolicy,
}

impl AnalysisConfig {
    pub fn new(model: VolModel, exchange: ExchangeKind) -> Self {
        AnalysisConfig {
            model,
            exchange,
            lag_grid: (1..=7).collect(),
            arima: ArimaGrid::default().for_regression(),
            covariance: Covariance::Classical,
            radicand: RadicandPolicy::ClampToZero,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub volatility: Vec<VolatilityPoint>,
    pub decomposed: Vec<DecomposedSeries>,
    pub regression: RegressionResult,
}

/// Garman-Klass volatility, ARIMA split of every roster series, then the
/// lag-selected regression.
pub fn analyze(candles: &[Candle], activity: &ActivitySeries, config: &AnalysisConfig) -> Result<Analysis, PipelineError> {
    let spec = ModelSpec::template(config.model, config.exchange, 1)?;
    let volatility = volatility_series(candles, config.radicand)?;
    let decomposed = decompose_activity(activity, &spec.roster, &config.arima)?;
    let regression = fit_volatility_model(&volatility, &decomposed, &spec, &config.lag_grid, config.covariance)?;
    Ok(Analysis { volatility, decomposed, regression })
}
