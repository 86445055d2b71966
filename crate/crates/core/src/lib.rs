//! Perpetual-futures exchange engines and the volatility/activity
//! econometrics used to study them.

pub mod agents;
pub mod decompose;
pub mod econometrics;
pub mod exchanges;
pub mod linalg;
pub mod marketdata;
pub mod pipeline;
pub mod stats;
pub mod vamm;
pub mod volatility;

pub use decompose::{ArimaFit, ArimaGrid, ArimaOrder, DecomposedSeries};
pub use econometrics::{Covariance, ExchangeKind, GrangerResult, RegressionResult, VolModel};
pub use marketdata::{ActivityField, ActivityRecord, ActivitySeries, Candle, SourceTag};
pub use volatility::VolatilityPoint;
