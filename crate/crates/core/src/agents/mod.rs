//! Seeded agent-based driver: an exogenous spot path and trader populations
//! whose orders drive any of the exchange engines.

mod experiment;
mod population;
mod price;

pub use experiment::{
    engine_dir, run_experiment, source_tag, write_artifacts, write_orders, write_positions, EngineRun,
    ExperimentConfig, ExperimentOutput, Manifest, MarketConfig, PoolArtifact, RunSummary,
};
pub use population::{
    step_agents, step_arbitrageurs, uninformed_notional, Agent, ClassStreams, LeveragePolicy, MarketView,
    OrderRecord, Population, TraderClass, TraderSpec, WealthDist,
};
pub use price::{
    candles_from_points, generate_path, simulate_path, PriceModel, PricePath, PriceProcess, DAYS_PER_YEAR,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("engine failure: {0}")]
    Engine(String),
    #[error("cannot write {path}: {reason}")]
    Io { path: String, reason: String },
}
