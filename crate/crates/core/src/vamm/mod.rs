//! Virtual AMM: constant-product pricing over virtual reserves, optional
//! concentrated liquidity, and the clearing house that trades against it.

mod clearing;
mod distribution;
mod pool;

pub use clearing::{
    ClearingHouse, DayFlows, Fill, FundingModel, LiquidatedParty, LiquidationEvent, LpStake, MarginParams,
    PerpAccount, Side, ZeroFunding,
};
pub use distribution::{geometric_edges, liquidity_distribution, liquidity_mass, write_liquidity_distribution, LiquidityBucket};
pub use pool::{
    amounts_for_liquidity, nearest_usable_tick, pool_price, price_sensitivity, tick_price, tick_sqrt_price,
    LiquidityPosition, PoolManifest, SwapDirection, SwapResult, VammPool, DEFAULT_TICK_SPACING, MAX_FEE_RATE,
    TICK_BASE,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VammError {
    #[error("reserves must be positive and finite (vUSDC {q_vusdc}, vBTC {q_vbtc})")]
    InvalidReserves { q_vusdc: f64, q_vbtc: f64 },
    #[error("invalid price {0}")]
    InvalidPrice(f64),
    #[error("base reserve is empty")]
    EmptyBaseReserve,
    #[error("amount must be finite and non-negative, got {0}")]
    NegativeAmount(f64),
    #[error("fee rate {0} outside [0, 0.01]")]
    FeeOutOfRange(f64),
    #[error("swap would drain the pool")]
    InsufficientLiquidity,
    #[error("price range [{lower}, {upper}] is empty or inverted")]
    InvertedRange { lower: f64, upper: f64 },
    #[error("amounts ({base} base, {quote} quote) do not match the range composition at the current price")]
    InconsistentAmounts { base: f64, quote: f64 },
    #[error("operation needs a concentrated pool")]
    UniformPool,
    #[error("unknown liquidity position {0}")]
    UnknownPosition(u64),
    #[error("unknown account {0}")]
    UnknownAccount(u64),
    #[error("account {0} holds no position")]
    NoPosition(u64),
    #[error("account {0} holds the opposite side; close it first")]
    OppositePosition(u64),
    #[error("leverage {leverage} outside the allowed range (cap {cap})")]
    LeverageCap { leverage: f64, cap: f64 },
    #[error("post-trade margin ratio {ratio:.4} below required {required:.4}")]
    MarginCheck { ratio: f64, required: f64 },
    #[error("price grid needs at least two increasing positive edges and a non-empty pool")]
    EmptyGrid,
}
