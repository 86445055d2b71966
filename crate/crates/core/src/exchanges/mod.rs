//! The three exchange designs behind one interface: a limit order book,
//! an oracle-priced pool and the virtual AMM, each with its risk keeper and
//! a daily roll-up into the activity schema.

mod account;
mod lob;
mod oracle;
mod venue;

pub use account::{MarginAccount, LOT_SIZE};
pub use lob::{BookLevel, LobConfig, LobExchange, OrderBook};
pub use oracle::{oracle_feed, Aggregation, OracleConfig, OracleExchange};
pub use venue::{PoolMode, VammConfig, VammExchange, LP_OWNER_BASE};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::econometrics::ExchangeKind;
use crate::marketdata::ActivityRecord;
use crate::vamm::{MarginParams, VammError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExchangeError {
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("market order against an empty book")]
    EmptyBook,
    #[error("margin check failed: equity {equity:.2} below {required:.2}")]
    MarginCheck { equity: f64, required: f64 },
    #[error("leverage {leverage} above cap {cap}")]
    LeverageCap { leverage: f64, cap: f64 },
    #[error("pool capacity exceeded: net exposure {exposure:.2} over {capacity:.2}")]
    PoolCapacity { exposure: f64, capacity: f64 },
    #[error("oracle price unavailable")]
    NoOraclePrice,
    #[error("all oracle sources missing at step {0}")]
    AllSourcesMissing(usize),
    #[error(transparent)]
    Vamm(#[from] VammError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderSide {
    Buy,
    Sell,
}

impl OrderSide {
    pub fn sign(self) -> i64 {
        match self {
            OrderSide::Buy => 1,
            OrderSide::Sell => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            OrderSide::Buy => OrderSide::Sell,
            OrderSide::Sell => OrderSide::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrderSide::Buy => "buy",
            OrderSide::Sell => "sell",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OrderKind {
    Market,
    Limit(f64),
}

/// A trader's instruction; the exchange assigns the id and logical timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderRequest {
    pub owner: u64,
    pub side: OrderSide,
    pub kind: OrderKind,
    /// Base units, > 0.
    pub quantity: f64,
    pub leverage: f64,
}

impl OrderRequest {
    pub fn market(owner: u64, side: OrderSide, quantity: f64, leverage: f64) -> Self {
        OrderRequest { owner, side, kind: OrderKind::Market, quantity, leverage }
    }

    pub fn limit(owner: u64, side: OrderSide, price: f64, quantity: f64, leverage: f64) -> Self {
        OrderRequest { owner, side, kind: OrderKind::Limit(price), quantity, leverage }
    }

    pub(crate) fn validate(&self, max_leverage: f64) -> Result<(), ExchangeError> {
        if !(self.quantity > 0.0 && self.quantity.is_finite()) {
            return Err(ExchangeError::InvalidOrder(format!("quantity {} must be positive", self.quantity)));
        }
        if let OrderKind::Limit(p) = self.kind {
            if !(p > 0.0 && p.is_finite()) {
                return Err(ExchangeError::InvalidOrder(format!("limit price {p} must be positive")));
            }
        }
        if !(self.leverage >= 1.0 && self.leverage.is_finite()) {
            return Err(ExchangeError::InvalidOrder(format!("leverage {} must be at least 1", self.leverage)));
        }
        if self.leverage > max_leverage {
            return Err(ExchangeError::LeverageCap { leverage: self.leverage, cap: max_leverage });
        }
        Ok(())
    }
}

/// One execution. On the order book `maker` is the resting counterparty;
/// pool-based engines leave it empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub step: u64,
    pub order_id: u64,
    pub owner: u64,
    pub maker: Option<u64>,
    pub side: OrderSide,
    pub price: f64,
    pub quantity: f64,
    pub liquidation: bool,
    pub self_match: bool,
}

impl Fill {
    pub fn notional(&self) -> f64 {
        self.price * self.quantity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub order_id: u64,
    pub fills: Vec<Fill>,
    /// Quantity left resting on the book (limit orders only).
    pub resting: f64,
}

impl Execution {
    pub fn filled(&self) -> f64 {
        self.fills.iter().map(|f| f.quantity).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Liquidation {
    pub owner: u64,
    /// Side of the position that was closed (`Buy` = long).
    pub position: OrderSide,
    pub quantity: f64,
    pub notional: f64,
}

/// `step,order_id,side,price,qty,liquidation_flag,self_match`.
pub fn write_fill_log(fills: &[Fill]) -> String {
    let mut out = String::from("step,order_id,side,price,qty,liquidation_flag,self_match\n");
    for f in fills {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            f.step,
            f.order_id,
            f.side.as_str(),
            f.price,
            f.quantity,
            u8::from(f.liquidation),
            u8::from(f.self_match)
        ));
    }
    out
}

/// Daily flow counters behind [`Exchange::daily_rollup`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DayAccumulator {
    pub volume: f64,
    pub liq_long: f64,
    pub liq_short: f64,
    lev_long: (f64, f64),
    lev_short: (f64, f64),
}

impl DayAccumulator {
    pub fn record_fill(&mut self, notional: f64) {
        self.volume += notional;
    }

    pub fn record_liquidation(&mut self, position: OrderSide, notional: f64) {
        match position {
            OrderSide::Buy => self.liq_long += notional,
            OrderSide::Sell => self.liq_short += notional,
        }
    }

    /// A fill that opened (or enlarged) exposure on `side` at `leverage`.
    pub fn record_open(&mut self, side: OrderSide, notional: f64, leverage: f64) {
        let slot = match side {
            OrderSide::Buy => &mut self.lev_long,
            OrderSide::Sell => &mut self.lev_short,
        };
        slot.0 += notional * leverage;
        slot.1 += notional;
    }

    /// Notional-weighted average leverage of exposure opened today.
    pub fn leverage(&self, side: OrderSide) -> Option<f64> {
        let (num, den) = match side {
            OrderSide::Buy => self.lev_long,
            OrderSide::Sell => self.lev_short,
        };
        (den > 0.0).then(|| num / den)
    }
}

/// Carries the last observed daily leverage forward over days that opened
/// no exposure on a side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LeverageCarry {
    long: Option<f64>,
    short: Option<f64>,
}

impl LeverageCarry {
    pub fn roll(&mut self, day: &DayAccumulator) -> (Option<f64>, Option<f64>) {
        if let Some(v) = day.leverage(OrderSide::Buy) {
            self.long = Some(v);
        }
        if let Some(v) = day.leverage(OrderSide::Sell) {
            self.short = Some(v);
        }
        (self.long.or(Some(0.0)), self.short.or(Some(0.0)))
    }
}

/// Common surface the agent driver trades against.
pub trait Exchange: Send {
    fn kind(&self) -> ExchangeKind;
    /// Starts simulation step `step`; `spot` is the exogenous reference price.
    fn begin_step(&mut self, step: u64, spot: f64);
    fn deposit(&mut self, owner: u64, amount: f64);
    /// Returns free collateral of a flat account to the owner.
    fn withdraw_free(&mut self, owner: u64) -> f64;
    fn submit(&mut self, order: OrderRequest) -> Result<Execution, ExchangeError>;
    /// Cancels the owner's resting orders (no-op on pool engines).
    fn cancel_all(&mut self, owner: u64);
    /// Signed position in base units.
    fn position(&self, owner: u64) -> f64;
    fn equity(&self, owner: u64) -> f64;
    fn mark_price(&self) -> f64;
    /// Keeper pass at the current mark.
    fn risk_sweep(&mut self) -> Vec<Liquidation>;
    /// `(long, short)` open interest in USD at the current mark.
    fn open_interest(&self) -> (f64, f64);
    /// Closes the day's accumulators into one activity record.
    fn daily_rollup(&mut self, date: NaiveDate) -> ActivityRecord;
    fn fills(&self) -> &[Fill];
    fn margin(&self) -> MarginParams;
    /// The pool venue, for agents that need direct pool access.
    fn as_vamm_mut(&mut self) -> Option<&mut VammExchange> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leverage_average_is_notional_weighted() {
        let mut d = DayAccumulator::default();
        d.record_open(OrderSide::Buy, 1_000.0, 10.0);
        d.record_open(OrderSide::Buy, 3_000.0, 2.0);
        assert_eq!(d.leverage(OrderSide::Buy), Some(4.0));
        assert_eq!(d.leverage(OrderSide::Sell), None);
        let mut carry = LeverageCarry::default();
        assert_eq!(carry.roll(&d), (Some(4.0), Some(0.0)));
        assert_eq!(carry.roll(&DayAccumulator::default()), (Some(4.0), Some(0.0)));
    }

    #[test]
    fn fill_log_header() {
        let f = Fill {
            step: 3,
            order_id: 9,
            owner: 1,
            maker: Some(2),
            side: OrderSide::Sell,
            price: 10_000.0,
            quantity: 0.5,
            liquidation: true,
            self_match: false,
        };
        assert_eq!(f.notional(), 5_000.0);
        assert_eq!(
            write_fill_log(&[f]),
            "step,order_id,side,price,qty,liquidation_flag,self_match\n3,9,sell,10000,0.5,1,0\n"
        );
    }
}
