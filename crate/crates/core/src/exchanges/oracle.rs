//! Oracle-priced exchange: every order fills at the external index price
//! against a shared liquidity pool that takes the other side.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::account::{lots_to_base, to_lots, MarginAccount};
use super::{
    DayAccumulator, Exchange, ExchangeError, Execution, Fill, LeverageCarry, Liquidation, OrderKind, OrderRequest,
    OrderSide,
};
use crate::econometrics::ExchangeKind;
use crate::marketdata::ActivityRecord;
use crate::vamm::MarginParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

impl Aggregation {
    fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

/// Combines per-source price series (missing = `None`) into one feed.
/// Sources may differ in length; a step with no source reporting is an error.
pub fn oracle_feed(sources: &[Vec<Option<f64>>], aggregation: Aggregation) -> Result<Vec<f64>, ExchangeError> {
    let steps = sources.iter().map(Vec::len).max().unwrap_or(0);
    let mut feed = Vec::with_capacity(steps);
    let mut buf = Vec::with_capacity(sources.len());
    for step in 0..steps {
        buf.clear();
        buf.extend(
            sources
                .iter()
                .filter_map(|s| s.get(step).copied().flatten())
                .filter(|p| p.is_finite() && *p > 0.0),
        );
        if buf.is_empty() {
            return Err(ExchangeError::AllSourcesMissing(step));
        }
        feed.push(aggregation.apply(&mut buf));
    }
    Ok(feed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub margin: MarginParams,
    /// USD backing the counterparty pool.
    pub pool_liquidity: f64,
    /// Largest net trader exposure as a fraction of pool liquidity.
    pub max_utilization: f64,
    pub fee_rate: f64,
    pub log_fills: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            margin: MarginParams::default(),
            pool_liquidity: 50_000_000.0,
            max_utilization: 0.5,
            fee_rate: 0.0006,
            log_fills: true,
        }
    }
}

pub struct OracleExchange {
    config: OracleConfig,
    accounts: Vec<MarginAccount>,
    oracle: Option<f64>,
    step: u64,
    next_order: u64,
    long_lots: i64,
    short_lots: i64,
    /// Pool balance in USD: initial liquidity plus fees and trader losses.
    pub pool_balance: f64,
    day: DayAccumulator,
    carry: LeverageCarry,
    fills: Vec<Fill>,
}

impl OracleExchange {
    pub fn new(config: OracleConfig) -> Self {
        OracleExchange {
            pool_balance: config.pool_liquidity,
            config,
            accounts: Vec::new(),
            oracle: None,
            step: 0,
            next_order: 0,
            long_lots: 0,
            short_lots: 0,
            day: DayAccumulator::default(),
            carry: LeverageCarry::default(),
            fills: Vec::new(),
        }
    }

    pub fn account(&self, owner: u64) -> Option<&MarginAccount> {
        self.accounts.get(owner as usize)
    }

    /// Net trader exposure in USD (long minus short).
    pub fn net_exposure(&self) -> f64 {
        lots_to_base(self.long_lots - self.short_lots) * self.oracle.unwrap_or(0.0)
    }

    fn account_mut(&mut self, owner: u64) -> &mut MarginAccount {
        let i = owner as usize;
        if i >= self.accounts.len() {
            self.accounts.resize(i + 1, MarginAccount::default());
        }
        &mut self.accounts[i]
    }

    fn execute(&mut self, order: OrderRequest, liquidation: bool) -> Result<Execution, ExchangeError> {
        order.validate(if liquidation { f64::INFINITY } else { self.config.margin.max_leverage })?;
        let price = self.oracle.ok_or(ExchangeError::NoOraclePrice)?;
        let lots = to_lots(order.quantity);
        if lots <= 0 {
            return Err(ExchangeError::InvalidOrder("quantity below one lot".into()));
        }
        if let OrderKind::Limit(p) = order.kind {
            let marketable = match order.side {
                OrderSide::Buy => p >= price,
                OrderSide::Sell => p <= price,
            };
            if !marketable {
                return Err(ExchangeError::InvalidOrder("limit orders must be marketable at the oracle price".into()));
            }
        }
        let signed = order.side.sign() * lots;
        let acc = self.accounts.get(order.owner as usize).cloned().unwrap_or_default();
        let opening = acc.opening_lots(signed);
        let fee = self.config.fee_rate * lots_to_base(lots) * price;
        if !liquidation && opening > 0 {
            let after = lots_to_base(acc.lots + signed).abs();
            let required = self.config.margin.initial * after * price;
            let equity = acc.equity(price) - fee;
            if equity < required * (1.0 - 1e-9) {
                return Err(ExchangeError::MarginCheck { equity, required });
            }
            let mut next = acc.clone();
            next.lots += signed;
            let (long, short) = self.lots_after(&acc, &next);
            let exposure = (lots_to_base(long - short) * price).abs();
            let capacity = self.config.max_utilization * self.pool_balance;
            if exposure > capacity && exposure > self.net_exposure().abs() {
                return Err(ExchangeError::PoolCapacity { exposure, capacity });
            }
        }

        let before = acc.lots;
        let a = self.account_mut(order.owner);
        let pnl = a.apply_fill(signed, price);
        a.collateral -= fee;
        let after = a.lots;
        self.long_lots += after.max(0) - before.max(0);
        self.short_lots += (-after).max(0) - (-before).max(0);
        self.pool_balance += fee - pnl;
        if opening > 0 {
            self.day.record_open(order.side, lots_to_base(opening) * price, order.leverage);
        }

        let order_id = self.next_order;
        self.next_order += 1;
        let fill = Fill {
            step: self.step,
            order_id,
            owner: order.owner,
            maker: None,
            side: order.side,
            price,
            quantity: lots_to_base(lots),
            liquidation,
            self_match: false,
        };
        self.day.record_fill(fill.notional());
        if self.config.log_fills {
            self.fills.push(fill);
        }
        Ok(Execution { order_id, fills: vec![fill], resting: 0.0 })
    }

    fn lots_after(&self, before: &MarginAccount, after: &MarginAccount) -> (i64, i64) {
        (
            self.long_lots + after.lots.max(0) - before.lots.max(0),
            self.short_lots + (-after.lots).max(0) - (-before.lots).max(0),
        )
    }
}

impl Exchange for OracleExchange {
    fn kind(&self) -> ExchangeKind {
        ExchangeKind::Oracle
    }

    fn begin_step(&mut self, step: u64, spot: f64) {
        self.step = step;
        if spot.is_finite() && spot > 0.0 {
            self.oracle = Some(spot);
        }
    }

    fn deposit(&mut self, owner: u64, amount: f64) {
        self.account_mut(owner).collateral += amount;
    }

    fn withdraw_free(&mut self, owner: u64) -> f64 {
        let acc = self.account_mut(owner);
        if acc.lots != 0 {
            return 0.0;
        }
        std::mem::take(&mut acc.collateral).max(0.0)
    }

    fn submit(&mut self, order: OrderRequest) -> Result<Execution, ExchangeError> {
        self.execute(order, false)
    }

    fn cancel_all(&mut self, _owner: u64) {}

    fn position(&self, owner: u64) -> f64 {
        self.account(owner).map_or(0.0, MarginAccount::base)
    }

    fn equity(&self, owner: u64) -> f64 {
        self.account(owner).map_or(0.0, |a| a.equity(self.mark_price()))
    }

    fn mark_price(&self) -> f64 {
        self.oracle.unwrap_or(f64::NAN)
    }

    fn risk_sweep(&mut self) -> Vec<Liquidation> {
        let Some(mark) = self.oracle else { return Vec::new() };
        let mut out = Vec::new();
        for owner in 0..self.accounts.len() as u64 {
            let acc = &self.accounts[owner as usize];
            let Some(ratio) = acc.margin_ratio(mark) else { continue };
            if ratio >= self.config.margin.maintenance {
                continue;
            }
            let position = if acc.lots > 0 { OrderSide::Buy } else { OrderSide::Sell };
            let quantity = acc.base().abs();
            let order = OrderRequest::market(owner, position.opposite(), quantity, 1.0);
            let Ok(exec) = self.execute(order, true) else { continue };
            let acc = self.account_mut(owner);
            if acc.collateral < 0.0 {
                let shortfall = std::mem::take(&mut acc.collateral);
                self.pool_balance += shortfall;
            }
            let notional = exec.fills[0].notional();
            self.day.record_liquidation(position, notional);
            out.push(Liquidation { owner, position, quantity, notional });
        }
        out
    }

    fn open_interest(&self) -> (f64, f64) {
        let mark = self.oracle.unwrap_or(0.0);
        (lots_to_base(self.long_lots) * mark, lots_to_base(self.short_lots) * mark)
    }

    fn daily_rollup(&mut self, date: NaiveDate) -> ActivityRecord {
        let (oi_long, oi_short) = self.open_interest();
        let day = std::mem::take(&mut self.day);
        let (lev_long, lev_short) = self.carry.roll(&day);
        ActivityRecord {
            date,
            volume: day.volume,
            oi_long,
            oi_short,
            liq_long: day.liq_long,
            liq_short: day.liq_short,
            lev_long,
            lev_short,
            imputed: false,
        }
    }

    fn fills(&self) -> &[Fill] {
        &self.fills
    }

    fn margin(&self) -> MarginParams {
        self.config.margin
    }
}
