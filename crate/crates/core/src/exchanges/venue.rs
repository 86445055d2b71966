//! The virtual AMM behind the common exchange interface.

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::account::LOT_SIZE;
use super::{Exchange, ExchangeError, Execution, Fill, Liquidation, OrderKind, OrderRequest, OrderSide};
use crate::econometrics::ExchangeKind;
use crate::marketdata::ActivityRecord;
use crate::vamm::{ClearingHouse, MarginParams, Side, SwapResult, VammError, VammPool, DEFAULT_TICK_SPACING};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    Uniform,
    #[default]
    Concentrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VammConfig {
    pub mode: PoolMode,
    pub initial_price: f64,
    /// USD value of the virtual reserves at the initial price.
    pub depth: f64,
    /// Concentrated mode: ranged positions on top of one wide backstop range.
    pub lp_count: usize,
    pub fee_rate: f64,
    pub margin: MarginParams,
    pub log_fills: bool,
}

impl Default for VammConfig {
    fn default() -> Self {
        VammConfig {
            mode: PoolMode::Concentrated,
            initial_price: 30_000.0,
            depth: 600_000_000.0,
            lp_count: 8,
            fee_rate: 0.001,
            margin: MarginParams::default(),
            log_fills: true,
        }
    }
}

/// Owner ids of the pool's seed liquidity providers start here.
pub const LP_OWNER_BASE: u64 = 1 << 48;

/// Owners keep a wallet outside the clearing house; opening a position
/// moves `notional / leverage` of it in as margin.
pub struct VammExchange {
    house: ClearingHouse,
    log_fills: bool,
    wallets: Vec<f64>,
    ids: HashMap<u64, u64>,
    owners: Vec<u64>,
    step: u64,
    next_order: u64,
    fills: Vec<Fill>,
}

impl VammExchange {
    pub fn new(config: VammConfig) -> Result<Self, VammError> {
        let price = config.initial_price;
        let house = match config.mode {
            PoolMode::Uniform => {
                let half = 0.5 * config.depth;
                ClearingHouse::new(VammPool::uniform(half, half / price, config.fee_rate)?, config.margin)
            }
            PoolMode::Concentrated => {
                let pool = VammPool::concentrated(price, config.fee_rate, DEFAULT_TICK_SPACING)?;
                let mut house = ClearingHouse::new(pool, config.margin);
                let share = config.depth / (config.lp_count + 1) as f64;
                house.add_lp(LP_OWNER_BASE, price / 50.0, price * 50.0, share, 1.0)?;
                for i in 0..config.lp_count {
                    let w = 0.05 * 1.6f64.powi(i as i32);
                    house.add_lp(LP_OWNER_BASE + 1 + i as u64, price / (1.0 + w), price * (1.0 + w), share, 1.0)?;
                }
                house
            }
        };
        Ok(Self::with_house(house, config.log_fills))
    }

    pub fn with_house(house: ClearingHouse, log_fills: bool) -> Self {
        VammExchange {
            house,
            log_fills,
            wallets: Vec::new(),
            ids: HashMap::new(),
            owners: Vec::new(),
            step: 0,
            next_order: 0,
            fills: Vec::new(),
        }
    }

    pub fn house(&self) -> &ClearingHouse {
        &self.house
    }

    pub fn house_mut(&mut self) -> &mut ClearingHouse {
        &mut self.house
    }

    fn id(&mut self, owner: u64) -> u64 {
        if let Some(id) = self.ids.get(&owner) {
            return *id;
        }
        let id = self.house.open_account(0.0);
        self.ids.insert(owner, id);
        self.owners.push(owner);
        id
    }

    fn wallet(&mut self, owner: u64) -> &mut f64 {
        let i = owner as usize;
        if i >= self.wallets.len() {
            self.wallets.resize(i + 1, 0.0);
        }
        &mut self.wallets[i]
    }

    fn signed_base(&self, owner: u64) -> f64 {
        self.ids.get(&owner).and_then(|id| self.house.account(*id)).map_or(0.0, |a| a.base)
    }

    /// Trades for `owner` until the pool price reaches `target`, closing an
    /// opposite position first. Used by arbitrageurs.
    pub fn trade_to_price(&mut self, owner: u64, target: f64, leverage: f64) -> Result<Execution, ExchangeError> {
        let id = self.id(owner);
        let order_id = self.next_order;
        self.next_order += 1;
        let mut fills = Vec::new();
        for _ in 0..2 {
            let mut probe = self.house.pool.clone();
            let plan = probe.swap_to_price(target)?;
            if plan.amount_in <= 0.0 || plan.amount_out <= 0.0 {
                break;
            }
            let rising = plan.price_after > plan.price_before;
            let side = if rising { OrderSide::Buy } else { OrderSide::Sell };
            let order = OrderRequest::market(owner, side, 1.0, leverage);
            let fill = match self.arbitrage_leg(owner, id, &plan, rising, leverage) {
                Ok(fill) => fill,
                Err(e) if fills.is_empty() => return Err(e),
                Err(_) => break,
            };
            if fill.base <= 0.0 {
                break;
            }
            fills.push(self.log(&order, order_id, &fill, false));
            if self.signed_base(owner) == 0.0 {
                let freed = self.house.withdraw_all(id)?;
                *self.wallet(owner) += freed;
            }
        }
        Ok(Execution { order_id, fills, resting: 0.0 })
    }

    fn open_leg(&mut self, order: &OrderRequest, id: u64, quantity: f64) -> Result<crate::vamm::Fill, ExchangeError> {
        let margin = quantity * self.house.mark_price() / order.leverage;
        let wallet = *self.wallet(order.owner);
        if wallet < margin {
            return Err(ExchangeError::MarginCheck { equity: wallet, required: margin });
        }
        let side = match order.side {
            OrderSide::Buy => Side::Long,
            OrderSide::Sell => Side::Short,
        };
        let fill = self.house.open_position(id, side, margin, order.leverage)?;
        *self.wallet(order.owner) -= margin;
        Ok(fill)
    }

    fn arbitrage_leg(
        &mut self,
        owner: u64,
        id: u64,
        plan: &SwapResult,
        rising: bool,
        leverage: f64,
    ) -> Result<crate::vamm::Fill, ExchangeError> {
        let held = self.signed_base(owner);
        if rising && held < 0.0 {
            return Ok(self.house.reduce_position(id, plan.amount_out.min(-held))?);
        }
        if !rising && held > 0.0 {
            return Ok(self.house.reduce_position(id, plan.amount_in.min(held))?);
        }
        let notional = if rising { plan.amount_in } else { plan.amount_out };
        let margin = notional / leverage;
        if *self.wallet(owner) < margin {
            return Err(ExchangeError::MarginCheck { equity: *self.wallet(owner), required: margin });
        }
        let side = if rising { Side::Long } else { Side::Short };
        let fill = self.house.open_position(id, side, margin, leverage)?;
        *self.wallet(owner) -= margin;
        Ok(fill)
    }

    fn log(&mut self, order: &OrderRequest, order_id: u64, fill: &crate::vamm::Fill, liquidation: bool) -> Fill {
        let f = Fill {
            step: self.step,
            order_id,
            owner: order.owner,
            maker: None,
            side: order.side,
            price: fill.average_price,
            quantity: fill.base,
            liquidation,
            self_match: false,
        };
        if self.log_fills {
            self.fills.push(f);
        }
        f
    }
}

impl Exchange for VammExchange {
    fn kind(&self) -> ExchangeKind {
        ExchangeKind::Vamm
    }

    fn begin_step(&mut self, step: u64, _spot: f64) {
        self.step = step;
    }

    fn deposit(&mut self, owner: u64, amount: f64) {
        self.id(owner);
        *self.wallet(owner) += amount;
    }

    fn withdraw_free(&mut self, owner: u64) -> f64 {
        let id = self.id(owner);
        let inside = self.house.withdraw_all(id).unwrap_or(0.0);
        inside + std::mem::take(self.wallet(owner))
    }

    /// Market orders only; the reducing part of an order is closed first
    /// and any remainder opens the other way.
    fn submit(&mut self, order: OrderRequest) -> Result<Execution, ExchangeError> {
        order.validate(self.house.margin.max_leverage)?;
        if let OrderKind::Limit(_) = order.kind {
            return Err(ExchangeError::InvalidOrder("the pool accepts market orders only".into()));
        }
        let id = self.id(order.owner);
        let order_id = self.next_order;
        self.next_order += 1;
        let mut fills = Vec::new();
        let held = self.signed_base(order.owner);
        let mut remaining = order.quantity;
        if held * (order.side.sign() as f64) < 0.0 {
            let q = remaining.min(held.abs());
            let fill = self.house.reduce_position(id, q)?;
            fills.push(self.log(&order, order_id, &fill, false));
            remaining -= q;
            if self.signed_base(order.owner) == 0.0 {
                let freed = self.house.withdraw_all(id)?;
                *self.wallet(order.owner) += freed;
            }
        }
        if remaining >= LOT_SIZE {
            // A failed opening leg after a reduction leaves a partial execution.
            match self.open_leg(&order, id, remaining) {
                Ok(fill) => fills.push(self.log(&order, order_id, &fill, false)),
                Err(e) if fills.is_empty() => return Err(e),
                Err(_) => {}
            }
        }
        Ok(Execution { order_id, fills, resting: 0.0 })
    }

    fn cancel_all(&mut self, _owner: u64) {}

    fn position(&self, owner: u64) -> f64 {
        self.signed_base(owner)
    }

    fn equity(&self, owner: u64) -> f64 {
        let wallet = self.wallets.get(owner as usize).copied().unwrap_or(0.0);
        let mark = self.mark_price();
        let inside = self
            .ids
            .get(&owner)
            .and_then(|id| self.house.account(*id))
            .map_or(0.0, |a| a.collateral + a.unrealized_pnl(mark));
        wallet + inside
    }

    fn mark_price(&self) -> f64 {
        self.house.mark_price()
    }

    fn risk_sweep(&mut self) -> Vec<Liquidation> {
        let mark = self.mark_price();
        let events = self.house.liquidate_sweep(mark);
        let mut out = Vec::with_capacity(events.len());
        for e in events {
            let position = match e.label {
                Side::Long => OrderSide::Buy,
                Side::Short => OrderSide::Sell,
            };
            let owner = match e.party {
                crate::vamm::LiquidatedParty::Trader => self.owners[e.owner as usize],
                crate::vamm::LiquidatedParty::LiquidityProvider => e.owner,
            };
            let order_id = self.next_order;
            self.next_order += 1;
            let fill = Fill {
                step: self.step,
                order_id,
                owner,
                maker: None,
                side: position.opposite(),
                price: e.notional / e.base,
                quantity: e.base,
                liquidation: true,
                self_match: false,
            };
            if self.log_fills {
                self.fills.push(fill);
            }
            out.push(Liquidation { owner, position, quantity: e.base, notional: e.notional });
        }
        out
    }

    fn open_interest(&self) -> (f64, f64) {
        let mark = self.mark_price();
        let mut long = 0.0;
        let mut short = 0.0;
        for a in self.house.accounts() {
            if a.base > 0.0 {
                long += a.base * mark;
            } else {
                short -= a.base * mark;
            }
        }
        (long, short)
    }

    /// Leverage is not reported for the pool venue.
    fn daily_rollup(&mut self, date: NaiveDate) -> ActivityRecord {
        let (oi_long, oi_short) = self.open_interest();
        let day = self.house.take_day();
        ActivityRecord {
            date,
            volume: day.volume,
            oi_long,
            oi_short,
            liq_long: day.liq_long,
            liq_short: day.liq_short,
            lev_long: None,
            lev_short: None,
            imputed: false,
        }
    }

    fn fills(&self) -> &[Fill] {
        &self.fills
    }

    fn margin(&self) -> MarginParams {
        self.house.margin
    }

    fn as_vamm_mut(&mut self) -> Option<&mut VammExchange> {
        Some(self)
    }
}
