//! Price-time priority order book with integer prices and lots.

use std::collections::{BTreeMap, HashMap, VecDeque};

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

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LobConfig {
    /// Price increment in USD.
    pub tick_size: f64,
    pub margin: MarginParams,
    pub log_fills: bool,
}

impl Default for LobConfig {
    fn default() -> Self {
        LobConfig { tick_size: 0.01, margin: MarginParams::default(), log_fills: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Resting {
    order_id: u64,
    owner: u64,
    lots: i64,
    leverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BookLevel {
    pub price: f64,
    pub quantity: f64,
    pub orders: usize,
}

/// Bids and asks keyed by integer tick, FIFO queues within a level.
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    tick_size: f64,
    bids: BTreeMap<i64, VecDeque<Resting>>,
    asks: BTreeMap<i64, VecDeque<Resting>>,
    index: HashMap<u64, (OrderSide, i64)>,
}

impl OrderBook {
    pub fn new(tick_size: f64) -> Self {
        OrderBook { tick_size, ..Default::default() }
    }

    fn to_ticks(&self, price: f64) -> i64 {
        (price / self.tick_size).round() as i64
    }

    fn to_price(&self, ticks: i64) -> f64 {
        ticks as f64 * self.tick_size
    }

    pub fn best_bid(&self) -> Option<f64> {
        self.bids.keys().next_back().map(|t| self.to_price(*t))
    }

    pub fn best_ask(&self) -> Option<f64> {
        self.asks.keys().next().map(|t| self.to_price(*t))
    }

    pub fn mid(&self) -> Option<f64> {
        Some(0.5 * (self.best_bid()? + self.best_ask()?))
    }

    /// Best bid at or above best ask.
    pub fn is_crossed(&self) -> bool {
        match (self.bids.keys().next_back(), self.asks.keys().next()) {
            (Some(b), Some(a)) => b >= a,
            _ => false,
        }
    }

    pub fn depth(&self, side: OrderSide) -> Vec<BookLevel> {
        let level = |(t, q): (&i64, &VecDeque<Resting>)| BookLevel {
            price: self.to_price(*t),
            quantity: lots_to_base(q.iter().map(|r| r.lots).sum()),
            orders: q.len(),
        };
        match side {
            OrderSide::Buy => self.bids.iter().rev().map(level).collect(),
            OrderSide::Sell => self.asks.iter().map(level).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    fn insert(&mut self, side: OrderSide, ticks: i64, resting: Resting) {
        self.index.insert(resting.order_id, (side, ticks));
        let book = match side {
            OrderSide::Buy => &mut self.bids,
            OrderSide::Sell => &mut self.asks,
        };
        book.entry(ticks).or_default().push_back(resting);
    }

    pub fn cancel(&mut self, order_id: u64) -> bool {
        let Some((side, ticks)) = self.index.remove(&order_id) else {
            return false;
        };
        let book = match side {
            OrderSide::Buy => &mut self.bids,
            OrderSide::Sell => &mut self.asks,
        };
        if let Some(queue) = book.get_mut(&ticks) {
            queue.retain(|r| r.order_id != order_id);
            if queue.is_empty() {
                book.remove(&ticks);
            }
        }
        true
    }
}

pub struct LobExchange {
    config: LobConfig,
    book: OrderBook,
    accounts: Vec<MarginAccount>,
    owner_orders: HashMap<u64, Vec<u64>>,
    step: u64,
    next_order: u64,
    last_price: Option<f64>,
    long_lots: i64,
    short_lots: i64,
    day: DayAccumulator,
    carry: LeverageCarry,
    fills: Vec<Fill>,
}

impl LobExchange {
    pub fn new(config: LobConfig) -> Self {
        LobExchange {
            book: OrderBook::new(config.tick_size),
            config,
            accounts: Vec::new(),
            owner_orders: HashMap::new(),
            step: 0,
            next_order: 0,
            last_price: None,
            long_lots: 0,
            short_lots: 0,
            day: DayAccumulator::default(),
            carry: LeverageCarry::default(),
            fills: Vec::new(),
        }
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn account(&self, owner: u64) -> Option<&MarginAccount> {
        self.accounts.get(owner as usize)
    }

    /// Open interest in lots per side; equal by construction.
    pub fn open_interest_lots(&self) -> (i64, i64) {
        (self.long_lots, self.short_lots)
    }

    fn account_mut(&mut self, owner: u64) -> &mut MarginAccount {
        let i = owner as usize;
        if i >= self.accounts.len() {
            self.accounts.resize(i + 1, MarginAccount::default());
        }
        &mut self.accounts[i]
    }

    fn apply(&mut self, owner: u64, signed: i64, price: f64, leverage: f64, side: OrderSide) {
        let acc = self.account_mut(owner);
        let before = acc.lots;
        let opening = acc.opening_lots(signed);
        acc.apply_fill(signed, price);
        let after = acc.lots;
        self.long_lots += after.max(0) - before.max(0);
        self.short_lots += (-after).max(0) - (-before).max(0);
        if opening > 0 {
            self.day.record_open(side, lots_to_base(opening) * price, leverage);
        }
    }

    fn margin_precheck(&self, order: &OrderRequest, lots: i64, reference: f64) -> Result<(), ExchangeError> {
        let acc = self.accounts.get(order.owner as usize).cloned().unwrap_or_default();
        let signed = order.side.sign() * lots;
        if acc.opening_lots(signed) == 0 {
            return Ok(());
        }
        let after = lots_to_base(acc.lots + signed).abs();
        let required = self.config.margin.initial * after * reference;
        let equity = acc.equity(reference);
        if equity < required * (1.0 - 1e-9) {
            return Err(ExchangeError::MarginCheck { equity, required });
        }
        Ok(())
    }

    fn execute(&mut self, order: OrderRequest, liquidation: bool) -> Result<Execution, ExchangeError> {
        order.validate(if liquidation { f64::INFINITY } else { self.config.margin.max_leverage })?;
        let lots = to_lots(order.quantity);
        if lots <= 0 {
            return Err(ExchangeError::InvalidOrder("quantity below one lot".into()));
        }
        let limit = match order.kind {
            OrderKind::Limit(p) => Some(self.book.to_ticks(p)),
            OrderKind::Market => None,
        };
        let opposite_best = match order.side {
            OrderSide::Buy => self.book.best_ask(),
            OrderSide::Sell => self.book.best_bid(),
        };
        if limit.is_none() && opposite_best.is_none() {
            return Err(ExchangeError::EmptyBook);
        }
        if !liquidation {
            let reference = match order.kind {
                OrderKind::Limit(p) => p,
                OrderKind::Market => opposite_best.unwrap_or(0.0),
            };
            self.margin_precheck(&order, lots, reference)?;
        }

        let order_id = self.next_order;
        self.next_order += 1;
        let mut remaining = lots;
        let mut fills = Vec::new();
        while remaining > 0 {
            let level = match order.side {
                OrderSide::Buy => self.book.asks.keys().next().copied(),
                OrderSide::Sell => self.book.bids.keys().next_back().copied(),
            };
            let Some(ticks) = level else { break };
            let acceptable = match (order.side, limit) {
                (_, None) => true,
                (OrderSide::Buy, Some(l)) => ticks <= l,
                (OrderSide::Sell, Some(l)) => ticks >= l,
            };
            if !acceptable {
                break;
            }
            let queue = match order.side {
                OrderSide::Buy => self.book.asks.get_mut(&ticks),
                OrderSide::Sell => self.book.bids.get_mut(&ticks),
            }
            .expect("level exists");
            let maker = queue.front_mut().expect("non-empty level");
            let q = remaining.min(maker.lots);
            maker.lots -= q;
            let maker_done = maker.lots == 0;
            let (maker_id, maker_owner, maker_lev) = (maker.order_id, maker.owner, maker.leverage);
            if maker_done {
                queue.pop_front();
                if queue.is_empty() {
                    match order.side {
                        OrderSide::Buy => self.book.asks.remove(&ticks),
                        OrderSide::Sell => self.book.bids.remove(&ticks),
                    };
                }
                self.book.index.remove(&maker_id);
            }
            remaining -= q;
            let price = self.book.to_price(ticks);
            let s = order.side.sign();
            self.apply(order.owner, s * q, price, order.leverage, order.side);
            self.apply(maker_owner, -s * q, price, maker_lev, order.side.opposite());
            debug_assert_eq!(self.long_lots, self.short_lots);
            let fill = Fill {
                step: self.step,
                order_id,
                owner: order.owner,
                maker: Some(maker_owner),
                side: order.side,
                price,
                quantity: lots_to_base(q),
                liquidation,
                self_match: maker_owner == order.owner,
            };
            self.day.record_fill(fill.notional());
            self.last_price = Some(price);
            fills.push(fill);
        }
        if self.config.log_fills {
            self.fills.extend_from_slice(&fills);
        }
        let mut resting = 0.0;
        if let (Some(ticks), true) = (limit, remaining > 0) {
            self.book.insert(
                order.side,
                ticks,
                Resting { order_id, owner: order.owner, lots: remaining, leverage: order.leverage },
            );
            self.owner_orders.entry(order.owner).or_default().push(order_id);
            resting = lots_to_base(remaining);
        }
        Ok(Execution { order_id, fills, resting })
    }
}

impl Exchange for LobExchange {
    fn kind(&self) -> ExchangeKind {
        ExchangeKind::Cex
    }

    fn begin_step(&mut self, step: u64, spot: f64) {
        self.step = step;
        if self.last_price.is_none() {
            self.last_price = Some(spot);
        }
    }

    fn deposit(&mut self, owner: u64, amount: f64) {
        self.account_mut(owner).collateral += amount;
    }

    fn withdraw_free(&mut self, owner: u64) -> f64 {
        let has_orders = self.owner_orders.get(&owner).is_some_and(|v| v.iter().any(|id| self.book.index.contains_key(id)));
        let acc = self.account_mut(owner);
        if acc.lots != 0 || has_orders {
            return 0.0;
        }
        std::mem::take(&mut acc.collateral)
    }

    fn submit(&mut self, order: OrderRequest) -> Result<Execution, ExchangeError> {
        self.execute(order, false)
    }

    fn cancel_all(&mut self, owner: u64) {
        if let Some(ids) = self.owner_orders.remove(&owner) {
            for id in ids {
                self.book.cancel(id);
            }
        }
    }

    fn position(&self, owner: u64) -> f64 {
        self.account(owner).map_or(0.0, MarginAccount::base)
    }

    fn equity(&self, owner: u64) -> f64 {
        self.account(owner).map_or(0.0, |a| a.equity(self.mark_price()))
    }

    fn mark_price(&self) -> f64 {
        self.last_price.unwrap_or(f64::NAN)
    }

    /// Underwater accounts lose their resting orders and are closed by a
    /// market order into the book.
    fn risk_sweep(&mut self) -> Vec<Liquidation> {
        let mark = self.mark_price();
        let mut out = Vec::new();
        for owner in 0..self.accounts.len() as u64 {
            let acc = &self.accounts[owner as usize];
            let Some(ratio) = acc.margin_ratio(mark) else { continue };
            if ratio >= self.config.margin.maintenance {
                continue;
            }
            let position = if acc.lots > 0 { OrderSide::Buy } else { OrderSide::Sell };
            let quantity = acc.base().abs();
            self.cancel_all(owner);
            let order = OrderRequest::market(owner, position.opposite(), quantity, 1.0);
            let Ok(exec) = self.execute(order, true) else { continue };
            let notional: f64 = exec.fills.iter().map(Fill::notional).sum();
            if notional > 0.0 {
                self.day.record_liquidation(position, notional);
                out.push(Liquidation { owner, position, quantity: exec.filled(), notional });
            }
        }
        out
    }

    fn open_interest(&self) -> (f64, f64) {
        // No trade yet means no positions.
        let mark = self.last_price.unwrap_or(0.0);
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
