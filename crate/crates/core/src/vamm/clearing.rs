//! Clearing house: mints virtual tokens against collateral, routes trades
//! through the pool and runs the maintenance-margin sweep.

use serde::{Deserialize, Serialize};

use super::pool::{amounts_for_liquidity, nearest_usable_tick, tick_sqrt_price, SwapDirection, VammPool};
use super::VammError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Long,
    Short,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Long => 1.0,
            Side::Short => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarginParams {
    pub maintenance: f64,
    pub initial: f64,
    pub max_leverage: f64,
}

impl Default for MarginParams {
    fn default() -> Self {
        MarginParams { maintenance: 0.0625, initial: 0.10, max_leverage: 10.0 }
    }
}

/// Cross-margined trader account. `base` is signed (positive = long);
/// `quote` is the signed vUSDC paid (negative) or received (positive)
/// for the open position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerpAccount {
    pub id: u64,
    pub collateral: f64,
    pub base: f64,
    pub quote: f64,
    pub realized_pnl: f64,
}

impl PerpAccount {
    pub fn side(&self) -> Option<Side> {
        if self.base > 0.0 {
            Some(Side::Long)
        } else if self.base < 0.0 {
            Some(Side::Short)
        } else {
            None
        }
    }

    pub fn entry_notional(&self) -> f64 {
        self.quote.abs()
    }

    pub fn notional(&self, mark: f64) -> f64 {
        self.base.abs() * mark
    }

    pub fn unrealized_pnl(&self, mark: f64) -> f64 {
        self.base * mark + self.quote
    }

    /// `(collateral + unrealized PnL) / |notional|`; `None` when flat.
    pub fn margin_ratio(&self, mark: f64) -> Option<f64> {
        let n = self.notional(mark);
        (n > 0.0).then(|| (self.collateral + self.unrealized_pnl(mark)) / n)
    }
}

/// Leveraged LP stake: the virtual tokens minted for the position are a
/// debt, so the stake's PnL is the value of its current real reserves less
/// the value of what was minted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpStake {
    pub position_id: u64,
    pub owner: u64,
    pub collateral: f64,
    pub minted_base: f64,
    pub minted_quote: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiquidatedParty {
    Trader,
    LiquidityProvider,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiquidationEvent {
    pub owner: u64,
    pub party: LiquidatedParty,
    /// `Long` for liquidation-on-long, `Short` for liquidation-on-short.
    pub label: Side,
    pub base: f64,
    pub notional: f64,
    pub price_before: f64,
    pub price_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub side: Side,
    pub base: f64,
    pub quote: f64,
    pub fee: f64,
    pub average_price: f64,
    pub price_after: f64,
}

/// Per-day flow counters, reset by [`ClearingHouse::take_day`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DayFlows {
    pub volume: f64,
    pub liq_long: f64,
    pub liq_short: f64,
    pub trades: u64,
}

/// Transfer from longs to shorts per unit of base for one funding period.
pub trait FundingModel: Send + Sync {
    fn rate(&self, mark: f64, index: f64) -> f64;
}

/// The default hook: no transfer.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFunding;

impl FundingModel for ZeroFunding {
    fn rate(&self, _mark: f64, _index: f64) -> f64 {
        0.0
    }
}

pub struct ClearingHouse {
    pub pool: VammPool,
    pub margin: MarginParams,
    accounts: Vec<PerpAccount>,
    stakes: Vec<LpStake>,
    funding: Box<dyn FundingModel>,
    flows: DayFlows,
    pub bad_debt: f64,
}

impl std::fmt::Debug for ClearingHouse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClearingHouse")
            .field("pool", &self.pool)
            .field("margin", &self.margin)
            .field("accounts", &self.accounts.len())
            .field("stakes", &self.stakes.len())
            .finish()
    }
}

impl ClearingHouse {
    pub fn new(pool: VammPool, margin: MarginParams) -> Self {
        ClearingHouse {
            pool,
            margin,
            accounts: Vec::new(),
            stakes: Vec::new(),
            funding: Box::new(ZeroFunding),
            flows: DayFlows::default(),
            bad_debt: 0.0,
        }
    }

    pub fn with_funding(mut self, funding: Box<dyn FundingModel>) -> Self {
        self.funding = funding;
        self
    }

    pub fn open_account(&mut self, collateral: f64) -> u64 {
        let id = self.accounts.len() as u64;
        self.accounts.push(PerpAccount { id, collateral, base: 0.0, quote: 0.0, realized_pnl: 0.0 });
        id
    }

    pub fn account(&self, id: u64) -> Option<&PerpAccount> {
        self.accounts.get(id as usize)
    }

    pub fn accounts(&self) -> &[PerpAccount] {
        &self.accounts
    }

    pub fn stakes(&self) -> &[LpStake] {
        &self.stakes
    }

    fn account_mut(&mut self, id: u64) -> Result<&mut PerpAccount, VammError> {
        self.accounts.get_mut(id as usize).ok_or(VammError::UnknownAccount(id))
    }

    pub fn deposit(&mut self, id: u64, amount: f64) -> Result<(), VammError> {
        if !(amount >= 0.0 && amount.is_finite()) {
            return Err(VammError::NegativeAmount(amount));
        }
        self.account_mut(id)?.collateral += amount;
        Ok(())
    }

    pub fn mark_price(&self) -> f64 {
        self.pool.price().unwrap_or(f64::NAN)
    }

    /// Deposits `margin` and trades `margin * leverage` of notional.
    /// Longs pay exactly that much vUSDC; shorts receive exactly that much.
    pub fn open_position(&mut self, id: u64, side: Side, margin: f64, leverage: f64) -> Result<Fill, VammError> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(VammError::NegativeAmount(margin));
        }
        if !(leverage > 0.0 && leverage <= self.margin.max_leverage) {
            return Err(VammError::LeverageCap { leverage, cap: self.margin.max_leverage });
        }
        let account = self.account(id).ok_or(VammError::UnknownAccount(id))?.clone();
        if account.side().is_some_and(|s| s != side) {
            return Err(VammError::OppositePosition(id));
        }
        let notional = margin * leverage;
        let mut pool = self.pool.clone();
        let (base, swap) = match side {
            Side::Long => {
                let r = pool.swap(SwapDirection::QuoteToBase, notional)?;
                (r.amount_out, r)
            }
            Side::Short => {
                let r = pool.swap_exact_out(SwapDirection::BaseToQuote, notional)?;
                (-r.amount_in, r)
            }
        };
        let mut next = account.clone();
        next.collateral += margin;
        next.base += base;
        next.quote -= side.sign() * notional;
        let mark = swap.price_after;
        let ratio = next.margin_ratio(mark).unwrap_or(f64::INFINITY);
        // Swap fees are paid out of the position, so the check allows for them.
        let required = self.margin.initial - self.pool.fee_rate() - 1e-9;
        if ratio < required {
            return Err(VammError::MarginCheck { ratio, required });
        }
        self.pool = pool;
        self.accounts[id as usize] = next;
        self.flows.volume += notional;
        self.flows.trades += 1;
        Ok(Fill {
            side,
            base: base.abs(),
            quote: notional,
            fee: swap.fee,
            average_price: notional / base.abs(),
            price_after: mark,
        })
    }

    /// Closes the whole position against the pool and realizes its PnL.
    pub fn close_position(&mut self, id: u64) -> Result<Fill, VammError> {
        let account = self.account(id).ok_or(VammError::UnknownAccount(id))?.clone();
        let side = account.side().ok_or(VammError::NoPosition(id))?;
        let fill = self.unwind(id, &account)?;
        self.flows.volume += fill.quote;
        self.flows.trades += 1;
        Ok(Fill { side, ..fill })
    }

    /// Closes `base` units of the position (at most all of it), realizing
    /// the proportional share of its entry notional.
    pub fn reduce_position(&mut self, id: u64, base: f64) -> Result<Fill, VammError> {
        let account = self.account(id).ok_or(VammError::UnknownAccount(id))?.clone();
        let side = account.side().ok_or(VammError::NoPosition(id))?;
        if !(base > 0.0 && base.is_finite()) {
            return Err(VammError::NegativeAmount(base));
        }
        if base >= account.base.abs() {
            return self.close_position(id);
        }
        let share = base / account.base.abs();
        let (proceeds, swap) = match side {
            Side::Long => {
                let r = self.pool.swap(SwapDirection::BaseToQuote, base)?;
                (r.amount_out, r)
            }
            Side::Short => {
                let r = self.pool.swap_exact_out(SwapDirection::QuoteToBase, base)?;
                (-r.amount_in, r)
            }
        };
        let pnl = account.quote * share + proceeds;
        let acc = &mut self.accounts[id as usize];
        acc.collateral += pnl;
        acc.realized_pnl += pnl;
        acc.base -= side.sign() * base;
        acc.quote -= account.quote * share;
        self.flows.volume += proceeds.abs();
        self.flows.trades += 1;
        Ok(Fill {
            side,
            base,
            quote: proceeds.abs(),
            fee: swap.fee,
            average_price: proceeds.abs() / base,
            price_after: swap.price_after,
        })
    }

    /// Withdraws free collateral from a flat account.
    pub fn withdraw_all(&mut self, id: u64) -> Result<f64, VammError> {
        let acc = self.account_mut(id)?;
        if acc.base != 0.0 {
            return Ok(0.0);
        }
        Ok(std::mem::take(&mut acc.collateral))
    }

    fn unwind(&mut self, id: u64, account: &PerpAccount) -> Result<Fill, VammError> {
        let side = account.side().ok_or(VammError::NoPosition(id))?;
        let (proceeds, swap) = match side {
            Side::Long => {
                let r = self.pool.swap(SwapDirection::BaseToQuote, account.base)?;
                (r.amount_out, r)
            }
            Side::Short => {
                let r = self.pool.swap_exact_out(SwapDirection::QuoteToBase, -account.base)?;
                (-r.amount_in, r)
            }
        };
        let pnl = account.quote + proceeds;
        let acc = &mut self.accounts[id as usize];
        acc.collateral += pnl;
        acc.realized_pnl += pnl;
        acc.base = 0.0;
        acc.quote = 0.0;
        if acc.collateral < 0.0 {
            self.bad_debt -= acc.collateral;
            acc.collateral = 0.0;
        }
        Ok(Fill {
            side,
            base: account.base.abs(),
            quote: proceeds.abs(),
            fee: swap.fee,
            average_price: proceeds.abs() / account.base.abs(),
            price_after: swap.price_after,
        })
    }

    /// Mints `collateral * leverage` of virtual tokens (valued at the pool
    /// price) in the composition the range needs and deposits them.
    pub fn add_lp(&mut self, owner: u64, lower: f64, upper: f64, collateral: f64, leverage: f64) -> Result<u64, VammError> {
        if !(collateral > 0.0 && collateral.is_finite()) {
            return Err(VammError::NegativeAmount(collateral));
        }
        if !(1.0..=self.margin.max_leverage).contains(&leverage) {
            return Err(VammError::LeverageCap { leverage, cap: self.margin.max_leverage });
        }
        let spacing = self.pool.tick_spacing();
        let (slo, shi) = (
            tick_sqrt_price(nearest_usable_tick(lower, spacing)),
            tick_sqrt_price(nearest_usable_tick(upper, spacing)),
        );
        let sp = self.pool.sqrt_price();
        let (b1, q1) = amounts_for_liquidity(1.0, sp, slo, shi);
        let per_unit = b1 * sp * sp + q1;
        if !(per_unit > 0.0) {
            return Err(VammError::InvertedRange { lower, upper });
        }
        let liquidity = collateral * leverage / per_unit;
        let position = self.pool.add_liquidity_l(owner, lower, upper, liquidity, leverage)?;
        let (minted_base, minted_quote) = position.real_reserves(sp);
        self.stakes.push(LpStake { position_id: position.id, owner, collateral, minted_base, minted_quote });
        Ok(position.id)
    }

    /// Value of the stake's real reserves less the minted debt, at `mark`.
    pub fn lp_pnl(&self, stake: &LpStake, mark: f64) -> f64 {
        let Some(position) = self.pool.position(stake.position_id) else {
            return 0.0;
        };
        let (b, q) = position.real_reserves(mark.sqrt());
        (b - stake.minted_base) * mark + (q - stake.minted_quote)
    }

    pub fn lp_margin_ratio(&self, stake: &LpStake, mark: f64) -> f64 {
        let debt = stake.minted_base * mark + stake.minted_quote;
        (stake.collateral + self.lp_pnl(stake, mark)) / debt
    }

    /// Removes the liquidity; the stake keeps the difference between real
    /// reserves and minted debt as an impermanent position, which is then
    /// closed against the pool.
    fn unwind_lp(&mut self, index: usize) -> Result<Option<(Side, f64, f64, f64, f64)>, VammError> {
        let stake = self.stakes.remove(index);
        let (_, base, quote) = self.pool.remove_liquidity(stake.position_id)?;
        let net_base = base - stake.minted_base;
        let net_quote = quote - stake.minted_quote;
        let price_before = self.pool.price()?;
        if net_base.abs() <= 1e-12 * stake.minted_base.abs().max(1e-12) {
            return Ok(None);
        }
        // Short when the price rose through the range (base sold), long otherwise.
        let (label, proceeds, after) = if net_base < 0.0 {
            let r = self.pool.swap_exact_out(SwapDirection::QuoteToBase, -net_base)?;
            (Side::Short, -r.amount_in, r.price_after)
        } else {
            let r = self.pool.swap(SwapDirection::BaseToQuote, net_base)?;
            (Side::Long, r.amount_out, r.price_after)
        };
        let equity = stake.collateral + net_quote + proceeds;
        if equity < 0.0 {
            self.bad_debt -= equity;
        }
        Ok(Some((label, net_base.abs(), proceeds.abs(), price_before, after)))
    }

    /// Closes every trader account and leveraged LP stake whose margin
    /// ratio at `mark` is below maintenance, as market swaps on the pool.
    pub fn liquidate_sweep(&mut self, mark: f64) -> Vec<LiquidationEvent> {
        let mut events = Vec::new();
        for id in 0..self.accounts.len() {
            let account = self.accounts[id].clone();
            let Some(ratio) = account.margin_ratio(mark) else { continue };
            if ratio >= self.margin.maintenance {
                continue;
            }
            let price_before = self.pool.price().unwrap_or(mark);
            let Ok(fill) = self.unwind(id as u64, &account) else { continue };
            match fill.side {
                Side::Long => self.flows.liq_long += fill.quote,
                Side::Short => self.flows.liq_short += fill.quote,
            }
            self.flows.volume += fill.quote;
            events.push(LiquidationEvent {
                owner: id as u64,
                party: LiquidatedParty::Trader,
                label: fill.side,
                base: fill.base,
                notional: fill.quote,
                price_before,
                price_after: fill.price_after,
            });
        }
        let mut i = 0;
        while i < self.stakes.len() {
            let stake = self.stakes[i].clone();
            let leveraged = self.pool.position(stake.position_id).is_some_and(|p| p.leverage > 1.0);
            if !leveraged || self.lp_margin_ratio(&stake, mark) >= self.margin.maintenance {
                i += 1;
                continue;
            }
            if let Ok(Some((label, base, notional, price_before, price_after))) = self.unwind_lp(i) {
                match label {
                    Side::Long => self.flows.liq_long += notional,
                    Side::Short => self.flows.liq_short += notional,
                }
                self.flows.volume += notional;
                events.push(LiquidationEvent {
                    owner: stake.owner,
                    party: LiquidatedParty::LiquidityProvider,
                    label,
                    base,
                    notional,
                    price_before,
                    price_after,
                });
            }
        }
        events
    }

    /// Entry notionals of open longs and shorts.
    pub fn open_interest(&self) -> (f64, f64) {
        let mut long = 0.0;
        let mut short = 0.0;
        for a in &self.accounts {
            match a.side() {
                Some(Side::Long) => long += a.entry_notional(),
                Some(Side::Short) => short += a.entry_notional(),
                None => {}
            }
        }
        (long, short)
    }

    /// Base units held by traders.
    pub fn trader_base(&self) -> f64 {
        self.accounts.iter().map(|a| a.base).sum()
    }

    /// Applies one funding period through the configured hook.
    pub fn apply_funding(&mut self, index: f64) {
        let mark = self.mark_price();
        let rate = self.funding.rate(mark, index);
        if rate == 0.0 {
            return;
        }
        for a in &mut self.accounts {
            let payment = a.base * rate;
            a.collateral -= payment;
            a.realized_pnl -= payment;
        }
    }

    pub fn take_day(&mut self) -> DayFlows {
        std::mem::take(&mut self.flows)
    }
}
