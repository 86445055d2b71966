//! Constant-product pool over virtual reserves.
//!
//! Uniform mode keeps explicit reserves and a fixed `k`. Concentrated mode
//! keeps a square-root price and a set of tick-ranged positions. Inside one
//! segment between adjacent position boundaries the active liquidity `L` is
//! fixed and the pool behaves as a uniform pool with `k = L^2` and virtual
//! reserves `(L / sqrt P, L sqrt P)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::VammError;

/// Price ratio of one tick.
pub const TICK_BASE: f64 = 1.0001;
pub const DEFAULT_TICK_SPACING: u32 = 60;
pub const MAX_FEE_RATE: f64 = 0.01;

fn ln_tick() -> f64 {
    TICK_BASE.ln()
}

/// `sqrt(1.0001^tick)`.
pub fn tick_sqrt_price(tick: i64) -> f64 {
    (tick as f64 * ln_tick() * 0.5).exp()
}

pub fn tick_price(tick: i64) -> f64 {
    (tick as f64 * ln_tick()).exp()
}

/// Nearest multiple of `spacing` to the tick of `price`.
pub fn nearest_usable_tick(price: f64, spacing: u32) -> i64 {
    let s = spacing.max(1) as f64;
    ((price.ln() / ln_tick() / s).round() * s) as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapDirection {
    /// vUSDC in, vBTC out (price rises).
    QuoteToBase,
    /// vBTC in, vUSDC out (price falls).
    BaseToQuote,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapResult {
    /// Gross input including the fee.
    pub amount_in: f64,
    pub amount_out: f64,
    pub fee: f64,
    pub price_before: f64,
    pub price_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiquidityPosition {
    pub id: u64,
    pub owner: u64,
    pub tick_lower: i64,
    pub tick_upper: i64,
    pub liquidity: f64,
    /// Notional of minted virtual tokens over posted collateral; 1 when unlevered.
    pub leverage: f64,
}

impl LiquidityPosition {
    /// `P_A`.
    pub fn lower_price(&self) -> f64 {
        tick_price(self.tick_lower)
    }

    /// `P_B`.
    pub fn upper_price(&self) -> f64 {
        tick_price(self.tick_upper)
    }

    /// Virtual reserves `(Q_vBTC^A, Q_vUSDC^A)` at the lower corner.
    pub fn corner_a(&self) -> (f64, f64) {
        let s = tick_sqrt_price(self.tick_lower);
        (self.liquidity / s, self.liquidity * s)
    }

    /// Virtual reserves `(Q_vBTC^B, Q_vUSDC^B)` at the upper corner.
    pub fn corner_b(&self) -> (f64, f64) {
        let s = tick_sqrt_price(self.tick_upper);
        (self.liquidity / s, self.liquidity * s)
    }

    /// Virtual `(base, quote)` to real coordinates with origin
    /// `(Q_vBTC^B, Q_vUSDC^A)`.
    pub fn to_real(&self, virtual_point: (f64, f64)) -> (f64, f64) {
        (virtual_point.0 - self.corner_b().0, virtual_point.1 - self.corner_a().1)
    }

    pub fn to_virtual(&self, real_point: (f64, f64)) -> (f64, f64) {
        (real_point.0 + self.corner_b().0, real_point.1 + self.corner_a().1)
    }

    /// Real reserves held at the given square-root price.
    pub fn real_reserves(&self, sqrt_price: f64) -> (f64, f64) {
        let lo = tick_sqrt_price(self.tick_lower);
        let hi = tick_sqrt_price(self.tick_upper);
        amounts_for_liquidity(self.liquidity, sqrt_price, lo, hi)
    }

    pub fn is_active(&self, sqrt_price: f64) -> bool {
        tick_sqrt_price(self.tick_lower) <= sqrt_price && sqrt_price < tick_sqrt_price(self.tick_upper)
    }
}

/// Real `(base, quote)` for liquidity `l` on `[sqrt_lo, sqrt_hi]` at `sqrt_price`.
pub fn amounts_for_liquidity(l: f64, sqrt_price: f64, sqrt_lo: f64, sqrt_hi: f64) -> (f64, f64) {
    let s = sqrt_price.clamp(sqrt_lo, sqrt_hi);
    (l * (1.0 / s - 1.0 / sqrt_hi), l * (s - sqrt_lo))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum PoolState {
    Uniform { q_vusdc: f64, q_vbtc: f64, k: f64 },
    Concentrated { sqrt_price: f64, positions: Vec<LiquidityPosition>, boundaries: BTreeSet<i64>, next_id: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VammPool {
    fee_rate: f64,
    tick_spacing: u32,
    state: PoolState,
    pub fees_quote: f64,
    pub fees_base: f64,
}

fn check_fee(fee_rate: f64) -> Result<(), VammError> {
    if !(0.0..=MAX_FEE_RATE).contains(&fee_rate) {
        return Err(VammError::FeeOutOfRange(fee_rate));
    }
    Ok(())
}

fn check_amount(amount: f64) -> Result<(), VammError> {
    if !amount.is_finite() || amount < 0.0 {
        return Err(VammError::NegativeAmount(amount));
    }
    Ok(())
}

/// Active-liquidity segment `[lo, hi]` around the current price.
struct Segment {
    lo: Option<i64>,
    hi: Option<i64>,
    liquidity: f64,
}

impl VammPool {
    pub fn uniform(q_vusdc: f64, q_vbtc: f64, fee_rate: f64) -> Result<Self, VammError> {
        check_fee(fee_rate)?;
        if !(q_vusdc > 0.0 && q_vbtc > 0.0 && q_vusdc.is_finite() && q_vbtc.is_finite()) {
            return Err(VammError::InvalidReserves { q_vusdc, q_vbtc });
        }
        Ok(VammPool {
            fee_rate,
            tick_spacing: DEFAULT_TICK_SPACING,
            state: PoolState::Uniform { q_vusdc, q_vbtc, k: q_vusdc * q_vbtc },
            fees_quote: 0.0,
            fees_base: 0.0,
        })
    }

    /// An empty concentrated pool at `price`; liquidity arrives through
    /// [`VammPool::add_liquidity`].
    pub fn concentrated(price: f64, fee_rate: f64, tick_spacing: u32) -> Result<Self, VammError> {
        check_fee(fee_rate)?;
        if !(price > 0.0 && price.is_finite()) || tick_spacing == 0 {
            return Err(VammError::InvalidPrice(price));
        }
        Ok(VammPool {
            fee_rate,
            tick_spacing,
            state: PoolState::Concentrated {
                sqrt_price: price.sqrt(),
                positions: Vec::new(),
                boundaries: BTreeSet::new(),
                next_id: 0,
            },
            fees_quote: 0.0,
            fees_base: 0.0,
        })
    }

    pub fn fee_rate(&self) -> f64 {
        self.fee_rate
    }

    pub fn tick_spacing(&self) -> u32 {
        self.tick_spacing
    }

    pub fn is_concentrated(&self) -> bool {
        matches!(self.state, PoolState::Concentrated { .. })
    }

    /// Virtual `(Q_vUSDC, Q_vBTC)` of the active segment.
    pub fn reserves(&self) -> (f64, f64) {
        match &self.state {
            PoolState::Uniform { q_vusdc, q_vbtc, .. } => (*q_vusdc, *q_vbtc),
            PoolState::Concentrated { sqrt_price, .. } => {
                let l = self.segment(true).liquidity;
                (l * sqrt_price, l / sqrt_price)
            }
        }
    }

    /// Invariant of the active segment.
    pub fn k(&self) -> f64 {
        match &self.state {
            PoolState::Uniform { k, .. } => *k,
            PoolState::Concentrated { .. } => {
                let l = self.segment(true).liquidity;
                l * l
            }
        }
    }

    pub fn price(&self) -> Result<f64, VammError> {
        match &self.state {
            PoolState::Uniform { q_vusdc, q_vbtc, .. } => {
                if *q_vbtc <= 0.0 {
                    return Err(VammError::EmptyBaseReserve);
                }
                Ok(q_vusdc / q_vbtc)
            }
            PoolState::Concentrated { sqrt_price, .. } => Ok(sqrt_price * sqrt_price),
        }
    }

    pub fn sqrt_price(&self) -> f64 {
        match &self.state {
            PoolState::Uniform { q_vusdc, q_vbtc, .. } => (q_vusdc / q_vbtc).sqrt(),
            PoolState::Concentrated { sqrt_price, .. } => *sqrt_price,
        }
    }

    /// `|dP/dQ_vBTC| = 2 k Q_vBTC^-3` on the active segment.
    pub fn price_sensitivity(&self) -> Result<f64, VammError> {
        let (_, q_vbtc) = self.reserves();
        if q_vbtc <= 0.0 {
            return Err(VammError::EmptyBaseReserve);
        }
        Ok(2.0 * self.k() / (q_vbtc * q_vbtc * q_vbtc))
    }

    pub fn positions(&self) -> &[LiquidityPosition] {
        match &self.state {
            PoolState::Uniform { .. } => &[],
            PoolState::Concentrated { positions, .. } => positions,
        }
    }

    pub fn position(&self, id: u64) -> Option<&LiquidityPosition> {
        self.positions().iter().find(|p| p.id == id)
    }

    /// Base units held by the pool: the virtual reserve in uniform mode,
    /// the sum of real reserves in concentrated mode.
    pub fn base_reserve(&self) -> f64 {
        match &self.state {
            PoolState::Uniform { q_vbtc, .. } => *q_vbtc,
            PoolState::Concentrated { sqrt_price, positions, .. } => {
                positions.iter().map(|p| p.real_reserves(*sqrt_price).0).sum()
            }
        }
    }

    pub fn quote_reserve(&self) -> f64 {
        match &self.state {
            PoolState::Uniform { q_vusdc, .. } => *q_vusdc,
            PoolState::Concentrated { sqrt_price, positions, .. } => {
                positions.iter().map(|p| p.real_reserves(*sqrt_price).1).sum()
            }
        }
    }

    fn segment(&self, up: bool) -> Segment {
        let PoolState::Concentrated { sqrt_price, positions, boundaries, .. } = &self.state else {
            return Segment { lo: None, hi: None, liquidity: 0.0 };
        };
        let sp = *sqrt_price;
        let (lo, hi) = if up {
            (
                boundaries.iter().rev().find(|t| tick_sqrt_price(**t) <= sp).copied(),
                boundaries.iter().find(|t| tick_sqrt_price(**t) > sp).copied(),
            )
        } else {
            (
                boundaries.iter().rev().find(|t| tick_sqrt_price(**t) < sp).copied(),
                boundaries.iter().find(|t| tick_sqrt_price(**t) >= sp).copied(),
            )
        };
        let liquidity = match (lo, hi) {
            (Some(lo), Some(hi)) => positions
                .iter()
                .filter(|p| p.tick_lower <= lo && p.tick_upper >= hi)
                .map(|p| p.liquidity)
                .sum(),
            _ => 0.0,
        };
        Segment { lo, hi, liquidity }
    }

    fn set_sqrt_price(&mut self, value: f64) {
        if let PoolState::Concentrated { sqrt_price, .. } = &mut self.state {
            *sqrt_price = value;
        }
    }

    /// Exact-input swap; the fee is taken from the input before the curve.
    pub fn swap(&mut self, direction: SwapDirection, amount_in: f64) -> Result<SwapResult, VammError> {
        check_amount(amount_in)?;
        let price_before = self.price()?;
        if amount_in == 0.0 {
            return Ok(SwapResult { amount_in: 0.0, amount_out: 0.0, fee: 0.0, price_before, price_after: price_before });
        }
        let fee = amount_in * self.fee_rate;
        let net = amount_in - fee;
        let mut next = self.clone();
        let amount_out = match &mut next.state {
            PoolState::Uniform { q_vusdc, q_vbtc, k } => match direction {
                SwapDirection::QuoteToBase => {
                    let new_q = *q_vusdc + net;
                    let new_b = *k / new_q;
                    let out = *q_vbtc - new_b;
                    *q_vusdc = new_q;
                    *q_vbtc = new_b;
                    out
                }
                SwapDirection::BaseToQuote => {
                    let new_b = *q_vbtc + net;
                    let new_q = *k / new_b;
                    let out = *q_vusdc - new_q;
                    *q_vusdc = new_q;
                    *q_vbtc = new_b;
                    out
                }
            },
            PoolState::Concentrated { .. } => next.concentrated_exact_in(direction, net)?,
        };
        match direction {
            SwapDirection::QuoteToBase => next.fees_quote += fee,
            SwapDirection::BaseToQuote => next.fees_base += fee,
        }
        *self = next;
        Ok(SwapResult { amount_in, amount_out, fee, price_before, price_after: self.price()? })
    }

    /// Exact-output swap; returns the gross input required.
    pub fn swap_exact_out(&mut self, direction: SwapDirection, amount_out: f64) -> Result<SwapResult, VammError> {
        check_amount(amount_out)?;
        let price_before = self.price()?;
        if amount_out == 0.0 {
            return Ok(SwapResult { amount_in: 0.0, amount_out: 0.0, fee: 0.0, price_before, price_after: price_before });
        }
        let mut next = self.clone();
        let net = match &mut next.state {
            PoolState::Uniform { q_vusdc, q_vbtc, k } => match direction {
                SwapDirection::QuoteToBase => {
                    if amount_out >= *q_vbtc {
                        return Err(VammError::InsufficientLiquidity);
                    }
                    let new_b = *q_vbtc - amount_out;
                    let new_q = *k / new_b;
                    let net = new_q - *q_vusdc;
                    *q_vusdc = new_q;
                    *q_vbtc = new_b;
                    net
                }
                SwapDirection::BaseToQuote => {
                    if amount_out >= *q_vusdc {
                        return Err(VammError::InsufficientLiquidity);
                    }
                    let new_q = *q_vusdc - amount_out;
                    let new_b = *k / new_q;
                    let net = new_b - *q_vbtc;
                    *q_vusdc = new_q;
                    *q_vbtc = new_b;
                    net
                }
            },
            PoolState::Concentrated { .. } => next.concentrated_exact_out(direction, amount_out)?,
        };
        let amount_in = net / (1.0 - self.fee_rate);
        let fee = amount_in - net;
        match direction {
            SwapDirection::QuoteToBase => next.fees_quote += fee,
            SwapDirection::BaseToQuote => next.fees_base += fee,
        }
        *self = next;
        Ok(SwapResult { amount_in, amount_out, fee, price_before, price_after: self.price()? })
    }

    /// Swaps (fee-inclusive) until the pool price reaches `target`.
    pub fn swap_to_price(&mut self, target: f64) -> Result<SwapResult, VammError> {
        if !(target > 0.0 && target.is_finite()) {
            return Err(VammError::InvalidPrice(target));
        }
        let price_before = self.price()?;
        let direction = if target > price_before { SwapDirection::QuoteToBase } else { SwapDirection::BaseToQuote };
        let net = match &self.state {
            PoolState::Uniform { q_vusdc, q_vbtc, k } => {
                let (new_q, new_b) = ((k * target).sqrt(), (k / target).sqrt());
                match direction {
                    SwapDirection::QuoteToBase => new_q - q_vusdc,
                    SwapDirection::BaseToQuote => new_b - q_vbtc,
                }
            }
            PoolState::Concentrated { .. } => self.concentrated_input_to(target.sqrt(), direction)?,
        };
        if net <= 0.0 {
            return Ok(SwapResult { amount_in: 0.0, amount_out: 0.0, fee: 0.0, price_before, price_after: price_before });
        }
        self.swap(direction, net / (1.0 - self.fee_rate))
    }

    fn concentrated_input_to(&self, target_sqrt: f64, direction: SwapDirection) -> Result<f64, VammError> {
        let mut probe = self.clone();
        let mut input = 0.0;
        loop {
            let sp = probe.sqrt_price();
            let up = direction == SwapDirection::QuoteToBase;
            if (up && sp >= target_sqrt) || (!up && sp <= target_sqrt) {
                return Ok(input);
            }
            let seg = probe.segment(up);
            let bound = if up { seg.hi } else { seg.lo };
            let Some(bound) = bound else {
                return Err(VammError::InsufficientLiquidity);
            };
            let bsp = tick_sqrt_price(bound);
            let stop = if up { bsp.min(target_sqrt) } else { bsp.max(target_sqrt) };
            let l = seg.liquidity;
            input += if up { l * (stop - sp) } else { l * (1.0 / stop - 1.0 / sp) };
            probe.set_sqrt_price(stop);
        }
    }

    fn concentrated_exact_in(&mut self, direction: SwapDirection, net: f64) -> Result<f64, VammError> {
        let up = direction == SwapDirection::QuoteToBase;
        let mut remaining = net;
        let mut out = 0.0;
        while remaining > 0.0 {
            let sp = self.sqrt_price();
            let seg = self.segment(up);
            let bound = if up { seg.hi } else { seg.lo };
            let Some(bound) = bound else {
                return Err(VammError::InsufficientLiquidity);
            };
            let bsp = tick_sqrt_price(bound);
            let l = seg.liquidity;
            if l <= 0.0 {
                self.set_sqrt_price(bsp);
                continue;
            }
            if up {
                let need = l * (bsp - sp);
                if remaining < need {
                    let next = sp + remaining / l;
                    out += l * (1.0 / sp - 1.0 / next);
                    self.set_sqrt_price(next);
                    remaining = 0.0;
                } else {
                    out += l * (1.0 / sp - 1.0 / bsp);
                    remaining -= need;
                    self.set_sqrt_price(bsp);
                }
            } else {
                let need = l * (1.0 / bsp - 1.0 / sp);
                if remaining < need {
                    let next = 1.0 / (1.0 / sp + remaining / l);
                    out += l * (sp - next);
                    self.set_sqrt_price(next);
                    remaining = 0.0;
                } else {
                    out += l * (sp - bsp);
                    remaining -= need;
                    self.set_sqrt_price(bsp);
                }
            }
        }
        Ok(out)
    }

    fn concentrated_exact_out(&mut self, direction: SwapDirection, amount_out: f64) -> Result<f64, VammError> {
        let up = direction == SwapDirection::QuoteToBase;
        let mut remaining = amount_out;
        let mut input = 0.0;
        while remaining > 0.0 {
            let sp = self.sqrt_price();
            let seg = self.segment(up);
            let bound = if up { seg.hi } else { seg.lo };
            let Some(bound) = bound else {
                return Err(VammError::InsufficientLiquidity);
            };
            let bsp = tick_sqrt_price(bound);
            let l = seg.liquidity;
            if l <= 0.0 {
                self.set_sqrt_price(bsp);
                continue;
            }
            if up {
                let avail = l * (1.0 / sp - 1.0 / bsp);
                if remaining < avail {
                    let next = 1.0 / (1.0 / sp - remaining / l);
                    input += l * (next - sp);
                    self.set_sqrt_price(next);
                    remaining = 0.0;
                } else {
                    input += l * (bsp - sp);
                    remaining -= avail;
                    self.set_sqrt_price(bsp);
                }
            } else {
                let avail = l * (sp - bsp);
                if remaining < avail {
                    let next = sp - remaining / l;
                    input += l * (1.0 / next - 1.0 / sp);
                    self.set_sqrt_price(next);
                    remaining = 0.0;
                } else {
                    input += l * (1.0 / bsp - 1.0 / sp);
                    remaining -= avail;
                    self.set_sqrt_price(bsp);
                }
            }
        }
        Ok(input)
    }

    fn snap_range(&self, lower: f64, upper: f64) -> Result<(i64, i64), VammError> {
        if !(lower > 0.0 && upper > lower && upper.is_finite()) {
            return Err(VammError::InvertedRange { lower, upper });
        }
        let lo = nearest_usable_tick(lower, self.tick_spacing);
        let hi = nearest_usable_tick(upper, self.tick_spacing);
        if hi <= lo {
            return Err(VammError::InvertedRange { lower, upper });
        }
        Ok((lo, hi))
    }

    /// Adds a position sized by its liquidity `L` on the tick-snapped range.
    pub fn add_liquidity_l(
        &mut self,
        owner: u64,
        lower: f64,
        upper: f64,
        liquidity: f64,
        leverage: f64,
    ) -> Result<LiquidityPosition, VammError> {
        let (tick_lower, tick_upper) = self.snap_range(lower, upper)?;
        if !(liquidity > 0.0 && liquidity.is_finite()) {
            return Err(VammError::NegativeAmount(liquidity));
        }
        if !(leverage >= 1.0) {
            return Err(VammError::LeverageCap { leverage, cap: f64::INFINITY });
        }
        let PoolState::Concentrated { positions, boundaries, next_id, .. } = &mut self.state else {
            return Err(VammError::UniformPool);
        };
        let position = LiquidityPosition { id: *next_id, owner, tick_lower, tick_upper, liquidity, leverage };
        *next_id += 1;
        boundaries.insert(tick_lower);
        boundaries.insert(tick_upper);
        positions.push(position.clone());
        Ok(position)
    }

    /// Adds a position from real token amounts, which must match the
    /// range's composition at the current price.
    pub fn add_liquidity(
        &mut self,
        owner: u64,
        lower: f64,
        upper: f64,
        base: f64,
        quote: f64,
        leverage: f64,
    ) -> Result<LiquidityPosition, VammError> {
        check_amount(base)?;
        check_amount(quote)?;
        let (tl, tu) = self.snap_range(lower, upper)?;
        let (slo, shi) = (tick_sqrt_price(tl), tick_sqrt_price(tu));
        let sp = self.sqrt_price();
        let scale = base * sp * sp + quote;
        let tol = 1e-6 * scale.max(f64::MIN_POSITIVE);
        let liquidity = if sp <= slo {
            if quote > tol {
                return Err(VammError::InconsistentAmounts { base, quote });
            }
            base / (1.0 / slo - 1.0 / shi)
        } else if sp >= shi {
            if base * sp * sp > tol {
                return Err(VammError::InconsistentAmounts { base, quote });
            }
            quote / (shi - slo)
        } else {
            let lx = base / (1.0 / sp - 1.0 / shi);
            let ly = quote / (sp - slo);
            if (lx - ly).abs() > 1e-6 * lx.max(ly) {
                return Err(VammError::InconsistentAmounts { base, quote });
            }
            lx.min(ly)
        };
        self.add_liquidity_l(owner, lower, upper, liquidity, leverage)
    }

    /// Removes a position and returns its real `(base, quote)` at the current price.
    pub fn remove_liquidity(&mut self, id: u64) -> Result<(LiquidityPosition, f64, f64), VammError> {
        let PoolState::Concentrated { sqrt_price, positions, boundaries, .. } = &mut self.state else {
            return Err(VammError::UniformPool);
        };
        let idx = positions.iter().position(|p| p.id == id).ok_or(VammError::UnknownPosition(id))?;
        let position = positions.remove(idx);
        let (base, quote) = position.real_reserves(*sqrt_price);
        *boundaries = positions.iter().flat_map(|p| [p.tick_lower, p.tick_upper]).collect();
        Ok((position, base, quote))
    }

    pub fn manifest(&self) -> PoolManifest {
        let (q_vusdc, q_vbtc) = self.reserves();
        PoolManifest {
            mode: if self.is_concentrated() { "concentrated" } else { "uniform" }.to_string(),
            q_vusdc,
            q_vbtc,
            k: self.k(),
            fee_rate: self.fee_rate,
            tick_base: TICK_BASE,
            tick_spacing: self.tick_spacing,
            positions: self.positions().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolManifest {
    pub mode: String,
    pub q_vusdc: f64,
    pub q_vbtc: f64,
    pub k: f64,
    pub fee_rate: f64,
    pub tick_base: f64,
    pub tick_spacing: u32,
    pub positions: usize,
}

pub fn pool_price(pool: &VammPool) -> Result<f64, VammError> {
    pool.price()
}

pub fn price_sensitivity(pool: &VammPool) -> Result<f64, VammError> {
    pool.price_sensitivity()
}
