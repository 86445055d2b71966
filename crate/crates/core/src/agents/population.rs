use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::econometrics::ExchangeKind;
use crate::exchanges::{Exchange, Execution, OrderRequest, OrderSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraderClass {
    Informed,
    Uninformed,
    Hedger,
    Speculator,
    MarketMaker,
    Arbitrageur,
}

impl TraderClass {
    pub const ALL: [TraderClass; 6] = [
        TraderClass::Informed,
        TraderClass::Uninformed,
        TraderClass::Hedger,
        TraderClass::Speculator,
        TraderClass::MarketMaker,
        TraderClass::Arbitrageur,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TraderClass::Informed => "informed",
            TraderClass::Uninformed => "uninformed",
            TraderClass::Hedger => "hedger",
            TraderClass::Speculator => "speculator",
            TraderClass::MarketMaker => "market-maker",
            TraderClass::Arbitrageur => "arbitrageur",
        }
    }

    fn stream(&self) -> u64 {
        *self as u64 + 1
    }
}

impl fmt::Display for TraderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraderClass {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraderClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| AgentError::Config(format!("unknown trader class `{s}`")))
    }
}

/// Log-normal wealth: `median * exp(dispersion * Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WealthDist {
    pub median: f64,
    pub dispersion: f64,
}

/// Each agent draws a fixed leverage uniformly from `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeveragePolicy {
    pub min: f64,
    pub max: f64,
}

/// One trader population. Only the reaction parameters of the spec's class
/// are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderSpec {
    pub class: TraderClass,
    pub count: usize,
    pub wealth: WealthDist,
    pub leverage: LeveragePolicy,
    /// Probability of acting in a step.
    pub activity: f64,
    /// Informed: signal-to-noise ratio of the look-ahead signal.
    pub signal_precision: f64,
    pub risk_aversion: f64,
    /// Informed: widest tolerated distance between trade price and spot.
    pub band: f64,
    /// Uninformed: position fraction per unit of annualized trailing volatility.
    pub vol_gain: f64,
    /// Uninformed: long-size multiplier after a positive trailing return.
    pub overreaction: f64,
    /// Uninformed: probability of trading with the trailing return.
    pub momentum: f64,
    pub holding_steps: f64,
    pub rebalance_days: u32,
    /// Hedger: fraction of the population hedging with shorts.
    pub short_fraction: f64,
    pub shocks_per_day: f64,
    pub hold_days: f64,
    pub half_spread: f64,
    pub levels: u32,
    pub level_gap: f64,
    /// Market maker: USD per quoted level.
    pub quote_notional: f64,
    pub inventory_limit: f64,
    /// Arbitrageur: largest tolerated premium of the pool price over spot.
    pub threshold: f64,
}

impl TraderSpec {
    /// Class defaults.
    pub fn preset(class: TraderClass) -> Self {
        let base = TraderSpec {
            class,
            count: 0,
            wealth: WealthDist { median: 20_000.0, dispersion: 0.5 },
            leverage: LeveragePolicy { min: 1.0, max: 1.0 },
            activity: 0.0,
            signal_precision: 0.5,
            risk_aversion: 50.0,
            band: 0.002,
            vol_gain: 0.5,
            overreaction: 1.5,
            momentum: 0.6,
            holding_steps: 6.0,
            rebalance_days: 7,
            short_fraction: 0.7,
            shocks_per_day: 0.3,
            hold_days: 1.0,
            half_spread: 0.0005,
            levels: 5,
            level_gap: 0.0005,
            quote_notional: 500_000.0,
            inventory_limit: 50_000_000.0,
            threshold: 0.005,
        };
        match class {
            TraderClass::Informed => TraderSpec {
                count: 50,
                wealth: WealthDist { median: 200_000.0, dispersion: 0.5 },
                leverage: LeveragePolicy { min: 2.0, max: 5.0 },
                activity: 0.02,
                ..base
            },
            TraderClass::Uninformed => TraderSpec {
                count: 250,
                leverage: LeveragePolicy { min: 2.0, max: 10.0 },
                activity: 0.02,
                ..base
            },
            TraderClass::Hedger => TraderSpec {
                count: 20,
                wealth: WealthDist { median: 500_000.0, dispersion: 0.5 },
                leverage: LeveragePolicy { min: 1.0, max: 2.0 },
                ..base
            },
            TraderClass::Speculator => TraderSpec {
                count: 30,
                wealth: WealthDist { median: 50_000.0, dispersion: 0.5 },
                leverage: LeveragePolicy { min: 5.0, max: 10.0 },
                ..base
            },
            TraderClass::MarketMaker => TraderSpec {
                count: 4,
                wealth: WealthDist { median: 1e9, dispersion: 0.0 },
                ..base
            },
            TraderClass::Arbitrageur => TraderSpec {
                count: 2,
                wealth: WealthDist { median: 1e9, dispersion: 0.0 },
                leverage: LeveragePolicy { min: 2.0, max: 2.0 },
                ..base
            },
        }
    }

    /// The default mixed population.
    pub fn default_population() -> Vec<TraderSpec> {
        TraderClass::ALL.into_iter().map(TraderSpec::preset).collect()
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |what: &str| Err(AgentError::Config(format!("{} population: {what}", self.class)));
        if !(self.wealth.median > 0.0 && self.wealth.dispersion >= 0.0) {
            return bad("wealth median must be positive and dispersion non-negative");
        }
        if !(self.leverage.min >= 1.0 && self.leverage.max >= self.leverage.min && self.leverage.max.is_finite()) {
            return bad("leverage range must satisfy 1 <= min <= max");
        }
        if !(0.0..=1.0).contains(&self.activity) || !(0.0..=1.0).contains(&self.momentum) {
            return bad("activity and momentum must be probabilities");
        }
        if !(0.0..=1.0).contains(&self.short_fraction) {
            return bad("short fraction must lie in [0, 1]");
        }
        if !(self.overreaction >= 1.0) {
            return bad("overreaction multiplier must be at least 1");
        }
        if !(self.signal_precision > 0.0 && self.risk_aversion > 0.0 && self.vol_gain >= 0.0) {
            return bad("signal precision and risk aversion must be positive, volatility gain non-negative");
        }
        if !(self.holding_steps >= 1.0 && self.hold_days > 0.0 && self.shocks_per_day >= 0.0) {
            return bad("holding periods must be positive");
        }
        if self.rebalance_days == 0 {
            return bad("rebalance period must be at least one day");
        }
        if !(self.band >= 0.0 && self.half_spread > 0.0 && self.level_gap >= 0.0 && self.threshold > 0.0) {
            return bad("band, spread and threshold must be positive");
        }
        if !(self.quote_notional > 0.0 && self.inventory_limit > 0.0) {
            return bad("quote size and inventory limit must be positive");
        }
        Ok(())
    }
}

/// Independent random streams per class; adding a class leaves every other
/// class's draws untouched.
#[derive(Debug, Clone)]
pub struct ClassStreams {
    streams: BTreeMap<TraderClass, ChaCha8Rng>,
}

impl ClassStreams {
    pub fn new(seed: u64) -> Self {
        let streams = TraderClass::ALL
            .into_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c.stream());
                (c, rng)
            })
            .collect();
        ClassStreams { streams }
    }

    pub fn get(&mut self, class: TraderClass) -> &mut ChaCha8Rng {
        self.streams.get_mut(&class).expect("every class has a stream")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub owner: u64,
    pub class: TraderClass,
    pub spec: usize,
    pub wealth: f64,
    pub leverage: f64,
    /// Position of the agent within its class.
    pub rank: usize,
    close_at: Option<u64>,
    /// Informed: expected log return over the horizon from the last signal.
    belief: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub specs: Vec<TraderSpec>,
    pub agents: Vec<Agent>,
}

impl Population {
    /// Draws wealth and leverage per agent. Owner ids are agent indices.
    pub fn new(specs: Vec<TraderSpec>, seed: u64) -> Result<Self, AgentError> {
        let mut agents = Vec::new();
        for (si, spec) in specs.iter().enumerate() {
            spec.validate()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(100 + spec.class.stream() * 1_000 + si as u64);
            let wealth = LogNormal::new(spec.wealth.median.ln(), spec.wealth.dispersion)
                .map_err(|e| AgentError::Config(e.to_string()))?;
            for rank in 0..spec.count {
                let w = wealth.sample(&mut rng);
                let u: f64 = rng.random();
                agents.push(Agent {
                    owner: agents.len() as u64,
                    class: spec.class,
                    spec: si,
                    wealth: w,
                    leverage: spec.leverage.min + u * (spec.leverage.max - spec.leverage.min),
                    rank,
                    close_at: None,
                    belief: None,
                });
            }
        }
        Ok(Population { specs, agents })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn class_of(&self, owner: u64) -> Option<TraderClass> {
        self.agents.get(owner as usize).map(|a| a.class)
    }

    pub fn count(&self, class: TraderClass) -> usize {
        self.agents.iter().filter(|a| a.class == class).count()
    }
}

/// What agents see at a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketView {
    pub step: u64,
    pub steps_per_day: u32,
    pub spot: f64,
    pub mark: f64,
    /// Annualized volatility of recent step returns.
    pub trailing_vol: f64,
    /// Spot log return over the trailing day.
    pub trailing_return: f64,
    /// Spot `horizon_steps` ahead; informed agents observe it with noise.
    pub fundamental: f64,
    pub horizon_steps: u32,
}

impl MarketView {
    fn step_vol(&self) -> f64 {
        self.trailing_vol / (super::DAYS_PER_YEAR * self.steps_per_day as f64).sqrt()
    }

    fn day_start(&self) -> bool {
        self.step % self.steps_per_day as u64 == 0
    }

    fn day(&self) -> u64 {
        self.step / self.steps_per_day as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub step: u64,
    pub owner: u64,
    pub class: TraderClass,
    pub side: OrderSide,
    pub quantity: f64,
    pub filled: f64,
    /// Notional of the fills.
    pub notional: f64,
    pub error: Option<String>,
}

fn submit(engine: &mut dyn Exchange, log: &mut Vec<OrderRecord>, class: TraderClass, order: OrderRequest, step: u64) -> Option<Execution> {
    let result = engine.submit(order);
    let (filled, notional, error) = match &result {
        Ok(e) => (e.filled(), e.fills.iter().map(|f| f.notional()).sum(), None),
        Err(err) => (0.0, 0.0, Some(err.to_string())),
    };
    log.push(OrderRecord { step, owner: order.owner, class, side: order.side, quantity: order.quantity, filled, notional, error });
    result.ok()
}

fn side_of(qty: f64) -> OrderSide {
    if qty > 0.0 {
        OrderSide::Buy
    } else {
        OrderSide::Sell
    }
}

/// Largest notional an agent may hold at its leverage, with room for fees.
fn capacity(engine: &dyn Exchange, agent: &Agent) -> f64 {
    (engine.equity(agent.owner) * agent.leverage * 0.95).max(0.0)
}

fn close(engine: &mut dyn Exchange, log: &mut Vec<OrderRecord>, agent: &Agent, step: u64) {
    let pos = engine.position(agent.owner);
    if pos != 0.0 {
        let order = OrderRequest::market(agent.owner, side_of(-pos), pos.abs(), 1.0);
        submit(engine, log, agent.class, order, step);
    }
}

/// One step of every non-arbitrageur class, in the order market makers,
/// informed, uninformed, hedgers, speculators.
pub fn step_agents(
    population: &mut Population,
    view: &MarketView,
    engine: &mut dyn Exchange,
    streams: &mut ClassStreams,
) -> Vec<OrderRecord> {
    let mut log = Vec::new();
    if engine.kind() == ExchangeKind::Cex {
        quote_market(population, view, engine, &mut log);
    }
    for class in [TraderClass::Informed, TraderClass::Uninformed, TraderClass::Hedger, TraderClass::Speculator] {
        let rng = streams.get(class);
        for i in 0..population.agents.len() {
            if population.agents[i].class != class {
                continue;
            }
            let spec = &population.specs[population.agents[i].spec];
            let agent = &mut population.agents[i];
            match class {
                TraderClass::Informed => informed(agent, spec, view, engine, rng, &mut log),
                TraderClass::Uninformed => uninformed(agent, spec, view, engine, rng, &mut log),
                TraderClass::Hedger => hedger(agent, spec, view, engine, &mut log),
                TraderClass::Speculator => speculator(agent, spec, view, engine, rng, &mut log),
                _ => unreachable!(),
            }
        }
    }
    log
}

/// Arbitrageurs pull the pool price back within their threshold of spot.
/// Only pool venues are affected.
pub fn step_arbitrageurs(
    population: &Population,
    view: &MarketView,
    engine: &mut dyn Exchange,
) -> Vec<OrderRecord> {
    let mut log = Vec::new();
    let Some(pool) = engine.as_vamm_mut() else { return log };
    for agent in population.agents.iter().filter(|a| a.class == TraderClass::Arbitrageur) {
        let spec = &population.specs[agent.spec];
        let mark = pool.mark_price();
        let premium = mark / view.spot - 1.0;
        if premium.abs() <= spec.threshold {
            break;
        }
        let target = view.spot * (1.0 + 0.5 * spec.threshold * premium.signum());
        let side = side_of(-premium);
        match pool.trade_to_price(agent.owner, target, agent.leverage) {
            Ok(e) => log.push(OrderRecord {
                step: view.step,
                owner: agent.owner,
                class: agent.class,
                side,
                quantity: e.filled(),
                filled: e.filled(),
                notional: e.fills.iter().map(|f| f.notional()).sum(),
                error: None,
            }),
            Err(err) => log.push(OrderRecord {
                step: view.step,
                owner: agent.owner,
                class: agent.class,
                side,
                quantity: 0.0,
                filled: 0.0,
                notional: 0.0,
                error: Some(err.to_string()),
            }),
        }
    }
    log
}

/// Market makers replace their ladders around spot, skewed against inventory.
fn quote_market(population: &Population, view: &MarketView, engine: &mut dyn Exchange, log: &mut Vec<OrderRecord>) {
    let makers: Vec<&Agent> = population.agents.iter().filter(|a| a.class == TraderClass::MarketMaker).collect();
    for a in &makers {
        engine.cancel_all(a.owner);
    }
    for a in makers {
        let spec = &population.specs[a.spec];
        let inventory = engine.position(a.owner) * view.spot / spec.inventory_limit;
        let skew = -inventory.clamp(-1.0, 1.0) * spec.half_spread;
        let size = spec.quote_notional / view.spot;
        for j in 0..spec.levels {
            let offset = spec.half_spread + j as f64 * spec.level_gap;
            if inventory < 1.0 {
                let bid = OrderRequest::limit(a.owner, OrderSide::Buy, view.spot * (1.0 - offset + skew), size, a.leverage);
                submit(engine, log, a.class, bid, view.step);
            }
            if inventory > -1.0 {
                let ask = OrderRequest::limit(a.owner, OrderSide::Sell, view.spot * (1.0 + offset + skew), size, a.leverage);
                submit(engine, log, a.class, ask, view.step);
            }
        }
    }
}

/// Mean-variance position toward a noisy look-ahead of spot; trades only
/// at prices within `band` of spot.
fn informed(agent: &mut Agent, spec: &TraderSpec, view: &MarketView, engine: &mut dyn Exchange, rng: &mut ChaCha8Rng, log: &mut Vec<OrderRecord>) {
    let horizon_sd = view.step_vol() * (view.horizon_steps.max(1) as f64).sqrt();
    let fresh = rng.random::<f64>() < spec.activity && horizon_sd > 0.0;
    if fresh {
        let z: f64 = rng.sample(StandardNormal);
        let p2 = spec.signal_precision * spec.signal_precision;
        let signal = (view.fundamental / view.spot).ln() + horizon_sd / spec.signal_precision * z;
        agent.belief = Some(signal * p2 / (1.0 + p2));
    }
    // Between signals the position is only ever cut back as risk rises.
    let Some(expected) = agent.belief else { return };
    if !(horizon_sd > 0.0) {
        return;
    }
    let weight = (expected / (spec.risk_aversion * horizon_sd * horizon_sd)).clamp(-1.0, 1.0);
    let room = capacity(engine, agent) / view.spot;
    let target = (weight * agent.wealth * agent.leverage / view.spot).clamp(-room, room);
    let held = engine.position(agent.owner);
    let delta = target - held;
    let cutting = target * held >= 0.0 && target.abs() < held.abs();
    if !(fresh || cutting) || delta.abs() * view.spot < 0.05 * agent.wealth {
        return;
    }
    let side = side_of(delta);
    let limit = match side {
        OrderSide::Buy => view.spot * (1.0 + spec.band),
        OrderSide::Sell => view.spot * (1.0 - spec.band),
    };
    let order = if engine.kind() == ExchangeKind::Cex {
        engine.cancel_all(agent.owner);
        OrderRequest::limit(agent.owner, side, limit, delta.abs(), agent.leverage)
    } else {
        let acceptable = match side {
            OrderSide::Buy => view.mark <= limit,
            OrderSide::Sell => view.mark >= limit,
        };
        if !acceptable {
            return;
        }
        OrderRequest::market(agent.owner, side, delta.abs(), agent.leverage)
    };
    submit(engine, log, agent.class, order, view.step);
}

/// Uninformed size grows with trailing volatility; direction follows the
/// trailing return with probability `momentum`, and longs after a rise are
/// scaled by `overreaction`. Positions are closed after a geometric holding
/// period.
pub fn uninformed_notional(spec: &TraderSpec, agent: &Agent, view: &MarketView, long: bool) -> f64 {
    let mut notional = agent.wealth * agent.leverage * (spec.vol_gain * view.trailing_vol).min(1.0);
    if long && view.trailing_return > 0.0 {
        notional *= spec.overreaction;
    }
    notional
}

fn uninformed(agent: &mut Agent, spec: &TraderSpec, view: &MarketView, engine: &mut dyn Exchange, rng: &mut ChaCha8Rng, log: &mut Vec<OrderRecord>) {
    let acting = rng.random::<f64>() < spec.activity;
    let position = engine.position(agent.owner);
    if position != 0.0 {
        if agent.close_at.is_none_or(|t| view.step >= t) {
            close(engine, log, agent, view.step);
            agent.close_at = None;
        }
        return;
    }
    if !acting {
        return;
    }
    let follow = rng.random::<f64>() < spec.momentum;
    let coin = rng.random::<bool>();
    let hold = Geometric::new(1.0 / spec.holding_steps).expect("valid holding period").sample(rng) + 1;
    let up = if view.trailing_return == 0.0 { coin } else { view.trailing_return > 0.0 };
    let long = up == follow;
    let notional = uninformed_notional(spec, agent, view, long).min(capacity(engine, agent));
    let reference = if view.mark.is_finite() { view.mark } else { view.spot };
    let qty = notional / reference;
    if qty * reference < 1.0 {
        return;
    }
    let side = if long { OrderSide::Buy } else { OrderSide::Sell };
    agent.close_at = Some(view.step + hold);
    submit(engine, log, agent.class, OrderRequest::market(agent.owner, side, qty, agent.leverage), view.step);
}

/// Fixed USD hedge, rebalanced at day start on a staggered period.
fn hedger(agent: &mut Agent, spec: &TraderSpec, view: &MarketView, engine: &mut dyn Exchange, log: &mut Vec<OrderRecord>) {
    if !view.day_start() {
        return;
    }
    let day = view.day();
    if day != 0 && (day + agent.rank as u64) % spec.rebalance_days as u64 != 0 {
        return;
    }
    let count = spec.count.max(1) as f64;
    let short = (agent.rank as f64 + 0.5) / count < spec.short_fraction;
    let notional = (agent.wealth * agent.leverage).min(capacity(engine, agent) + engine.position(agent.owner).abs() * view.spot);
    let target = if short { -notional } else { notional } / view.spot;
    let delta = target - engine.position(agent.owner);
    if delta.abs() * view.spot < 0.02 * agent.wealth {
        return;
    }
    submit(engine, log, agent.class, OrderRequest::market(agent.owner, side_of(delta), delta.abs(), agent.leverage), view.step);
}

/// Shock-driven directional bets held for an exponential period.
fn speculator(agent: &mut Agent, spec: &TraderSpec, view: &MarketView, engine: &mut dyn Exchange, rng: &mut ChaCha8Rng, log: &mut Vec<OrderRecord>) {
    let shock = rng.random::<f64>() < spec.shocks_per_day / view.steps_per_day as f64;
    let position = engine.position(agent.owner);
    if position != 0.0 {
        if agent.close_at.is_none_or(|t| view.step >= t) {
            close(engine, log, agent, view.step);
            agent.close_at = None;
        }
        return;
    }
    if !shock {
        return;
    }
    let long = rng.random::<bool>();
    let u: f64 = rng.random();
    let hold = (-(1.0 - u).ln() * spec.hold_days * view.steps_per_day as f64).ceil().max(1.0) as u64;
    let notional = (agent.wealth * agent.leverage).min(capacity(engine, agent));
    let reference = if view.mark.is_finite() { view.mark } else { view.spot };
    if notional < 1.0 {
        return;
    }
    agent.close_at = Some(view.step + hold);
    let side = if long { OrderSide::Buy } else { OrderSide::Sell };
    submit(engine, log, agent.class, OrderRequest::market(agent.owner, side, notional / reference, agent.leverage), view.step);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchanges::{OracleConfig, OracleExchange};

    fn view(vol: f64, ret: f64) -> MarketView {
        MarketView {
            step: 10,
            steps_per_day: 48,
            spot: 30_000.0,
            mark: 30_000.0,
            trailing_vol: vol,
            trailing_return: ret,
            fundamental: 30_000.0,
            horizon_steps: 48,
        }
    }

    fn only(class: TraderClass, count: usize, tweak: impl Fn(&mut TraderSpec)) -> Population {
        let mut spec = TraderSpec::preset(class);
        spec.count = count;
        tweak(&mut spec);
        Population::new(vec![spec], 1).unwrap()
    }

    fn oracle(pop: &Population) -> OracleExchange {
        let mut ex = OracleExchange::new(OracleConfig { pool_liquidity: 1e12, ..Default::default() });
        ex.begin_step(0, 30_000.0);
        for a in &pop.agents {
            ex.deposit(a.owner, a.wealth);
        }
        ex
    }

    fn gross(log: &[OrderRecord], side: Option<OrderSide>) -> f64 {
        log.iter().filter(|r| side.is_none_or(|s| r.side == s)).map(|r| r.notional).sum()
    }

    #[test]
    fn zero_agents_zero_orders() {
        let mut pop = Population::new(Vec::new(), 0).unwrap();
        let mut ex = oracle(&pop);
        let mut streams = ClassStreams::new(0);
        assert!(step_agents(&mut pop, &view(0.6, 0.01), &mut ex, &mut streams).is_empty());
    }

    #[test]
    fn doubled_volatility_raises_uninformed_notional() {
        let run = |vol: f64| {
            let mut pop = only(TraderClass::Uninformed, 200, |s| {
                s.activity = 0.5;
                s.vol_gain = 0.3;
            });
            let mut ex = oracle(&pop);
            gross(&step_agents(&mut pop, &view(vol, 0.01), &mut ex, &mut ClassStreams::new(9)), None)
        };
        let (low, high) = (run(0.4), run(0.8));
        assert!(low > 0.0);
        assert!(high > low);
        assert!((high / low - 2.0).abs() < 1e-6);
    }

    #[test]
    fn overreaction_scales_longs_after_rises() {
        let r = 0.02;
        let (mut long_up, mut short_down) = (0.0, 0.0);
        for seed in 0..500 {
            for (ret, side) in [(r, OrderSide::Buy), (-r, OrderSide::Sell)] {
                let mut pop = only(TraderClass::Uninformed, 20, |s| {
                    s.activity = 0.5;
                    s.vol_gain = 0.3;
                    s.overreaction = 1.5;
                });
                let mut ex = oracle(&pop);
                let log = step_agents(&mut pop, &view(0.6, ret), &mut ex, &mut ClassStreams::new(seed));
                let g = gross(&log, Some(side));
                if side == OrderSide::Buy {
                    long_up += g;
                } else {
                    short_down += g;
                }
            }
        }
        let ratio = long_up / short_down;
        assert!((ratio / 1.5 - 1.0).abs() < 0.10, "ratio {ratio}");
    }

    #[test]
    fn adding_a_class_leaves_other_draws_alone() {
        let informed = |extra: bool| {
            let mut specs = vec![TraderSpec { count: 30, activity: 1.0, ..TraderSpec::preset(TraderClass::Informed) }];
            if extra {
                specs.push(TraderSpec { count: 30, shocks_per_day: 48.0, ..TraderSpec::preset(TraderClass::Speculator) });
            }
            let mut pop = Population::new(specs, 4).unwrap();
            let mut ex = oracle(&pop);
            let mut v = view(0.6, 0.0);
            v.fundamental = 30_600.0;
            let log = step_agents(&mut pop, &v, &mut ex, &mut ClassStreams::new(4));
            log.into_iter().filter(|r| r.class == TraderClass::Informed).collect::<Vec<_>>()
        };
        let alone = informed(false);
        assert!(!alone.is_empty());
        assert_eq!(alone, informed(true));
    }

    #[test]
    fn presets_validate() {
        for spec in TraderSpec::default_population() {
            spec.validate().unwrap();
        }
        let mut s = TraderSpec::preset(TraderClass::Uninformed);
        s.overreaction = 0.9;
        assert!(s.validate().is_err());
        assert_eq!("market-maker".parse::<TraderClass>().unwrap(), TraderClass::MarketMaker);
    }

    #[test]
    fn hedgers_hold_fixed_hedges() {
        let mut pop = only(TraderClass::Hedger, 10, |_| {});
        let mut ex = oracle(&pop);
        let mut v = view(0.6, 0.0);
        v.step = 0;
        step_agents(&mut pop, &v, &mut ex, &mut ClassStreams::new(1));
        let shorts = pop.agents.iter().filter(|a| ex.position(a.owner) < 0.0).count();
        assert_eq!(shorts, 7);
        assert!(pop.agents.iter().all(|a| ex.position(a.owner) != 0.0));
    }
}
