use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::population::{step_agents, step_arbitrageurs, ClassStreams, MarketView, OrderRecord, Population, TraderClass, TraderSpec};
use super::price::{candles_from_points, simulate_path, PriceProcess};
use super::AgentError;
use crate::econometrics::ExchangeKind;
use crate::exchanges::{
    write_fill_log, Exchange, Fill, LobConfig, LobExchange, OracleConfig, OracleExchange, VammConfig, VammExchange,
};
use crate::marketdata::{write_activity, write_candles, ActivitySeries, Candle, SourceTag};
use crate::vamm::VammPool;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketConfig {
    /// Half-life, in steps, of the volatility estimate agents react to.
    pub vol_halflife_steps: f64,
    /// How far ahead the informed signal looks; 0 means one day.
    pub horizon_steps: u32,
}

impl Default for MarketConfig {
    fn default() -> Self {
        MarketConfig { vol_halflife_steps: 12.0, horizon_steps: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub days: usize,
    pub start_date: NaiveDate,
    /// Master seed: price path, agent draws and class streams derive from it.
    pub seed: u64,
    pub engines: Vec<ExchangeKind>,
    pub price: PriceProcess,
    pub market: MarketConfig,
    pub population: Vec<TraderSpec>,
    pub lob: LobConfig,
    pub vamm: VammConfig,
    pub oracle: OracleConfig,
    pub record_orders: bool,
    pub record_fills: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            days: 1_000,
            start_date: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date"),
            seed: 0,
            engines: vec![ExchangeKind::Cex, ExchangeKind::Vamm, ExchangeKind::Oracle],
            price: PriceProcess::default(),
            market: MarketConfig::default(),
            population: TraderSpec::default_population(),
            lob: LobConfig::default(),
            vamm: VammConfig::default(),
            oracle: OracleConfig::default(),
            record_orders: true,
            record_fills: true,
        }
    }
}

fn merge(base: &mut toml::Value, overrides: toml::Value) {
    match (base, overrides) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ExperimentConfig {
    /// Parses a TOML config. Each `[[population]]` entry starts from its
    /// class preset, so only differing fields need to be given.
    pub fn from_toml(text: &str) -> Result<Self, AgentError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| AgentError::Config(e.to_string()))?;
        let population = table.remove("population");
        let mut config: ExperimentConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| AgentError::Config(e.to_string()))?;
        if let Some(entries) = population {
            let entries = entries
                .as_array()
                .ok_or_else(|| AgentError::Config("`population` must be an array of tables".into()))?;
            config.population = entries
                .iter()
                .map(|entry| {
                    let class: TraderClass = entry
                        .get("class")
                        .and_then(|c| c.as_str())
                        .ok_or_else(|| AgentError::Config("population entry lacks `class`".into()))?
                        .parse()?;
                    let mut value = toml::Value::try_from(TraderSpec::preset(class))
                        .map_err(|e| AgentError::Config(e.to_string()))?;
                    merge(&mut value, entry.clone());
                    value.try_into().map_err(|e: toml::de::Error| AgentError::Config(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.days == 0 {
            return Err(AgentError::Config("days must be at least 1".into()));
        }
        if self.engines.is_empty() {
            return Err(AgentError::Config("no engines configured".into()));
        }
        let mut seen = self.engines.clone();
        seen.sort_by_key(|k| k.as_str());
        seen.dedup();
        if seen.len() != self.engines.len() {
            return Err(AgentError::Config("engines listed more than once".into()));
        }
        if !(self.market.vol_halflife_steps > 0.0) {
            return Err(AgentError::Config("volatility half-life must be positive".into()));
        }
        self.price.validate()?;
        for spec in &self.population {
            spec.validate()?;
        }
        let tick = self.lob.tick_size;
        if !(tick > 0.0 && tick.is_finite()) {
            return Err(AgentError::Config(format!("tick size {tick} must be positive")));
        }
        if !(self.oracle.pool_liquidity > 0.0 && self.oracle.max_utilization > 0.0) {
            return Err(AgentError::Config("oracle pool liquidity and utilization must be positive".into()));
        }
        if !(self.vamm.depth > 0.0 && self.vamm.initial_price > 0.0) {
            return Err(AgentError::Config("vamm depth and initial price must be positive".into()));
        }
        Ok(())
    }

    /// The config as actually run: the path seed follows the master seed and
    /// the pool opens at the path's initial price.
    pub fn effective(&self) -> Self {
        let mut c = self.clone();
        c.price.seed = c.seed;
        c.vamm.initial_price = c.price.initial_price;
        c.lob.log_fills = c.record_fills;
        c.vamm.log_fills = c.record_fills;
        c.oracle.log_fills = c.record_fills;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub engine: ExchangeKind,
    pub orders: usize,
    pub rejected: usize,
    pub liquidations: usize,
    pub refunds: usize,
    /// Traded notional by the class of the taking (or liquidated) account.
    pub class_volume: BTreeMap<TraderClass, f64>,
    /// Largest daily-close gap between engine mark and spot, relative to spot.
    pub max_close_premium: f64,
}

#[derive(Debug, Clone)]
pub struct EngineRun {
    pub kind: ExchangeKind,
    pub activity: ActivitySeries,
    /// Daily OHLC of the engine's mark price.
    pub candles: Vec<Candle>,
    pub fills: Vec<Fill>,
    pub orders: Vec<OrderRecord>,
    pub summary: RunSummary,
    /// Final pool state of a vamm run.
    pub pool: Option<VammPool>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Exogenous spot candles.
    pub candles: Vec<Candle>,
    pub runs: Vec<EngineRun>,
}

impl ExperimentOutput {
    pub fn run(&self, kind: ExchangeKind) -> Option<&EngineRun> {
        self.runs.iter().find(|r| r.kind == kind)
    }
}

pub fn source_tag(kind: ExchangeKind) -> SourceTag {
    match kind {
        ExchangeKind::Cex => SourceTag::LobCex,
        ExchangeKind::Vamm => SourceTag::Vamm,
        ExchangeKind::Oracle => SourceTag::Oracle,
    }
}

pub fn engine_dir(kind: ExchangeKind) -> &'static str {
    match kind {
        ExchangeKind::Cex => "lob",
        ExchangeKind::Vamm => "vamm",
        ExchangeKind::Oracle => "oracle",
    }
}

fn build_engine(kind: ExchangeKind, config: &ExperimentConfig) -> Result<Box<dyn Exchange>, AgentError> {
    Ok(match kind {
        ExchangeKind::Cex => Box::new(LobExchange::new(config.lob)),
        ExchangeKind::Oracle => Box::new(OracleExchange::new(config.oracle)),
        ExchangeKind::Vamm => Box::new(VammExchange::new(config.vamm).map_err(|e| AgentError::Config(e.to_string()))?),
    })
}

/// Runs every configured engine against one shared spot path. Engines run
/// in parallel; each run is sequential and seeded identically.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, AgentError> {
    config.validate()?;
    let config = config.effective();
    let path = simulate_path(&config.price, config.start_date, config.days)?;
    let population = Population::new(config.population.clone(), config.seed)?;
    let runs = config
        .engines
        .par_iter()
        .map(|&kind| run_engine(kind, &config, &path.points, population.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentOutput { candles: path.candles(), config, runs })
}

fn run_engine(kind: ExchangeKind, config: &ExperimentConfig, points: &[f64], mut population: Population) -> Result<EngineRun, AgentError> {
    let mut engine = build_engine(kind, config)?;
    for a in &population.agents {
        engine.deposit(a.owner, a.wealth);
    }
    let n = config.price.steps_per_day;
    let steps = points.len() - 1;
    let horizon = if config.market.horizon_steps == 0 { n } else { config.market.horizon_steps };
    let alpha = 1.0 - 0.5f64.powf(1.0 / config.market.vol_halflife_steps);
    let annualize = super::DAYS_PER_YEAR * n as f64;
    let mut variance = config.price.step_volatility().powi(2);

    let mut streams = ClassStreams::new(config.seed);
    let mut records = Vec::with_capacity(config.days);
    let mut marks = Vec::with_capacity(points.len());
    let mut orders = Vec::new();
    let mut summary = RunSummary {
        engine: kind,
        orders: 0,
        rejected: 0,
        liquidations: 0,
        refunds: 0,
        class_volume: BTreeMap::new(),
        max_close_premium: 0.0,
    };
    let tally = |log: Vec<OrderRecord>, summary: &mut RunSummary, orders: &mut Vec<OrderRecord>| {
        for r in &log {
            summary.orders += 1;
            summary.rejected += usize::from(r.error.is_some());
            if r.notional > 0.0 {
                *summary.class_volume.entry(r.class).or_default() += r.notional;
            }
        }
        if config.record_orders {
            orders.extend(log);
        }
    };

    for (i, &spot) in points.iter().enumerate() {
        if i > 0 {
            let r = (spot / points[i - 1]).ln();
            variance = (1.0 - alpha) * variance + alpha * r * r;
        }
        engine.begin_step(i as u64, spot);
        let view = MarketView {
            step: i as u64,
            steps_per_day: n,
            spot,
            mark: engine.mark_price(),
            trailing_vol: (variance * annualize).sqrt(),
            trailing_return: (spot / points[i.saturating_sub(n as usize)]).ln(),
            fundamental: points[(i + horizon as usize).min(steps)],
            horizon_steps: horizon,
        };
        let log = step_agents(&mut population, &view, engine.as_mut(), &mut streams);
        tally(log, &mut summary, &mut orders);
        for liq in engine.risk_sweep() {
            summary.liquidations += 1;
            if let Some(class) = population.class_of(liq.owner) {
                *summary.class_volume.entry(class).or_default() += liq.notional;
            }
        }
        let log = step_arbitrageurs(&population, &view, engine.as_mut());
        tally(log, &mut summary, &mut orders);
        marks.push(engine.mark_price());

        if i > 0 && i % n as usize == 0 {
            let day = i / n as usize - 1;
            records.push(engine.daily_rollup(config.start_date + Duration::days(day as i64)));
            let premium = (engine.mark_price() / spot - 1.0).abs();
            summary.max_close_premium = summary.max_close_premium.max(premium);
            summary.refunds += refund_busted(&population, engine.as_mut());
        }
    }

    let activity = ActivitySeries::new(source_tag(kind), records).map_err(|e| AgentError::Engine(e.to_string()))?;
    let pool = engine.as_vamm_mut().map(|v| v.house().pool.clone());
    Ok(EngineRun {
        kind,
        activity,
        candles: candles_from_points(config.start_date, n, &marks),
        fills: engine.fills().to_vec(),
        orders,
        summary,
        pool,
    })
}

/// A flat trader left with under a tenth of its starting wealth is replaced
/// by a fresh one with the same endowment.
fn refund_busted(population: &Population, engine: &mut dyn Exchange) -> usize {
    let mut count = 0;
    for a in &population.agents {
        if matches!(a.class, TraderClass::MarketMaker | TraderClass::Arbitrageur) {
            continue;
        }
        if engine.position(a.owner) == 0.0 && engine.equity(a.owner) < 0.1 * a.wealth {
            engine.cancel_all(a.owner);
            engine.withdraw_free(a.owner);
            engine.deposit(a.owner, a.wealth);
            count += 1;
        }
    }
    count
}

/// `step,owner,class,side,quantity,filled,notional,error`.
pub fn write_orders(orders: &[OrderRecord]) -> String {
    let mut out = String::from("step,owner,class,side,quantity,filled,notional,error\n");
    for o in orders {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            o.step,
            o.owner,
            o.class,
            o.side.as_str(),
            o.quantity,
            o.filled,
            o.notional,
            o.error.as_deref().unwrap_or("").replace(',', ";")
        ));
    }
    out
}

/// `tick_lower,tick_upper,liquidity`.
pub fn write_positions(pool: &VammPool) -> String {
    let mut out = String::from("tick_lower,tick_upper,liquidity\n");
    for p in pool.positions() {
        out.push_str(&format!("{},{},{}\n", p.tick_lower, p.tick_upper, p.liquidity));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub engines: Vec<ExchangeKind>,
    /// Effective configuration, sufficient to reproduce the run.
    pub config: ExperimentConfig,
    /// SHA-256 of every artifact, keyed by path relative to the run directory.
    pub checksums: BTreeMap<String, String>,
}

/// Writes all artifacts under `dir` and returns the manifest (also written
/// as `manifest.json`).
pub fn write_artifacts(output: &ExperimentOutput, dir: &Path) -> Result<Manifest, AgentError> {
    let mut files: Vec<(String, String)> = vec![
        ("config.toml".into(), output.config.to_toml()),
        ("candles.csv".into(), write_candles(&output.candles)),
    ];
    for run in &output.runs {
        let d = engine_dir(run.kind);
        files.push((format!("{d}/activity.csv"), write_activity(&run.activity)));
        files.push((format!("{d}/candles.csv"), write_candles(&run.candles)));
        if output.config.record_fills {
            files.push((format!("{d}/fills.csv"), write_fill_log(&run.fills)));
        }
        if output.config.record_orders {
            files.push((format!("{d}/orders.csv"), write_orders(&run.orders)));
        }
        files.push((
            format!("{d}/summary.json"),
            serde_json::to_string_pretty(&run.summary).map_err(|e| AgentError::Engine(e.to_string()))?,
        ));
        if let Some(pool) = &run.pool {
            files.push((
                format!("{d}/pool.json"),
                serde_json::to_string_pretty(&PoolArtifact::from_pool(pool)).map_err(|e| AgentError::Engine(e.to_string()))?,
            ));
            files.push((format!("{d}/positions.csv"), write_positions(pool)));
        }
    }
    let mut checksums = BTreeMap::new();
    for (name, content) in &files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| AgentError::Io { path: parent.display().to_string(), reason: e.to_string() })?;
        }
        fs::write(&path, content).map_err(|e| AgentError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        checksums.insert(name.clone(), hex::encode(Sha256::digest(content.as_bytes())));
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: output.config.seed,
        engines: output.config.engines.clone(),
        config: output.config.clone(),
        checksums,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| AgentError::Engine(e.to_string()))?;
    fs::write(&path, text).map_err(|e| AgentError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    Ok(manifest)
}

/// Enough of a pool to rebuild it: price, fee, spacing, and (in
/// `positions.csv`) its ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolArtifact {
    pub mode: String,
    pub price: f64,
    pub fee_rate: f64,
    pub tick_spacing: u32,
    pub q_vusdc: f64,
    pub q_vbtc: f64,
}

impl PoolArtifact {
    pub fn from_pool(pool: &VammPool) -> Self {
        let m = pool.manifest();
        PoolArtifact {
            mode: m.mode,
            price: pool.price().unwrap_or(f64::NAN),
            fee_rate: m.fee_rate,
            tick_spacing: m.tick_spacing,
            q_vusdc: m.q_vusdc,
            q_vbtc: m.q_vbtc,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn smoke() -> ExperimentConfig {
        let mut population: Vec<TraderSpec> = TraderSpec::default_population();
        for spec in &mut population {
            spec.count = match spec.class {
                TraderClass::MarketMaker | TraderClass::Arbitrageur => 1,
                _ => 3,
            };
        }
        ExperimentConfig { days: 3, seed: 3, population, ..Default::default() }
    }

    #[test]
    fn smoke_run_writes_valid_artifacts() {
        let out = run_experiment(&smoke()).unwrap();
        assert_eq!(out.candles.len(), 3);
        for run in &out.runs {
            assert_eq!(run.activity.len(), 3);
            assert_eq!(run.candles.len(), 3);
        }
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_artifacts(&out, dir.path()).unwrap();
        assert!(dir.path().join("manifest.json").exists());
        for name in manifest.checksums.keys() {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let text = fs::read_to_string(dir.path().join("lob/activity.csv")).unwrap();
        crate::marketdata::parse_activity(&text, SourceTag::LobCex, Default::default()).unwrap();
        let text = fs::read_to_string(dir.path().join("candles.csv")).unwrap();
        crate::marketdata::parse_candles(&text).unwrap();
    }

    #[test]
    fn single_trader_two_days() {
        let mut spec = TraderSpec::preset(TraderClass::Uninformed);
        spec.count = 1;
        spec.activity = 1.0;
        let config = ExperimentConfig {
            days: 2,
            population: vec![spec],
            engines: vec![ExchangeKind::Oracle],
            ..Default::default()
        };
        let out = run_experiment(&config).unwrap();
        assert!(out.runs[0].activity.records.iter().any(|r| r.volume > 0.0));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
            days = 20
            seed = 9
            engines = ["lob", "oracle"]
            [price]
            volatility = 0.8
            [[population]]
            class = "uninformed"
            count = 12
            wealth = { median = 5000.0 }
            [[population]]
            class = "market-maker"
            count = 2
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.engines, vec![ExchangeKind::Cex, ExchangeKind::Oracle]);
        assert_eq!(c.population.len(), 2);
        assert_eq!(c.population[0].wealth.median, 5_000.0);
        assert_eq!(c.population[0].wealth.dispersion, 0.5);
        assert_eq!(c.population[0].overreaction, 1.5);
        assert_eq!(c.price.volatility, 0.8);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert!(ExperimentConfig::from_toml("dayz = 3").is_err());
        assert!(ExperimentConfig::from_toml("[[population]]\nclass = \"whale\"").is_err());
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(run_experiment(&ExperimentConfig { days: 0, ..smoke() }).is_err());
        assert!(run_experiment(&ExperimentConfig { engines: vec![], ..smoke() }).is_err());
        let mut c = smoke();
        c.population[1].overreaction = 0.5;
        assert!(run_experiment(&c).is_err());
    }
}
