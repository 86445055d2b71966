use std::path::Path;

use perpsim::agents::{engine_dir, PoolArtifact};
use perpsim::marketdata::parse_candles;
use perpsim::vamm::{geometric_edges, liquidity_distribution, tick_price, write_liquidity_distribution, VammPool};
use perpsim::volatility::{volatility_series, write_volatility, RadicandPolicy};
use perpsim::ExchangeKind;

use crate::error::CliError;
use crate::io::{self, OutDir};
use crate::PlotdataArgs;

/// `(tick_lower, tick_upper, liquidity)` rows of `positions.csv`.
fn read_positions(path: &Path) -> Result<Vec<(i64, i64, f64)>, CliError> {
    let text = io::read(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::io(path, e))?;
    if headers.iter().collect::<Vec<_>>() != ["tick_lower", "tick_upper", "liquidity"] {
        return Err(CliError::Data(format!("{}: expected header tick_lower,tick_upper,liquidity", path.display())));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let bad = |what: &str| CliError::Data(format!("{}: line {line}: {what}", path.display()));
        let record = record.map_err(|e| bad(&e.to_string()))?;
        let lower: i64 = record[0].parse().map_err(|_| bad("bad tick_lower"))?;
        let upper: i64 = record[1].parse().map_err(|_| bad("bad tick_upper"))?;
        let liquidity: f64 = record[2].parse().map_err(|_| bad("bad liquidity"))?;
        if upper <= lower || !(liquidity > 0.0 && liquidity.is_finite()) {
            return Err(bad("empty range or non-positive liquidity"));
        }
        rows.push((lower, upper, liquidity));
    }
    Ok(rows)
}

pub fn plotdata(args: &PlotdataArgs) -> Result<(), CliError> {
    if args.buckets == 0 || !(args.span > 1.0) {
        return Err(CliError::Usage("--buckets must be positive and --span above 1".into()));
    }
    let vamm = args.run.join(engine_dir(ExchangeKind::Vamm));
    let pool_path = vamm.join("pool.json");
    let positions_path = vamm.join("positions.csv");
    if !pool_path.is_file() || !positions_path.is_file() {
        return Err(CliError::Data(format!("{}: no VAMM pool artifact (pool.json, positions.csv)", vamm.display())));
    }
    let artifact: PoolArtifact =
        serde_json::from_str(&io::read(&pool_path)?).map_err(|e| CliError::io(&pool_path, e))?;
    let positions = read_positions(&positions_path)?;

    let mut out = OutDir::create(&args.out)?;
    let distribution = if positions.is_empty() {
        write_liquidity_distribution(&[])
    } else {
        let mut pool = VammPool::concentrated(artifact.price, artifact.fee_rate, artifact.tick_spacing)?;
        for (lower, upper, liquidity) in &positions {
            pool.add_liquidity_l(0, tick_price(*lower), tick_price(*upper), *liquidity, 1.0)?;
        }
        let edges = geometric_edges(artifact.price / args.span, artifact.price * args.span, args.buckets);
        write_liquidity_distribution(&liquidity_distribution(&pool, &edges)?)
    };
    out.write("liquidity_distribution.csv", &distribution)?;

    let mut inputs = vec![(pool_path.display().to_string(), io::sha256(&io::read(&pool_path)?))];
    let mut sources = vec![("spot".to_string(), args.run.join("candles.csv"))];
    for kind in [ExchangeKind::Cex, ExchangeKind::Vamm, ExchangeKind::Oracle] {
        sources.push((engine_dir(kind).to_string(), args.run.join(engine_dir(kind)).join("candles.csv")));
    }
    for (name, path) in sources {
        if !path.is_file() {
            continue;
        }
        let text = io::read(&path)?;
        let candles = parse_candles(&text).map_err(|e| CliError::in_file(&path, e))?;
        let sigma = volatility_series(&candles, RadicandPolicy::ClampToZero)?;
        out.write(&format!("volatility_{name}.csv"), &write_volatility(&sigma))?;
        inputs.push((path.display().to_string(), io::sha256(&text)));
    }
    #[derive(serde::Serialize)]
    struct Parameters {
        buckets: usize,
        span: f64,
    }
    out.finish("plotdata", Parameters { buckets: args.buckets, span: args.span }, inputs)
}
