mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perpsim::{ExchangeKind, VolModel};

use crate::error::{CliError, Exit};

#[derive(Debug, Parser)]
#[command(name = "perpsim", version, about = "Perpetual-futures exchange simulation and volatility econometrics")]
struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch a remote feed, or validate and normalize local candle/activity files.
    Ingest(IngestArgs),
    /// Run the agent-based simulation and write its artifacts.
    Simulate(SimulateArgs),
    /// Volatility, ARIMA decomposition and the volatility-activity regression.
    Analyze(AnalyzeArgs),
    /// Pairwise Granger-causality tests on columns of a CSV file.
    Granger(GrangerArgs),
    /// Plot-ready CSVs from a simulation run.
    Plotdata(PlotdataArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Feed description (TOML).
    #[arg(long, conflicts_with_all = ["candles", "activity"], requires_all = ["start", "end"])]
    pub feed: Option<PathBuf>,
    #[arg(long)]
    pub start: Option<chrono::NaiveDate>,
    #[arg(long)]
    pub end: Option<chrono::NaiveDate>,
    /// Response cache directory (default `<out>/cache`).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Local candles file to validate.
    #[arg(long)]
    pub candles: Option<PathBuf>,
    /// Local activity file to validate.
    #[arg(long, requires = "source")]
    pub activity: Option<PathBuf>,
    /// Source tag of the activity file: lob-cex, vamm, oracle or simulated.
    #[arg(long)]
    pub source: Option<perpsim::SourceTag>,
    /// Fill calendar gaps in activity with the previous day instead of failing.
    #[arg(long)]
    pub forward_fill: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (TOML); defaults apply to omitted keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub days: Option<usize>,
    /// Comma-separated engines: cex, vamm, oracle.
    #[arg(long, value_delimiter = ',')]
    pub engines: Option<Vec<ExchangeKind>>,
    /// Independent runs with consecutive seeds, written to `<out>/seed-<n>`.
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Simulation output directory; reads the spot candles and the engine's activity.
    #[arg(long, conflicts_with_all = ["candles", "activity"])]
    pub run: Option<PathBuf>,
    #[arg(long, requires = "activity")]
    pub candles: Option<PathBuf>,
    #[arg(long, requires = "candles")]
    pub activity: Option<PathBuf>,
    #[arg(long, default_value = "activity")]
    pub model: VolModel,
    #[arg(long, default_value = "cex")]
    pub exchange_kind: ExchangeKind,
    /// Largest lag order m tried for the volatility terms.
    #[arg(long, default_value_t = 7)]
    pub max_lags: usize,
    #[arg(long, default_value_t = 5)]
    pub arima_p: usize,
    #[arg(long, default_value_t = 1)]
    pub arima_d: usize,
    #[arg(long, default_value_t = 5)]
    pub arima_q: usize,
    /// Heteroskedasticity-robust (HC1) standard errors.
    #[arg(long)]
    pub hc1: bool,
    /// Treat candles whose estimator radicand is negative as zero volatility.
    #[arg(long)]
    pub clamp_radicand: bool,
    #[arg(long)]
    pub forward_fill: bool,
    /// Also test Granger causality between returns and each activity series.
    #[arg(long)]
    pub granger: bool,
    #[arg(long, default_value_t = 15, requires = "granger")]
    pub max_lag: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GrangerArgs {
    /// CSV with a header row; a `date` column is ignored.
    #[arg(long)]
    pub input: PathBuf,
    /// Cause column.
    #[arg(long)]
    pub x: String,
    /// Effect column.
    #[arg(long)]
    pub y: String,
    #[arg(long, default_value_t = 15)]
    pub max_lag: usize,
    /// Test only x→y instead of both directions.
    #[arg(long)]
    pub one_way: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotdataArgs {
    /// Simulation output directory.
    #[arg(long)]
    pub run: PathBuf,
    /// Number of price buckets in the liquidity distribution.
    #[arg(long, default_value_t = 120)]
    pub buckets: usize,
    /// Bucket grid spans `[price / span, price * span]`.
    #[arg(long, default_value_t = 2.0)]
    pub span: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Granger(a) => commands::granger(&a),
        Command::Plotdata(a) => commands::plotdata(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Usage as u8 } else { Exit::Success as u8 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit() as u8)
        }
    }
}
