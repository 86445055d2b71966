use std::path::{Path, PathBuf};

use perpsim::agents::{engine_dir, source_tag};
use perpsim::decompose::{order_sidecar, write_decomposed};
use perpsim::econometrics::{granger_table_csv, granger_table_text, granger_test_named, regression_table_csv, regression_table_text};
use perpsim::marketdata::{log_return, GapPolicy};
use perpsim::pipeline::{analyze as run_pipeline, AnalysisConfig};
use perpsim::volatility::{write_volatility, RadicandPolicy};
use perpsim::{ArimaGrid, Covariance, VolModel};
use serde::Serialize;

use crate::error::CliError;
use crate::io::{self, OutDir};
use crate::AnalyzeArgs;

#[derive(Serialize)]
struct Parameters {
    config: AnalysisConfig,
    granger_max_lag: Option<usize>,
}

fn inputs(args: &AnalyzeArgs) -> Result<(PathBuf, PathBuf), CliError> {
    match (&args.run, &args.candles, &args.activity) {
        (Some(run), None, None) => {
            Ok((run.join("candles.csv"), run.join(engine_dir(args.exchange_kind)).join("activity.csv")))
        }
        (None, Some(c), Some(a)) => Ok((c.clone(), a.clone())),
        _ => Err(CliError::Usage("give either --run or both --candles and --activity".into())),
    }
}

fn check_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{}: input not found", path.display())))
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    if args.max_lags == 0 {
        return Err(CliError::Usage("--max-lags must be at least 1".into()));
    }
    let (candles_path, activity_path) = inputs(args)?;
    check_file(&candles_path)?;
    check_file(&activity_path)?;
    let candles_text = io::read(&candles_path)?;
    let activity_text = io::read(&activity_path)?;
    let candles = io::read_candles(&candles_path)?;
    let gaps = if args.forward_fill { GapPolicy::ForwardFill } else { GapPolicy::Reject };
    let activity = io::read_activity(&activity_path, source_tag(args.exchange_kind), gaps)?;
    if args.model == VolModel::Leverage && !activity.has_leverage() {
        return Err(CliError::Data(format!(
            "unsupported model: leverage needs lev_long and lev_short columns, which {} does not carry",
            activity_path.display()
        )));
    }

    let config = AnalysisConfig {
        model: args.model,
        exchange: args.exchange_kind,
        lag_grid: (1..=args.max_lags).collect(),
        arima: ArimaGrid::new(args.arima_p, args.arima_d, args.arima_q).for_regression(),
        covariance: if args.hc1 { Covariance::Hc1 } else { Covariance::Classical },
        radicand: if args.clamp_radicand { RadicandPolicy::ClampToZero } else { RadicandPolicy::Error },
    };
    let analysis = run_pipeline(&candles, &activity, &config).map_err(|e| match CliError::from(e) {
        CliError::Data(msg) => {
            CliError::Data(format!("{} vs {}: {msg}", candles_path.display(), activity_path.display()))
        }
        other => other,
    })?;

    let mut out = OutDir::create(&args.out)?;
    out.write("volatility.csv", &write_volatility(&analysis.volatility))?;
    for series in &analysis.decomposed {
        let name = series.name.name();
        out.write(&format!("decomposition/{name}.csv"), &write_decomposed(series))?;
        let sidecar = serde_json::to_string_pretty(&order_sidecar(series)).map_err(|e| CliError::Data(e.to_string()))?;
        out.write(&format!("decomposition/{name}.order.json"), &sidecar)?;
    }
    let label = format!("{} {}", args.exchange_kind.as_str(), args.model.as_str());
    let columns = vec![(label, analysis.regression.clone())];
    let table = regression_table_text(&columns);
    out.write("regression.txt", &table)?;
    out.write("regression.csv", &regression_table_csv(&columns))?;
    print!("{table}");

    if args.granger {
        let returns: Vec<f64> = candles.iter().map(log_return).collect();
        let mut results = Vec::new();
        for series in &analysis.decomposed {
            let change: Vec<f64> = std::iter::once(0.0)
                .chain(series.observed.windows(2).map(|w| w[1] - w[0]))
                .collect();
            let (x, y) = align_tail(&returns, &change);
            let effect = format!("net change in {}", series.name.name());
            results.push(granger_test_named(x, y, args.max_lag, "return", &effect)?);
            results.push(granger_test_named(y, x, args.max_lag, &effect, "return")?);
        }
        let text = granger_table_text(&results);
        out.write("granger.txt", &text)?;
        out.write("granger.csv", &granger_table_csv(&results))?;
        print!("\n{text}");
    }

    let parameters = Parameters { config, granger_max_lag: args.granger.then_some(args.max_lag) };
    out.finish(
        "analyze",
        parameters,
        vec![
            (candles_path.display().to_string(), io::sha256(&candles_text)),
            (activity_path.display().to_string(), io::sha256(&activity_text)),
        ],
    )
}

/// Drops the first day, whose change is undefined, and matches lengths.
fn align_tail<'a>(a: &'a [f64], b: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    let n = a.len().min(b.len());
    (&a[a.len() - n + 1..], &b[b.len() - n + 1..])
}
