use std::fs;
use std::path::Path;

use perpsim::agents::{run_experiment, write_artifacts, ExperimentConfig};
use rayon::prelude::*;

use crate::error::CliError;
use crate::io;
use crate::SimulateArgs;

fn load_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_toml(&io::read(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(days) = args.days {
        config.days = days;
    }
    if let Some(engines) = &args.engines {
        config.engines = engines.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run_one(config: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
    let output = run_experiment(config)?;
    let manifest = write_artifacts(&output, dir)?;
    for run in &output.runs {
        let s = &run.summary;
        println!(
            "seed {} {:<6} orders {} rejected {} liquidations {} -> {}",
            manifest.seed,
            run.kind.as_str(),
            s.orders,
            s.rejected,
            s.liquidations,
            dir.display()
        );
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let config = load_config(args)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::io(&args.out, format!("cannot create output directory: {e}")))?;
    if args.replicates == 1 {
        return run_one(&config, &args.out);
    }
    (0..args.replicates).into_par_iter().try_for_each(|r| {
        let mut c = config.clone();
        c.seed = config.seed + r;
        run_one(&c, &args.out.join(format!("seed-{}", c.seed)))
    })
}
