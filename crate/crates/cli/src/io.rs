use std::fs;
use std::path::{Path, PathBuf};

use perpsim::marketdata::{parse_activity, parse_candles, GapPolicy};
use perpsim::{ActivitySeries, Candle, SourceTag};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_candles(path: &Path) -> Result<Vec<Candle>, CliError> {
    parse_candles(&read(path)?).map_err(|e| CliError::in_file(path, e))
}

pub fn read_activity(path: &Path, source: SourceTag, gaps: GapPolicy) -> Result<ActivitySeries, CliError> {
    parse_activity(&read(path)?, source, gaps).map_err(|e| CliError::in_file(path, e))
}

pub fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Output directory that records what it writes for the run manifest.
pub struct OutDir {
    root: PathBuf,
    written: Vec<(String, String)>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, format!("cannot create output directory: {e}")))?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
        self.written.push((name.to_string(), sha256(content)));
        Ok(())
    }

    /// Writes `manifest.json` with the given parameters and every file
    /// written so far.
    pub fn finish(mut self, command: &str, parameters: impl Serialize, inputs: Vec<(String, String)>) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct RunManifest<P> {
            version: &'static str,
            command: String,
            parameters: P,
            inputs: std::collections::BTreeMap<String, String>,
            outputs: std::collections::BTreeMap<String, String>,
        }
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            parameters,
            inputs: inputs.into_iter().collect(),
            outputs: std::mem::take(&mut self.written).into_iter().collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))?;
        self.write("manifest.json", &text)
    }
}
