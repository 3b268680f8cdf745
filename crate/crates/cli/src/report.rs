//! Report envelope and output files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "flatnorm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Whether a run ended with a mathematical negative result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Negative,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Completed => 0,
            Outcome::Negative => 2,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    outcome: Outcome,
    result: &'a T,
}

/// SHA-256 over the canonical configuration JSON followed by the input bytes.
pub fn config_hash(config: &impl Serialize, inputs: &[&[u8]]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config)?);
    for bytes in inputs {
        h.update([0u8]);
        h.update(bytes);
    }
    Ok(hex::encode(h.finalize()))
}

pub struct Report<T: Serialize> {
    pub command: &'static str,
    pub config_hash: String,
    pub outcome: Outcome,
    pub result: T,
    pub csv: Option<String>,
    /// Extra JSON files written next to the report.
    pub attachments: Vec<(&'static str, serde_json::Value)>,
}

impl<T: Serialize> Report<T> {
    pub fn json(&self) -> Result<String> {
        let env = Envelope {
            tool: TOOL,
            version: VERSION,
            command: self.command,
            config_hash: &self.config_hash,
            outcome: self.outcome,
            result: &self.result,
        };
        let mut s = serde_json::to_string_pretty(&env)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `report.json`, `report.csv` and attachments into `out`, or the
    /// JSON to stdout when no directory is given.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        let json = self.json()?;
        let Some(dir) = out else {
            print!("{json}");
            return Ok(());
        };
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        write(dir.join("report.json"), &json)?;
        if let Some(csv) = &self.csv {
            write(dir.join("report.csv"), csv)?;
        }
        for (name, value) in &self.attachments {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            write(dir.join(name), &s)?;
        }
        Ok(())
    }
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}
