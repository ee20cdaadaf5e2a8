use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use fundsize::params::AnnualRates;
use fundsize::ModelParams;
use serde::{Deserialize, Serialize};

use crate::output::{sha256_file, FileDigest, OutputDir};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    /// `preset:<name>` or the config file path.
    pub source: String,
    pub monthly: ModelParams,
    pub annual: AnnualRates,
}

impl ResolvedParams {
    pub fn new(source: String, monthly: ModelParams) -> Self {
        Self { source, annual: monthly.annual_rates(), monthly }
    }
}

/// Everything needed to re-run a command. Only `started_at` and `finished_at`
/// differ between two runs of the same command line on the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub command_line: Vec<String>,
    pub params: Option<ResolvedParams>,
    pub switches: BTreeMap<String, String>,
    pub seed_root: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

pub struct ManifestBuilder {
    m: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Self {
            m: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                command_line: argv.to_vec(),
                params: None,
                switches: BTreeMap::new(),
                seed_root: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_at: now(),
                finished_at: String::new(),
            },
        }
    }

    pub fn params(&mut self, p: ResolvedParams) -> &mut Self {
        self.m.params = Some(p);
        self
    }

    pub fn switch(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.m.switches.insert(key.into(), value.to_string());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.m.seed_root = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let sha256 = sha256_file(path)?;
        self.m.inputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(self)
    }

    /// Records output digests, writes the manifest and moves everything into place.
    pub fn finish(mut self, mut out: OutputDir) -> Result<RunManifest> {
        self.m.outputs = out.digests()?;
        self.m.finished_at = now();
        out.json(MANIFEST_FILE, &self.m)?;
        out.commit()?;
        Ok(self.m)
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}
