use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;

use crate::manifest::{read_manifest, MANIFEST_FILE};
use crate::output::sha256_file;
use crate::{execute, Cli, Command};

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

/// Outputs go to `--out-dir`, or to `replay/` next to the manifest.
pub fn run(cli: &Cli, a: &Args) -> Result<()> {
    let m = read_manifest(&a.manifest)?;
    for input in &m.inputs {
        let digest = sha256_file(Path::new(&input.path)).with_context(|| format!("input {} of the manifest", input.path))?;
        if digest != input.sha256 {
            bail!("input {} changed since the recorded run", input.path);
        }
    }
    let mut inner = Cli::try_parse_from(&m.command_line).context("parsing the recorded command line")?;
    if matches!(inner.command, Command::Replay(_)) {
        bail!("a manifest cannot record a replay");
    }
    let out = cli.out_dir.clone().unwrap_or_else(|| {
        a.manifest.parent().unwrap_or(Path::new(".")).join("replay")
    });
    inner.out_dir = Some(out.clone());
    execute(&inner, &m.command_line)?;

    let replayed = read_manifest(&out.join(MANIFEST_FILE))?;
    if replayed.outputs != m.outputs {
        for (old, new) in m.outputs.iter().zip(&replayed.outputs) {
            if old != new {
                eprintln!("  {} differs", old.path);
            }
        }
        bail!("replayed outputs differ from the manifest");
    }
    eprintln!("replay reproduced {} output(s) in {}", m.outputs.len(), out.display());
    Ok(())
}
