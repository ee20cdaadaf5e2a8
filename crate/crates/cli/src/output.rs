//! Staged output directory: files are written to a hidden sibling directory and
//! moved into place only once the whole command has succeeded.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub struct OutputDir {
    dir: PathBuf,
    staging: PathBuf,
    created_dir: bool,
    files: Vec<String>,
    committed: bool,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let staging = dir.join(format!(".staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging).with_context(|| format!("creating {}", staging.display()))?;
        Ok(Self { dir: dir.to_path_buf(), staging, created_dir, files: Vec::new(), committed: false })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn writer(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        let path = self.staging.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn csv(&mut self, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
        Ok(csv::Writer::from_writer(self.writer(name)?))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Digests of the staged files, in the order they were created.
    pub fn digests(&self) -> Result<Vec<FileDigest>> {
        self.files
            .iter()
            .map(|name| {
                Ok(FileDigest { path: name.clone(), sha256: sha256_file(&self.staging.join(name))? })
            })
            .collect()
    }

    /// Moves every staged file into the output directory.
    pub fn commit(mut self) -> Result<()> {
        for name in &self.files {
            let target = self.dir.join(name);
            fs::rename(self.staging.join(name), &target)
                .with_context(|| format!("moving output into {}", target.display()))?;
        }
        fs::remove_dir(&self.staging)?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        let _ = fs::remove_dir_all(&self.staging);
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Formats a float for CSV output; infinities are spelled `inf` and `-inf`.
pub fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

/// Writes the same CSV both into the output directory and to stdout.
pub fn tee_csv(out: &mut OutputDir, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut file = out.csv(name)?;
    let stdout = io::stdout();
    let mut console = csv::Writer::from_writer(stdout.lock());
    file.write_record(header)?;
    console.write_record(header)?;
    for r in rows {
        file.write_record(r)?;
        console.write_record(r)?;
    }
    file.flush()?;
    console.flush()?;
    Ok(())
}

/// Reads one named numeric column from a CSV file.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .with_context(|| format!("{} has no `{column}` column", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("");
        let v: f64 = field
            .trim()
            .parse()
            .with_context(|| format!("{} line {}: `{field}` is not a number", path.display(), i + 2))?;
        out.push(v);
    }
    Ok(out)
}
