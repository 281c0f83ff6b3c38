//! Atomic output files and directories, and the run manifest written next to
//! every output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use tempfile::{NamedTempFile, TempDir};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    pub flags: serde_json::Value,
    pub tool_version: &'static str,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, inputs: &[&Path], flags: impl Serialize) -> RunManifest {
        RunManifest {
            subcommand: subcommand.to_string(),
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            flags: serde_json::to_value(flags).unwrap_or(serde_json::Value::Null),
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

fn parent_of(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = parent_of(path);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Write a file output and its `<name>.manifest.json` sibling.
pub fn write_file_with_manifest(path: &Path, bytes: &[u8], manifest: &RunManifest) -> Result<()> {
    write_file(path, bytes)?;
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    write_file(&path.with_file_name(name), &manifest.to_json()?)
}

/// A directory built in a temporary sibling and moved into place on commit.
pub struct StagedDir {
    tmp: TempDir,
    target: PathBuf,
}

impl StagedDir {
    pub fn new(target: &Path) -> Result<StagedDir> {
        if target.is_file() {
            bail!("{} exists and is not a directory", target.display());
        }
        let dir = parent_of(target);
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let tmp = tempfile::Builder::new()
            .prefix(".sdoh-kit-")
            .tempdir_in(dir)
            .with_context(|| format!("creating temp dir in {}", dir.display()))?;
        Ok(StagedDir {
            tmp,
            target: target.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.tmp.path()
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.tmp.path().join(name);
        if let Some(d) = p.parent() {
            fs::create_dir_all(d)?;
        }
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    /// Write `manifest.json` and swap the staged directory into place. An
    /// existing target is replaced.
    pub fn commit(self, manifest: &RunManifest) -> Result<()> {
        self.write("manifest.json", &manifest.to_json()?)?;
        let staged = self.tmp.keep();
        let target = &self.target;
        if target.exists() {
            let old = tempfile::Builder::new()
                .prefix(".sdoh-kit-old-")
                .tempdir_in(parent_of(target))?
                .keep();
            fs::remove_dir(&old)?;
            fs::rename(target, &old).with_context(|| format!("moving aside {}", target.display()))?;
            fs::rename(&staged, target).with_context(|| format!("writing {}", target.display()))?;
            fs::remove_dir_all(&old).with_context(|| format!("removing {}", old.display()))?;
        } else {
            fs::rename(&staged, target).with_context(|| format!("writing {}", target.display()))?;
        }
        Ok(())
    }
}

/// Print JSON to stdout, or write it (with manifest) when `out` is given.
pub fn emit_json(out: Option<&Path>, value: &impl Serialize, manifest: &RunManifest) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    match out {
        Some(p) => write_file_with_manifest(p, &bytes, manifest),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

pub fn jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}
