//! Output directory resolution, CSV writers and the run manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::CampaignConfig;

pub const OUT_ENV: &str = "MSLEVY_OUT";
pub const DEFAULT_OUT: &str = "mslevy-out";

/// `--out`, then the config's `output_dir`, then `$MSLEVY_OUT`, then `./mslevy-out`.
pub fn resolve_dir(flag: Option<&Path>, cfg: &CampaignConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

pub fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Shortest digits that parse back to the same `f64`; exponent form outside
/// `[1e-4, 1e15)` in magnitude.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Everything needed to regenerate the files of one run.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, E: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a CampaignConfig,
    pub files: Vec<String>,
    /// Command-specific inputs that are not part of the config.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<E>,
}

impl<'a, E: Serialize> Manifest<'a, E> {
    pub fn new(command: &'static str, config: &'a CampaignConfig, files: Vec<String>, extra: Option<E>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            files,
            extra,
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}
