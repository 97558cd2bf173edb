//! Campaign configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mslevy::{AlphaFunction, AlphaKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Independent,
    FieldBased,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    /// `f(t, x) = 1(x ≤ t)`.
    Indicator {
        p: f64,
    },
    /// `f(t, x) = min(t, x)`.
    Min {
        p: f64,
    },
    Zero {
        p: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub cf_tolerance: f64,
    pub ks_level: f64,
    pub field_tolerance: f64,
    pub sigmas: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            cf_tolerance: 0.03,
            ks_level: 0.01,
            field_tolerance: 1e-2,
            sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizeConfig {
    /// Base time as a fraction of `T`.
    pub u: f64,
    pub r_values: Vec<f64>,
    pub probe_times: Vec<f64>,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        Self {
            u: 0.5,
            r_values: vec![0.2, 0.05, 0.0125],
            probe_times: vec![0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub process: Process,
    pub alpha: AlphaKind,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_terms: usize,
    pub n_paths: usize,
    pub grid_points: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub localize: LocalizeConfig,
    /// Exponent for the analytic side of the CF match only; makes the check
    /// compare against a deliberately different law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_alpha: Option<AlphaKind>,
}

impl CampaignConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg = Self::parse(&text, path.extension().and_then(|e| e.to_str()))
            .with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// JSON when the extension says so or the text starts with `{`, TOML otherwise.
    pub fn parse(text: &str, extension: Option<&str>) -> anyhow::Result<Self> {
        if extension == Some("json") || text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| anyhow::anyhow!("line {}, column {}: {e}", e.line(), e.column()))
        } else {
            toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_terms < 1 {
            bail!("n_terms must be at least 1");
        }
        if self.n_paths < 1 {
            bail!("n_paths must be at least 1");
        }
        if self.grid_points < 2 {
            bail!("grid_points must be at least 2");
        }
        let t = &self.thresholds;
        if [t.cf_tolerance, t.ks_level, t.field_tolerance, t.sigmas]
            .iter()
            .any(|v| !(*v > 0.0))
        {
            bail!("thresholds must be positive");
        }
        if self.process == Process::General && self.kernel.is_none() {
            bail!("process = \"general\" needs a [kernel] block");
        }
        self.alpha_function()?;
        if let Some(a) = &self.analytic_alpha {
            AlphaFunction::new(a.clone(), self.horizon, None).context("analytic_alpha")?;
        }
        Ok(())
    }

    pub fn alpha_function(&self) -> anyhow::Result<AlphaFunction> {
        AlphaFunction::new(self.alpha.clone(), self.horizon, None).context("alpha")
    }

    pub fn analytic_alpha_function(&self) -> anyhow::Result<Option<AlphaFunction>> {
        self.analytic_alpha
            .as_ref()
            .map(|a| AlphaFunction::new(a.clone(), self.horizon, None).context("analytic_alpha"))
            .transpose()
    }
}
