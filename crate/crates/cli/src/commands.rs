//! Subcommand implementations. Paths are computed in parallel chunks and
//! written in path order, so output bytes do not depend on the thread count.

use std::path::{Path, PathBuf};

use anyhow::Context;
use mslevy::charfn::{cf_lf_joint, cf_li_joint, CfQuery};
use mslevy::checks::{self, CheckReport, SuiteSettings};
use mslevy::decomp;
use mslevy::localize::{self, TangentReport, TangentRow, TangentSettings};
use mslevy::rng::path_seed;
use mslevy::series::{self, draw_series, IndicatorKernel, Kernel, MinKernel, ProcessKind, SeriesDraw, ZeroKernel};
use mslevy::{AlphaFunction, TimeGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CampaignConfig, KernelConfig, Process};
use crate::output::{self, num, Manifest};
use crate::Failure;

const CHUNK: usize = 256;

/// Setup shared by every subcommand.
pub struct Run {
    pub cfg: CampaignConfig,
    pub alpha: AlphaFunction,
    pub grid: TimeGrid,
    pub dir: PathBuf,
}

impl Run {
    pub fn new(mut cfg: CampaignConfig, out: Option<&Path>) -> Result<Self, Failure> {
        let alpha = cfg.alpha_function().map_err(Failure::Usage)?;
        let grid = TimeGrid::uniform(cfg.horizon, cfg.grid_points)
            .context("time grid")
            .map_err(Failure::Usage)?;
        let dir = output::resolve_dir(out, &cfg);
        cfg.output_dir = Some(dir.clone());
        output::create_dir(&dir).map_err(Failure::Runtime)?;
        Ok(Self { cfg, alpha, grid, dir })
    }

    /// `job(path_id, draw)` for every path, handed to `sink` in path order.
    fn for_each_path<T, J, S>(&self, job: J, mut sink: S) -> anyhow::Result<()>
    where
        T: Send,
        J: Fn(&SeriesDraw) -> mslevy::Result<T> + Sync,
        S: FnMut(usize, T) -> anyhow::Result<()>,
    {
        let (m, n, seed, horizon) = (self.cfg.n_paths, self.cfg.n_terms, self.cfg.seed, self.cfg.horizon);
        for start in (0..m).step_by(CHUNK) {
            let end = (start + CHUNK).min(m);
            let batch: Vec<T> = (start..end)
                .into_par_iter()
                .map(|i| job(&draw_series(path_seed(seed, i as u64), n, horizon)?))
                .collect::<mslevy::Result<_>>()?;
            for (k, item) in batch.into_iter().enumerate() {
                sink(start + k, item)?;
            }
        }
        Ok(())
    }
}

fn kernel(cfg: &CampaignConfig) -> Option<Box<dyn Kernel>> {
    cfg.kernel.map(|k| -> Box<dyn Kernel> {
        match k {
            KernelConfig::Indicator { p } => Box::new(IndicatorKernel { p }),
            KernelConfig::Min { p } => Box::new(MinKernel {
                horizon: cfg.horizon,
                p,
            }),
            KernelConfig::Zero { p } => Box::new(ZeroKernel { p }),
        }
    })
}

pub fn simulate(run: &Run) -> Result<(), Failure> {
    let kernel = kernel(&run.cfg);
    if let Some(k) = &kernel {
        series::check_kernel(k.as_ref(), &run.alpha)
            .context("kernel")
            .map_err(Failure::Usage)?;
    }
    let (f, grid, process) = (&run.alpha, &run.grid, run.cfg.process);
    let job = |d: &SeriesDraw| match process {
        Process::Independent => series::simulate_li_fkl(d, f, grid),
        Process::FieldBased => series::simulate_lf_fkl(d, f, grid),
        Process::General => series::simulate_general_fkl(d, f, kernel.as_deref().expect("validated"), grid),
    };
    let mut w = output::csv_writer(&run.dir.join("paths.csv")).map_err(Failure::Runtime)?;
    let mut body = || -> anyhow::Result<()> {
        w.write_record(["path_id", "t", "value"])?;
        run.for_each_path(job, |id, path| {
            for (t, v) in grid.points().iter().zip(&path.values) {
                w.write_record([id.to_string(), num(*t), num(*v)])?;
            }
            Ok(())
        })?;
        w.flush()?;
        Manifest::<()>::new("simulate", &run.cfg, vec!["paths.csv".into()], None).write(&run.dir)
    };
    body().context("simulate").map_err(Failure::Runtime)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CfProcess {
    Li,
    Lf,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QueryRow {
    times: String,
    thetas: String,
}

/// Query CSV with header `times,thetas`; each field is a space-separated list.
pub fn read_queries(path: &Path) -> anyhow::Result<Vec<CfQuery>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot read queries {}", path.display()))?;
    let mut out = Vec::new();
    for (k, row) in rdr.deserialize::<QueryRow>().enumerate() {
        let line = k + 2;
        let row = row.with_context(|| format!("query line {line}"))?;
        let parse = |s: &str| -> anyhow::Result<Vec<f64>> {
            s.split_whitespace()
                .map(|x| {
                    x.parse::<f64>()
                        .with_context(|| format!("query line {line}: {x:?} is not a number"))
                })
                .collect()
        };
        let q = CfQuery::new(parse(&row.times)?, parse(&row.thetas)?).with_context(|| format!("query line {line}"))?;
        out.push(q);
    }
    if out.is_empty() {
        anyhow::bail!("query file {} has no rows", path.display());
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct CfExtra<'a> {
    queries: &'a [CfQuery],
    processes: Vec<&'static str>,
}

pub fn cf(run: &Run, queries_path: &Path, which: Option<CfProcess>) -> Result<(), Failure> {
    let which = match (which, run.cfg.process) {
        (Some(w), _) => w,
        (None, Process::Independent) => CfProcess::Li,
        (None, Process::FieldBased) => CfProcess::Lf,
        (None, Process::General) => {
            return Err(Failure::Usage(anyhow::anyhow!(
                "no closed-form CF for process = \"general\"; pass --process li|lf|both"
            )))
        }
    };
    let queries = read_queries(queries_path).map_err(Failure::Usage)?;
    let mut files = Vec::new();
    let mut names = Vec::new();
    let body = |files: &mut Vec<String>, names: &mut Vec<&'static str>| -> anyhow::Result<()> {
        for (name, lf) in [("li", false), ("lf", true)] {
            let wanted = matches!(
                (which, lf),
                (CfProcess::Both, _) | (CfProcess::Li, false) | (CfProcess::Lf, true)
            );
            if !wanted {
                continue;
            }
            let results = queries
                .par_iter()
                .map(|q| {
                    if lf {
                        cf_lf_joint(&run.alpha, q)
                    } else {
                        cf_li_joint(&run.alpha, q)
                    }
                })
                .collect::<mslevy::Result<Vec<_>>>()
                .with_context(|| format!("cf_{name}"))?;
            let file = format!("cf_{name}.csv");
            let mut w = output::csv_writer(&run.dir.join(&file))?;
            w.write_record(["theta", "re", "im", "abs_err"])?;
            for (q, r) in queries.iter().zip(&results) {
                let theta = q.thetas.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
                w.write_record([theta, num(r.value.re), num(r.value.im), num(r.abs_err)])?;
            }
            w.flush()?;
            files.push(file);
            names.push(name);
        }
        Ok(())
    };
    body(&mut files, &mut names).context("cf").map_err(Failure::Runtime)?;
    let extra = CfExtra {
        queries: &queries,
        processes: names,
    };
    Manifest::new("cf", &run.cfg, files, Some(extra))
        .write(&run.dir)
        .map_err(Failure::Runtime)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RuleArg {
    Magnitude,
    Alternate,
}

#[derive(Debug, Serialize)]
struct DecomposeExtra {
    rule: decomp::SplitRule,
}

pub fn decompose(run: &Run, rule: Option<RuleArg>) -> Result<(), Failure> {
    let (f, grid) = (&run.alpha, &run.grid);
    let split = match (run.cfg.process, rule) {
        (Process::Independent, None | Some(RuleArg::Magnitude)) => decomp::SplitRule::MagnitudeSplit,
        (Process::Independent, Some(RuleArg::Alternate)) => decomp::SplitRule::AlternateSplit,
        (Process::FieldBased, None) => decomp::SplitRule::FieldDrift,
        (Process::FieldBased, Some(_)) => {
            return Err(Failure::Usage(anyhow::anyhow!(
                "--rule applies to process = \"independent\"; field_based uses the field drift"
            )))
        }
        (Process::General, _) => {
            return Err(Failure::Usage(anyhow::anyhow!(
                "decompose supports process = \"independent\" or \"field_based\""
            )))
        }
    };
    let job = |d: &SeriesDraw| {
        let parts = match split {
            decomp::SplitRule::MagnitudeSplit => decomp::decompose_li_magnitude(d, f, grid)?,
            decomp::SplitRule::AlternateSplit => decomp::decompose_li_alternate(d, f, grid)?,
            decomp::SplitRule::FieldDrift => decomp::decompose_lf_field(d, f, grid)?,
        };
        let total = match split {
            decomp::SplitRule::FieldDrift => series::simulate_lf_fkl(d, f, grid)?.values,
            _ => parts.total(),
        };
        Ok((total, parts))
    };
    let mut w = output::csv_writer(&run.dir.join("decomposition.csv")).map_err(Failure::Runtime)?;
    let mut body = || -> anyhow::Result<()> {
        w.write_record(["path_id", "t", "total", "a_part", "m_part"])?;
        run.for_each_path(job, |id, (total, parts)| {
            for (k, t) in grid.points().iter().enumerate() {
                w.write_record([
                    id.to_string(),
                    num(*t),
                    num(total[k]),
                    num(parts.a_path.values[k]),
                    num(parts.m_path.values[k]),
                ])?;
            }
            Ok(())
        })?;
        w.flush()?;
        Manifest::new(
            "decompose",
            &run.cfg,
            vec!["decomposition.csv".into()],
            Some(DecomposeExtra { rule: split }),
        )
        .write(&run.dir)
    };
    body().context("decompose").map_err(Failure::Runtime)
}

#[derive(Debug, Serialize)]
struct TangentOutput {
    report: TangentReport,
    rows: Vec<TangentRow>,
}

/// Returns whether the distances shrink along the scales.
pub fn localize(run: &Run) -> Result<bool, Failure> {
    let kind = match run.cfg.process {
        Process::Independent => ProcessKind::Li,
        Process::FieldBased => ProcessKind::Lf,
        Process::General => {
            return Err(Failure::Usage(anyhow::anyhow!(
                "localize supports process = \"independent\" or \"field_based\""
            )))
        }
    };
    let l = &run.cfg.localize;
    let t = run.cfg.horizon;
    let r_values: Vec<f64> = l.r_values.iter().map(|r| r * t).collect();
    let mc = TangentSettings {
        n_samples: run.cfg.n_paths,
        n_terms: run.cfg.n_terms,
        seed: run.cfg.seed,
    };
    let report = localize::tangent_check(kind, &run.alpha, l.u * t, &r_values, &l.probe_times, mc)
        .context("localize")
        .map_err(Failure::Runtime)?;
    let pass = report.pass;
    let rows = report.rows();
    let body = || -> anyhow::Result<()> {
        output::write_json(&run.dir.join("tangent.json"), &TangentOutput { report, rows })?;
        Manifest::<()>::new("localize", &run.cfg, vec!["tangent.json".into()], None).write(&run.dir)
    };
    body().map_err(Failure::Runtime)?;
    Ok(pass)
}

#[derive(Debug, Serialize)]
struct CheckOutput {
    all_pass: bool,
    reports: Vec<CheckReport>,
}

/// Returns whether every check passed.
pub fn check(run: &Run) -> Result<bool, Failure> {
    let c = &run.cfg;
    let analytic_alpha = c.analytic_alpha_function().map_err(Failure::Usage)?;
    let settings = SuiteSettings {
        alpha: run.alpha.clone(),
        analytic_alpha,
        n_terms: c.n_terms,
        n_paths: c.n_paths,
        grid_points: c.grid_points,
        seed: c.seed,
        cf_tolerance: c.thresholds.cf_tolerance,
        ks_level: c.thresholds.ks_level,
        field_tolerance: c.thresholds.field_tolerance,
        sigmas: c.thresholds.sigmas,
    };
    let reports = checks::run_suite(&settings)
        .context("check suite")
        .map_err(Failure::Runtime)?;
    for r in &reports {
        eprintln!(
            "{} {}: {:.4e} (threshold {:.4e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.test,
            r.statistic,
            r.threshold
        );
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let body = || -> anyhow::Result<()> {
        output::write_json(&run.dir.join("check.json"), &CheckOutput { all_pass, reports })?;
        Manifest::<()>::new("check", &run.cfg, vec!["check.json".into()], None).write(&run.dir)
    };
    body().map_err(Failure::Runtime)?;
    Ok(all_pass)
}
