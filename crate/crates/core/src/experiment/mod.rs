//! Monte-Carlo sweeps driven by TOML configs.
//!
//! A config names a scenario, a list of solvers and a sweep axis. Every
//! `(group, x, trial)` triple draws from its own random stream, so results do
//! not depend on thread scheduling.

mod config;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{
    Axis, ExperimentConfig, Method, Params, ScenarioId, SolveConfig, SolverSpec, SparsityRule, Sweep,
};
pub use output::{read_csv, render_csv, write_csv, CurvePoint, Metric, CSV_HEADER};

use crate::error::{Error, Result};
use crate::matrix_io::{read_matrix, read_vector};
use crate::model::{Constellation, ConstellationKind};
use crate::rng::RngStream;
use crate::solvers::RecoveryResult;
use scenarios::Sample;

/// One curve: a solver (or baseline) over the sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<CurvePoint>,
}

/// All curves of one group value.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub label: Option<String>,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub id: String,
    pub groups: Vec<GroupResult>,
}

impl ExperimentResult {
    pub fn series(&self, group: Option<&str>, name: &str) -> Option<&Series> {
        self.groups
            .iter()
            .find(|g| g.label.as_deref() == group)?
            .series
            .iter()
            .find(|s| s.name == name)
    }
}

impl Series {
    /// Values of one metric in sweep order.
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.points.iter().filter(|p| p.metric == metric).map(|p| p.value).collect()
    }
}

const BOOTSTRAP_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    scenarios::check_solvers(cfg)?;
    let ctx = scenarios::prepare(cfg)?;
    let key = cfg.sweep.axis.param();
    let mut groups = Vec::new();
    for (g, (label, group_value)) in cfg.sweep.groups().into_iter().enumerate() {
        // series name -> (metric -> per-x sample lists), in first-seen order
        let mut table: Vec<(String, Vec<(Metric, Vec<Vec<f64>>)>)> = Vec::new();
        let nx = cfg.sweep.values.len();
        for (xi, &x) in cfg.sweep.values.iter().enumerate() {
            let mut params = cfg.params.clone();
            params.set(key, x);
            if let (Some((gkey, _)), Some(v)) = (&cfg.sweep.group, group_value) {
                params.set(gkey, v);
            }
            let point = g * nx + xi;
            let trials: Vec<Vec<Sample>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = RngStream::for_trial(cfg.seed, point, t).rng();
                    scenarios::run_trial(cfg, &ctx, &params, &mut rng)
                })
                .collect::<Result<_>>()?;
            for s in trials.into_iter().flatten() {
                let pos = match table.iter().position(|(name, _)| *name == s.series) {
                    Some(p) => p,
                    None => {
                        table.push((s.series.clone(), Vec::new()));
                        table.len() - 1
                    }
                };
                let metrics = &mut table[pos].1;
                let mpos = match metrics.iter().position(|(m, _)| *m == s.metric) {
                    Some(p) => p,
                    None => {
                        metrics.push((s.metric, vec![Vec::new(); nx]));
                        metrics.len() - 1
                    }
                };
                metrics[mpos].1[xi].push(s.value);
            }
        }
        let series = table
            .into_iter()
            .enumerate()
            .map(|(si, (name, metrics))| {
                let mut points = Vec::new();
                for (xi, &x) in cfg.sweep.values.iter().enumerate() {
                    for (mi, (metric, per_x)) in metrics.iter().enumerate() {
                        let stream = (((g * nx + xi) as u64) << 32) | ((si as u64) << 8) | mi as u64;
                        let mut rng = RngStream::new(cfg.seed ^ BOOTSTRAP_STREAM, stream).rng();
                        let (value, ci95) = output::aggregate(&per_x[xi], *metric, &mut rng);
                        points.push(CurvePoint {
                            x,
                            metric: *metric,
                            value,
                            ci95,
                            trials: per_x[xi].len(),
                        });
                    }
                }
                Series { name, points }
            })
            .collect();
        groups.push(GroupResult { label, series });
    }
    Ok(ExperimentResult {
        id: cfg.id.clone(),
        groups,
    })
}

/// Loads the matrix and observation named by `cfg` and runs its solver once.
pub fn solve_from_files(cfg: &SolveConfig) -> Result<RecoveryResult> {
    let h = read_matrix(&cfg.matrix)?;
    let y = read_vector(&cfg.observation)?;
    let constellation = cfg
        .constellation
        .as_deref()
        .map(|name| name.parse::<ConstellationKind>().map(Constellation::new).map_err(Error::Config))
        .transpose()?;
    if let Some(&bad) = cfg.support.iter().find(|&&i| i >= h.ncols()) {
        return Err(Error::Config(format!("support index {bad} exceeds {} columns", h.ncols())));
    }
    if cfg.solver.method == Method::OracleLs && cfg.support.is_empty() {
        return Err(Error::Config("oracle-ls needs problem.support".into()));
    }
    let k = cfg.k.or(cfg.solver.config.sparsity_k).unwrap_or(cfg.support.len());
    let n = h.ncols().max(1);
    let inst = scenarios::Instance {
        h: &h,
        y: &y,
        k,
        truth_support: &cfg.support,
        noise_variance: cfg.noise_variance,
        signal_variance: k.max(1) as f64 / n as f64,
        constellation: constellation.as_ref(),
    };
    let mut rng = RngStream::new(cfg.seed, 0).rng();
    scenarios::solve_single(&cfg.solver, &inst, &mut rng)
}

/// Writes `<dir>/<group>/<series>.csv`, or `<dir>/<series>.csv` without
/// groups. Returns the written paths.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for g in &result.groups {
        let base = match &g.label {
            Some(label) => dir.join(label),
            None => dir.to_path_buf(),
        };
        for s in &g.series {
            let path = base.join(format!("{}.csv", s.name));
            write_csv(&s.points, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

macro_rules! presets {
    ($($id:literal),+ $(,)?) => {
        const PRESETS: &[(&str, &str)] = &[
            $(($id, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../presets/", $id, ".cfg")))),+
        ];
    };
}

presets!(
    "fig3",
    "fig5",
    "fig6",
    "fig7-scaled",
    "fig8-scaled",
    "fig9",
    "fig11",
    "fig13-synthetic",
    "fig15",
    "fig16",
    "fig17",
    "toeplitz-pilot",
    "ofdm-pilot",
    "localization",
    "cv-sparsity",
    "solver-zoo",
    "mmv-distinct",
);

pub fn list_presets() -> Vec<&'static str> {
    PRESETS.iter().map(|(id, _)| *id).collect()
}

pub fn preset_source(id: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(p, _)| *p == id).map(|(_, text)| *text)
}

pub fn load_preset(id: &str) -> Result<ExperimentConfig> {
    let text = preset_source(id).ok_or_else(|| {
        Error::Config(format!("unknown preset '{id}'; available: {}", list_presets().join(", ")))
    })?;
    ExperimentConfig::from_toml_str(text)
}
