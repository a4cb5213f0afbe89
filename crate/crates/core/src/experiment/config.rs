use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::solvers::{Aggregator, IhtStep, SblRule, SolverConfig};

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

macro_rules! id_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal { $($variant:ident => $id:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn id(&self) -> &'static str {
                match self {
                    $($name::$variant => $id),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.id())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($id => Ok($name::$variant),)+
                    other => {
                        let valid: Vec<&str> = Self::ALL.iter().map(|v| v.id()).collect();
                        Err(config_error(format!(
                            "unknown {} '{other}'; valid ids: {}",
                            $what,
                            valid.join(", ")
                        )))
                    }
                }
            }
        }
    };
}

id_enum!(
    /// Instance generator and metric set of an experiment.
    ScenarioId, "scenario" {
        GaussianCs => "gaussian-cs",
        ToeplitzChannel => "toeplitz-channel",
        OfdmPilot => "ofdm-pilot",
        AngularChannel => "angular-channel",
        ImpulseOfdm => "impulse-ofdm",
        Mwc => "mwc",
        Aud => "aud",
        Localization => "localization",
        MmWave => "mmwave",
        ErrorDetection => "error-detection",
        SlicedQam => "sliced-qam",
        Mmv => "mmv",
        ClusteredDictionary => "clustered-dictionary",
        CvSparsity => "cv-sparsity",
    }
);

id_enum!(
    /// Estimators selectable from a config file.
    Method, "solver" {
        Omp => "omp",
        Iht => "iht",
        Bpdn => "bpdn",
        ReweightedL1 => "reweighted-l1",
        Sbl => "sbl",
        SlicedGreedy => "sliced-greedy",
        L0 => "l0",
        MinNorm => "min-norm",
        Ls => "ls",
        Lmmse => "lmmse",
        OracleLs => "oracle-ls",
        Somp => "somp",
        Gsomp => "gsomp",
    }
);

id_enum!(
    /// Swept quantity; each maps to one scenario parameter.
    Axis, "sweep axis" {
        Snr => "snr",
        Sparsity => "sparsity",
        Snapshots => "snapshots",
        Atoms => "atoms",
        Measurements => "measurements",
    }
);

impl Axis {
    /// Scenario parameter overwritten by the sweep value.
    pub fn param(&self) -> &'static str {
        match self {
            Axis::Snr => "snr_db",
            Axis::Sparsity | Axis::Atoms => "k",
            Axis::Snapshots => "snapshots",
            Axis::Measurements => "m",
        }
    }
}

/// How a solver learns the sparsity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsityRule {
    /// Leave `sparsity_k` as configured.
    Unset,
    /// The true `k` of the instance.
    Known,
    /// `⌈1.2 k⌉`.
    Inflated,
    /// Cross-validated on held-out measurements.
    CrossValidated,
    /// No sparsity; stop at `‖r‖ ≤ residual_scale · √(m σ²)`.
    Residual,
}

impl FromStr for SparsityRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unset" => Ok(Self::Unset),
            "known" => Ok(Self::Known),
            "inflated" => Ok(Self::Inflated),
            "cv" => Ok(Self::CrossValidated),
            "residual" => Ok(Self::Residual),
            other => Err(config_error(format!(
                "unknown sparsity rule '{other}'; valid: unset, known, inflated, cv, residual"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub method: Method,
    /// Series name in the output.
    pub label: String,
    pub config: SolverConfig,
    pub sparsity: SparsityRule,
    /// `λ = lambda_scale · σ √(2 ln n) · max column norm`.
    pub lambda_scale: Option<f64>,
    /// `λ = lambda_rel · ‖Hᴴy‖∞`, used when the noise level is zero or
    /// `lambda_scale` is absent.
    pub lambda_rel: Option<f64>,
    pub residual_scale: f64,
    /// Hand the true noise variance to SBL.
    pub known_noise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Optional outer parameter; every group gets its own output directory.
    pub group: Option<(String, Vec<f64>)>,
}

impl Sweep {
    /// `(label, value)` of every group; a single unnamed group when absent.
    pub fn groups(&self) -> Vec<(Option<String>, Option<f64>)> {
        match &self.group {
            None => vec![(None, None)],
            Some((key, values)) => values
                .iter()
                .map(|v| (Some(format!("{key}-{v}")), Some(*v)))
                .collect(),
        }
    }
}

/// Scenario parameters as written in the `[scenario]` section.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    table: toml::Table,
}

impl Params {
    pub fn new(table: toml::Table) -> Self {
        Self { table }
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.table.insert(key.to_string(), toml::Value::Float(value));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.table.get(key) {
            None => Ok(default),
            Some(toml::Value::Float(v)) => Ok(*v),
            Some(toml::Value::Integer(v)) => Ok(*v as f64),
            Some(other) => Err(config_error(format!("scenario.{key}: expected a number, got {other}"))),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.f64(key, default as f64)?;
        if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
            return Err(config_error(format!("scenario.{key}: expected a count, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn str<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str> {
        match self.table.get(key) {
            None => Ok(default),
            Some(toml::Value::String(s)) => Ok(s),
            Some(other) => Err(config_error(format!("scenario.{key}: expected a string, got {other}"))),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.table.get(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(other) => Err(config_error(format!("scenario.{key}: expected a boolean, got {other}"))),
        }
    }

    pub fn strings(&self, key: &str, default: &[&str]) -> Result<Vec<String>> {
        match self.table.get(key) {
            None => Ok(default.iter().map(|s| s.to_string()).collect()),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s.clone()),
                    other => Err(config_error(format!("scenario.{key}: expected strings, got {other}"))),
                })
                .collect(),
            Some(other) => Err(config_error(format!("scenario.{key}: expected a list, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub scenario: ScenarioId,
    pub params: Params,
    pub solvers: Vec<SolverSpec>,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub output: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    sweep: RawSweep,
    #[serde(default)]
    scenario: toml::Table,
    #[serde(default)]
    solver: Vec<RawSolver>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    id: Option<String>,
    scenario: String,
    trials: usize,
    seed: u64,
    output: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: String,
    values: Vec<f64>,
    group: Option<String>,
    group_values: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    id: String,
    label: Option<String>,
    sparsity: Option<String>,
    sparsity_k: Option<usize>,
    lambda: Option<f64>,
    lambda_scale: Option<f64>,
    lambda_rel: Option<f64>,
    residual_tol: Option<f64>,
    residual_scale: Option<f64>,
    known_noise: Option<bool>,
    max_iterations: Option<usize>,
    candidate_width: Option<usize>,
    sbl_prune_threshold: Option<f64>,
    sbl_rule: Option<String>,
    reweight_epsilon: Option<f64>,
    reweight_rounds: Option<usize>,
    support_tol: Option<f64>,
    debias: Option<bool>,
    tolerance: Option<f64>,
    iht_step: Option<String>,
    aggregator: Option<String>,
}

impl RawSolver {
    fn into_spec(self) -> Result<SolverSpec> {
        let method: Method = self.id.parse()?;
        let mut config = SolverConfig::default();
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { config.$field = v; })*
            };
        }
        set!(
            lambda,
            residual_tol,
            max_iterations,
            candidate_width,
            sbl_prune_threshold,
            reweight_epsilon,
            reweight_rounds,
            support_tol,
            debias,
            tolerance
        );
        config.sparsity_k = self.sparsity_k;
        if let Some(rule) = self.sbl_rule.as_deref() {
            config.sbl_rule = match rule {
                "em" => SblRule::Em,
                "fixed-point" => SblRule::FixedPoint,
                other => return Err(config_error(format!("unknown sbl_rule '{other}'; valid: em, fixed-point"))),
            };
        }
        if let Some(step) = self.iht_step.as_deref() {
            config.iht_step = match step {
                "unit" => IhtStep::Unit,
                "scaled" => IhtStep::Scaled,
                other => return Err(config_error(format!("unknown iht_step '{other}'; valid: unit, scaled"))),
            };
        }
        if let Some(agg) = self.aggregator.as_deref() {
            config.aggregator = match agg {
                "sum" => Aggregator::Sum,
                "l2" => Aggregator::L2,
                other => return Err(config_error(format!("unknown aggregator '{other}'; valid: sum, l2"))),
            };
        }
        config.validate().map_err(|e| config_error(format!("solver {}: {e}", self.id)))?;
        let default_rule = match method {
            Method::Omp | Method::Iht | Method::SlicedGreedy | Method::L0 | Method::Somp | Method::Gsomp
                if self.sparsity_k.is_none() && self.residual_tol.is_none() =>
            {
                SparsityRule::Known
            }
            _ => SparsityRule::Unset,
        };
        let sparsity = match self.sparsity.as_deref() {
            Some(s) => s.parse()?,
            None => default_rule,
        };
        Ok(SolverSpec {
            method,
            label: self.label.unwrap_or_else(|| method.id().to_string()),
            config,
            sparsity,
            lambda_scale: self.lambda_scale,
            lambda_rel: self.lambda_rel,
            residual_scale: self.residual_scale.unwrap_or(1.0),
            known_noise: self.known_noise.unwrap_or(false),
        })
    }
}

/// A single recovery problem read from files, for the `solve` command.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub matrix: PathBuf,
    pub observation: PathBuf,
    pub solver: SolverSpec,
    /// Sparsity handed to `known` / `inflated` rules.
    pub k: Option<usize>,
    pub noise_variance: f64,
    /// Needed by `oracle-ls`.
    pub support: Vec<usize>,
    /// Needed by `sliced-greedy`.
    pub constellation: Option<String>,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolve {
    problem: RawProblem,
    solver: RawSolver,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    matrix: String,
    observation: String,
    k: Option<usize>,
    noise_variance: Option<f64>,
    support: Option<Vec<usize>>,
    constellation: Option<String>,
    seed: Option<u64>,
}

impl SolveConfig {
    /// Parses a solve config; relative paths are resolved against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let raw: RawSolve = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        let noise_variance = raw.problem.noise_variance.unwrap_or(0.0);
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(config_error("problem.noise_variance must be finite and nonnegative"));
        }
        let solver = raw.solver.into_spec()?;
        if matches!(solver.sparsity, SparsityRule::Known | SparsityRule::Inflated) && raw.problem.k.is_none() {
            return Err(config_error(format!(
                "solver {} uses the sparsity level; set problem.k or solver.sparsity_k",
                solver.method
            )));
        }
        Ok(Self {
            matrix: base.join(raw.problem.matrix),
            observation: base.join(raw.problem.observation),
            solver,
            k: raw.problem.k,
            noise_variance,
            support: raw.problem.support.unwrap_or_default(),
            constellation: raw.problem.constellation,
            seed: raw.problem.seed.unwrap_or(0),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new("")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        let scenario: ScenarioId = raw.experiment.scenario.parse()?;
        let axis: Axis = raw.sweep.axis.parse()?;
        if raw.experiment.trials == 0 {
            return Err(config_error("experiment.trials must be at least 1"));
        }
        if raw.sweep.values.is_empty() {
            return Err(config_error("sweep.values must not be empty"));
        }
        if raw.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(config_error("sweep.values must be finite"));
        }
        let group = match (raw.sweep.group, raw.sweep.group_values) {
            (None, None) => None,
            (Some(key), Some(values)) if !values.is_empty() => Some((key, values)),
            _ => return Err(config_error("sweep.group and a nonempty sweep.group_values go together")),
        };
        let solvers = raw
            .solver
            .into_iter()
            .map(RawSolver::into_spec)
            .collect::<Result<Vec<_>>>()?;
        let mut labels: Vec<&str> = solvers.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_error("solver labels must be unique"));
        }
        let id = raw.experiment.id.unwrap_or_else(|| scenario.id().to_string());
        let output = PathBuf::from(raw.experiment.output.unwrap_or_else(|| format!("out/{id}")));
        Ok(Self {
            id,
            scenario,
            params: Params::new(raw.scenario),
            solvers,
            sweep: Sweep {
                axis,
                values: raw.sweep.values,
                group,
            },
            trials: raw.experiment.trials,
            seed: raw.experiment.seed,
            output,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
