//! Single-measurement-vector estimators.
//!
//! Classical baselines (least squares, minimum norm, LMMSE) sit next to the
//! sparse families: exhaustive ℓ0 search, greedy pursuit (OMP and a sliced
//! beam-search variant), iterative hard thresholding, proximal BPDN with
//! optional reweighting, and sparse Bayesian learning.

mod bpdn;
mod classical;
pub(crate) mod greedy;
mod iht;
pub(crate) mod l0;
pub(crate) mod omp;
mod sbl;
mod sliced;

use std::fmt;
use std::str::FromStr;

pub use bpdn::{bpdn_objective, bpdn_prox, kkt_violation, reweighted_l1, weighted_bpdn};
pub use classical::{
    lmmse_information_form, lmmse_isotropic, lmmse_solve, ls_solve, min_norm_solve, oracle_ls,
    IsotropicLmmse,
};
pub use iht::iht;
pub use l0::l0_exhaustive;
pub use omp::omp;
pub use sbl::{sbl_em, sbl_log_evidence};
pub use sliced::sliced_parallel_greedy;

use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, CVector};

/// Hyperparameter update used by sparse Bayesian learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SblRule {
    /// Expectation-maximization; the evidence never decreases.
    Em,
    /// MacKay fixed-point update; converges in far fewer iterations but
    /// carries no monotonicity guarantee.
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IhtStep {
    /// Plain gradient step with unit step size.
    Unit,
    /// Step `1/‖H‖₂²`, stable for any matrix scaling.
    Scaled,
}

/// How per-snapshot correlations are combined by joint-sparse pursuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    /// Sum of magnitudes.
    Sum,
    /// Root sum of squared magnitudes.
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Residual-norm stopping threshold ε.
    pub residual_tol: f64,
    /// BPDN weight λ on the ℓ1 term.
    pub lambda: f64,
    pub sparsity_k: Option<usize>,
    /// Beam width B of the sliced greedy search.
    pub candidate_width: usize,
    /// SBL prune threshold, relative to the largest variance.
    pub sbl_prune_threshold: f64,
    pub sbl_rule: SblRule,
    /// Known noise variance; SBL estimates it when absent.
    pub noise_variance: Option<f64>,
    pub reweight_epsilon: f64,
    pub reweight_rounds: usize,
    /// Support threshold for continuous solvers, relative to `‖ŝ‖∞`.
    pub support_tol: f64,
    /// Re-fit continuous estimates by least squares on the detected support.
    pub debias: bool,
    /// Convergence tolerance of iterative solvers.
    pub tolerance: f64,
    pub iht_step: IhtStep,
    pub aggregator: Aggregator,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            residual_tol: 0.0,
            lambda: 0.0,
            sparsity_k: None,
            candidate_width: 1,
            sbl_prune_threshold: 1e-8,
            sbl_rule: SblRule::Em,
            noise_variance: None,
            reweight_epsilon: 0.1,
            reweight_rounds: 4,
            support_tol: 1e-6,
            debias: false,
            tolerance: 1e-8,
            iht_step: IhtStep::Unit,
            aggregator: Aggregator::Sum,
        }
    }
}

impl SolverConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            sparsity_k: Some(k),
            ..Self::default()
        }
    }

    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("residual_tol", self.residual_tol),
            ("lambda", self.lambda),
            ("sbl_prune_threshold", self.sbl_prune_threshold),
            ("reweight_epsilon", self.reweight_epsilon),
            ("support_tol", self.support_tol),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.candidate_width == 0 {
            return Err(invalid("candidate_width must be at least 1"));
        }
        if let Some(v) = self.noise_variance {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("noise_variance must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Output of every sparse estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub estimate: CVector,
    /// Sorted detected support.
    pub support: Vec<usize>,
    /// `‖y − H ŝ‖₂` after each iteration, starting with `‖y‖₂`.
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set by IHT when the residual blows up.
    pub diverged: bool,
    /// Solver-specific objective per iteration: the BPDN cost, or the SBL
    /// log evidence.
    pub objective_trace: Vec<f64>,
}

impl RecoveryResult {
    pub(crate) fn new(estimate: CVector, support: Vec<usize>) -> Self {
        Self {
            estimate,
            support,
            residual_trace: Vec::new(),
            iterations: 0,
            converged: true,
            diverged: false,
            objective_trace: Vec::new(),
        }
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Indices with `|ŝ_i| > rel_tol · ‖ŝ‖∞`.
pub fn extract_support(estimate: &CVector, rel_tol: f64) -> Vec<usize> {
    let peak = estimate.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    estimate
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > rel_tol * peak)
        .map(|(i, _)| i)
        .collect()
}

/// Sparse estimators that plug into the application pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SparseSolver {
    Omp,
    Iht,
    Bpdn,
    ReweightedL1,
    Sbl,
}

impl SparseSolver {
    pub const ALL: [SparseSolver; 5] = [
        SparseSolver::Omp,
        SparseSolver::Iht,
        SparseSolver::Bpdn,
        SparseSolver::ReweightedL1,
        SparseSolver::Sbl,
    ];

    pub fn solve(&self, h: &CMatrix, y: &CVector, cfg: &SolverConfig) -> Result<RecoveryResult> {
        match self {
            SparseSolver::Omp => omp(h, y, cfg),
            SparseSolver::Iht => iht(h, y, cfg),
            SparseSolver::Bpdn => bpdn_prox(h, y, cfg),
            SparseSolver::ReweightedL1 => reweighted_l1(h, y, cfg),
            SparseSolver::Sbl => sbl_em(h, y, cfg),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SparseSolver::Omp => "omp",
            SparseSolver::Iht => "iht",
            SparseSolver::Bpdn => "bpdn",
            SparseSolver::ReweightedL1 => "reweighted-l1",
            SparseSolver::Sbl => "sbl",
        }
    }
}

impl fmt::Display for SparseSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SparseSolver {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown sparse solver '{s}'"))
    }
}
