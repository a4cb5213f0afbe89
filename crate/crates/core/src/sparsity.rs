//! Estimating the sparsity level that drives greedy solvers.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{check_dims, select_columns, select_entries, select_rows, CMatrix, CVector};
use crate::solvers::greedy::pursue;

/// Disjoint training/validation row sets covering all `m` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSplit {
    pub train_fraction: f64,
    pub train_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
}

impl CvSplit {
    /// Uniformly random split with `round(train_fraction · m)` training rows.
    pub fn random<R: Rng + ?Sized>(m: usize, train_fraction: f64, rng: &mut R) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(invalid("train_fraction must lie in (0, 1)"));
        }
        let n_train = (train_fraction * m as f64).round() as usize;
        if n_train == 0 || n_train >= m {
            return Err(invalid(format!("split of {m} rows leaves an empty side")));
        }
        let mut train_rows = sample(rng, m, n_train).into_vec();
        train_rows.sort_unstable();
        let validation_rows = (0..m).filter(|r| train_rows.binary_search(r).is_err()).collect();
        Ok(Self {
            train_fraction,
            train_rows,
            validation_rows,
        })
    }

    pub fn from_rows(m: usize, mut train_rows: Vec<usize>, mut validation_rows: Vec<usize>) -> Result<Self> {
        train_rows.sort_unstable();
        validation_rows.sort_unstable();
        let mut all: Vec<usize> = train_rows.iter().chain(&validation_rows).copied().collect();
        all.sort_unstable();
        if train_rows.is_empty() || validation_rows.is_empty() || all != (0..m).collect::<Vec<_>>() {
            return Err(invalid("train and validation rows must partition 0..m, both nonempty"));
        }
        Ok(Self {
            train_fraction: train_rows.len() as f64 / m as f64,
            train_rows,
            validation_rows,
        })
    }
}

/// Runs OMP until `‖r‖ ≤ ε` (or `m` atoms) and returns the iteration count.
pub fn estimate_k_residual(h: &CMatrix, y: &CVector, eps: f64) -> Result<usize> {
    check_dims(h, y)?;
    if !(eps > 0.0) {
        return Err(invalid("residual threshold must be positive"));
    }
    Ok(pursue(h, y, h.nrows(), eps).basis.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvEstimate {
    pub k_hat: usize,
    /// Validation error `ε_i` for `i = 0..=k_max`; `ε_0 = ‖y^(v)‖`.
    pub validation_errors: Vec<f64>,
    /// Set when `ε_k̂ ≥ 0.9 ε_0`, i.e. no clear signal-driven minimum.
    pub low_confidence: bool,
}

/// Ratio `ε_k̂ / ε_0` at or above which a CV estimate is flagged.
pub const LOW_CONFIDENCE_RATIO: f64 = 0.9;

/// Validation errors closer than this fraction of `ε_0` are tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Cross-validated sparsity: OMP on the training rows for `i = 1..=k_max`
/// atoms, scored by the residual on the validation rows. Ties go to the
/// smallest `i`.
pub fn estimate_k_cv(h: &CMatrix, y: &CVector, split: &CvSplit, k_max: usize) -> Result<CvEstimate> {
    check_dims(h, y)?;
    let m = h.nrows();
    if split.train_rows.len() + split.validation_rows.len() != m
        || split.train_rows.iter().chain(&split.validation_rows).any(|&r| r >= m)
    {
        return Err(invalid("split does not match the observation length"));
    }
    if k_max == 0 || k_max > split.train_rows.len() {
        return Err(invalid(format!(
            "k_max {k_max} must lie in 1..={} (training rows)",
            split.train_rows.len()
        )));
    }
    let h_t = select_rows(h, &split.train_rows);
    let y_t = select_entries(y, &split.train_rows);
    let h_v = select_rows(h, &split.validation_rows);
    let y_v = select_entries(y, &split.validation_rows);

    let run = pursue(&h_t, &y_t, k_max, 0.0);
    let chosen = run.basis.columns();
    let mut errors = vec![y_v.norm()];
    for i in 1..=k_max {
        let p = i.min(chosen.len());
        let coef = CVector::from_vec(run.basis.coefficients(&y_t, p));
        let fit = select_columns(&h_v, &chosen[..p]) * coef;
        errors.push((&y_v - fit).norm());
    }
    // errors within roundoff of the minimum count as ties
    let best = errors[1..].iter().copied().fold(f64::INFINITY, f64::min);
    let slack = TIE_TOLERANCE * errors[0];
    let k_hat = (1..=k_max).find(|&i| errors[i] <= best + slack).unwrap_or(1);
    Ok(CvEstimate {
        k_hat,
        low_confidence: errors[k_hat] >= LOW_CONFIDENCE_RATIO * errors[0],
        validation_errors: errors,
    })
}

/// `⌈1.2 k̂⌉`, the iteration budget that covers a slightly underestimated
/// sparsity.
pub fn inflate_k(k_hat: usize) -> usize {
    (6 * k_hat).div_ceil(5)
}
