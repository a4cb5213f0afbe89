use std::collections::BTreeSet;

use crate::error::{invalid, Error, Result};
use crate::linalg::CVector;

/// Normalized squared error `‖estimate − truth‖² / ‖truth‖²`.
pub fn nmse(estimate: &CVector, truth: &CVector) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(invalid(format!(
            "nmse: estimate length {} vs truth length {}",
            estimate.len(),
            truth.len()
        )));
    }
    let denom = truth.norm_squared();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("nmse of an all-zero reference".into()));
    }
    Ok((estimate - truth).norm_squared() / denom)
}

pub fn nmse_db(estimate: &CVector, truth: &CVector) -> Result<f64> {
    Ok(10.0 * nmse(estimate, truth)?.log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportMetrics {
    pub exact_match: bool,
    /// Fraction of estimated indices that are true; 0 for an empty estimate.
    pub precision: f64,
    /// Fraction of true indices that were found; 1 for an empty truth.
    pub recall: f64,
}

pub fn support_metrics(estimated: &[usize], truth: &[usize]) -> SupportMetrics {
    let est: BTreeSet<usize> = estimated.iter().copied().collect();
    let tru: BTreeSet<usize> = truth.iter().copied().collect();
    let hits = est.intersection(&tru).count() as f64;
    let precision = if est.is_empty() { 0.0 } else { hits / est.len() as f64 };
    let recall = if tru.is_empty() { 1.0 } else { hits / tru.len() as f64 };
    SupportMetrics {
        exact_match: est == tru,
        precision,
        recall,
    }
}

/// Number of positions where two symbol vectors differ by more than `1e-9`.
pub fn symbol_errors(detected: &CVector, truth: &CVector) -> usize {
    detected
        .iter()
        .zip(truth.iter())
        .filter(|(a, b)| (*a - *b).norm() > 1e-9)
        .count()
}
