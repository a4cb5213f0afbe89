use itertools::Itertools;

use super::RecoveryResult;
use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dims, lstsq, scatter, select_columns, CMatrix, CVector};

/// Upper bound on the number of subsets examined by exhaustive searches.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Exhaustive ℓ0 search.
///
/// Supports of size 1, 2, …, `k_max` are examined in turn; the first size
/// that admits a least-squares fit with residual `≤ noise_tol` wins, and
/// among those the smallest residual is returned. `noise_tol = None` means
/// `1e-8 ‖y‖`.
pub fn l0_exhaustive(
    h: &CMatrix,
    y: &CVector,
    k_max: usize,
    noise_tol: Option<f64>,
) -> Result<RecoveryResult> {
    check_dims(h, y)?;
    let (m, n) = h.shape();
    let tol = noise_tol.unwrap_or(1e-8 * y.norm());
    if !(tol >= 0.0) {
        return Err(invalid("noise tolerance must be nonnegative"));
    }
    let k_max = k_max.min(n);
    let total: u128 = (1..=k_max).map(|k| binomial(n, k)).sum();
    if total > ENUMERATION_GUARD {
        return Err(Error::BudgetExceeded(format!(
            "{total} subsets for n = {n}, k_max = {k_max}"
        )));
    }

    let y_norm = y.norm();
    let mut trace = vec![y_norm];
    if y_norm <= tol {
        let mut out = RecoveryResult::new(CVector::zeros(n), Vec::new());
        out.residual_trace = trace;
        return Ok(out);
    }

    for k in 1..=k_max.min(m) {
        let mut best: Option<(f64, Vec<usize>, CVector)> = None;
        for subset in (0..n).combinations(k) {
            let sub = select_columns(h, &subset);
            let Ok(coef) = lstsq(&sub, y) else { continue };
            let resid = (y - &sub * &coef).norm();
            if best.as_ref().is_none_or(|(b, _, _)| resid < *b) {
                best = Some((resid, subset, coef));
            }
        }
        if let Some((resid, subset, coef)) = best {
            trace.push(resid);
            if resid <= tol {
                let mut out = RecoveryResult::new(scatter(n, &subset, coef.as_slice()), subset);
                out.residual_trace = trace;
                out.iterations = k;
                return Ok(out);
            }
        }
    }
    Err(Error::NotFound(format!(
        "no support of size <= {k_max} fits within tolerance {tol:e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::model::{make_gaussian_matrix, synthesize_sparse_vector, ValueLaw};
    use crate::rng::RngStream;

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(64, 5), 7_624_512);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
    }

    #[test]
    fn single_column_plant() {
        let mut rng = RngStream::new(51, 0).rng();
        let h = make_gaussian_matrix(4, 8, 1.0, &mut rng).unwrap();
        let y = h.column(3) * c64(2.0, 0.0);
        let r = l0_exhaustive(&h, &y, 2, None).unwrap();
        assert_eq!(r.support, vec![3]);
        assert!((r.estimate[3] - c64(2.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn zero_observation_is_empty() {
        let mut rng = RngStream::new(52, 0).rng();
        let h = make_gaussian_matrix(4, 8, 1.0, &mut rng).unwrap();
        let r = l0_exhaustive(&h, &CVector::zeros(4), 2, None).unwrap();
        assert!(r.support.is_empty());
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn planted_two_sparse_recovered() {
        let mut rng = RngStream::new(53, 0).rng();
        for _ in 0..50 {
            let h = make_gaussian_matrix(4, 8, 1.0, &mut rng).unwrap();
            let s = synthesize_sparse_vector(8, 2, &ValueLaw::UnitGaussian, &mut rng).unwrap();
            let y = &h * s.to_dense();
            let r = l0_exhaustive(&h, &y, 2, None).unwrap();
            assert_eq!(r.support, s.support());
            assert!((r.estimate - s.to_dense()).norm() < 1e-8);
        }
    }

    #[test]
    fn errors() {
        let mut rng = RngStream::new(54, 0).rng();
        let h = make_gaussian_matrix(10, 64, 1.0, &mut rng).unwrap();
        let y = make_gaussian_matrix(10, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        assert!(matches!(l0_exhaustive(&h, &y, 6, None), Err(Error::BudgetExceeded(_))));
        assert!(matches!(l0_exhaustive(&h, &y, 1, None), Err(Error::NotFound(_))));
    }
}
