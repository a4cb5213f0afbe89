//! Incremental QR shared by the greedy pursuits.
//!
//! Selected columns are orthonormalized with classical Gram-Schmidt applied
//! twice, so projecting the residual onto each new direction is equivalent to
//! a full least-squares re-fit on the chosen set.

use crate::linalg::{CMatrix, CVector, C64, RANK_TOL, ZERO};

#[derive(Debug, Clone, Default)]
pub(crate) struct OrthoBasis {
    q: Vec<CVector>,
    /// Column `j` of the triangular factor, `j + 1` entries.
    r: Vec<Vec<C64>>,
    cols: Vec<usize>,
}

impl OrthoBasis {
    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[usize] {
        &self.cols
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.cols.contains(&idx)
    }

    /// Appends a column unless it lies (numerically) in the current span.
    /// Returns the new orthonormal direction on success.
    pub fn try_push(&mut self, idx: usize, col: &CVector) -> Option<&CVector> {
        let col_norm = col.norm();
        if col_norm == 0.0 {
            return None;
        }
        let mut v = col.clone();
        let mut coef = vec![ZERO; self.q.len() + 1];
        for _ in 0..2 {
            for (i, q) in self.q.iter().enumerate() {
                let c = q.dotc(&v);
                coef[i] += c;
                v.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let nv = v.norm();
        if nv <= RANK_TOL * col_norm {
            return None;
        }
        v.unscale_mut(nv);
        coef[self.q.len()] = C64::new(nv, 0.0);
        self.q.push(v);
        self.r.push(coef);
        self.cols.push(idx);
        self.q.last()
    }

    /// Removes the component of `v` along the most recently added direction.
    pub fn deflate_last(&self, v: &mut CVector) {
        if let Some(q) = self.q.last() {
            let c = q.dotc(v);
            v.axpy(-c, q, C64::new(1.0, 0.0));
        }
    }

    /// Least-squares coefficients of `y` on the first `p` selected columns.
    pub fn coefficients(&self, y: &CVector, p: usize) -> Vec<C64> {
        let p = p.min(self.q.len());
        let rhs: Vec<C64> = self.q[..p].iter().map(|q| q.dotc(y)).collect();
        let mut c = vec![ZERO; p];
        for i in (0..p).rev() {
            let mut acc = rhs[i];
            for j in i + 1..p {
                acc -= self.r[j][i] * c[j];
            }
            c[i] = acc / self.r[i][i];
        }
        c
    }
}

/// Outcome of a single-snapshot greedy pursuit.
pub(crate) struct Pursuit {
    pub basis: OrthoBasis,
    pub residual: CVector,
    pub trace: Vec<f64>,
    pub zero_correlation_stop: bool,
}

/// Index maximizing `score` over candidates not yet excluded; ties resolve to
/// the lowest index.
pub(crate) fn argmax_excluding(scores: &[f64], excluded: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &s) in scores.iter().enumerate() {
        if excluded[j] {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best
}

/// Normalized correlations `|h_jᴴ r| / ‖h_j‖` (zero for zero columns).
pub(crate) fn correlations(h: &CMatrix, norms: &[f64], r: &CVector) -> Vec<f64> {
    let c = h.ad_mul(r);
    c.iter()
        .zip(norms)
        .map(|(z, &n)| if n > 0.0 { z.norm() / n } else { 0.0 })
        .collect()
}

/// Runs OMP until `max_atoms` columns are selected or `‖r‖ ≤ tol`.
pub(crate) fn pursue(h: &CMatrix, y: &CVector, max_atoms: usize, tol: f64) -> Pursuit {
    let n = h.ncols();
    let norms = crate::linalg::column_norms(h);
    let mut excluded: Vec<bool> = norms.iter().map(|&v| v == 0.0).collect();
    let mut basis = OrthoBasis::default();
    let mut residual = y.clone();
    let mut trace = vec![residual.norm()];
    let zero_level = 1e-13 * y.norm();
    let mut zero_correlation_stop = false;
    let max_atoms = max_atoms.min(n);

    while basis.len() < max_atoms && residual.norm() > tol {
        let scores = correlations(h, &norms, &residual);
        let mut added = false;
        while let Some((j, s)) = argmax_excluding(&scores, &excluded) {
            if s <= zero_level {
                break;
            }
            excluded[j] = true;
            if basis.try_push(j, &h.column(j).into_owned()).is_some() {
                added = true;
                break;
            }
        }
        if !added {
            zero_correlation_stop = true;
            break;
        }
        basis.deflate_last(&mut residual);
        trace.push(residual.norm());
    }
    Pursuit {
        basis,
        residual,
        trace,
        zero_correlation_stop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{lstsq, select_columns};
    use crate::model::make_complex_gaussian_matrix;
    use crate::rng::RngStream;

    #[test]
    fn coefficients_match_direct_least_squares() {
        let mut rng = RngStream::new(21, 0).rng();
        let h = make_complex_gaussian_matrix(12, 20, 1.0, &mut rng).unwrap();
        let y = make_complex_gaussian_matrix(12, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let mut basis = OrthoBasis::default();
        for &j in &[3, 7, 1, 15] {
            assert!(basis.try_push(j, &h.column(j).into_owned()).is_some());
        }
        for p in 1..=4 {
            let c = basis.coefficients(&y, p);
            let direct = lstsq(&select_columns(&h, &basis.columns()[..p]), &y).unwrap();
            for (a, b) in c.iter().zip(direct.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn dependent_column_rejected() {
        let mut rng = RngStream::new(22, 0).rng();
        let h = make_complex_gaussian_matrix(5, 2, 1.0, &mut rng).unwrap();
        let mut basis = OrthoBasis::default();
        basis.try_push(0, &h.column(0).into_owned());
        basis.try_push(1, &h.column(1).into_owned());
        let combo = h.column(0) * C64::new(2.0, -1.0) + h.column(1);
        assert!(basis.try_push(2, &combo).is_none());
        assert_eq!(basis.len(), 2);
    }

    #[test]
    fn ties_pick_lowest_index() {
        assert_eq!(argmax_excluding(&[1.0, 3.0, 3.0], &[false; 3]), Some((1, 3.0)));
        assert_eq!(argmax_excluding(&[1.0, 3.0, 3.0], &[false, true, false]), Some((2, 3.0)));
        assert_eq!(argmax_excluding(&[1.0], &[true]), None);
    }
}
