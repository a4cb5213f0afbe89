use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::linalg::{c64, unitary_dft, CMatrix};

fn check_size(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(invalid(format!("matrix size {m}x{n} must be at least 1x1")));
    }
    Ok(())
}

/// I.i.d. real Gaussian entries with the given variance.
pub fn make_gaussian_matrix<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    entry_variance: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    check_size(m, n)?;
    if !(entry_variance > 0.0 && entry_variance.is_finite()) {
        return Err(invalid(format!("entry variance must be positive, got {entry_variance}")));
    }
    let sd = entry_variance.sqrt();
    Ok(CMatrix::from_fn(m, n, |_, _| {
        c64(sd * rng.sample::<f64, _>(StandardNormal), 0.0)
    }))
}

/// Circular complex Gaussian entries; the variance is split equally between
/// the real and imaginary parts.
pub fn make_complex_gaussian_matrix<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    entry_variance: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    check_size(m, n)?;
    if !(entry_variance > 0.0 && entry_variance.is_finite()) {
        return Err(invalid(format!("entry variance must be positive, got {entry_variance}")));
    }
    let sd = (entry_variance / 2.0).sqrt();
    Ok(CMatrix::from_fn(m, n, |_, _| {
        c64(
            sd * rng.sample::<f64, _>(StandardNormal),
            sd * rng.sample::<f64, _>(StandardNormal),
        )
    }))
}

/// Entries `±1/m` with equal probability.
pub fn make_bernoulli_matrix<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<CMatrix> {
    check_size(m, n)?;
    let a = 1.0 / m as f64;
    Ok(CMatrix::from_fn(m, n, |_, _| {
        if rng.random::<bool>() {
            c64(a, 0.0)
        } else {
            c64(-a, 0.0)
        }
    }))
}

/// Rows `row_indices` of the n-point unitary DFT, scaled by `sqrt(n/m)` so
/// that every column has unit norm.
pub fn make_partial_dft_matrix(n: usize, row_indices: &[usize]) -> Result<CMatrix> {
    let m = row_indices.len();
    check_size(m, n)?;
    let mut seen = vec![false; n];
    for &r in row_indices {
        if r >= n {
            return Err(invalid(format!("row index {r} out of range for {n}-point DFT")));
        }
        if std::mem::replace(&mut seen[r], true) {
            return Err(invalid(format!("duplicate row index {r}")));
        }
    }
    let scale = (n as f64 / m as f64).sqrt();
    Ok(unitary_dft(n).select_rows(row_indices.iter()).scale(scale))
}

/// Partial DFT with `m` rows drawn uniformly without replacement.
pub fn random_partial_dft_matrix<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<CMatrix> {
    if m > n {
        return Err(invalid(format!("cannot select {m} distinct rows out of {n}")));
    }
    let mut rows = rand::seq::index::sample(rng, n, m).into_vec();
    rows.sort_unstable();
    make_partial_dft_matrix(n, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn gaussian_rejects_bad_variance() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(make_gaussian_matrix(2, 2, 0.0, &mut rng).is_err());
        assert!(make_gaussian_matrix(2, 2, -1.0, &mut rng).is_err());
        assert!(make_gaussian_matrix(0, 2, 1.0, &mut rng).is_err());
    }

    #[test]
    fn gaussian_empirical_variance() {
        let mut rng = RngStream::new(2, 0).rng();
        let n = 256;
        let h = make_gaussian_matrix(100, n, 1.0 / n as f64, &mut rng).unwrap();
        let count = h.len() as f64;
        let mean: f64 = h.iter().map(|z| z.re).sum::<f64>() / count;
        let var: f64 = h.iter().map(|z| (z.re - mean).powi(2)).sum::<f64>() / (count - 1.0);
        assert!((var * n as f64 - 1.0).abs() < 0.05, "variance {var}");
        assert!(h.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn gaussian_column_norm_expectation() {
        // variance 1/m gives unit expected squared column norm
        let mut rng = RngStream::new(3, 0).rng();
        let m = 64;
        let h = make_gaussian_matrix(m, 400, 1.0 / m as f64, &mut rng).unwrap();
        let mean_sq: f64 = h.column_iter().map(|c| c.norm_squared()).sum::<f64>() / 400.0;
        assert!((mean_sq - 1.0).abs() < 0.05);
    }

    #[test]
    fn complex_gaussian_splits_variance() {
        let mut rng = RngStream::new(4, 0).rng();
        let h = make_complex_gaussian_matrix(200, 200, 2.0, &mut rng).unwrap();
        let count = h.len() as f64;
        let re: f64 = h.iter().map(|z| z.re * z.re).sum::<f64>() / count;
        let im: f64 = h.iter().map(|z| z.im * z.im).sum::<f64>() / count;
        assert!((re - 1.0).abs() < 0.03 && (im - 1.0).abs() < 0.03);
    }

    #[test]
    fn bernoulli_entries_and_norms() {
        let mut rng = RngStream::new(5, 0).rng();
        let (m, n) = (32, 64);
        let h = make_bernoulli_matrix(m, n, &mut rng).unwrap();
        let a = 1.0 / m as f64;
        assert!(h.iter().all(|z| (z.re.abs() - a).abs() < 1e-15 && z.im == 0.0));
        for c in h.column_iter() {
            assert!((c.norm() - 1.0 / (m as f64).sqrt()).abs() < 1e-12);
        }
        // mean of signs within 3 sigma of zero
        let big = make_bernoulli_matrix(100, 100, &mut rng).unwrap();
        let sum: f64 = big.iter().map(|z| z.re.signum()).sum();
        assert!(sum.abs() <= 3.0 * (big.len() as f64).sqrt());
    }

    #[test]
    fn partial_dft_properties() {
        let full = make_partial_dft_matrix(8, &(0..8).collect::<Vec<_>>()).unwrap();
        let gram = full.adjoint() * &full;
        assert!((gram - CMatrix::identity(8, 8)).norm() < 1e-12);

        let p = make_partial_dft_matrix(16, &[1, 4, 9, 11]).unwrap();
        for c in p.column_iter() {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }

        let row0 = make_partial_dft_matrix(4, &[0]).unwrap();
        assert!(row0.iter().all(|z| (z - c64(1.0, 0.0)).norm() < 1e-12));

        assert!(make_partial_dft_matrix(4, &[1, 1]).is_err());
        assert!(make_partial_dft_matrix(4, &[4]).is_err());
    }
}
