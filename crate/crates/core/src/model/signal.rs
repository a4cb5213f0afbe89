use rand::Rng;
use rand_distr::StandardNormal;

use super::Constellation;
use crate::error::{invalid, Result};
use crate::linalg::{c64, check_dims, CMatrix, CVector, C64, ZERO};

/// Sparse vector stored as a sorted support plus one nonzero value per index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    support: Vec<usize>,
    values: Vec<C64>,
}

impl SparseVector {
    pub fn new(dim: usize, support: Vec<usize>, values: Vec<C64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(invalid(format!(
                "support has {} indices but {} values were given",
                support.len(),
                values.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("support must be strictly increasing"));
        }
        if let Some(&last) = support.last() {
            if last >= dim {
                return Err(invalid(format!("support index {last} out of range for dimension {dim}")));
            }
        }
        if values.iter().any(|v| *v == ZERO || !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("sparse values must be finite and nonzero"));
        }
        Ok(Self { dim, support, values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Keeps entries whose magnitude exceeds `tol`.
    pub fn from_dense(v: &CVector, tol: f64) -> Self {
        let (support, values) = v
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > tol)
            .map(|(i, z)| (i, *z))
            .unzip();
        Self {
            dim: v.len(),
            support,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Number of nonzeros.
    pub fn l0(&self) -> usize {
        self.support.len()
    }

    pub fn to_dense(&self) -> CVector {
        crate::linalg::scatter(self.dim, &self.support, &self.values)
    }
}

/// Distribution of the nonzero entries of a synthesized sparse vector.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueLaw {
    /// Real standard normal.
    UnitGaussian,
    /// Circular complex normal with unit variance.
    ComplexGaussian,
    /// Uniform over the points of an alphabet.
    Constellation(Constellation),
}

impl ValueLaw {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        loop {
            let v = match self {
                ValueLaw::UnitGaussian => c64(rng.sample(StandardNormal), 0.0),
                ValueLaw::ComplexGaussian => {
                    let a = std::f64::consts::FRAC_1_SQRT_2;
                    c64(
                        a * rng.sample::<f64, _>(StandardNormal),
                        a * rng.sample::<f64, _>(StandardNormal),
                    )
                }
                ValueLaw::Constellation(c) => c.points()[rng.random_range(0..c.len())],
            };
            if v != ZERO {
                return v;
            }
        }
    }
}

/// Uniformly random `k`-subset support with values drawn from `law`.
pub fn synthesize_sparse_vector<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    law: &ValueLaw,
    rng: &mut R,
) -> Result<SparseVector> {
    if k > n {
        return Err(invalid(format!("sparsity {k} exceeds dimension {n}")));
    }
    let mut support = rand::seq::index::sample(rng, n, k).into_vec();
    support.sort_unstable();
    let values = (0..k).map(|_| law.draw(rng)).collect();
    SparseVector::new(n, support, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    CircularGaussian,
    RealGaussian,
}

/// Additive white noise with variance `variance` per entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance: f64,
    pub kind: NoiseKind,
}

impl NoiseSpec {
    pub fn complex(variance: f64) -> Self {
        Self {
            variance,
            kind: NoiseKind::CircularGaussian,
        }
    }

    pub fn real(variance: f64) -> Self {
        Self {
            variance,
            kind: NoiseKind::RealGaussian,
        }
    }

    pub fn none() -> Self {
        Self::complex(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(invalid(format!("noise variance must be >= 0, got {}", self.variance)));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> CVector {
        if self.variance == 0.0 {
            return CVector::zeros(len);
        }
        match self.kind {
            NoiseKind::RealGaussian => {
                let sd = self.variance.sqrt();
                CVector::from_fn(len, |_, _| c64(sd * rng.sample::<f64, _>(StandardNormal), 0.0))
            }
            NoiseKind::CircularGaussian => {
                let sd = (self.variance / 2.0).sqrt();
                CVector::from_fn(len, |_, _| {
                    c64(
                        sd * rng.sample::<f64, _>(StandardNormal),
                        sd * rng.sample::<f64, _>(StandardNormal),
                    )
                })
            }
        }
    }
}

/// `y = H s + v`.
pub fn measure<R: Rng + ?Sized>(
    h: &CMatrix,
    s: &CVector,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<CVector> {
    if h.ncols() != s.len() {
        return Err(invalid(format!(
            "matrix has {} columns but signal has length {}",
            h.ncols(),
            s.len()
        )));
    }
    noise.validate()?;
    let clean = h * s;
    check_dims(h, &clean)?;
    Ok(clean + noise.sample(h.nrows(), rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_gaussian_matrix;
    use crate::rng::RngStream;

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(4, vec![2, 1], vec![c64(1.0, 0.0); 2]).is_err());
        assert!(SparseVector::new(4, vec![4], vec![c64(1.0, 0.0)]).is_err());
        assert!(SparseVector::new(4, vec![1], vec![ZERO]).is_err());
        assert!(SparseVector::new(4, vec![1], vec![]).is_err());
        let s = SparseVector::new(4, vec![0, 3], vec![c64(1.0, 0.0), c64(0.0, 2.0)]).unwrap();
        assert_eq!(s.l0(), 2);
        assert_eq!(SparseVector::from_dense(&s.to_dense(), 0.0), s);
    }

    #[test]
    fn synthesize_examples() {
        let mut rng = RngStream::new(9, 0).rng();
        assert_eq!(synthesize_sparse_vector(10, 0, &ValueLaw::UnitGaussian, &mut rng).unwrap().l0(), 0);
        let s = synthesize_sparse_vector(256, 10, &ValueLaw::UnitGaussian, &mut rng).unwrap();
        assert_eq!(s.l0(), 10);
        let qam = Constellation::qam16();
        let s = synthesize_sparse_vector(24, 5, &ValueLaw::Constellation(qam.clone()), &mut rng).unwrap();
        assert_eq!(s.l0(), 5);
        assert!(s.values().iter().all(|&v| qam.contains(v)));
        assert!(synthesize_sparse_vector(3, 4, &ValueLaw::UnitGaussian, &mut rng).is_err());
    }

    #[test]
    fn support_is_uniform() {
        let mut rng = RngStream::new(10, 0).rng();
        let draws = 100_000;
        let mut counts = [0usize; 8];
        for _ in 0..draws {
            let s = synthesize_sparse_vector(8, 1, &ValueLaw::UnitGaussian, &mut rng).unwrap();
            counts[s.support()[0]] += 1;
        }
        let p = 1.0 / 8.0;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn noiseless_measure_is_exact_and_deterministic() {
        let mut rng = RngStream::new(11, 0).rng();
        let h = make_gaussian_matrix(6, 9, 1.0, &mut rng).unwrap();
        let e3 = crate::linalg::scatter(9, &[3], &[c64(1.0, 0.0)]);
        let y = measure(&h, &e3, &NoiseSpec::none(), &mut rng).unwrap();
        assert_eq!(y, h.column(3).into_owned());

        let s = synthesize_sparse_vector(9, 2, &ValueLaw::ComplexGaussian, &mut rng).unwrap().to_dense();
        let y1 = measure(&h, &s, &NoiseSpec::complex(0.01), &mut RngStream::new(5, 5).rng()).unwrap();
        let y2 = measure(&h, &s, &NoiseSpec::complex(0.01), &mut RngStream::new(5, 5).rng()).unwrap();
        assert_eq!(y1, y2);
        assert!(measure(&h, &CVector::zeros(3), &NoiseSpec::none(), &mut rng).is_err());
        assert!(measure(&h, &s, &NoiseSpec::complex(-1.0), &mut rng).is_err());
    }

    #[test]
    fn noise_variance_matches_spec() {
        let mut rng = RngStream::new(12, 0).rng();
        let v = NoiseSpec::complex(0.01).sample(200_000, &mut rng);
        let var = v.norm_squared() / v.len() as f64;
        assert!((var - 0.01).abs() < 0.0002);
        let r = NoiseSpec::real(0.01).sample(200_000, &mut rng);
        assert!(r.iter().all(|z| z.im == 0.0));
        assert!((r.norm_squared() / r.len() as f64 - 0.01).abs() < 0.0002);
    }
}
