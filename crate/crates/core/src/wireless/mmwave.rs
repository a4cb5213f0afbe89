use super::{IndexMap, MeasurementModel, Scenario};
use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::solvers::IsotropicLmmse;

/// `a(ψ)_i = e^{jπ i ψ} / √n` for a half-wavelength uniform linear array,
/// with `ψ` the sine of the angle.
pub fn steering_vector(n: usize, psi: f64) -> CVector {
    let scale = 1.0 / (n as f64).sqrt();
    CVector::from_fn(n, |i, _| {
        let (s, c) = (std::f64::consts::PI * i as f64 * psi).sin_cos();
        C64::new(c * scale, s * scale)
    })
}

/// Columns steered to `count` equally spaced points of `[−1, 1)`.
fn steering_matrix(n: usize, count: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, count);
    for l in 0..count {
        let psi = -1.0 + 2.0 * l as f64 / count as f64;
        a.set_column(l, &steering_vector(n, psi));
    }
    a
}

/// Hybrid-beamforming channel sounding with virtual angular bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MmWaveConfig {
    /// Transmit bins `L_t` and receive bins `L_r`.
    pub tx_bins: usize,
    pub rx_bins: usize,
    /// `N_t × T` beamformers.
    pub beamformers: CMatrix,
    /// `N_r × Q` combiners.
    pub combiners: CMatrix,
}

impl MmWaveConfig {
    /// Beamformers and combiners steered to equally spaced directions.
    pub fn steered(nt: usize, nr: usize, tx_bins: usize, rx_bins: usize, t: usize, q: usize) -> Self {
        Self {
            tx_bins,
            rx_bins,
            beamformers: steering_matrix(nt, t),
            combiners: steering_matrix(nr, q),
        }
    }

    pub fn tx_antennas(&self) -> usize {
        self.beamformers.nrows()
    }

    pub fn rx_antennas(&self) -> usize {
        self.combiners.nrows()
    }

    /// `N_t × L_t` transmit steering dictionary.
    pub fn tx_dictionary(&self) -> CMatrix {
        steering_matrix(self.tx_antennas(), self.tx_bins)
    }

    pub fn rx_dictionary(&self) -> CMatrix {
        steering_matrix(self.rx_antennas(), self.rx_bins)
    }

    /// Column index of (AoA bin `i`, AoD bin `j`) in `vec(Φ_a)`.
    pub fn flatten(&self, aoa: usize, aod: usize) -> usize {
        aoa + self.rx_bins * aod
    }

    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        (idx % self.rx_bins, idx / self.rx_bins)
    }
}

/// `H = (Fᵀ A_t*) ⊗ (Wᴴ A_r)` so that `vec(Wᴴ A_r Φ_a A_tᴴ F) = H vec(Φ_a)`.
pub fn build_mmwave_model(cfg: &MmWaveConfig) -> Result<MeasurementModel> {
    if cfg.tx_bins == 0 || cfg.rx_bins == 0 || cfg.beamformers.is_empty() || cfg.combiners.is_empty() {
        return Err(invalid("mmwave dimensions must be positive"));
    }
    let tx = cfg.beamformers.transpose() * cfg.tx_dictionary().conjugate();
    let rx = cfg.combiners.adjoint() * cfg.rx_dictionary();
    Ok(MeasurementModel::new(tx.kronecker(&rx), Scenario::MmWave)?.with_index_map(
        IndexMap::AngularBins {
            rx_bins: cfg.rx_bins,
            tx_bins: cfg.tx_bins,
        },
    ))
}

/// Linear MMSE estimate under an i.i.d. prior of variance `signal_variance`,
/// followed by picking the `k` largest magnitudes (sorted indices).
pub fn lmmse_top_k(
    lmmse: &IsotropicLmmse,
    y: &CVector,
    k: usize,
    signal_variance: f64,
    noise_variance: f64,
) -> Result<Vec<usize>> {
    let est = lmmse.estimate(y, signal_variance, noise_variance.max(1e-12 * signal_variance))?;
    let mut order: Vec<usize> = (0..est.len()).collect();
    order.sort_by(|&a, &b| est[b].norm().total_cmp(&est[a].norm()).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_complex_gaussian_matrix, NoiseSpec};
    use crate::rng::RngStream;

    #[test]
    fn kronecker_matches_vectorized_channel() {
        let mut rng = RngStream::new(53, 0).rng();
        let cfg = MmWaveConfig {
            tx_bins: 5,
            rx_bins: 6,
            beamformers: make_complex_gaussian_matrix(4, 3, 1.0, &mut rng).unwrap(),
            combiners: make_complex_gaussian_matrix(3, 2, 1.0, &mut rng).unwrap(),
        };
        let h = build_mmwave_model(&cfg).unwrap().h;
        let phi = make_complex_gaussian_matrix(6, 5, 1.0, &mut rng).unwrap();
        let direct = cfg.combiners.adjoint()
            * cfg.rx_dictionary()
            * &phi
            * cfg.tx_dictionary().adjoint()
            * &cfg.beamformers;
        let vec_phi = CVector::from_column_slice(phi.as_slice());
        let vec_y = CVector::from_column_slice(direct.as_slice());
        assert!((&h * vec_phi - &vec_y).norm() <= 1e-10 * vec_y.norm());
    }

    #[test]
    fn default_size_and_bin_decoding() {
        let cfg = MmWaveConfig::steered(16, 16, 32, 32, 16, 16);
        let model = build_mmwave_model(&cfg).unwrap();
        assert_eq!((model.rows(), model.cols()), (256, 1024));
        for i in 0..32 {
            for j in 0..32 {
                let idx = cfg.flatten(i, j);
                assert!(idx < 1024);
                assert_eq!(cfg.unflatten(idx), (i, j));
            }
        }
    }

    #[test]
    fn lmmse_picks_dominant_entries_on_identity() {
        let mut rng = RngStream::new(54, 0).rng();
        let mut s = NoiseSpec::complex(1e-4).sample(6, &mut rng);
        s[1] = C64::new(3.0, 0.0);
        s[4] = C64::new(0.0, -2.0);
        let picked = lmmse_top_k(&IsotropicLmmse::new(&CMatrix::identity(6, 6)), &s, 2, 1.0, 1e-3).unwrap();
        assert_eq!(picked, vec![1, 4]);
    }
}
