use super::{IndexMap, MeasurementModel, Scenario};
use crate::error::{invalid, Result};
use crate::linalg::{dft_matrix, unitary_dft, CMatrix, C64};

/// OFDM numerology shared by the pilot and impulse-noise scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub fft_size: usize,
    /// Occupied subcarriers (data or pilots).
    pub data_positions: Vec<usize>,
    /// Pilot value on each entry of `data_positions`.
    pub pilots: Vec<C64>,
    /// Length of the time-domain channel that the cyclic prefix covers.
    pub channel_taps: usize,
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.fft_size;
        if n == 0 {
            return Err(invalid("fft_size must be positive"));
        }
        if self.data_positions.len() > n {
            return Err(invalid(format!(
                "{} occupied subcarriers exceed fft_size {n}",
                self.data_positions.len()
            )));
        }
        let mut seen = vec![false; n];
        for &p in &self.data_positions {
            if p >= n {
                return Err(invalid(format!("subcarrier {p} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(invalid(format!("subcarrier {p} listed twice")));
            }
        }
        if self.channel_taps == 0 || self.channel_taps > n {
            return Err(invalid(format!(
                "channel_taps must be in 1..={n}, got {}",
                self.channel_taps
            )));
        }
        Ok(())
    }
}

/// Pilot-convolution model: `y_t = Σ_i h_i p_{t−i}`, full linear convolution.
///
/// `H` is `(len(p) + n − 1) × n` and column `j` is the pilot delayed by `j`.
pub fn build_toeplitz_pilot_model(pilot: &[C64], n: usize) -> Result<MeasurementModel> {
    if pilot.is_empty() {
        return Err(invalid("pilot sequence is empty"));
    }
    if n == 0 {
        return Err(invalid("channel length must be positive"));
    }
    let m = pilot.len() + n - 1;
    let h = CMatrix::from_fn(m, n, |t, j| {
        if t >= j && t - j < pilot.len() {
            pilot[t - j]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    MeasurementModel::new(h, Scenario::ToeplitzPilot)
}

/// Frequency-domain pilots: `H = diag(p_f) · F[positions, 0..taps]` with the
/// unnormalized DFT, so a unit impulse channel reproduces the pilots.
///
/// `cfg.data_positions` are the pilot subcarriers and `cfg.pilots` their values.
pub fn build_ofdm_pilot_model(cfg: &OfdmConfig) -> Result<MeasurementModel> {
    cfg.validate()?;
    if cfg.pilots.len() != cfg.data_positions.len() {
        return Err(invalid(format!(
            "{} pilot values for {} pilot positions",
            cfg.pilots.len(),
            cfg.data_positions.len()
        )));
    }
    if cfg.data_positions.is_empty() {
        return Err(invalid("no pilot positions"));
    }
    let f = dft_matrix(cfg.fft_size);
    let h = CMatrix::from_fn(cfg.data_positions.len(), cfg.channel_taps, |r, t| {
        cfg.pilots[r] * f[(cfg.data_positions[r], t)]
    });
    Ok(MeasurementModel::new(h, Scenario::OfdmPilot)?
        .with_index_map(IndexMap::Positions(cfg.data_positions.clone())))
}

/// Angular-domain model `H = A·D` with `D` the `n`-point unitary DFT; the
/// channel is `h = D s`.
pub fn build_angular_model(a: &CMatrix) -> Result<MeasurementModel> {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Err(invalid("pilot matrix must be nonempty"));
    }
    let d = unitary_dft(n);
    Ok(MeasurementModel::new(a * &d, Scenario::Angular)?.with_dictionary(d))
}
