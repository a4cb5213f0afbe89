use rand::Rng;
use rand_distr::StandardNormal;

use super::steering_vector;
use crate::dictionary::TrainingSet;
use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, C64};
use crate::model::NoiseSpec;

/// Clustered multipath channel seen by a half-wavelength linear array.
///
/// Each realization sums `paths_per_cluster` rays around every cluster
/// center, with angles jittered by a Gaussian of `angular_spread_deg` and
/// circular Gaussian gains normalized so that `E|h_i|² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredChannel {
    pub antennas: usize,
    pub cluster_angles_deg: Vec<f64>,
    pub paths_per_cluster: usize,
    pub angular_spread_deg: f64,
}

impl ClusteredChannel {
    /// Six fixed clusters spread over the sector.
    pub fn six_clusters(antennas: usize) -> Self {
        Self {
            antennas,
            cluster_angles_deg: vec![-55.0, -33.0, -12.0, 8.0, 29.0, 51.0],
            paths_per_cluster: 10,
            angular_spread_deg: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.cluster_angles_deg.is_empty() || self.paths_per_cluster == 0 {
            return Err(invalid("antennas, clusters and paths must be positive"));
        }
        if !(self.angular_spread_deg.is_finite() && self.angular_spread_deg >= 0.0) {
            return Err(invalid("angular spread must be nonnegative"));
        }
        Ok(())
    }

    pub fn generate<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<TrainingSet> {
        self.validate()?;
        let n = self.antennas;
        let rays = self.cluster_angles_deg.len() * self.paths_per_cluster;
        let gain = NoiseSpec::complex(1.0 / rays as f64);
        let scale = C64::new((n as f64).sqrt(), 0.0);
        let mut out = CMatrix::zeros(n, count);
        for l in 0..count {
            let mut col = out.column_mut(l);
            for &center in &self.cluster_angles_deg {
                let g = gain.sample(self.paths_per_cluster, rng);
                for gp in g.iter() {
                    let jitter: f64 = rng.sample(StandardNormal);
                    let theta = (center + self.angular_spread_deg * jitter).to_radians();
                    col += steering_vector(n, theta.sin()) * (gp * scale);
                }
            }
        }
        TrainingSet::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn unit_average_power() {
        let mut rng = RngStream::new(58, 0).rng();
        let set = ClusteredChannel::six_clusters(32).generate(2000, &mut rng).unwrap();
        let power = set.signals().norm_squared() / (32.0 * 2000.0);
        assert!((power - 1.0).abs() < 0.05, "{power}");
    }

    #[test]
    fn single_ray_is_a_steering_vector() {
        let ch = ClusteredChannel {
            antennas: 8,
            cluster_angles_deg: vec![30.0],
            paths_per_cluster: 1,
            angular_spread_deg: 0.0,
        };
        let mut rng = RngStream::new(59, 0).rng();
        let h = ch.generate(1, &mut rng).unwrap().signals().column(0).into_owned();
        let a = steering_vector(8, 0.5);
        let fit = a.dotc(&h);
        assert!((&h - a * fit).norm() < 1e-10 * h.norm());
    }
}
