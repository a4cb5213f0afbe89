use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies a reproducible random stream.
///
/// Two streams with equal `(seed, stream_id)` produce identical draws, which
/// is what makes Monte-Carlo sweeps deterministic regardless of scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for trial `trial` of sweep point `point`.
    pub fn for_trial(seed: u64, point: usize, trial: usize) -> Self {
        Self::new(seed, ((point as u64) << 32) | trial as u64)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
