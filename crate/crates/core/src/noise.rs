//! Named, independently seeded Gaussian noise streams.
//!
//! Every stream is a ChaCha8 generator keyed by the run seed and selected by
//! a fixed stream number, so disabling one noise source never shifts the
//! samples drawn by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream numbers. Execution-time noise for task `i` uses `EXEC_BASE + i`.
pub mod stream_id {
    pub const MEASUREMENT: u64 = 1;
    pub const EXEC_BASE: u64 = 16;
}

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    std_dev: f64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64, variance: f64) -> Self {
        assert!(
            variance >= 0.0 && variance.is_finite(),
            "variance must be finite and >= 0"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            std_dev: variance.sqrt(),
        }
    }

    /// A stream that always yields exactly zero.
    pub fn silent() -> Self {
        Self::new(0, 0, 0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    /// Zero-mean Gaussian sample. Silent streams return 0 without advancing.
    pub fn sample(&mut self) -> f64 {
        if self.std_dev == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.std_dev * z
    }
}
