//! Named, independent random streams derived from a single scenario seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const FIELD: &str = "field";
pub const ACTUATION_DAY: &str = "actuation-day";
pub const ACTUATION_NIGHT: &str = "actuation-night";
pub const LIDAR_NOISE_DAY: &str = "lidar-noise-day";
pub const LIDAR_NOISE_NIGHT: &str = "lidar-noise-night";
pub const ANOMALIES: &str = "anomalies";

/// Deterministic generator for the sub-stream `name` of `seed`.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}
