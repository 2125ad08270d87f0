//! Independent random streams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Named consumers of randomness inside one run. Each gets its own ChaCha
/// stream so that, for example, changing how often the agent draws noise
/// never perturbs the traffic the environment generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 1,
    Agent = 2,
    Environment = 3,
    Traffic = 4,
    Replay = 5,
    Baseline = 6,
    Evaluation = 7,
}

pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
