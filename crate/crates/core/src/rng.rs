//! Named random streams split from one master seed.
//!
//! Every consumer draws from its own ChaCha stream keyed by the master seed,
//! so adding draws in one consumer never shifts the numbers another sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Independent consumers of randomness inside one seeded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    GatingInit,
    Environment,
    PolicyTies,
    BaselineSampling,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::GatingInit => 1,
            Stream::Environment => 2,
            Stream::PolicyTies => 3,
            Stream::BaselineSampling => 4,
        }
    }
}

/// Returns the generator for `stream` under `master_seed`.
pub fn stream(master_seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.id());
    rng
}
