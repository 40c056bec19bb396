//! Named random substreams derived from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

/// Independent streams of one run. Consuming one never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    TrainPolicy = 2,
    EvalPolicy = 3,
    TrainEnv = 4,
    EvalEnv = 5,
    Perturbation = 6,
}

pub fn substream(seed: u64, stream: Stream) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
