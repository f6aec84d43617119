use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams for one run, all derived from a single seed.
///
/// Each purpose gets its own ChaCha stream so that, for example, the market run
/// and the baseline run see the same file arrivals regardless of how many needs
/// or serving orders the market consumed.
#[derive(Debug, Clone)]
pub struct Streams {
    pub traffic: ChaCha8Rng,
    pub needs: ChaCha8Rng,
    pub conservations: ChaCha8Rng,
    pub bs_order: ChaCha8Rng,
    pub channel: ChaCha8Rng,
}

impl Streams {
    pub const TRAFFIC: u64 = 0;
    pub const NEEDS: u64 = 1;
    pub const CONSERVATIONS: u64 = 2;
    pub const BS_ORDER: u64 = 3;
    pub const CHANNEL: u64 = 4;

    pub fn new(seed: u64) -> Self {
        Self {
            traffic: stream(seed, Self::TRAFFIC),
            needs: stream(seed, Self::NEEDS),
            conservations: stream(seed, Self::CONSERVATIONS),
            bs_order: stream(seed, Self::BS_ORDER),
            channel: stream(seed, Self::CHANNEL),
        }
    }
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
