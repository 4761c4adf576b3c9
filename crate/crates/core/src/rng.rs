//! Seeded random number generation.
//!
//! Every randomized component draws from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`, which expands the 64-bit seed with PCG32.
//! Both algorithms are fixed and platform independent, so a seed pins down
//! every instance, perturbation and audit sample byte for byte.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a named sub-component.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
