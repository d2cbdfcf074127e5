//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, domain, index)`. The key is derived from the user seed and a
//! per-purpose domain tag; the 64-bit ChaCha stream id is the chunk index. A
//! chunk's output therefore depends only on its address, never on which worker
//! produced it or in what order.
//!
//! Normal variates use `rand_distr::StandardNormal` (Marsaglia-Tsang ziggurat
//! with 64-bit uniforms).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags, so that e.g. the secret and the sample stream never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Secret = 0x5345_4352_4554_0001,
    ContinuousSamples = 0x434c_5745_0000_0002,
    DiscreteSamples = 0x444c_5745_0000_0003,
    DiscreteSecret = 0x444c_5345_4352_0004,
    MonteCarlo = 0x4d43_4558_5000_0005,
}

/// Fixed number of samples per stream chunk. Changing it changes every
/// generated data set, so it is a constant and not a tuning knob.
pub const CHUNK_LEN: usize = 1 << 14;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for chunk `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ (domain as u64);
    for word in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        word.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Chunk boundaries `[start, end)` covering `0..total`.
pub fn chunk_ranges(total: usize) -> impl Iterator<Item = (u64, std::ops::Range<usize>)> {
    (0..total.div_ceil(CHUNK_LEN)).map(move |c| {
        let start = c * CHUNK_LEN;
        (c as u64, start..(start + CHUNK_LEN).min(total))
    })
}
