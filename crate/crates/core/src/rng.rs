//! Deterministic, purpose-keyed random substreams.
//!
//! A single 64-bit trial seed fans out into independent streams keyed by
//! `(purpose, round, salt)`. Each key is stretched through a SplitMix64
//! chain into a 32-byte ChaCha8 key, so adding a consumer or reordering
//! draws in one part of the pipeline never perturbs any other stream —
//! the property the byte-identical replay guarantee rests on.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels. The numeric discriminant is part of the on-disk
/// determinism contract: renumbering changes every derived stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Instance generation.
    Gen = 1,
    /// Color activation coin flips (one stream per round).
    Activate = 2,
    /// Edge / batch draws within a round.
    Draw = 3,
    /// Residual vertex deletions within a round.
    VertexResidual = 4,
    /// Residual color deletions within a round.
    ColorResidual = 5,
    /// Completion / resampling phase.
    Complete = 6,
    /// Retry attempts (salted by attempt index).
    Retry = 7,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root of a trial's stream tree.
#[derive(Debug, Clone, Copy)]
pub struct SeedSplitter {
    seed: u64,
}

impl SeedSplitter {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream for `purpose` at iteration `round`, sub-keyed by `salt`
    /// (attempt index, part index, ... — zero when unused).
    pub fn stream(&self, purpose: Purpose, round: u64, salt: u64) -> ChaCha8Rng {
        let mut state = self.seed;
        // Chain the key material through the mixer rather than XOR-folding it,
        // so (purpose, round, salt) collisions cannot cancel.
        let mut key = [0u8; 32];
        let _ = splitmix64(&mut state);
        state ^= purpose as u64;
        let _ = splitmix64(&mut state);
        state ^= round;
        let _ = splitmix64(&mut state);
        state ^= salt;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
