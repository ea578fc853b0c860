//! Counter-based random streams.
//!
//! Every draw in the crate comes from a [`RngStream`], a `(seed, stream_id)`
//! pair mapped onto a ChaCha8 generator: the key is derived from the seed and
//! the lane, the 64-bit ChaCha stream parameter is the stream id. ChaCha is a
//! counter-mode cipher, so distinct stream ids (or lanes) never overlap and the
//! word position can be set directly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator handed out by [`RngStream::rng`].
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

const TRIAL_MASK: u64 = (1 << 40) - 1;

/// SplitMix64 finalizer.
pub const fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for one trial of an experiment.
    ///
    /// The id packs `kind` into bits 56..64, `scale_index` into bits 40..56 and
    /// `trial` into bits 0..40. The packing is injective for `kind < 256`,
    /// `scale_index < 65536` and `trial < 2^40`; larger values are masked.
    pub const fn for_trial(seed: u64, kind: u8, scale_index: u16, trial: u64) -> Self {
        let id = ((kind as u64) << 56) | ((scale_index as u64) << 40) | (trial & TRIAL_MASK);
        Self::new(seed, id)
    }

    /// Trial `t` under this base stream: the low 40 bits of the id are
    /// xored with `t`, so `for_trial(s, k, i, 0).child(t) == for_trial(s, k, i, t)`.
    pub const fn child(&self, t: u64) -> Self {
        Self::new(self.seed, self.stream_id ^ (t & TRIAL_MASK))
    }

    /// Generator for lane 0.
    pub fn rng(&self) -> StreamRng {
        self.lane(0)
    }

    /// Independent generator for a sub-purpose of the same trial (lane).
    ///
    /// Lanes change the ChaCha key, so `lane(a)` and `lane(b)` are independent
    /// for `a != b` even under the same stream id.
    pub fn lane(&self, lane: u32) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = self.seed ^ mix64(u64::from(lane).wrapping_add(0xC0FF_EE00));
        for chunk in key.chunks_exact_mut(8) {
            state = mix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Generator positioned `words` 32-bit words into lane 0.
    pub fn rng_at(&self, words: u128) -> StreamRng {
        let mut rng = self.rng();
        rng.set_word_pos(words);
        rng
    }
}
