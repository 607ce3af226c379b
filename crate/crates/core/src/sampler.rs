//! Seekable, seeded uniform stream.
//!
//! Backed by ChaCha8 used as a counter-based generator: a `(seed, stream_id)`
//! pair selects the key and nonce, and draw `i` is the 64-bit word pair at
//! position `2 i` of the keystream. Any draw can therefore be reproduced in
//! isolation, and workers that own disjoint index ranges or streams produce
//! the same numbers as a single sequential pass.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const WORDS_PER_DRAW: u128 = 2;

#[derive(Debug, Clone)]
pub struct SeededSampler {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl SeededSampler {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Index of the next draw.
    pub fn position(&self) -> u64 {
        (self.rng.get_word_pos() / WORDS_PER_DRAW) as u64
    }

    pub fn seek(&mut self, draw_index: u64) {
        self.rng.set_word_pos(draw_index as u128 * WORDS_PER_DRAW);
    }

    /// Copy of this sampler positioned at `draw_index`.
    pub fn at(&self, draw_index: u64) -> Self {
        let mut s = self.clone();
        s.seek(draw_index);
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random mantissa bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_uniform()
    }

    /// Uniform integer on `lo..=hi`. Slight modulo bias is irrelevant at the
    /// ranges used here (at most a few thousand).
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + (self.next_u64() % span) as usize
    }
}
