//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed (expanded with
//! `SeedableRng::seed_from_u64`) and positioned on a 64-bit ChaCha stream id.
//! The same `(seed, stream)` pair yields the same draws on every platform.
//! Child streams are derived from the ids alone, never from how many values
//! the parent has produced, so work can be split across threads in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Order-sensitive combination of two ids into one.
pub fn mix64(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(29) ^ 0xD6E8_FEB8_6659_FD93)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent stream for sub-task `index`, starting from its first draw.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream::new(self.seed, mix64(self.stream, index))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
