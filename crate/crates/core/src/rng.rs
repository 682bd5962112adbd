//! Reproducible random streams.
//!
//! Every chain, replicate and path-sampling grid point draws from its own
//! ChaCha8 stream. A stream is identified by the top-level seed plus a
//! 64-bit stream id packed from `(purpose, replicate, chain, grid)`:
//!
//! ```text
//! bits 56..64  purpose   (simulate = 1, fit = 2, path = 3, other = 0xff)
//! bits 32..56  replicate (24 bits)
//! bits 16..32  chain     (16 bits)
//! bits  0..16  grid      (16 bits)
//! ```

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

pub type ChainRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Simulate = 1,
    Fit = 2,
    Path = 3,
    Other = 0xff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub purpose: Purpose,
    pub replicate: u32,
    pub chain: u16,
    pub grid: u16,
}

impl StreamId {
    pub fn new(purpose: Purpose) -> Self {
        Self {
            purpose,
            replicate: 0,
            chain: 0,
            grid: 0,
        }
    }

    pub fn replicate(mut self, r: u32) -> Self {
        debug_assert!(r < (1 << 24));
        self.replicate = r & 0x00ff_ffff;
        self
    }

    pub fn chain(mut self, k: u16) -> Self {
        self.chain = k;
        self
    }

    pub fn grid(mut self, s: u16) -> Self {
        self.grid = s;
        self
    }

    pub fn pack(self) -> u64 {
        ((self.purpose as u64) << 56)
            | ((self.replicate as u64) << 32)
            | ((self.chain as u64) << 16)
            | self.grid as u64
    }
}

/// A `(seed, stream)` pair naming one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngHandle {
    pub seed: u64,
    pub stream: u64,
}

impl RngHandle {
    pub fn new(seed: u64, stream: StreamId) -> Self {
        Self {
            seed,
            stream: stream.pack(),
        }
    }

    pub fn raw(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Opens the stream positioned at its first draw.
    pub fn rng(&self) -> ChainRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::RngCore;

    #[test]
    fn packing_is_injective_on_fields() {
        let a = StreamId::new(Purpose::Fit).replicate(3).chain(1).grid(7).pack();
        let b = StreamId::new(Purpose::Fit).replicate(3).chain(7).grid(1).pack();
        let c = StreamId::new(Purpose::Path).replicate(3).chain(1).grid(7).pack();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a & 0xffff, 7);
        assert_eq!((a >> 32) & 0xff_ffff, 3);
    }

    #[test]
    fn same_handle_same_stream() {
        let h = RngHandle::new(42, StreamId::new(Purpose::Fit).replicate(9));
        let (mut a, mut b) = (h.rng(), h.rng());
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut other = RngHandle::new(42, StreamId::new(Purpose::Fit).replicate(10)).rng();
        assert_ne!(h.rng().next_u64(), other.next_u64());
    }

    #[test]
    fn stream_is_pinned_across_platforms() {
        // ChaCha8 with a fixed seed and stream is a frozen sequence.
        let mut r = RngHandle::raw(1, 0).rng();
        let first = r.next_u64();
        let mut again = RngHandle::raw(1, 0).rng();
        assert_eq!(first, again.next_u64());
    }
}
