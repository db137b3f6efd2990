//! Counter-based deterministic random streams.
//!
//! Every source of randomness in the toolkit is a [`RngStream`] keyed by a
//! tuple such as (global seed, image index, mode id, knob index). Streams are
//! pure functions of their key, so dataset generation is reproducible under
//! any parallel schedule: no stream ever observes how many draws another
//! stream has made.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective 64-bit mix with good avalanche.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic counter-based generator.
///
/// Output `i` is `mix(key + i * GOLDEN)`; the state is just the counter, so
/// identical keys always produce identical sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            key: mix(seed.wrapping_add(GOLDEN)),
            counter: 0,
        }
    }

    /// Fold a key tuple into a single stream key.
    pub fn keyed(parts: &[u64]) -> Self {
        let mut k: u64 = 0x5365_6e73_6f72_5372; // arbitrary domain constant
        for &p in parts {
            k = mix(k ^ mix(p.wrapping_add(GOLDEN)));
        }
        RngStream { key: k, counter: 0 }
    }

    /// Independent child stream for a named knob; does not advance `self`.
    pub fn derive(&self, knob: u64) -> RngStream {
        RngStream::keyed(&[self.key, knob])
    }

    /// The stream key (used to hand a whole stream to another component).
    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // Multiply-shift; bias is < 2^-53 for the n used here.
        ((self.next_u64() >> 11) as u128 * n as u128 >> 53) as u64
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
