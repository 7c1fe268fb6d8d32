//! Deterministic, splittable random streams.
//!
//! Every stochastic quantity in the crate is addressed by a tuple
//! `(seed, machine, replicate, role)` plus a draw counter. The stream is
//! counter-based: draw `i` is a pure function of the stream key and `i`, so
//! results never depend on evaluation order or on how work is divided across
//! threads. Normals come from the inverse normal CDF applied to a counter
//! uniform, keeping the coefficient-to-draw mapping stable.

use std::sync::OnceLock;

use statrs::distribution::{ContinuousCDF, Normal};

/// Machine slot used for streams that belong to no machine (signal draws,
/// experiment-level randomness).
pub const SIGNAL_MACHINE: usize = usize::MAX;

/// What a stream is used for. Distinct roles on the same `(seed, machine,
/// replicate)` tuple never share draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamRole {
    /// Signal (truth) generation.
    Signal,
    /// Observation noise in the sequence model.
    Noise,
    /// Half-sample splitting noise.
    Split,
    /// Auxiliary draws (test utilities, alternative instances).
    Aux,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Signal => 1,
            StreamRole::Noise => 2,
            StreamRole::Split => 3,
            StreamRole::Aux => 4,
        }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: full-avalanche 64-bit mix.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn chain(h: u64, x: u64) -> u64 {
    mix64(h.wrapping_add(GOLDEN).wrapping_add(x))
}

/// Derives the 64-bit key identifying one stream.
pub fn stream_key(seed: u64, machine: usize, replicate: u64, role: StreamRole) -> u64 {
    let mut h = mix64(seed ^ 0xD1B5_4A32_D192_ED03);
    h = chain(h, machine as u64);
    h = chain(h, replicate);
    h = chain(h, role.tag());
    h
}

/// A counter-based uniform/normal stream.
///
/// `*_at(i)` methods are pure functions of the key and `i`; the `next_*`
/// methods advance an internal counter over the same sequence.
#[derive(Clone, Debug)]
pub struct RandomStream {
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64, machine: usize, replicate: u64, role: StreamRole) -> Self {
        RandomStream {
            key: stream_key(seed, machine, replicate, role),
            counter: 0,
        }
    }

    /// Raw 64-bit word for draw `i` (SplitMix64 sequence seeded at the key).
    pub fn word_at(&self, i: u64) -> u64 {
        mix64(self.key.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform draw `i` on the open interval (0, 1).
    pub fn uniform_at(&self, i: u64) -> f64 {
        // 53-bit mantissa, offset half a grid step so 0 and 1 are excluded.
        ((self.word_at(i) >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw `i` via the inverse CDF.
    pub fn normal_at(&self, i: u64) -> f64 {
        std_normal_quantile(self.uniform_at(i))
    }

    pub fn next_word(&mut self) -> u64 {
        let w = self.word_at(self.counter);
        self.counter += 1;
        w
    }

    pub fn next_uniform(&mut self) -> f64 {
        let u = self.uniform_at(self.counter);
        self.counter += 1;
        u
    }

    pub fn next_normal(&mut self) -> f64 {
        let z = self.normal_at(self.counter);
        self.counter += 1;
        z
    }

    /// Random sign, +1.0 or -1.0 with equal probability.
    pub fn next_sign(&mut self) -> f64 {
        if self.next_word() >> 63 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Uniform index in `0..bound` (widening-multiply range reduction).
    pub fn next_below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "next_below needs a positive bound");
        let w = self.next_word();
        ((w as u128 * bound as u128) >> 64) as usize
    }
}

/// Standard normal quantile function.
pub fn std_normal_quantile(p: f64) -> f64 {
    static N01: OnceLock<Normal> = OnceLock::new();
    N01.get_or_init(|| Normal::new(0.0, 1.0).expect("unit normal"))
        .inverse_cdf(p)
}
