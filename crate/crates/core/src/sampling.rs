//! Deterministic random sampling: a hand-rolled xoshiro256++ generator with
//! named sub-streams, plus the uniform / Beta / Gaussian samplers and the
//! Fisher–Yates shuffle the laboratory is built on.
//!
//! Every run derives all of its randomness from one root `u64` seed. Distinct
//! concerns (weight init, data generation, pairing, mix geometry, ...) each get
//! their own [`Stream`], so adding or removing draws in one concern can never
//! shift the sequence seen by another. Sub-stream seeding is
//! `seed_tag = root ^ (tag + 1) * 0x9E3779B97F4A7C15` (wrapping), expanded into
//! xoshiro state by SplitMix64. The `tag + 1` keeps tag 0 from degenerating to
//! the root seed itself.

use alloc::vec::Vec;

use crate::mathf;

/// Named randomness sub-streams. The numeric tags are part of the persisted
/// behaviour: changing them changes every downstream sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Model weight initialization.
    Init = 0,
    /// Training-set generation.
    DataTrain = 1,
    /// Test-set generation.
    DataTest = 2,
    /// Per-epoch shuffling of the training order.
    EpochShuffle = 3,
    /// Partner assignment for mixing.
    Pairing = 4,
    /// Mix geometry: crop-area fractions, box centers, patch grids, patch
    /// permutations.
    MixGeometry = 5,
    /// The per-sample random lambda term.
    LambdaR = 6,
    /// Evaluation-time randomness (occlusion patch choice, shuffle perms).
    Eval = 7,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 step: the standard constants 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB with shifts 30/27/31.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256++ generator state. `Clone` is cheap and deliberate: tests clone a
/// stream to re-derive the exact draws a routine under test will consume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    s: [u64; 4],
}

impl RngState {
    /// Seeds directly from a u64 via SplitMix64 expansion.
    pub fn from_seed(seed: u64) -> RngState {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for w in s.iter_mut() {
            *w = splitmix64(&mut sm);
        }
        // xoshiro's all-zero state is absorbing; SplitMix64 makes it absurdly
        // unlikely, but guard anyway.
        if s == [0, 0, 0, 0] {
            s[0] = GOLDEN;
        }
        RngState { s }
    }

    /// Derives the named sub-stream of a root seed.
    pub fn stream(root_seed: u64, stream: Stream) -> RngState {
        RngState::from_seed(root_seed ^ (stream as u64 + 1).wrapping_mul(GOLDEN))
    }

    /// xoshiro256++ core step: output = rotl(s0 + s3, 23) + s0.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = (self.s[0].wrapping_add(self.s[3]))
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw in [0, 1): the top 53 bits scaled by 2^-53.
    #[inline]
    pub fn sample_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw in (0, 1]; used where a later log or reciprocal forbids 0.
    #[inline]
    fn sample_uniform_open(&mut self) -> f64 {
        1.0 - self.sample_uniform()
    }

    /// Uniform integer in [0, bound). Uses the plain modulo construction; the
    /// bias is at most bound/2^64, negligible for the desk-scale bounds (image
    /// sides, batch sizes) this laboratory uses.
    #[inline]
    pub fn uniform_int(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "uniform_int bound must be positive");
        (self.next_u64() % bound as u64) as usize
    }

    /// Standard normal via Box–Muller (cosine branch). Consumes exactly two
    /// uniforms per draw; the sine mate is discarded so no hidden state
    /// survives between calls.
    #[inline]
    pub fn sample_std_normal(&mut self) -> f64 {
        let u1 = self.sample_uniform_open(); // (0,1]: ln is finite
        let u2 = self.sample_uniform();
        mathf::sqrt(-2.0 * mathf::ln(u1)) * mathf::cos(2.0 * core::f64::consts::PI * u2)
    }

    /// Gaussian with the given mean and standard deviation. `sigma = 0`
    /// returns `mu` exactly and consumes no draws. `sigma` must be >= 0.
    #[inline]
    pub fn sample_gaussian(&mut self, mu: f64, sigma: f64) -> f64 {
        assert!(sigma >= 0.0, "sample_gaussian requires sigma >= 0");
        if sigma == 0.0 {
            return mu;
        }
        mu + sigma * self.sample_std_normal()
    }

    /// Gamma(shape, 1) via Marsaglia–Tsang: for shape >= 1, squeeze/accept on
    /// d*(1+c*x)^3 with d = shape - 1/3, c = 1/sqrt(9d); shapes below 1 use the
    /// boost Gamma(shape) = Gamma(shape+1) * U^(1/shape).
    pub fn sample_gamma(&mut self, shape: f64) -> f64 {
        assert!(
            shape > 0.0 && shape.is_finite(),
            "sample_gamma requires finite shape > 0"
        );
        if shape < 1.0 {
            let boost = mathf::pow(self.sample_uniform_open(), 1.0 / shape);
            return self.sample_gamma(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / mathf::sqrt(9.0 * d);
        loop {
            let x = self.sample_std_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.sample_uniform_open();
            // Cheap squeeze first, exact log test second.
            if u < 1.0 - 0.0331 * x * x * x * x {
                return d * v;
            }
            if mathf::ln(u) < 0.5 * x * x + d * (1.0 - v + mathf::ln(v)) {
                return d * v;
            }
        }
    }

    /// Beta(alpha, beta) as the ratio of two Marsaglia–Tsang Gamma draws:
    /// X ~ Gamma(alpha), Y ~ Gamma(beta), return X/(X+Y). The alpha draw comes
    /// first. The double-underflow corner X + Y = 0 maps to 1/2.
    pub fn sample_beta(&mut self, alpha: f64, beta: f64) -> f64 {
        assert!(
            alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite(),
            "sample_beta requires finite alpha, beta > 0"
        );
        let x = self.sample_gamma(alpha);
        let y = self.sample_gamma(beta);
        let s = x + y;
        if s == 0.0 {
            return 0.5;
        }
        x / s
    }

    /// In-place Fisher–Yates shuffle: for i from n-1 down to 1, swap index i
    /// with `next_u64() % (i+1)`. Same modulo-bias note as [`uniform_int`].
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        for i in (1..n).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }

    /// A fresh random permutation of 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}
