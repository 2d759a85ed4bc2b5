//! SplitMix64 stream and the uniform/Gaussian mappings built on it.
//!
//! The generator and both mappings are fixed bit-for-bit so that combiners and
//! snapshot sets are reproducible from a seed in any language:
//!
//! * uniform: the top 53 bits of a 64-bit output divided by 2^53, in `[0, 1)`;
//! * Gaussian: Box–Muller on two consecutive uniforms `u1, u2`, with the radius
//!   taken from `1 - u1` (so the logarithm never sees zero). The cosine branch
//!   is the real part and the sine branch the imaginary part.

use nalgebra::Complex;
use std::f64::consts::PI;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain-separation constant XORed into snapshot seeds so that snapshot
/// streams never coincide with combiner streams built from the same seed.
pub const SNAPSHOT_DOMAIN: u64 = 0x5EED_5A4D_0C0F_FEE5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard normals via Box–Muller.
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        (radius * c, radius * s)
    }

    /// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
    pub fn next_complex_normal(&mut self, variance: f64) -> Complex<f64> {
        let (re, im) = self.next_normal_pair();
        let scale = (variance / 2.0).sqrt();
        Complex::new(scale * re, scale * im)
    }
}
