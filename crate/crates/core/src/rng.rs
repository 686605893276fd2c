//! Variate generation on top of any [`RngCore`].
//!
//! Everything goes through inverse transforms of a 53-bit open uniform, so a
//! given generator state always yields the same variates on every platform.

use rand_core::RngCore;

use crate::numerics::norm_quantile_unchecked;

/// Uniform on the open interval `(0, 1)`.
#[inline]
pub fn uniform_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn std_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    norm_quantile_unchecked(uniform_open(rng))
}

#[inline]
pub fn unit_exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -libm::log(uniform_open(rng))
}

/// SplitMix64 finaliser, used to derive independent seeds for replicates.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
