//! Shared numerical primitives: the biweight kernel, the standard normal
//! distribution, Kendall's tau and rank pseudo-observations.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Roughness `R(K) = \int K^2` of the biweight kernel.
pub const KERNEL_ROUGHNESS: f64 = 5.0 / 7.0;
/// Second moment `\int x^2 K(x) dx` of the biweight kernel.
pub const KERNEL_VARIANCE: f64 = 1.0 / 7.0;

/// Biweight kernel `15/16 (1 - x^2)^2` on `[-1, 1]`.
#[inline]
pub fn kernel_eval(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let t = 1.0 - x * x;
    0.9375 * t * t
}

/// Integrated biweight kernel `J(x) = \int_{-inf}^x K`.
#[inline]
pub fn kernel_cdf(x: f64) -> f64 {
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let x2 = x * x;
        0.5 + 0.9375 * x * (1.0 - x2 * (2.0 / 3.0) + x2 * x2 * 0.2)
    }
}

/// Normal-reference constant `[8 sqrt(pi) R(K) / (3 sigma_K^4)]^{1/5}` (about 2.7779).
pub fn normal_reference_constant() -> f64 {
    libm::pow(
        8.0 * libm::sqrt(PI) * KERNEL_ROUGHNESS / (3.0 * KERNEL_VARIANCE * KERNEL_VARIANCE),
        0.2,
    )
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        libm::erfc(libm::sqrt(0.5 * x))
    }
}

/// Standard normal quantile (Wichura's AS241, about 1e-16 relative accuracy).
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { what: "probability", value: p });
    }
    Ok(norm_quantile_unchecked(p))
}

/// [`norm_quantile`] for callers that already guarantee `0 < p < 1`.
#[allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]
pub(crate) fn norm_quantile_unchecked(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2509.080_928_730_122_7 * r + 33430.575_583_588_13) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13_731.693_765_509_46)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5226.495_278_852_546 * r + 28729.085_735_721_943) * r
            + 39307.895_800_092_71)
            * r
            + 21213.794_301_586_597)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = libm::sqrt(-libm::log(r));
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_887_9)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Kendall's tau-b of paired observations, `O(n log n)` (Knight's algorithm).
///
/// Returns 0 when either coordinate is constant.
pub fn kendalls_tau(pairs: &[(f64, f64)]) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite { what: "kendall's tau input" });
    }
    let counts = tau_counts(pairs);
    Ok(counts.tau_b())
}

/// Integer pair counts behind tau-b: `n0` pairs, ties in x, ties in y and the
/// signed concordance sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TauCounts {
    pub pairs: u64,
    pub ties_x: u64,
    pub ties_y: u64,
    pub concordance: i64,
}

impl TauCounts {
    pub fn tau_b(&self) -> f64 {
        let dx = (self.pairs - self.ties_x) as f64;
        let dy = (self.pairs - self.ties_y) as f64;
        if dx == 0.0 || dy == 0.0 {
            return 0.0;
        }
        let t = self.concordance as f64 / libm::sqrt(dx * dy);
        t.clamp(-1.0, 1.0)
    }
}

fn tie_pairs(run: u64) -> u64 {
    run * (run - 1) / 2
}

pub fn tau_counts(pairs: &[(f64, f64)]) -> TauCounts {
    let n = pairs.len() as u64;
    // adding 0.0 maps -0.0 to 0.0 so that total_cmp agrees with ==
    let mut v: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x + 0.0, y + 0.0)).collect();
    v.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut ties_x = 0u64;
    let mut ties_xy = 0u64;
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for w in v.windows(2) {
        if w[0].0 == w[1].0 {
            run_x += 1;
            if w[0].1 == w[1].1 {
                run_xy += 1;
            } else {
                ties_xy += tie_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            ties_x += tie_pairs(run_x);
            ties_xy += tie_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    ties_x += tie_pairs(run_x);
    ties_xy += tie_pairs(run_xy);

    let mut ys: Vec<f64> = v.iter().map(|p| p.1).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut ties_y = 0u64;
    let mut run = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            ties_y += tie_pairs(run);
            run = 1;
        }
    }
    ties_y += tie_pairs(run);

    let n0 = n * (n - 1) / 2;
    let concordance = n0 as i64 - ties_x as i64 - ties_y as i64 + ties_xy as i64 - 2 * swaps as i64;
    TauCounts { pairs: n0, ties_x, ties_y, concordance }
}

/// Bottom-up merge sort of `a` that returns the number of strict inversions.
fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if a[j] < a[i] {
                    buf[k] = a[j];
                    swaps += (mid - i) as u64;
                    j += 1;
                } else {
                    buf[k] = a[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + mid - i].copy_from_slice(&a[i..mid]);
            k += mid - i;
            buf[k..k + hi - j].copy_from_slice(&a[j..hi]);
            lo = hi;
        }
        a.copy_from_slice(buf);
        width *= 2;
    }
    swaps
}

/// Rank pseudo-observations `rank / (n + 1)`; tied values share their average rank.
pub fn pseudo_observations(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let mut out = alloc::vec![0.0; n];
    let scale = 1.0 / (n as f64 + 1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[idx[end]] == column[idx[start]] {
            end += 1;
        }
        // ranks start..end-1 (0-based) => average 1-based rank
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = rank * scale;
        }
        start = end;
    }
    out
}

/// Unbiased sample standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    libm::sqrt(ss / (n as f64 - 1.0))
}

/// Linear-interpolation quantile (type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Robust scale `min(sd, IQR / 1.349)`, falling back to `sd` when the IQR vanishes.
pub fn robust_scale(x: &[f64]) -> f64 {
    let sd = std_dev(x);
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    let r = iqr / 1.349;
    if r > 0.0 && r < sd {
        r
    } else {
        sd
    }
}

pub(crate) fn total_order(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}
