//! Bivariate copula densities by the transformation estimator and the
//! h-functions obtained by integrating them.
//!
//! The pseudo-observations are mapped to normal scores `z = Phi^{-1}(u)`,
//! a product-kernel estimate with bandwidth `b I_2` is built on that scale and
//! mapped back by dividing through `phi(z_1) phi(z_2)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use core::f64::consts::PI;

use crate::numerics::{
    kernel_cdf, kernel_eval, norm_pdf, norm_quantile, std_dev, KERNEL_ROUGHNESS, KERNEL_VARIANCE,
};

/// Which conditional distribution an h-function evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HDirection {
    /// `h(u | v)`: the first argument given the second.
    FirstGivenSecond,
    /// `h(v | u)`: the second argument given the first.
    SecondGivenFirst,
}

/// How the integrated kernel sum is turned into a conditional distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HForm {
    /// Divide by the kernel weight of the conditioning coordinate, so that
    /// `h(1 | v) = 1` exactly.
    #[default]
    Normalized,
    /// Divide by `n phi(z)`: the plain integral of the density estimate.
    Literal,
}

/// An h-function value and whether it fell back to independence because no
/// sample point was within one bandwidth of the conditioning value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValue {
    pub value: f64,
    pub fallback: bool,
}

/// Converts the Gaussian-kernel normal-reference bandwidth `sd n^{-1/6}` of a
/// bivariate product kernel into the equivalent biweight bandwidth:
/// `[R(K)^2 / sigma_K^4]^{1/6} / [R(phi)^2]^{1/6}`, about 2.6073.
pub fn copula_kernel_factor() -> f64 {
    let r_phi = 1.0 / (2.0 * libm::sqrt(PI));
    libm::pow(KERNEL_ROUGHNESS * KERNEL_ROUGHNESS / (KERNEL_VARIANCE * KERNEL_VARIANCE * r_phi * r_phi), 1.0 / 6.0)
}

/// Normal-reference copula bandwidth on the normal-score scale:
/// [`copula_kernel_factor`] times the mean coordinate sd times `n^{-1/6}`.
pub fn copula_bandwidth(z_sample: &[(f64, f64)]) -> Result<f64> {
    let n = z_sample.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let z1: Vec<f64> = z_sample.iter().map(|p| p.0).collect();
    let z2: Vec<f64> = z_sample.iter().map(|p| p.1).collect();
    let (s1, s2) = (std_dev(&z1), std_dev(&z2));
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::Degenerate { column: None });
    }
    Ok(copula_kernel_factor() * 0.5 * (s1 + s2) * libm::pow(n as f64, -1.0 / 6.0))
}

/// A fitted pair-copula density, or the independence copula.
#[derive(Debug, Clone)]
pub struct PairCopulaEstimate {
    z_sample: Vec<(f64, f64)>,
    bandwidth: f64,
    is_independence: bool,
    // (z1, z2) sorted by z1, and (z2, z1) sorted by z2
    by_first: Vec<(f64, f64)>,
    by_second: Vec<(f64, f64)>,
}

impl PartialEq for PairCopulaEstimate {
    fn eq(&self, other: &Self) -> bool {
        self.z_sample == other.z_sample
            && self.bandwidth == other.bandwidth
            && self.is_independence == other.is_independence
    }
}

fn check_unit(u: f64, what: &'static str) -> Result<f64> {
    if u > 0.0 && u < 1.0 {
        Ok(u)
    } else {
        Err(Error::Domain { what, value: u })
    }
}

impl PairCopulaEstimate {
    pub fn independence() -> Self {
        Self {
            z_sample: Vec::new(),
            bandwidth: 0.0,
            is_independence: true,
            by_first: Vec::new(),
            by_second: Vec::new(),
        }
    }

    /// Fits on pseudo-observation pairs strictly inside the unit square.
    pub fn fit(pseudo_pairs: &[(f64, f64)]) -> Result<Self> {
        let n = pseudo_pairs.len();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        let mut z = Vec::with_capacity(n);
        for &(u, v) in pseudo_pairs {
            let z1 = norm_quantile(check_unit(u, "pseudo-observation")?)?;
            let z2 = norm_quantile(check_unit(v, "pseudo-observation")?)?;
            z.push((z1, z2));
        }
        let b = copula_bandwidth(&z)?;
        Self::from_parts(z, b)
    }

    /// Rebuilds an estimate from stored normal scores and bandwidth.
    pub fn from_parts(z_sample: Vec<(f64, f64)>, bandwidth: f64) -> Result<Self> {
        if z_sample.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Domain { what: "bandwidth", value: bandwidth });
        }
        if z_sample.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::NonFinite { what: "pair-copula sample" });
        }
        let mut by_first = z_sample.clone();
        by_first.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut by_second: Vec<(f64, f64)> = z_sample.iter().map(|&(a, b)| (b, a)).collect();
        by_second.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { z_sample, bandwidth, is_independence: false, by_first, by_second })
    }

    pub fn is_independence(&self) -> bool {
        self.is_independence
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn z_sample(&self) -> &[(f64, f64)] {
        &self.z_sample
    }

    pub fn len(&self) -> usize {
        self.z_sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_sample.is_empty()
    }

    /// Copula density at `(u, v)`; both must lie in `(0, 1)`.
    pub fn density(&self, u: f64, v: f64) -> Result<f64> {
        let z1 = norm_quantile(check_unit(u, "u")?)?;
        let z2 = norm_quantile(check_unit(v, "v")?)?;
        if self.is_independence {
            return Ok(1.0);
        }
        Ok(self.density_z(z1, z2))
    }

    /// Density in terms of the normal scores of the arguments.
    pub(crate) fn density_z(&self, z1: f64, z2: f64) -> f64 {
        if self.is_independence {
            return 1.0;
        }
        let b = self.bandwidth;
        let lo = self.by_first.partition_point(|p| p.0 <= z1 - b);
        let hi = self.by_first.partition_point(|p| p.0 < z1 + b);
        let mut s = 0.0;
        for &(a, c) in &self.by_first[lo..hi.max(lo)] {
            let k2 = kernel_eval((z2 - c) / b);
            if k2 > 0.0 {
                s += kernel_eval((z1 - a) / b) * k2;
            }
        }
        s / (self.z_sample.len() as f64 * b * b * norm_pdf(z1) * norm_pdf(z2))
    }

    /// h-function; for [`HDirection::FirstGivenSecond`] this is `h(u | v)`,
    /// otherwise `h(v | u)`. The arguments are always `(u, v)` in pair order.
    pub fn h(&self, u: f64, v: f64, direction: HDirection, form: HForm) -> Result<HValue> {
        let zu = norm_quantile(check_unit(u, "u")?)?;
        let zv = norm_quantile(check_unit(v, "v")?)?;
        Ok(self.h_z(u, v, zu, zv, direction, form))
    }

    pub(crate) fn h_z(
        &self,
        u: f64,
        v: f64,
        zu: f64,
        zv: f64,
        direction: HDirection,
        form: HForm,
    ) -> HValue {
        // (argument, conditioning value) on both scales
        let (arg, z_arg, z_cond, sorted) = match direction {
            HDirection::FirstGivenSecond => (u, zu, zv, &self.by_second),
            HDirection::SecondGivenFirst => (v, zv, zu, &self.by_first),
        };
        if self.is_independence {
            return HValue { value: arg, fallback: false };
        }
        let b = self.bandwidth;
        let lo = sorted.partition_point(|p| p.0 <= z_cond - b);
        let hi = sorted.partition_point(|p| p.0 < z_cond + b);
        let (mut num, mut den) = (0.0, 0.0);
        for &(c, a) in &sorted[lo..hi.max(lo)] {
            let k = kernel_eval((z_cond - c) / b);
            den += k;
            num += k * kernel_cdf((z_arg - a) / b);
        }
        match form {
            HForm::Normalized => {
                if den > 0.0 {
                    HValue { value: (num / den).clamp(0.0, 1.0), fallback: false }
                } else {
                    HValue { value: arg, fallback: true }
                }
            }
            HForm::Literal => {
                let scale = self.z_sample.len() as f64 * b * norm_pdf(z_cond);
                HValue { value: num / scale, fallback: den == 0.0 }
            }
        }
    }
}
