//! Univariate kernel density and distribution function estimates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{kernel_cdf, kernel_eval, normal_reference_constant, robust_scale};

/// A fitted univariate kernel estimate: the sorted sample plus its bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEstimate {
    sample: Vec<f64>,
    bandwidth: f64,
}

/// Normal-reference bandwidth `C_K * min(sd, IQR/1.349) * n^{-1/5}`.
pub fn marginal_bandwidth(column: &[f64]) -> Result<f64> {
    let n = column.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if column.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "marginal sample" });
    }
    let scale = robust_scale(column);
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::Degenerate { column: None });
    }
    Ok(normal_reference_constant() * scale * libm::pow(n as f64, -0.2))
}

impl MarginalEstimate {
    /// Fits with the normal-reference bandwidth scaled by `multiplier`.
    pub fn fit(column: &[f64], multiplier: f64) -> Result<Self> {
        if !(multiplier > 0.0 && multiplier.is_finite()) {
            return Err(Error::Domain { what: "bandwidth multiplier", value: multiplier });
        }
        let b = marginal_bandwidth(column)? * multiplier;
        Self::from_parts(column.to_vec(), b)
    }

    /// Rebuilds an estimate from a stored sample and bandwidth.
    pub fn from_parts(mut sample: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Domain { what: "bandwidth", value: bandwidth });
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "marginal sample" });
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self { sample, bandwidth })
    }

    pub fn sample(&self) -> &[f64] {
        &self.sample
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    /// Sample points strictly within one bandwidth of `x`, plus the count below.
    fn window(&self, x: f64) -> (usize, &[f64]) {
        let b = self.bandwidth;
        let lo = self.sample.partition_point(|&s| s <= x - b);
        let hi = self.sample.partition_point(|&s| s < x + b);
        (lo, &self.sample[lo..hi.max(lo)])
    }

    pub fn density(&self, x: f64) -> f64 {
        let b = self.bandwidth;
        let (_, near) = self.window(x);
        let s: f64 = near.iter().map(|&xi| kernel_eval((xi - x) / b)).sum();
        s / (self.sample.len() as f64 * b)
    }

    /// `(1/n) sum J((x - X_i)/b)`, nondecreasing in `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let b = self.bandwidth;
        let (below, near) = self.window(x);
        let s: f64 = near.iter().map(|&xi| kernel_cdf((x - xi) / b)).sum();
        ((below as f64 + s) / self.sample.len() as f64).clamp(0.0, 1.0)
    }
}
