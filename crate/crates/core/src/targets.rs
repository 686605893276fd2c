//! Benchmark target densities with standard normal margins, together with
//! exact samplers.
//!
//! * Gaussian copula with equicorrelation `rho = sin(pi tau / 2)`.
//! * Gumbel copula with `theta = 1 / (1 - tau)`, sampled by Marshall-Olkin.
//! * A non-simplified D-vine `0 - 1 - ... - (d-1)` of Gaussian pair-copulas
//!   whose correlation is the hyperplane `1 - 2 mean(u_D)` in the conditioning
//!   variables (independence in the first tree).

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::numerics::{norm_cdf, norm_pdf, norm_quantile_unchecked};
use crate::rng::{std_normal, uniform_open, unit_exponential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    GaussianCopula,
    GumbelCopula,
    NonSimplifiedVine,
}

/// Copula parameter matching a Kendall's tau: `rho = sin(pi tau / 2)` for the
/// Gaussian, `theta = 1 / (1 - tau)` for the Gumbel. The non-simplified vine
/// has no tau parameter and returns 0.
pub fn tau_to_param(kind: ScenarioKind, tau: f64) -> Result<f64> {
    match kind {
        ScenarioKind::GaussianCopula => {
            if !(tau > -1.0 && tau < 1.0) {
                return Err(Error::Domain { what: "kendall's tau", value: tau });
            }
            Ok(libm::sin(PI * tau / 2.0))
        }
        ScenarioKind::GumbelCopula => {
            if !(0.0..1.0).contains(&tau) {
                return Err(Error::Domain { what: "kendall's tau", value: tau });
            }
            Ok(1.0 / (1.0 - tau))
        }
        ScenarioKind::NonSimplifiedVine => Ok(0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    kind: ScenarioKind,
    d: usize,
    tau: f64,
    param: f64,
    /// Lower Cholesky factor of the equicorrelation matrix (Gaussian only).
    chol: Vec<f64>,
    /// Polynomial coefficients `c_k`, `k = 1..=d`, of the Gumbel generator derivative.
    gumbel_poly: Vec<f64>,
}

const EDGE_EPS: f64 = 1e-15;

fn clamp_open(u: f64) -> f64 {
    u.clamp(EDGE_EPS, 1.0 - EDGE_EPS)
}

/// Lower Cholesky factor of a symmetric positive definite `d x d` matrix.
fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = a[i * d + i] - s;
                if v <= 0.0 {
                    return None;
                }
                l[i * d + i] = libm::sqrt(v);
            } else {
                l[i * d + j] = (a[i * d + j] - s) / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Coefficients `c_1..c_d` with `(-1)^d psi^{(d)}(t) = psi(t) t^{-d} sum_k c_k s^k`,
/// `s = t^alpha`, for `psi(t) = exp(-t^alpha)`.
fn gumbel_coefficients(d: usize, alpha: f64) -> Vec<f64> {
    // index k holds the coefficient of s^k
    let mut c = alloc::vec![0.0; d + 1];
    c[0] = 1.0;
    for m in 0..d {
        let mut next = alloc::vec![0.0; d + 1];
        for k in 0..=m + 1 {
            let keep = if k <= m { (m as f64 - alpha * k as f64) * c[k] } else { 0.0 };
            let shift = if k >= 1 { alpha * c[k - 1] } else { 0.0 };
            next[k] = keep + shift;
        }
        c = next;
    }
    c.remove(0);
    c
}

/// `d`-th derivative of the Gumbel generator `exp(-t^{1/theta})` at `t > 0`.
pub fn gumbel_generator_derivative(d: usize, theta: f64, t: f64) -> f64 {
    let alpha = 1.0 / theta;
    let s = libm::pow(t, alpha);
    let poly: f64 = gumbel_coefficients(d, alpha)
        .iter()
        .enumerate()
        .map(|(k, c)| c * libm::pow(s, (k + 1) as f64))
        .sum();
    let sign = if d.is_multiple_of(2) { 1.0 } else { -1.0 };
    let base = if d == 0 { 1.0 } else { poly * libm::pow(t, -(d as f64)) };
    sign * libm::exp(-s) * base
}

/// `-ln Phi(x)` without cancellation in the upper tail.
fn neg_log_cdf(x: f64) -> f64 {
    if x > 0.0 {
        -libm::log1p(-norm_cdf(-x))
    } else {
        -libm::log(norm_cdf(x))
    }
}

fn gaussian_pair_log_density(a: f64, b: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let (za, zb) = (norm_quantile_unchecked(a), norm_quantile_unchecked(b));
    let r2 = 1.0 - rho * rho;
    -0.5 * libm::log(r2) - (rho * rho * (za * za + zb * zb) - 2.0 * rho * za * zb) / (2.0 * r2)
}

/// Gaussian h-function `P(U <= a | V = b)`.
fn gaussian_h(a: f64, b: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return a;
    }
    let (za, zb) = (norm_quantile_unchecked(a), norm_quantile_unchecked(b));
    clamp_open(norm_cdf((za - rho * zb) / libm::sqrt(1.0 - rho * rho)))
}

fn gaussian_h_inverse(w: f64, b: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return w;
    }
    let (zw, zb) = (norm_quantile_unchecked(w), norm_quantile_unchecked(b));
    clamp_open(norm_cdf(zw * libm::sqrt(1.0 - rho * rho) + rho * zb))
}

/// Correlation of the D-vine edge joining `i` and `i + m` given `u_{i+1..i+m-1}`.
pub fn hyperplane_correlation(conditioning: &[f64]) -> f64 {
    if conditioning.is_empty() {
        return 0.0;
    }
    let mean = conditioning.iter().sum::<f64>() / conditioning.len() as f64;
    (1.0 - 2.0 * mean).clamp(-1.0 + 1e-10, 1.0 - 1e-10)
}

impl Scenario {
    pub fn new(kind: ScenarioKind, d: usize, tau: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InsufficientData { needed: 2, got: d });
        }
        let param = tau_to_param(kind, tau)?;
        let mut chol = Vec::new();
        let mut gumbel_poly = Vec::new();
        match kind {
            ScenarioKind::GaussianCopula => {
                if param <= -1.0 / (d as f64 - 1.0) {
                    return Err(Error::Domain { what: "equicorrelation", value: param });
                }
                let r: Vec<f64> = (0..d * d).map(|k| if k / d == k % d { 1.0 } else { param }).collect();
                chol = cholesky(&r, d).ok_or(Error::Domain { what: "equicorrelation", value: param })?;
            }
            ScenarioKind::GumbelCopula => gumbel_poly = gumbel_coefficients(d, 1.0 / param),
            ScenarioKind::NonSimplifiedVine => {}
        }
        Ok(Self { kind, d, tau, param, chol, gumbel_poly })
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `rho` (Gaussian) or `theta` (Gumbel).
    pub fn param(&self) -> f64 {
        self.param
    }

    /// Exact joint density at `x` (standard normal margins).
    pub fn density(&self, x: &[f64]) -> f64 {
        libm::exp(self.log_density(x))
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "dimension mismatch");
        let margins: f64 = x.iter().map(|&v| libm::log(norm_pdf(v))).sum();
        margins + self.log_copula_density(x)
    }

    fn log_copula_density(&self, x: &[f64]) -> f64 {
        let d = self.d as f64;
        match self.kind {
            ScenarioKind::GaussianCopula => {
                // closed-form inverse of (1 - rho) I + rho 1 1^T
                let rho = self.param;
                let sum: f64 = x.iter().sum();
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let denom = 1.0 + (d - 1.0) * rho;
                let quad = (sq - rho / denom * sum * sum) / (1.0 - rho);
                let logdet = (d - 1.0) * libm::log(1.0 - rho) + libm::log(denom);
                -0.5 * logdet - 0.5 * (quad - sq)
            }
            ScenarioKind::GumbelCopula => {
                let theta = self.param;
                let alpha = 1.0 / theta;
                let mut t = 0.0;
                let mut jac = 0.0;
                for &v in x {
                    let w = neg_log_cdf(v).max(f64::MIN_POSITIVE);
                    t += libm::pow(w, theta);
                    jac += libm::log(theta) + (theta - 1.0) * libm::log(w) + w;
                }
                let s = libm::pow(t, alpha);
                let poly: f64 = self
                    .gumbel_poly
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * libm::pow(s, (k + 1) as f64))
                    .sum();
                -s - d * libm::log(t) + libm::log(poly) + jac
            }
            ScenarioKind::NonSimplifiedVine => {
                let u: Vec<f64> = x.iter().map(|&v| clamp_open(norm_cdf(v))).collect();
                self.vine_log_copula(&u)
            }
        }
    }

    /// Log copula density of the non-simplified D-vine at `u`.
    fn vine_log_copula(&self, u: &[f64]) -> f64 {
        let d = self.d;
        // fwd[i] = F(u_i | u_{i+1..i+m}), bwd[i] = F(u_{i+m} | u_{i..i+m-1})
        let mut fwd: Vec<f64> = u.to_vec();
        let mut bwd: Vec<f64> = u.to_vec();
        let mut log_c = 0.0;
        for m in 1..d {
            let mut nf = Vec::with_capacity(d - m);
            let mut nb = Vec::with_capacity(d - m);
            for i in 0..d - m {
                let rho = hyperplane_correlation(&u[i + 1..i + m]);
                let (a, b) = (fwd[i], bwd[i + 1]);
                log_c += gaussian_pair_log_density(a, b, rho);
                nf.push(gaussian_h(a, b, rho));
                nb.push(gaussian_h(b, a, rho));
            }
            fwd = nf;
            bwd = nb;
        }
        log_c
    }

    /// Draws `n` observations.
    pub fn sample<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> DataMatrix {
        let d = self.d;
        let mut values = Vec::with_capacity(n * d);
        let mut eps = alloc::vec![0.0; d];
        let mut u = alloc::vec![0.0; d];
        for _ in 0..n {
            match self.kind {
                ScenarioKind::GaussianCopula => {
                    for e in eps.iter_mut() {
                        *e = std_normal(rng);
                    }
                    for i in 0..d {
                        let row = &self.chol[i * d..i * d + i + 1];
                        values.push(row.iter().zip(&eps).map(|(l, e)| l * e).sum());
                    }
                }
                ScenarioKind::GumbelCopula => {
                    let alpha = 1.0 / self.param;
                    let v = positive_stable(alpha, rng);
                    for _ in 0..d {
                        let y = libm::pow(unit_exponential(rng) / v, alpha);
                        values.push(normal_score_of_exp_neg(y));
                    }
                }
                ScenarioKind::NonSimplifiedVine => {
                    self.vine_sample_into(&mut u, rng);
                    values.extend(u.iter().map(|&p| norm_quantile_unchecked(p)));
                }
            }
        }
        DataMatrix::from_row_major(n, d, values).expect("sizes agree")
    }

    /// Inverse Rosenblatt transform through the D-vine.
    fn vine_sample_into<R: RngCore + ?Sized>(&self, u: &mut [f64], rng: &mut R) {
        let d = self.d;
        // fwd[m][i] = F(u_i | u_{i+1..i+m}), bwd[m][i] = F(u_{i+m} | u_{i..i+m-1})
        let mut fwd: Vec<Vec<f64>> = (0..d).map(|m| alloc::vec![0.0; d - m]).collect();
        let mut bwd: Vec<Vec<f64>> = (0..d).map(|m| alloc::vec![0.0; d - m]).collect();
        for k in 0..d {
            let mut v = uniform_open(rng);
            // peel conditioning variables from the farthest (u_0) to the nearest
            for m in (1..=k).rev() {
                let i = k - m;
                let rho = hyperplane_correlation(&u[i + 1..k]);
                v = gaussian_h_inverse(v, fwd[m - 1][i], rho);
            }
            u[k] = v;
            fwd[0][k] = v;
            bwd[0][k] = v;
            for m in 1..=k {
                let i = k - m;
                let rho = hyperplane_correlation(&u[i + 1..k]);
                let (a, b) = (fwd[m - 1][i], bwd[m - 1][i + 1]);
                fwd[m][i] = gaussian_h(a, b, rho);
                bwd[m][i] = gaussian_h(b, a, rho);
            }
        }
    }
}

/// Positive stable variate with Laplace transform `exp(-t^alpha)` (Kanter's
/// representation of the Chambers-Mallows-Stuck construction).
pub fn positive_stable<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u = PI * uniform_open(rng);
    let e = unit_exponential(rng);
    let a = libm::sin(alpha * u) / libm::pow(libm::sin(u), 1.0 / alpha);
    let b = libm::pow(libm::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
    a * b
}

/// `Phi^{-1}(exp(-y))`, accurate when `exp(-y)` is close to 1.
fn normal_score_of_exp_neg(y: f64) -> f64 {
    let u = libm::exp(-y);
    if u > 0.5 {
        -norm_quantile_unchecked(clamp_open(-libm::expm1(-y)))
    } else {
        norm_quantile_unchecked(clamp_open(u))
    }
}
