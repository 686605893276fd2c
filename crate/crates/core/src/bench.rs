//! Evaluation tools: the product-kernel baseline, integrated absolute error by
//! importance sampling and Mood's median test.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::numerics::{chi2_1_sf, kernel_eval, median, normal_reference_constant, std_dev, total_order};
use crate::targets::Scenario;

/// Classical multivariate kernel density estimator with a product biweight
/// kernel and per-coordinate normal-reference bandwidths
/// `b_l = C_K sd_l n^{-1/(d+4)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductKde {
    /// Rows sorted by their first coordinate.
    data: DataMatrix,
    bandwidths: Vec<f64>,
}

impl ProductKde {
    pub fn fit(data: &DataMatrix) -> Result<Self> {
        let (n, d) = (data.nrows(), data.ncols());
        if n < 10 {
            return Err(Error::InsufficientData { needed: 10, got: n });
        }
        let rate = libm::pow(n as f64, -1.0 / (d as f64 + 4.0));
        let mut bandwidths = Vec::with_capacity(d);
        for j in 0..d {
            let col = data.column(j);
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "observation" });
            }
            let sd = std_dev(&col);
            if sd.is_nan() || sd <= 0.0 {
                return Err(Error::Degenerate { column: Some(j) });
            }
            bandwidths.push(normal_reference_constant() * sd * rate);
        }
        Self::from_parts(data, bandwidths)
    }

    pub fn from_parts(data: &DataMatrix, bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.len() != data.ncols() {
            return Err(Error::DimensionMismatch { expected: data.ncols(), got: bandwidths.len() });
        }
        if let Some(&b) = bandwidths.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Domain { what: "bandwidth", value: b });
        }
        if data.nrows() == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let mut order: Vec<usize> = (0..data.nrows()).collect();
        order.sort_by(|&a, &b| total_order(&data.row(a)[0], &data.row(b)[0]));
        Ok(Self { data: data.select_rows(&order), bandwidths })
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let n = self.data.nrows();
        let b0 = self.bandwidths[0];
        // only rows with |x_0 - X_0| < b_0 contribute
        let lo = partition(n, |i| self.data.row(i)[0] <= x[0] - b0);
        let hi = partition(n, |i| self.data.row(i)[0] < x[0] + b0);
        let mut sum = 0.0;
        for i in lo..hi {
            let row = self.data.row(i);
            let mut prod = 1.0;
            for ((xv, rv), b) in x.iter().zip(row).zip(&self.bandwidths) {
                prod *= kernel_eval((xv - rv) / b);
                if prod == 0.0 {
                    break;
                }
            }
            sum += prod;
        }
        let norm: f64 = self.bandwidths.iter().product();
        Ok(sum / (n as f64 * norm))
    }
}

/// First index in `0..n` for which `pred` is false, assuming `pred` is monotone.
fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `(1/N) sum |estimate(X_i) / truth(X_i) - 1|` over the given points, which
/// should be draws from `truth`.
pub fn iae_on_points<F>(mut estimate: F, truth: &Scenario, points: &DataMatrix) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if points.nrows() == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut acc = 0.0;
    for x in points.rows() {
        let f = truth.density(x);
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Domain { what: "true density", value: f });
        }
        let g = estimate(x)?;
        if !g.is_finite() {
            return Err(Error::NonFinite { what: "estimated density" });
        }
        acc += (g / f - 1.0).abs();
    }
    Ok(acc / points.nrows() as f64)
}

/// Integrated absolute error of `estimate` against `truth`, estimated from
/// `mc_samples` draws of the truth.
pub fn iae_importance_sampling<F, R>(estimate: F, truth: &Scenario, mc_samples: usize, rng: &mut R) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
    R: RngCore + ?Sized,
{
    if mc_samples == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let points = truth.sample(mc_samples, rng);
    iae_on_points(estimate, truth, &points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoodTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Mood's median test: Pearson chi-square (1 df, no continuity correction) on
/// the 2x2 table of counts above the pooled median. Values equal to the
/// pooled median count as not above.
pub fn moods_median_test(a: &[f64], b: &[f64]) -> Result<MoodTest> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: s.len() });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "sample value" });
        }
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let m = median(&pooled);
    let above = |s: &[f64]| s.iter().filter(|&&v| v > m).count() as f64;
    let (a1, b1) = (above(a), above(b));
    let (a0, b0) = (a.len() as f64 - a1, b.len() as f64 - b1);
    let total = pooled.len() as f64;
    let margins = (a1 + a0) * (b1 + b0) * (a1 + b1) * (a0 + b0);
    if margins == 0.0 {
        return Ok(MoodTest { statistic: 0.0, p_value: 1.0 });
    }
    let cross = a1 * b0 - a0 * b1;
    let statistic = total * cross * cross / margins;
    Ok(MoodTest { statistic, p_value: chi2_1_sf(statistic) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::std_normal;
    use crate::targets::ScenarioKind;
    use alloc::vec;
    use proptest::prelude::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_bump() {
        let data = DataMatrix::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        let kde = ProductKde::from_parts(&data, vec![1.0; 3]).unwrap();
        assert_eq!(kde.density(&[0.0; 3]).unwrap(), libm::pow(kernel_eval(0.0), 3.0));
        assert_eq!(kde.density(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn windowed_sum_matches_full_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<[f64; 2]> = (0..300).map(|_| [std_normal(&mut rng), std_normal(&mut rng)]).collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let kde = ProductKde::fit(&data).unwrap();
        let b = kde.bandwidths().to_vec();
        for x in [[0.0, 0.0], [1.3, -0.2], [-2.5, 0.7], [9.0, 0.0]] {
            let full: f64 = rows
                .iter()
                .map(|r| kernel_eval((x[0] - r[0]) / b[0]) * kernel_eval((x[1] - r[1]) / b[1]))
                .sum::<f64>()
                / (300.0 * b[0] * b[1]);
            assert!((kde.density(&x).unwrap() - full).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_density_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<[f64; 2]> = (0..20_000).map(|_| [std_normal(&mut rng), std_normal(&mut rng)]).collect();
        let kde = ProductKde::fit(&DataMatrix::from_rows(&rows).unwrap()).unwrap();
        let f = kde.density(&[0.0, 0.0]).unwrap();
        assert!((f - 0.1592).abs() < 0.016, "{f}");
    }

    #[test]
    fn bandwidth_power_law() {
        // same sample repeated 64 = 2^(2+4) times keeps sd (up to the n-1
        // divisor) and shrinks b by half
        let base: Vec<[f64; 2]> = (0..40).map(|i| [i as f64, ((i * 7) % 40) as f64]).collect();
        let big: Vec<[f64; 2]> = (0..64).flat_map(|_| base.iter().copied()).collect();
        let small = ProductKde::fit(&DataMatrix::from_rows(&base).unwrap()).unwrap();
        let large = ProductKde::fit(&DataMatrix::from_rows(&big).unwrap()).unwrap();
        let sd_ratio = libm::sqrt((40.0 / 39.0) * (2559.0 / 2560.0));
        for j in 0..2 {
            let r = large.bandwidths()[j] / small.bandwidths()[j] * sd_ratio;
            assert!((r - 0.5).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn degenerate_and_small_inputs() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 1.0]).collect();
        assert!(matches!(
            ProductKde::fit(&DataMatrix::from_rows(&rows).unwrap()),
            Err(Error::Degenerate { column: Some(1) })
        ));
        let rows: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, -(i as f64)]).collect();
        assert!(ProductKde::fit(&DataMatrix::from_rows(&rows).unwrap()).is_err());
    }

    #[test]
    fn baseline_mass_by_importance_sampling() {
        let truth = Scenario::new(ScenarioKind::GaussianCopula, 3, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = truth.sample(1000, &mut rng);
        let kde = ProductKde::fit(&data).unwrap();
        let pts = truth.sample(20_000, &mut rng);
        let mass = pts.rows().map(|x| kde.density(x).unwrap() / truth.density(x)).sum::<f64>() / 20_000.0;
        assert!((mass - 1.0).abs() < 0.05, "{mass}");
    }

    #[test]
    fn iae_exact_for_scaled_truth() {
        let truth = Scenario::new(ScenarioKind::GumbelCopula, 3, 0.4).unwrap();
        for seed in [0, 1, 99] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = truth.sample(500, &mut rng);
            let f = |x: &[f64]| Ok(truth.density(x));
            assert_eq!(iae_on_points(f, &truth, &pts).unwrap(), 0.0);
            let f = |x: &[f64]| Ok(2.0 * truth.density(x));
            assert_eq!(iae_on_points(f, &truth, &pts).unwrap(), 1.0);
            let f = |x: &[f64]| Ok(0.5 * truth.density(x));
            assert_eq!(iae_on_points(f, &truth, &pts).unwrap(), 0.5);
            let f = |_: &[f64]| Ok(0.0);
            assert_eq!(iae_on_points(f, &truth, &pts).unwrap(), 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = |x: &[f64]| Ok(2.0 * truth.density(x));
            assert_eq!(iae_importance_sampling(f, &truth, 100, &mut rng).unwrap(), 1.0);
        }
    }

    #[test]
    fn iae_rejects_bad_estimates() {
        let truth = Scenario::new(ScenarioKind::GaussianCopula, 2, 0.4).unwrap();
        let pts = DataMatrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(iae_on_points(|_| Ok(f64::NAN), &truth, &pts).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(iae_importance_sampling(|_| Ok(1.0), &truth, 0, &mut rng).is_err());
    }

    #[test]
    fn mood_examples() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let t = moods_median_test(&a, &a).unwrap();
        assert_eq!((t.statistic, t.p_value), (0.0, 1.0));
        let t = moods_median_test(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(t.statistic, 8.0);
        assert!((t.p_value - 0.004678).abs() < 1e-6, "{}", t.p_value);
        let t = moods_median_test(&[3.0; 4], &[3.0; 5]).unwrap();
        assert_eq!((t.statistic, t.p_value), (0.0, 1.0));
        assert!(moods_median_test(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mood_pooled_median_ties_not_above() {
        // pooled median 3 is attained; 3 counts as not above
        let t = moods_median_test(&[1.0, 3.0, 3.0], &[3.0, 5.0, 6.0]).unwrap();
        // table: a above 0 of 3, b above 2 of 3
        let expected = 6.0 * (0.0 * 1.0 - 3.0 * 2.0f64).powi(2) / (3.0 * 3.0 * 2.0 * 4.0);
        assert!((t.statistic - expected).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mood_is_symmetric(
            a in proptest::collection::vec(-5.0f64..5.0, 2..30),
            b in proptest::collection::vec(-5.0f64..5.0, 2..30),
        ) {
            let x = moods_median_test(&a, &b).unwrap();
            let y = moods_median_test(&b, &a).unwrap();
            prop_assert_eq!(x, y);
            prop_assert!(x.statistic >= 0.0 && (0.0..=1.0).contains(&x.p_value));
        }
    }
}
