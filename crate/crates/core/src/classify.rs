//! Two-class Bayes classification from class densities and ROC summaries.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::total_order;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Positive class.
    G,
    H,
}

/// FPR levels at which true positive rates are reported.
pub const FPR_TARGETS: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub value: f64,
    /// Both weighted densities vanished and the prior was returned.
    pub prior_fallback: bool,
}

/// Posterior probability of class G, `pi_G f_G / (pi_G f_G + pi_H f_H)`.
pub fn bayes_posterior(f_g: f64, f_h: f64, pi_g: f64, pi_h: f64) -> Result<Posterior> {
    for (what, v) in [("class density", f_g), ("class density", f_h)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain { what, value: v });
        }
    }
    for p in [pi_g, pi_h] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain { what: "prior", value: p });
        }
    }
    if ((pi_g + pi_h) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain { what: "prior sum", value: pi_g + pi_h });
    }
    let (wg, wh) = (pi_g * f_g, pi_h * f_h);
    if wg + wh == 0.0 {
        return Ok(Posterior { value: pi_g, prior_fallback: true });
    }
    Ok(Posterior { value: wg / (wg + wh), prior_fallback: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Rows with posterior strictly above the threshold are called G.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocSummary {
    /// Ordered by decreasing threshold, hence nondecreasing in both rates.
    pub points: Vec<RocPoint>,
    /// `(target, tpr)` for each entry of [`FPR_TARGETS`].
    pub tpr_at_fpr: Vec<(f64, f64)>,
    pub loacc: f64,
    pub highacc: f64,
}

/// Sweeps the threshold over every distinct posterior value plus 0 and 1.
/// TPR at a target FPR is read at the largest achieved FPR not above it.
pub fn roc_and_summary(posteriors: &[f64], labels: &[Label]) -> Result<RocSummary> {
    if posteriors.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: posteriors.len() });
    }
    if let Some(&p) = posteriors.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain { what: "posterior", value: p });
    }
    let pos = labels.iter().filter(|&&l| l == Label::G).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidModel("both classes are needed for a ROC curve"));
    }

    let mut order: Vec<usize> = (0..posteriors.len()).collect();
    order.sort_by(|&a, &b| total_order(&posteriors[b], &posteriors[a]));
    let mut thresholds: Vec<f64> = posteriors.iter().copied().chain([0.0, 1.0]).collect();
    thresholds.sort_by(|a, b| total_order(b, a));
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len());
    let (mut tp, mut fp, mut k) = (0usize, 0usize, 0usize);
    for &t in &thresholds {
        while k < order.len() && posteriors[order[k]] > t {
            match labels[order[k]] {
                Label::G => tp += 1,
                Label::H => fp += 1,
            }
            k += 1;
        }
        points.push(RocPoint { threshold: t, fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 });
    }

    let tpr_at_fpr: Vec<(f64, f64)> = FPR_TARGETS
        .iter()
        .map(|&target| {
            let tpr = points.iter().filter(|p| p.fpr <= target).map(|p| p.tpr).fold(0.0, f64::max);
            (target, tpr)
        })
        .collect();
    let loacc = tpr_at_fpr[..3].iter().map(|p| p.1).sum::<f64>() / 3.0;
    let highacc = tpr_at_fpr[3..].iter().map(|p| p.1).sum::<f64>() / 2.0;
    Ok(RocSummary { points, tpr_at_fpr, loacc, highacc })
}

/// Share of rows whose call at threshold `alpha` (G when posterior > alpha)
/// matches the label.
pub fn accuracy(posteriors: &[f64], labels: &[Label], alpha: f64) -> f64 {
    let hits = posteriors
        .iter()
        .zip(labels)
        .filter(|(p, l)| (**p > alpha) == (**l == Label::G))
        .count();
    hits as f64 / labels.len().max(1) as f64
}
