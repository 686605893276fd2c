//! Replicated simulation benchmark: vine estimator against the product-kernel
//! baseline on a known target.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vinekde_core::bench::{iae_on_points, moods_median_test, ProductKde};
use vinekde_core::numerics::median;
use vinekde_core::rng::mix_seed;
use vinekde_core::{fit_vine, FitOptions, Scenario, ScenarioKind};

use crate::error::{AppError, AppResult};

pub const DEFAULT_TAU: f64 = 0.4;
pub const DEFAULT_MC_SAMPLES: usize = 1000;
pub const DEFAULT_REPLICATES: usize = 20;

pub fn scenario_name(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::GaussianCopula => "gauss",
        ScenarioKind::GumbelCopula => "gumbel",
        ScenarioKind::NonSimplifiedVine => "nonsimplified",
    }
}

pub fn parse_scenario(name: &str) -> Option<ScenarioKind> {
    match name {
        "gauss" => Some(ScenarioKind::GaussianCopula),
        "gumbel" => Some(ScenarioKind::GumbelCopula),
        "nonsimplified" => Some(ScenarioKind::NonSimplifiedVine),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub d: usize,
    pub tau: f64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, d: usize) -> Self {
        Self { kind, d, tau: DEFAULT_TAU }
    }

    pub fn target(&self) -> AppResult<Scenario> {
        Scenario::new(self.kind, self.d, self.tau)
            .map_err(|e| AppError::Validation(format!("scenario {}: {e}", scenario_name(self.kind))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub iae_vine: Option<f64>,
    pub iae_mvkde: Option<f64>,
    pub error: Option<String>,
}

/// Result of [`run_scenario`]. The `iae_*` arrays hold the completed
/// replicates in replicate order; failed replicates only appear in
/// `replicate_records`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub scenario: &'static str,
    pub d: usize,
    pub tau: f64,
    pub n: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub replicates: usize,
    pub completed: usize,
    pub iae_vine: Vec<f64>,
    pub iae_mvkde: Vec<f64>,
    pub median_vine: Option<f64>,
    pub median_mvkde: Option<f64>,
    pub mood_statistic: Option<f64>,
    pub mood_p_value: Option<f64>,
    pub replicate_records: Vec<ReplicateRecord>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn run_replicate(target: &Scenario, n: usize, mc_samples: usize, seed: u64) -> vinekde_core::Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = target.sample(n, &mut rng);
    let vine = fit_vine(&data, &FitOptions::default())?;
    let baseline = ProductKde::fit(&data)?;
    let points = target.sample(mc_samples, &mut rng);
    let iae_vine = iae_on_points(|x| vine.density(x), target, &points)?;
    let iae_mvkde = iae_on_points(|x| baseline.density(x), target, &points)?;
    Ok((iae_vine, iae_mvkde))
}

/// Runs `replicates` independent replicates. Replicate `r` draws everything
/// from a generator seeded with `mix_seed(seed, r)`, so the report does not
/// depend on how replicates are scheduled across threads.
pub fn run_scenario(
    spec: &ScenarioSpec,
    n: usize,
    replicates: usize,
    mc_samples: usize,
    seed: u64,
) -> AppResult<BenchmarkReport> {
    if replicates == 0 {
        return Err(AppError::Validation("replicate count must be at least 1".into()));
    }
    if n < vinekde_core::vinefit::MIN_OBSERVATIONS {
        return Err(AppError::Validation(format!(
            "sample size must be at least {}",
            vinekde_core::vinefit::MIN_OBSERVATIONS
        )));
    }
    if mc_samples == 0 {
        return Err(AppError::Validation("Monte Carlo sample count must be at least 1".into()));
    }
    let target = spec.target()?;
    let records: Vec<ReplicateRecord> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = mix_seed(seed, r as u64);
            match run_replicate(&target, n, mc_samples, s) {
                Ok((v, b)) => ReplicateRecord { index: r, seed: s, iae_vine: Some(v), iae_mvkde: Some(b), error: None },
                Err(e) => ReplicateRecord { index: r, seed: s, iae_vine: None, iae_mvkde: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let iae_vine: Vec<f64> = records.iter().filter_map(|r| r.iae_vine).collect();
    let iae_mvkde: Vec<f64> = records.iter().filter_map(|r| r.iae_mvkde).collect();
    let nonempty = |v: &[f64]| (!v.is_empty()).then(|| median(v));
    let mood = moods_median_test(&iae_vine, &iae_mvkde).ok();
    Ok(BenchmarkReport {
        scenario: scenario_name(spec.kind),
        d: spec.d,
        tau: spec.tau,
        n,
        mc_samples,
        seed,
        replicates,
        completed: iae_vine.len(),
        median_vine: nonempty(&iae_vine),
        median_mvkde: nonempty(&iae_mvkde),
        mood_statistic: mood.map(|m| m.statistic),
        mood_p_value: mood.map(|m| m.p_value),
        iae_vine,
        iae_mvkde,
        replicate_records: records,
    })
}
