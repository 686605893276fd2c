//! JSON persistence of fitted vine density models.
//!
//! Floats go through shortest round-trip formatting on output and exact
//! parsing on input, so a loaded model evaluates bit-identically to the one
//! that was saved.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vinekde_core::{Edge, FitMeta, HForm, MarginalEstimate, PairCopulaEstimate, RVineStructure, VineDensityModel};

use crate::error::{AppError, AppResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    d: usize,
    n: usize,
    structure: Vec<EdgeJson>,
    margins: Vec<MarginJson>,
    pair_copulas: Vec<PairJson>,
    meta: MetaJson,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    /// 0-based tree level.
    tree: usize,
    conditioned: [usize; 2],
    conditioning: Vec<usize>,
    parents: Option<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginJson {
    sample: Vec<f64>,
    bandwidth: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairJson {
    /// `[tree, index within tree]`.
    edge: [usize; 2],
    is_independence: bool,
    z_sample: Vec<[f64; 2]>,
    bandwidth: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaJson {
    margin_bandwidth_multiplier: f64,
    independence_level: Option<f64>,
    h_form: String,
    h_fallbacks: usize,
    degenerate_pairs: usize,
}

fn h_form_name(form: HForm) -> &'static str {
    match form {
        HForm::Normalized => "normalized",
        HForm::Literal => "literal",
    }
}

pub fn parse_h_form(name: &str) -> Option<HForm> {
    match name {
        "normalized" => Some(HForm::Normalized),
        "literal" => Some(HForm::Literal),
        _ => None,
    }
}

pub fn to_json(model: &VineDensityModel) -> String {
    let meta = model.meta();
    let mut structure = Vec::new();
    let mut pair_copulas = Vec::new();
    for (level, (edges, pcs)) in model.structure().trees().iter().zip(model.pair_copulas()).enumerate() {
        for (i, (e, pc)) in edges.iter().zip(pcs).enumerate() {
            structure.push(EdgeJson {
                tree: level,
                conditioned: e.conditioned,
                conditioning: e.conditioning.clone(),
                parents: e.parents,
            });
            pair_copulas.push(PairJson {
                edge: [level, i],
                is_independence: pc.is_independence(),
                z_sample: pc.z_sample().iter().map(|&(a, b)| [a, b]).collect(),
                bandwidth: pc.bandwidth(),
            });
        }
    }
    let file = ModelFile {
        version: FORMAT_VERSION,
        d: model.dim(),
        n: meta.n,
        structure,
        margins: model
            .margins()
            .iter()
            .map(|m| MarginJson { sample: m.sample().to_vec(), bandwidth: m.bandwidth() })
            .collect(),
        pair_copulas,
        meta: MetaJson {
            margin_bandwidth_multiplier: meta.margin_bandwidth_multiplier,
            independence_level: meta.independence_level,
            h_form: h_form_name(meta.h_form).to_owned(),
            h_fallbacks: meta.h_fallbacks,
            degenerate_pairs: meta.degenerate_pairs,
        },
    };
    let mut s = serde_json::to_string(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str, path: &Path) -> AppResult<VineDensityModel> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| AppError::schema(path, format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let bad = |msg: String| AppError::schema(path, msg);
    if file.version != FORMAT_VERSION {
        return Err(bad(format!("unsupported model version {} (expected {FORMAT_VERSION})", file.version)));
    }
    let d = file.d;
    if d < 2 {
        return Err(bad(format!("dimension {d} is below 2")));
    }
    let mut trees: Vec<Vec<Edge>> = vec![Vec::new(); d - 1];
    for (k, e) in file.structure.into_iter().enumerate() {
        let level = trees.get_mut(e.tree).ok_or_else(|| bad(format!("structure[{k}]: tree {} out of range", e.tree)))?;
        level.push(Edge { conditioned: e.conditioned, conditioning: e.conditioning, parents: e.parents });
    }
    let structure = RVineStructure::from_trees_unchecked(d, trees);
    structure.validate().map_err(|v| bad(format!("structure: {v}")))?;

    let mut pcs: Vec<Vec<Option<PairCopulaEstimate>>> =
        structure.trees().iter().map(|t| vec![None; t.len()]).collect();
    for (k, p) in file.pair_copulas.into_iter().enumerate() {
        let [level, i] = p.edge;
        let slot = pcs
            .get_mut(level)
            .and_then(|t| t.get_mut(i))
            .ok_or_else(|| bad(format!("pair_copulas[{k}]: edge {:?} not in structure", p.edge)))?;
        if slot.is_some() {
            return Err(bad(format!("pair_copulas[{k}]: duplicate edge {:?}", p.edge)));
        }
        *slot = Some(if p.is_independence {
            PairCopulaEstimate::independence()
        } else {
            let z = p.z_sample.into_iter().map(|[a, b]| (a, b)).collect();
            PairCopulaEstimate::from_parts(z, p.bandwidth).map_err(|e| bad(format!("pair_copulas[{k}]: {e}")))?
        });
    }
    let pair_copulas = pcs
        .into_iter()
        .enumerate()
        .map(|(level, t)| {
            t.into_iter()
                .enumerate()
                .map(|(i, p)| p.ok_or_else(|| bad(format!("missing pair-copula for edge [{level}, {i}]"))))
                .collect::<AppResult<Vec<_>>>()
        })
        .collect::<AppResult<Vec<_>>>()?;

    let margins = file
        .margins
        .into_iter()
        .enumerate()
        .map(|(j, m)| MarginalEstimate::from_parts(m.sample, m.bandwidth).map_err(|e| bad(format!("margins[{j}]: {e}"))))
        .collect::<AppResult<Vec<_>>>()?;
    let h_form = parse_h_form(&file.meta.h_form).ok_or_else(|| bad(format!("unknown h_form {:?}", file.meta.h_form)))?;
    let meta = FitMeta {
        n: file.n,
        margin_bandwidth_multiplier: file.meta.margin_bandwidth_multiplier,
        independence_level: file.meta.independence_level,
        h_form,
        h_fallbacks: file.meta.h_fallbacks,
        degenerate_pairs: file.meta.degenerate_pairs,
    };
    VineDensityModel::from_parts(structure, margins, pair_copulas, meta).map_err(|e| bad(e.to_string()))
}

pub fn save(model: &VineDensityModel, path: &Path) -> AppResult<()> {
    std::fs::write(path, to_json(model)).map_err(|e| AppError::io(path, e))
}

pub fn load(path: &Path) -> AppResult<VineDensityModel> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use vinekde_core::{fit_vine, FitOptions, Scenario, ScenarioKind};

    fn fitted(level: Option<f64>) -> (VineDensityModel, vinekde_core::DataMatrix) {
        let s = Scenario::new(ScenarioKind::GumbelCopula, 4, 0.4).unwrap();
        let x = s.sample(300, &mut ChaCha8Rng::seed_from_u64(9));
        let opts = FitOptions { independence_level: level, ..FitOptions::default() };
        (fit_vine(&x, &opts).unwrap(), x)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for level in [None, Some(0.05)] {
            let (model, x) = fitted(level);
            let text = to_json(&model);
            let back = from_json(&text, Path::new("m.json")).unwrap();
            assert_eq!(back, model);
            for row in x.rows() {
                assert_eq!(back.density(row).unwrap().to_bits(), model.density(row).unwrap().to_bits());
            }
            assert_eq!(to_json(&back), text);
        }
    }

    #[test]
    fn rejects_wrong_version_and_garbage() {
        let (model, _) = fitted(None);
        let text = to_json(&model).replacen("\"version\":1", "\"version\":2", 1);
        let err = from_json(&text, Path::new("m.json")).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
        let err = from_json("{\"version\": 1,", Path::new("m.json")).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn rejects_inconsistent_structure() {
        let (model, _) = fitted(None);
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&model)).unwrap();
        v["structure"][0]["conditioned"] = serde_json::json!([0, 0]);
        assert!(matches!(from_json(&v.to_string(), Path::new("m.json")), Err(AppError::Schema { .. })));
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&model)).unwrap();
        v["pair_copulas"].as_array_mut().unwrap().pop();
        assert!(matches!(from_json(&v.to_string(), Path::new("m.json")), Err(AppError::Schema { .. })));
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&model)).unwrap();
        v["margins"][0]["bandwidth"] = serde_json::json!(-1.0);
        assert!(matches!(from_json(&v.to_string(), Path::new("m.json")), Err(AppError::Schema { .. })));
    }
}
