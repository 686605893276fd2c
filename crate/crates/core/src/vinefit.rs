//! Sequential estimation of simplified vine densities and evaluation of the
//! resulting joint density estimate.
//!
//! Fitting walks the trees in order. Every edge gets a pair-copula estimate
//! from its two input pseudo-observation columns, and both h-function
//! directions are applied to produce the inputs of the next tree. Evaluation
//! replays the same pipeline on a single point.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::marginal::MarginalEstimate;
use crate::matrix::DataMatrix;
use crate::numerics::{kendalls_tau, norm_quantile_unchecked};
use crate::paircop::{HDirection, HForm, PairCopulaEstimate};
use crate::structure::{
    candidate_edges, independence_test, max_spanning_tree, Dependence, Edge, RVineStructure,
};

/// Minimum sample size accepted by [`fit_vine`].
pub const MIN_OBSERVATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Factor applied to every normal-reference marginal bandwidth.
    pub margin_bandwidth_multiplier: f64,
    /// Level of the tau-based independence test; `None` disables it.
    pub independence_level: Option<f64>,
    pub h_form: HForm,
    /// Fixed structure; when `None` it is selected tree by tree.
    pub structure: Option<RVineStructure>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            margin_bandwidth_multiplier: 1.0,
            independence_level: None,
            h_form: HForm::Normalized,
            structure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitMeta {
    pub n: usize,
    pub margin_bandwidth_multiplier: f64,
    pub independence_level: Option<f64>,
    pub h_form: HForm,
    /// h-function evaluations during fitting that fell back to independence.
    pub h_fallbacks: usize,
    /// Edges whose inputs had no spread and were set to independence.
    pub degenerate_pairs: usize,
}

impl FitMeta {
    /// Pseudo-observations are clamped to `[1/(n+1), n/(n+1)]`.
    pub fn clamp_lower(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    pub fn clamp(&self, u: f64) -> f64 {
        let lo = self.clamp_lower();
        u.clamp(lo, 1.0 - lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VineDensityModel {
    structure: RVineStructure,
    margins: Vec<MarginalEstimate>,
    pair_copulas: Vec<Vec<PairCopulaEstimate>>,
    meta: FitMeta,
}

/// Position in a parent's conditioned pair of the variable handed to a child.
fn side_of(parent: &Edge, var: usize) -> Result<usize> {
    parent
        .conditioned
        .iter()
        .position(|&v| v == var)
        .ok_or(Error::InvalidModel("edge inputs not produced by its parents"))
}

/// Per-edge input indices: `(node, side)` for each of the two arguments.
/// At level 0 the node is the variable and the side is unused.
fn edge_inputs(trees: &[Vec<Edge>], level: usize, edge: &Edge) -> Result<[(usize, usize); 2]> {
    match edge.parents {
        None => Ok([(edge.conditioned[0], 0), (edge.conditioned[1], 0)]),
        Some([a, b]) => {
            let prev = &trees[level - 1];
            Ok([(a, side_of(&prev[a], edge.conditioned[0])?), (b, side_of(&prev[b], edge.conditioned[1])?)])
        }
    }
}

/// Pseudo-observation columns feeding the nodes of one tree.
enum Layer<'a, T> {
    Variables(&'a [T]),
    Edges(&'a [[T; 2]]),
}

impl<'a, T> Layer<'a, T> {
    fn get(&self, (node, side): (usize, usize)) -> &'a T {
        match self {
            Layer::Variables(v) => &v[node],
            Layer::Edges(e) => &e[node][side],
        }
    }
}

fn pick_edge_weights(
    level_edges: Vec<Edge>,
    trees: &[Vec<Edge>],
    level: usize,
    layer: &Layer<'_, Vec<f64>>,
) -> Result<Vec<(Edge, f64)>> {
    let mut out = Vec::with_capacity(level_edges.len());
    let mut pairs = Vec::new();
    for e in level_edges {
        let [ia, ib] = edge_inputs(trees, level, &e)?;
        let (x, y) = (layer.get(ia), layer.get(ib));
        pairs.clear();
        pairs.extend(x.iter().copied().zip(y.iter().copied()));
        let tau = kendalls_tau(&pairs)?;
        out.push((e, tau.abs()));
    }
    Ok(out)
}

/// Fits the vine density estimator to an `n x d` sample.
pub fn fit_vine(data: &DataMatrix, options: &FitOptions) -> Result<VineDensityModel> {
    let (n, d) = (data.nrows(), data.ncols());
    if d < 2 {
        return Err(Error::InsufficientData { needed: 2, got: d });
    }
    if n < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData { needed: MIN_OBSERVATIONS, got: n });
    }
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "data" });
    }
    if let Some(s) = &options.structure {
        if s.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
        }
        s.validate().map_err(Error::InvalidStructure)?;
    }

    let mut meta = FitMeta {
        n,
        margin_bandwidth_multiplier: options.margin_bandwidth_multiplier,
        independence_level: options.independence_level,
        h_form: options.h_form,
        h_fallbacks: 0,
        degenerate_pairs: 0,
    };

    let mut margins = Vec::with_capacity(d);
    let mut u0: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let col = data.column(j);
        let m = MarginalEstimate::fit(&col, options.margin_bandwidth_multiplier).map_err(|e| match e {
            Error::Degenerate { .. } => Error::Degenerate { column: Some(j) },
            other => other,
        })?;
        u0.push(col.iter().map(|&x| meta.clamp(m.cdf(x))).collect());
        margins.push(m);
    }

    let mut trees: Vec<Vec<Edge>> = Vec::with_capacity(d - 1);
    let mut pair_copulas: Vec<Vec<PairCopulaEstimate>> = Vec::with_capacity(d - 1);
    let mut outputs: Vec<[Vec<f64>; 2]> = Vec::new();

    for level in 0..d - 1 {
        let layer: Layer<'_, Vec<f64>> =
            if level == 0 { Layer::Variables(&u0) } else { Layer::Edges(&outputs) };

        let (edges, taus): (Vec<Edge>, Vec<Option<f64>>) = match &options.structure {
            Some(s) => (s.trees()[level].clone(), alloc::vec![None; s.trees()[level].len()]),
            None => {
                let cands = candidate_edges(d, trees.last().map(Vec::as_slice));
                let weighted = pick_edge_weights(cands, &trees, level, &layer)?;
                let chosen = max_spanning_tree(d - level, weighted);
                if chosen.len() != d - level - 1 {
                    return Err(Error::InvalidModel("no spanning tree among admissible edges"));
                }
                chosen.into_iter().map(|(e, w)| (e, Some(w))).unzip()
            }
        };

        let mut level_copulas = Vec::with_capacity(edges.len());
        let mut level_outputs = Vec::with_capacity(edges.len());
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for (edge, tau) in edges.iter().zip(taus) {
            let [ia, ib] = edge_inputs(&trees, level, edge)?;
            let (x, y) = (layer.get(ia), layer.get(ib));
            pairs.clear();
            pairs.extend(x.iter().copied().zip(y.iter().copied()));

            let independent = match options.independence_level {
                Some(alpha) => {
                    let t = match tau {
                        Some(t) => t,
                        None => kendalls_tau(&pairs)?,
                    };
                    independence_test(t, n, alpha)? == Dependence::Independent
                }
                None => false,
            };
            let pc = if independent {
                PairCopulaEstimate::independence()
            } else {
                match PairCopulaEstimate::fit(&pairs) {
                    Ok(pc) => pc,
                    Err(Error::Degenerate { .. }) => {
                        meta.degenerate_pairs += 1;
                        PairCopulaEstimate::independence()
                    }
                    Err(e) => return Err(e),
                }
            };

            let mut first = Vec::with_capacity(n);
            let mut second = Vec::with_capacity(n);
            for &(a, b) in &pairs {
                let (za, zb) = (norm_quantile_unchecked(a), norm_quantile_unchecked(b));
                let h1 = pc.h_z(a, b, za, zb, HDirection::FirstGivenSecond, options.h_form);
                let h2 = pc.h_z(a, b, za, zb, HDirection::SecondGivenFirst, options.h_form);
                meta.h_fallbacks += h1.fallback as usize + h2.fallback as usize;
                first.push(meta.clamp(h1.value));
                second.push(meta.clamp(h2.value));
            }
            let lo = meta.clamp_lower();
            debug_assert!(first.iter().chain(&second).all(|&u| u >= lo && u <= 1.0 - lo));
            level_copulas.push(pc);
            level_outputs.push([first, second]);
        }
        outputs = level_outputs;
        trees.push(edges);
        pair_copulas.push(level_copulas);
    }

    let structure = RVineStructure::from_trees_unchecked(d, trees);
    structure.validate().map_err(Error::InvalidStructure)?;
    Ok(VineDensityModel { structure, margins, pair_copulas, meta })
}

impl VineDensityModel {
    /// Assembles a model from stored parts, checking their consistency.
    pub fn from_parts(
        structure: RVineStructure,
        margins: Vec<MarginalEstimate>,
        pair_copulas: Vec<Vec<PairCopulaEstimate>>,
        meta: FitMeta,
    ) -> Result<Self> {
        structure.validate().map_err(Error::InvalidStructure)?;
        let d = structure.dim();
        if margins.len() != d {
            return Err(Error::InvalidModel("margin count does not match dimension"));
        }
        if pair_copulas.len() != structure.trees().len()
            || pair_copulas.iter().zip(structure.trees()).any(|(p, t)| p.len() != t.len())
        {
            return Err(Error::InvalidModel("pair-copula count does not match structure"));
        }
        if meta.n < 1 {
            return Err(Error::InvalidModel("sample size must be positive"));
        }
        for (m, level) in structure.trees().iter().enumerate() {
            for e in level {
                edge_inputs(structure.trees(), m, e)?;
            }
        }
        Ok(Self { structure, margins, pair_copulas, meta })
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn structure(&self) -> &RVineStructure {
        &self.structure
    }

    pub fn margins(&self) -> &[MarginalEstimate] {
        &self.margins
    }

    /// Pair-copulas indexed like `structure().trees()`.
    pub fn pair_copulas(&self) -> &[Vec<PairCopulaEstimate>] {
        &self.pair_copulas
    }

    pub fn meta(&self) -> &FitMeta {
        &self.meta
    }

    /// Replays the pipeline on one point, reporting every density factor
    /// (margins first, then pair-copulas tree by tree).
    fn walk(&self, x: &[f64], mut factor: impl FnMut(f64), mut inputs: impl FnMut(usize, usize, f64, f64)) -> Result<()> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let mut u0 = Vec::with_capacity(d);
        for (m, &xi) in self.margins.iter().zip(x) {
            factor(m.density(xi));
            u0.push(self.meta.clamp(m.cdf(xi)));
        }
        let trees = self.structure.trees();
        let mut outputs: Vec<[f64; 2]> = Vec::new();
        for (level, (edges, copulas)) in trees.iter().zip(&self.pair_copulas).enumerate() {
            let last = level + 1 == trees.len();
            let mut next = Vec::with_capacity(if last { 0 } else { edges.len() });
            for (e, (edge, pc)) in edges.iter().zip(copulas).enumerate() {
                let [ia, ib] = edge_inputs(trees, level, edge)?;
                let layer = if level == 0 { Layer::Variables(&u0) } else { Layer::Edges(&outputs) };
                let (a, b) = (*layer.get(ia), *layer.get(ib));
                inputs(level, e, a, b);
                let (za, zb) = (norm_quantile_unchecked(a), norm_quantile_unchecked(b));
                factor(pc.density_z(za, zb));
                if !last {
                    let h1 = pc.h_z(a, b, za, zb, HDirection::FirstGivenSecond, self.meta.h_form);
                    let h2 = pc.h_z(a, b, za, zb, HDirection::SecondGivenFirst, self.meta.h_form);
                    next.push([self.meta.clamp(h1.value), self.meta.clamp(h2.value)]);
                }
            }
            outputs = next;
        }
        Ok(())
    }

    /// Joint density estimate at `x`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let mut f = 1.0;
        self.walk(x, |c| f *= c, |_, _, _, _| {})?;
        Ok(f)
    }

    /// All `d + d(d-1)/2` factors whose product is [`density`](Self::density).
    pub fn density_factors(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut v = Vec::new();
        self.walk(x, |c| v.push(c), |_, _, _, _| {})?;
        Ok(v)
    }

    /// The pair of pseudo-observations fed to every edge when evaluating at
    /// `x`, as `(level, edge, u, v)`.
    pub fn edge_inputs_at(&self, x: &[f64]) -> Result<Vec<(usize, usize, f64, f64)>> {
        let mut v = Vec::new();
        self.walk(x, |_| {}, |l, e, a, b| v.push((l, e, a, b)))?;
        Ok(v)
    }
}
