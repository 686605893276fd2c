//! R-vine tree sequences: representation, validation and greedy selection by
//! maximum spanning trees on absolute Kendall's tau.
//!
//! Variables are indexed `0..d`. Tree levels are indexed from 0, so level 0 is
//! the first tree `T_1` whose nodes are the variables; the nodes of level `m`
//! are the edges of level `m - 1`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::numerics::norm_quantile;

/// One edge of a vine tree.
///
/// `conditioned[0]` is contributed by `parents[0]` and `conditioned[1]` by
/// `parents[1]`; first-tree edges have no parents and an empty conditioning set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub conditioned: [usize; 2],
    /// Sorted ascending.
    pub conditioning: Vec<usize>,
    pub parents: Option<[usize; 2]>,
}

impl Edge {
    /// `conditioned ∪ conditioning`, sorted.
    pub fn all_variables(&self) -> Vec<usize> {
        let mut v = self.conditioning.clone();
        v.extend_from_slice(&self.conditioned);
        v.sort_unstable();
        v
    }

    /// The conditioned pair in ascending order (tie-break key).
    pub fn sorted_pair(&self) -> [usize; 2] {
        let [a, b] = self.conditioned;
        [a.min(b), a.max(b)]
    }

    /// The two nodes of its own tree this edge connects.
    fn endpoints(&self) -> [usize; 2] {
        self.parents.unwrap_or(self.conditioned)
    }
}

/// The first condition an R-vine tree sequence fails; `level` is 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooSmall { d: usize },
    TreeCount { expected: usize, got: usize },
    EdgeCount { level: usize, expected: usize, got: usize },
    /// Bad variable index, parent index, or a first-tree edge with parents.
    BadEdge { level: usize, edge: usize },
    /// The edges of a level contain a cycle, so they do not form a tree.
    Cycle { level: usize, edge: usize },
    /// The two parent edges do not share a node of the previous tree.
    Proximity { level: usize, edge: usize },
    /// Conditioned/conditioning sets disagree with the ones implied by the parents.
    InconsistentSets { level: usize, edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooSmall { d } => write!(f, "dimension {d} < 2"),
            Violation::TreeCount { expected, got } => {
                write!(f, "expected {expected} trees, found {got}")
            }
            Violation::EdgeCount { level, expected, got } => {
                write!(f, "tree T{} has {got} edges, expected {expected}", level + 1)
            }
            Violation::BadEdge { level, edge } => {
                write!(f, "tree T{} edge {edge} has invalid endpoints", level + 1)
            }
            Violation::Cycle { level, edge } => {
                write!(f, "tree T{} edge {edge} closes a cycle", level + 1)
            }
            Violation::Proximity { level, edge } => write!(
                f,
                "tree T{} edge {edge} joins edges of T{} that share no node",
                level + 1,
                level
            ),
            Violation::InconsistentSets { level, edge } => write!(
                f,
                "tree T{} edge {edge} has conditioned/conditioning sets inconsistent with its parents",
                level + 1
            ),
        }
    }
}

/// An R-vine tree sequence on `d` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RVineStructure {
    d: usize,
    trees: Vec<Vec<Edge>>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Derives the edge joining previous-tree edges `a` and `b`, if they share a node.
pub fn join_edges(prev: &[Edge], a: usize, b: usize) -> Option<Edge> {
    let (ea, eb) = (&prev[a], &prev[b]);
    if a == b {
        return None;
    }
    let [p, q] = ea.endpoints();
    let [r, s] = eb.endpoints();
    if !(p == r || p == s || q == r || q == s) {
        return None;
    }
    let va = ea.all_variables();
    let vb = eb.all_variables();
    let only_a: Vec<usize> = va.iter().copied().filter(|x| !vb.contains(x)).collect();
    let only_b: Vec<usize> = vb.iter().copied().filter(|x| !va.contains(x)).collect();
    if only_a.len() != 1 || only_b.len() != 1 {
        return None;
    }
    let conditioning: Vec<usize> = va.iter().copied().filter(|x| vb.contains(x)).collect();
    Some(Edge { conditioned: [only_a[0], only_b[0]], conditioning, parents: Some([a, b]) })
}

impl RVineStructure {
    /// Builds a structure from the first-tree variable pairs and, for every
    /// higher tree, pairs of indices into the previous tree's edge list.
    pub fn from_pairs(d: usize, first: &[[usize; 2]], higher: &[Vec<[usize; 2]>]) -> Result<Self> {
        let mut trees = Vec::with_capacity(d.saturating_sub(1));
        trees.push(
            first
                .iter()
                .map(|&c| Edge { conditioned: c, conditioning: Vec::new(), parents: None })
                .collect::<Vec<_>>(),
        );
        for (m, pairs) in higher.iter().enumerate() {
            let prev: &Vec<Edge> = &trees[m];
            let mut level = Vec::with_capacity(pairs.len());
            for (e, &[a, b]) in pairs.iter().enumerate() {
                if a >= prev.len() || b >= prev.len() {
                    return Err(Error::InvalidStructure(Violation::BadEdge { level: m + 1, edge: e }));
                }
                let edge = join_edges(prev, a, b).ok_or(Error::InvalidStructure(
                    Violation::Proximity { level: m + 1, edge: e },
                ))?;
                level.push(edge);
            }
            trees.push(level);
        }
        let s = Self { d, trees };
        s.validate().map_err(Error::InvalidStructure)?;
        Ok(s)
    }

    /// Wraps raw trees without checking them; call [`validate`](Self::validate).
    pub fn from_trees_unchecked(d: usize, trees: Vec<Vec<Edge>>) -> Self {
        Self { d, trees }
    }

    /// The D-vine (path) `0 - 1 - ... - (d-1)`.
    pub fn d_vine(d: usize) -> Result<Self> {
        let first: Vec<[usize; 2]> = (0..d.saturating_sub(1)).map(|i| [i, i + 1]).collect();
        let higher: Vec<Vec<[usize; 2]>> =
            (1..d.saturating_sub(1)).map(|m| (0..d - 1 - m).map(|i| [i, i + 1]).collect()).collect();
        Self::from_pairs(d, &first, &higher)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn trees(&self) -> &[Vec<Edge>] {
        &self.trees
    }

    pub fn edge_count(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Checks the R-vine conditions; returns the first violation found.
    pub fn validate(&self) -> core::result::Result<(), Violation> {
        let d = self.d;
        if d < 2 {
            return Err(Violation::TooSmall { d });
        }
        if self.trees.len() != d - 1 {
            return Err(Violation::TreeCount { expected: d - 1, got: self.trees.len() });
        }
        for (m, level) in self.trees.iter().enumerate() {
            let nodes = if m == 0 { d } else { self.trees[m - 1].len() };
            if level.len() != nodes - 1 {
                return Err(Violation::EdgeCount { level: m, expected: nodes - 1, got: level.len() });
            }
            let mut uf = UnionFind::new(nodes);
            for (e, edge) in level.iter().enumerate() {
                let [a, b] = edge.endpoints();
                let parents_ok = (m == 0) == edge.parents.is_none();
                if !parents_ok || a >= nodes || b >= nodes {
                    return Err(Violation::BadEdge { level: m, edge: e });
                }
                if edge.conditioned.iter().any(|&v| v >= d) {
                    return Err(Violation::BadEdge { level: m, edge: e });
                }
                if m == 0 {
                    if a == b {
                        return Err(Violation::BadEdge { level: m, edge: e });
                    }
                    if !edge.conditioning.is_empty() {
                        return Err(Violation::InconsistentSets { level: m, edge: e });
                    }
                } else {
                    match join_edges(&self.trees[m - 1], a, b) {
                        None => return Err(Violation::Proximity { level: m, edge: e }),
                        Some(expected) if expected != *edge => {
                            return Err(Violation::InconsistentSets { level: m, edge: e })
                        }
                        Some(_) => {}
                    }
                }
                if !uf.union(a, b) {
                    return Err(Violation::Cycle { level: m, edge: e });
                }
            }
        }
        Ok(())
    }
}

/// Candidate edges of the next tree: every admissible pair of nodes.
///
/// For level 0 (`prev == None`) these are all variable pairs; otherwise all
/// pairs of previous-tree edges satisfying the proximity condition.
pub fn candidate_edges(d: usize, prev: Option<&[Edge]>) -> Vec<Edge> {
    let mut out = Vec::new();
    match prev {
        None => {
            for a in 0..d {
                for b in a + 1..d {
                    out.push(Edge { conditioned: [a, b], conditioning: Vec::new(), parents: None });
                }
            }
        }
        Some(prev) => {
            for a in 0..prev.len() {
                for b in a + 1..prev.len() {
                    if let Some(e) = join_edges(prev, a, b) {
                        out.push(e);
                    }
                }
            }
        }
    }
    out
}

/// Kruskal's maximum spanning tree over `num_nodes` nodes.
///
/// Candidates are ranked by weight (descending), then by their sorted
/// conditioned pair and node pair, which makes the result deterministic.
pub fn max_spanning_tree(num_nodes: usize, candidates: Vec<(Edge, f64)>) -> Vec<(Edge, f64)> {
    let mut cand = candidates;
    cand.sort_by(|(ea, wa), (eb, wb)| {
        wb.total_cmp(wa)
            .then(ea.sorted_pair().cmp(&eb.sorted_pair()))
            .then(ea.endpoints().cmp(&eb.endpoints()))
    });
    let mut uf = UnionFind::new(num_nodes);
    let mut chosen = Vec::with_capacity(num_nodes.saturating_sub(1));
    for (e, w) in cand {
        let [a, b] = e.endpoints();
        if uf.union(a, b) {
            chosen.push((e, w));
            if chosen.len() + 1 == num_nodes {
                break;
            }
        }
    }
    chosen
}

/// Outcome of the tau-based independence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dependence {
    Dependent,
    Independent,
}

/// Asymptotic test of `tau = 0`: `|tau| sqrt(9n(n-1) / (2(2n+5)))` against the
/// two-sided normal quantile at `level`.
pub fn independence_test(tau_hat: f64, n: usize, level: f64) -> Result<Dependence> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain { what: "test level", value: level });
    }
    let stat = independence_statistic(tau_hat, n);
    let crit = norm_quantile(1.0 - level / 2.0)?;
    Ok(if stat > crit { Dependence::Dependent } else { Dependence::Independent })
}

pub fn independence_statistic(tau_hat: f64, n: usize) -> f64 {
    let n = n as f64;
    tau_hat.abs() * libm::sqrt(9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0)))
}
