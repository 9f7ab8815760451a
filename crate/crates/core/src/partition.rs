//! Splitting a graph into a few parts that each induce an expander.
//!
//! The loop starts from the trivial partition, looks for a sparse cut inside
//! some part, and replaces that part by the two sides after peeling off the
//! vertices with too many neighbours across the cut. Peeled vertices go to an
//! exceptional class `V₀`, which is emptied at the end by handing each vertex
//! to a part it has many neighbours in.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expander::{certify_expander_with, Cut, ExpansionVerdict};
use crate::graph::{essential_min_degree, Graph, GraphError, VertexSet};
use crate::rng::Seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid partition: {0}")]
    Invalid(String),
    #[error("refinement of part {part} left an empty side")]
    DegenerateRefinement { part: usize },
    #[error("vertex {vertex} has at most {best} neighbours in any part, needs {required}")]
    InfeasibleDegree { vertex: usize, best: usize, required: f64 },
    #[error("reached {level} parts without every part expanding (cap {cap})")]
    PartitionLimitExceeded { level: usize, cap: f64 },
}

/// `V = V₀ ∪ V₁ ∪ … ∪ V_ℓ` with exceptional class `V₀`; `level = ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPartition {
    pub v0: VertexSet,
    pub parts: Vec<VertexSet>,
    pub level: usize,
}

impl LabeledPartition {
    pub fn trivial(n: usize) -> Self {
        LabeledPartition { v0: VertexSet::empty(), parts: vec![VertexSet::full(n)], level: 1 }
    }

    pub fn new(v0: VertexSet, parts: Vec<VertexSet>) -> Self {
        let level = parts.len();
        LabeledPartition { v0, parts, level }
    }

    /// Disjointness, coverage of `0..n`, `ℓ ≥ 1` and `level = parts.len()`.
    pub fn validate(&self, n: usize) -> Result<(), PartitionError> {
        if self.parts.is_empty() || self.level != self.parts.len() {
            return Err(PartitionError::Invalid(format!("level {} with {} parts", self.level, self.parts.len())));
        }
        let mut seen = vec![false; n];
        for set in std::iter::once(&self.v0).chain(&self.parts) {
            for v in set.iter() {
                if v >= n {
                    return Err(PartitionError::Graph(GraphError::VertexOutOfRange { vertex: v, n }));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(PartitionError::Invalid(format!("vertex {v} in two classes")));
                }
            }
        }
        match seen.iter().position(|&s| !s) {
            Some(v) => Err(PartitionError::Invalid(format!("vertex {v} in no class"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    /// L1 and L2.
    pub good: bool,
    /// L1, L2 and L3.
    pub perfect: bool,
    pub size_ok: bool,
    pub degree_ok: bool,
    /// L3 alone: no part has a known cut below `γp`.
    pub expanding: bool,
    /// Some part only passed L3 because no cut was found.
    pub provisional: bool,
    pub min_degrees: Vec<usize>,
    pub failing_part: Option<usize>,
    /// Present exactly when the partition is good but not perfect.
    pub failing_cut: Option<Cut>,
    /// Every sparse cut found, as `(part, cut)` in global ids, best first.
    #[serde(skip)]
    pub cuts: Vec<(usize, Cut)>,
}

fn min_degree_within(g: &Graph, set: &VertexSet) -> usize {
    let mask = set.mask(g.n());
    set.iter().map(|v| g.degree_into(v, &mask)).min().unwrap_or(0)
}

fn to_global(local: &Cut, part: &VertexSet) -> Cut {
    let map = |s: &VertexSet| VertexSet::from_iter_unchecked(s.iter().map(|i| part.as_slice()[i]));
    Cut { side1: map(&local.side1), side2: map(&local.side2), crossing: local.crossing, ratio: local.ratio }
}

/// Checks L1 `|V₀| ≤ αn`, L2 `δ(G[V_i]) ≥ (c + α/2^ℓ)np` and L3 `G[V_i]` is a
/// `γp`-expander, the last via [`certify_expander_with`].
#[allow(clippy::too_many_arguments)]
pub fn assess_partition(
    g: &Graph,
    part: &LabeledPartition,
    c: f64,
    alpha: f64,
    gamma: f64,
    n: usize,
    p: f64,
    cut_budget: usize,
    seed: Seed,
) -> GoodnessReport {
    let nf = n as f64;
    let size_ok = part.v0.len() as f64 <= alpha * nf + 1e-9;
    let floor = (c + alpha / 2f64.powi(part.level as i32)) * nf * p;
    let min_degrees: Vec<usize> = part.parts.iter().map(|s| min_degree_within(g, s)).collect();
    let degree_ok = min_degrees.iter().all(|&d| d as f64 >= floor - 1e-9);
    let verdicts: Vec<ExpansionVerdict> = part
        .parts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let h = g.induced(s.as_slice());
            certify_expander_with(&h, gamma * p, cut_budget, seed.derive(i as u64))
        })
        .collect();
    let provisional = verdicts.iter().any(|v| matches!(v.kind, crate::expander::VerdictKind::Unknown));
    let mut cuts: Vec<(usize, Cut)> =
        verdicts.iter().enumerate().filter_map(|(i, v)| v.cut().map(|c| (i, to_global(c, &part.parts[i])))).collect();
    cuts.sort_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio).then(a.0.cmp(&b.0)));
    let expanding = cuts.is_empty();
    let good = size_ok && degree_ok;
    let perfect = good && expanding;
    let (failing_part, failing_cut) = match cuts.first() {
        Some((i, c)) if good => (Some(*i), Some(c.clone())),
        _ => (None, None),
    };
    GoodnessReport {
        good,
        perfect,
        size_ok,
        degree_ok,
        expanding,
        provisional,
        min_degrees,
        failing_part,
        failing_cut,
        cuts,
    }
}

/// Splits `X` into `(W_X, V_X)`. `W_X` starts as the vertices with at least
/// `threshold` neighbours in `Y` and grows by any vertex with at least
/// `threshold` neighbours in `W_X ∪ Y` until stable. Counting `Y` during
/// growth makes `deg(v, W_X ∪ Y) < threshold` hold for every `v ∈ V_X`.
pub fn kernel_peel(g: &Graph, x: &VertexSet, y: &VertexSet, threshold: f64) -> (VertexSet, VertexSet) {
    let n = g.n();
    let in_x = x.mask(n);
    let in_y = y.mask(n);
    let mut count: Vec<usize> = vec![0; n];
    let mut in_w = vec![false; n];
    let mut queue = Vec::new();
    for v in x.iter() {
        count[v] = g.degree_into(v, &in_y);
        if count[v] as f64 >= threshold {
            in_w[v] = true;
            queue.push(v);
        }
    }
    while let Some(v) = queue.pop() {
        for &w in g.neighbors(v) {
            if in_x[w] && !in_w[w] {
                count[w] += 1;
                if count[w] as f64 >= threshold {
                    in_w[w] = true;
                    queue.push(w);
                }
            }
        }
    }
    let w_x = VertexSet::from_iter_unchecked(x.iter().filter(|&v| in_w[v]));
    let v_x = VertexSet::from_iter_unchecked(x.iter().filter(|&v| !in_w[v]));
    (w_x, v_x)
}

/// Replaces part `index` (split by `cut`) with the peeled sides `V_X, V_Y`,
/// moving `W_X ∪ W_Y` into `V₀`.
pub fn refine_once(
    g: &Graph,
    part: &LabeledPartition,
    index: usize,
    cut: &Cut,
    threshold: f64,
) -> Result<LabeledPartition, PartitionError> {
    let (w_x, v_x) = kernel_peel(g, &cut.side1, &cut.side2, threshold);
    let (w_y, v_y) = kernel_peel(g, &cut.side2, &cut.side1, threshold);
    if v_x.is_empty() || v_y.is_empty() {
        return Err(PartitionError::DegenerateRefinement { part: index });
    }
    let mut parts = part.parts.clone();
    parts.splice(index..=index, [v_x, v_y]);
    let v0 = part.v0.union(&w_x).union(&w_y);
    Ok(LabeledPartition::new(v0, parts))
}

/// Empties `V₀`. Vertices are taken in order of most neighbours outside the
/// still-unplaced set (ties by id); each joins the part where it has the most
/// neighbours counting earlier arrivals, provided that is at least `cnp/ℓ`.
pub fn redistribute_v0(
    g: &Graph,
    part: &LabeledPartition,
    c: f64,
    n: usize,
    p: f64,
) -> Result<LabeledPartition, PartitionError> {
    let nv = g.n();
    let ell = part.parts.len();
    let required = c * n as f64 * p / ell as f64;
    let mut remaining = part.v0.mask(nv);
    let mut outside: Vec<usize> = (0..nv).map(|v| g.neighbors(v).iter().filter(|&&w| !remaining[w]).count()).collect();
    let mut owner = vec![usize::MAX; nv];
    for (i, s) in part.parts.iter().enumerate() {
        for v in s.iter() {
            owner[v] = i;
        }
    }
    let mut parts: Vec<Vec<usize>> = part.parts.iter().map(|s| s.as_slice().to_vec()).collect();
    let mut left = part.v0.len();
    while left > 0 {
        let w = part
            .v0
            .iter()
            .filter(|&v| remaining[v])
            .max_by(|&a, &b| outside[a].cmp(&outside[b]).then(b.cmp(&a)))
            .expect("left > 0");
        let mut per_part = vec![0usize; ell];
        for &u in g.neighbors(w) {
            if owner[u] != usize::MAX {
                per_part[owner[u]] += 1;
            }
        }
        let (best_i, &best) =
            per_part.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).expect("at least one part");
        if (best as f64) < required - 1e-9 {
            return Err(PartitionError::InfeasibleDegree { vertex: w, best, required });
        }
        owner[w] = best_i;
        parts[best_i].push(w);
        remaining[w] = false;
        left -= 1;
        for &u in g.neighbors(w) {
            outside[u] += 1;
        }
    }
    Ok(LabeledPartition::new(VertexSet::empty(), parts.into_iter().map(VertexSet::from_iter_unchecked).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    pub c: f64,
    pub alpha: f64,
    pub xi: f64,
    pub p: f64,
    /// Expansion target: parts must be `γp`-expanders.
    pub gamma: f64,
    pub cut_budget: usize,
}

/// Per-part checks of the final partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartVerification {
    pub size: usize,
    pub min_degree: usize,
    pub essential_min_degree: usize,
    /// `δ(G[V_i]) ≥ c²np`.
    pub min_degree_ok: bool,
    /// `δ(G[V_i]) ≥ cnp/ℓ`.
    pub redistribution_floor_ok: bool,
    /// `δ_ξ(G[V_i]) ≥ (c + α − ξ)np`.
    pub essential_degree_ok: bool,
    pub verdict: ExpansionVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOutcome {
    pub parts: Vec<VertexSet>,
    /// Size of `V₀` before redistribution.
    pub exceptional: usize,
    pub refinements: usize,
    pub degree_hypothesis_met: bool,
    pub verification: Vec<PartVerification>,
}

impl PartitionOutcome {
    pub fn level(&self) -> usize {
        self.parts.len()
    }
}

/// Refines until every part expands or `1/c` parts would be needed, then
/// redistributes `V₀`. The minimum degree hypothesis `δ(G) ≥ (c + α)np` is
/// reported, not enforced.
pub fn split_into_expanders(
    g: &Graph,
    params: &PartitionParams,
    seed: Seed,
) -> Result<PartitionOutcome, PartitionError> {
    let n = g.n();
    let PartitionParams { c, alpha, xi, p, gamma, cut_budget } = *params;
    let nf = n as f64;
    let degree_hypothesis_met = g.min_degree() as f64 >= (c + alpha) * nf * p - 1e-9;
    let cap = 1.0 / c;
    let mut part = LabeledPartition::trivial(n);
    let mut refinements = 0;
    loop {
        let report = assess_partition(g, &part, c, alpha, gamma, n, p, cut_budget, seed.derive(refinements as u64));
        if report.expanding {
            break;
        }
        if (part.level + 1) as f64 >= cap - 1e-12 {
            return Err(PartitionError::PartitionLimitExceeded { level: part.level + 1, cap });
        }
        let threshold = alpha * nf * p / 2f64.powi(part.level as i32);
        let mut next = None;
        for (i, cut) in &report.cuts {
            match refine_once(g, &part, *i, cut, threshold) {
                Ok(p2) => {
                    next = Some(p2);
                    break;
                }
                Err(PartitionError::DegenerateRefinement { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        part = next.ok_or(PartitionError::DegenerateRefinement { part: report.cuts[0].0 })?;
        refinements += 1;
    }
    let exceptional = part.v0.len();
    let done = redistribute_v0(g, &part, c, n, p)?;
    done.validate(n)?;
    let ell = done.parts.len() as f64;
    let verification = done
        .parts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let h = g.induced(s.as_slice());
            let min_degree = h.min_degree();
            let essential = essential_min_degree(&h, xi);
            PartVerification {
                size: s.len(),
                min_degree,
                essential_min_degree: essential,
                min_degree_ok: min_degree as f64 >= c * c * nf * p - 1e-9,
                redistribution_floor_ok: min_degree as f64 >= c * nf * p / ell - 1e-9,
                essential_degree_ok: essential as f64 >= (c + alpha - xi) * nf * p - 1e-9,
                verdict: certify_expander_with(&h, gamma * p, cut_budget, seed.derive_str("verify").derive(i as u64)),
            }
        })
        .collect();
    Ok(PartitionOutcome { parts: done.parts, exceptional, refinements, degree_hypothesis_met, verification })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::mask_of;

    fn vs(it: impl IntoIterator<Item = usize>) -> VertexSet {
        VertexSet::from_iter_unchecked(it)
    }

    fn two_cliques(t: usize) -> Graph {
        Graph::complete(t).disjoint_union(&Graph::complete(t))
    }

    #[test]
    fn assess_examples() {
        let g = two_cliques(20);
        let split = LabeledPartition::new(VertexSet::empty(), vec![vs(0..20), vs(20..40)]);
        let r = assess_partition(&g, &split, 0.3, 0.1, 0.5, 40, 0.5, 2, Seed(1));
        assert!(r.good && r.perfect);

        let bad = LabeledPartition::new(vs(0..10), vec![vs(10..40)]);
        let r = assess_partition(&g, &bad, 0.01, 0.1, 0.5, 40, 0.5, 2, Seed(1));
        assert!(!r.size_ok && !r.good);

        let barbell = g.with_extra_edges([(19, 20)]);
        let whole = LabeledPartition::trivial(40);
        let r = assess_partition(&barbell, &whole, 0.01, 0.01, 0.02, 40, 0.5, 2, Seed(1));
        assert!(r.good && !r.perfect);
        let cut = r.failing_cut.unwrap();
        assert_eq!(cut.crossing, 1);
        assert_eq!(cut.side1.len(), 20);
    }

    #[test]
    fn kernel_peel_examples() {
        let g = Graph::complete(5).disjoint_union(&Graph::empty(3));
        let x = vs(0..5);
        let y = vs(5..8);
        assert_eq!(kernel_peel(&g, &x, &y, 1.0), (VertexSet::empty(), x.clone()));
        assert_eq!(kernel_peel(&g, &x, &y, 4.0).0, VertexSet::empty());
        let g2 = g.with_extra_edges([(0, 5)]);
        assert_eq!(kernel_peel(&g2, &x, &y, 1.0), (x.clone(), VertexSet::empty()));
        let star = Graph::from_edges(4, [(0, 3), (1, 3), (2, 3)]).unwrap();
        assert_eq!(kernel_peel(&star, &vs(0..3), &vs([3]), 1.0).1, VertexSet::empty());
    }

    #[test]
    fn refine_examples() {
        let g = two_cliques(20);
        let whole = LabeledPartition::trivial(40);
        let cut = Cut::from_mask(&g, &mask_of(40, 0..20));
        let r = refine_once(&g, &whole, 0, &cut, 1.0).unwrap();
        assert_eq!(r.parts, vec![vs(0..20), vs(20..40)]);
        assert_eq!(r.level, 2);
        assert!(r.v0.is_empty());

        let barbell = g.with_extra_edges([(19, 20)]);
        let cut = Cut::from_mask(&barbell, &mask_of(40, 0..20));
        let r = refine_once(&barbell, &whole, 0, &cut, 2.0).unwrap();
        assert_eq!(r.parts, vec![vs(0..20), vs(20..40)]);

        // At threshold 1 the bridge end seeds the peel and drags its clique along.
        let r = refine_once(&barbell, &whole, 0, &cut, 1.0);
        assert_eq!(r, Err(PartitionError::DegenerateRefinement { part: 0 }));
        let star = Graph::from_edges(4, [(0, 3), (1, 3), (2, 3)]).unwrap();
        let cut = Cut::from_mask(&star, &mask_of(4, 0..3));
        assert_eq!(
            refine_once(&star, &LabeledPartition::trivial(4), 0, &cut, 1.0),
            Err(PartitionError::DegenerateRefinement { part: 0 })
        );
    }

    #[test]
    fn redistribute_examples() {
        let g = two_cliques(20);
        let part = LabeledPartition::new(vs([3]), vec![vs((0..20).filter(|&v| v != 3)), vs(20..40)]);
        let r = redistribute_v0(&g, &part, 0.5, 40, 0.5).unwrap();
        assert!(r.parts[0].contains(3) && r.v0.is_empty());

        let id = LabeledPartition::new(VertexSet::empty(), vec![vs(0..20), vs(20..40)]);
        assert_eq!(redistribute_v0(&g, &id, 0.5, 40, 0.5).unwrap(), id);

        let moved: Vec<usize> = vec![1, 2, 21, 22, 23];
        let part = LabeledPartition::new(
            vs(moved.clone()),
            vec![vs((0..20).filter(|v| !moved.contains(v))), vs((20..40).filter(|v| !moved.contains(v)))],
        );
        let r = redistribute_v0(&g, &part, 0.5, 40, 0.5).unwrap();
        assert_eq!(r.parts, vec![vs(0..20), vs(20..40)]);

        let isolated = Graph::complete(4).disjoint_union(&Graph::empty(1));
        let part = LabeledPartition::new(vs([4]), vec![vs(0..4)]);
        assert!(matches!(
            redistribute_v0(&isolated, &part, 0.5, 5, 1.0),
            Err(PartitionError::InfeasibleDegree { vertex: 4, .. })
        ));
    }

    #[test]
    fn each_clique_is_one_part() {
        let params = PartitionParams { c: 0.3, alpha: 0.05, xi: 0.1, p: 1.0, gamma: 0.2, cut_budget: 2 };
        let out = split_into_expanders(&Graph::complete(30), &params, Seed(4)).unwrap();
        assert_eq!(out.parts, vec![VertexSet::full(30)]);

        let g = two_cliques(25);
        let params = PartitionParams { c: 0.3, alpha: 0.05, xi: 0.1, p: 0.5, gamma: 0.2, cut_budget: 2 };
        let out = split_into_expanders(&g, &params, Seed(4)).unwrap();
        assert_eq!(out.parts, vec![vs(0..25), vs(25..50)]);
        assert!(out.verification.iter().all(|v| v.min_degree_ok && v.verdict.passes()));
    }

    #[test]
    fn level_cap() {
        let g = Graph::complete(5).disjoint_union(&Graph::complete(5)).disjoint_union(&Graph::complete(5));
        let params = PartitionParams { c: 0.5, alpha: 0.05, xi: 0.1, p: 1.0, gamma: 0.2, cut_budget: 2 };
        assert!(matches!(
            split_into_expanders(&g, &params, Seed(0)),
            Err(PartitionError::PartitionLimitExceeded { .. })
        ));
    }
}
