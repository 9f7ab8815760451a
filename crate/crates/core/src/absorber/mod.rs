//! Absorbers in bipartite hosts.
//!
//! An `(X, Y)`-absorber is a graph `H` with endpoints `a`, `b` such that for
//! every `X′ ⊆ X`, `Y′ ⊆ Y` with `|X′| = |Y′|` there is an `ab`-path with vertex
//! set exactly `V(H) ∖ (X′ ∪ Y′)`. It is assembled from a robust template
//! graph mapped onto `U`, one two-vertex gadget per template edge, and a chain
//! through all gadgets, each layer routed through its own slice of `W`.

mod gadget;
mod matching;
mod template;

pub use gadget::{endpoints as gadget_endpoints, rung_pairs, TwoVertexGadget};
pub use matching::{matching_size, max_matching};
pub use template::{build_template, random_balanced, template_matching, TemplateCheck, TemplateGraph, MAX_RESAMPLES};

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connect::{connect_all_with, ConnectError, ConnectionDemand, RouteOptions};
use crate::graph::{Graph, Path, VertexSet};
use crate::rng::Seed;

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum AbsorberError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("side {side} of W has {available} vertices, {required} needed for padding and an endpoint")]
    InfeasibleDegree { side: char, available: usize, required: usize },
    #[error("no robust template found in {attempts} attempts")]
    TemplateResampleExceeded { attempts: usize },
    #[error("unbalanced request: {a} vertices on side A, {b} on side B")]
    UnbalancedAbsorptionRequest { a: usize, b: usize },
    #[error("not absorbable: {0}")]
    NotAbsorbable(String),
    #[error("template has no perfect matching after deletion")]
    NoMatching,
    #[error("phase {phase} routing failed: {source}")]
    Connect { phase: u8, source: ConnectError },
    #[error("gadget {index} invalid: {reason}")]
    GadgetInvalid { index: usize, reason: String },
    #[error("recount failed: {0}")]
    Recount(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorberParams {
    /// Random perfect matchings in the template.
    pub matchings: usize,
    /// Path-length bound for every routing phase.
    pub ell: usize,
    pub template_check: TemplateCheck,
    pub restarts: usize,
    /// Relative sizes of the three routing slices of `W`.
    pub split: [f64; 3],
}

impl Default for AbsorberParams {
    fn default() -> Self {
        AbsorberParams {
            matchings: 20,
            ell: 9,
            template_check: TemplateCheck::Auto { samples: 2000 },
            restarts: 8,
            split: [1.0, 1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorberStructure {
    pub host_n: usize,
    pub a: usize,
    pub b: usize,
    /// `U ∩ A` and `U ∩ B`: the absorbable vertices.
    pub x_set: VertexSet,
    pub y_set: VertexSet,
    /// Images of template sides A and B, in template id order.
    pub u_a: Vec<usize>,
    pub u_b: Vec<usize>,
    pub template: TemplateGraph,
    /// Template vertex id → host vertex.
    pub f: Vec<usize>,
    /// In chain order, which is template edge order.
    pub gadgets: Vec<TwoVertexGadget>,
    /// `a → u₁`, `v₁ → u₂`, …, `v_last → b`.
    pub chain: Vec<Path>,
    pub slices: [VertexSet; 3],
    pub slice_used: [VertexSet; 3],
    pub vertices: VertexSet,
}

/// Builds a `(U ∩ A, U ∩ B)`-absorber with `a ∈ W ∩ A`, `b ∈ W ∩ B`.
/// `side_a[v]` marks side A of the bipartition.
pub fn build_absorber(
    g: &Graph,
    u: &VertexSet,
    w: &VertexSet,
    side_a: &[bool],
    params: &AbsorberParams,
    seed: Seed,
) -> Result<AbsorberStructure, AbsorberError> {
    let n = g.n();
    let pre = |msg: String| Err(AbsorberError::Precondition(msg));
    if side_a.len() != n {
        return pre(format!("bipartition has length {}, graph has {n} vertices", side_a.len()));
    }
    if u.len() < 2 {
        return pre(format!("|U| = {}, at least 2 required", u.len()));
    }
    if u.iter().chain(w.iter()).any(|v| v >= n) {
        return pre("U or W out of range".into());
    }
    if !u.is_disjoint(w) {
        return pre("U and W intersect".into());
    }
    if !g.is_bipartite_with(side_a) {
        return pre("graph is not bipartite with the given sides".into());
    }
    let x_set: VertexSet = u.iter().filter(|&v| side_a[v]).collect();
    let y_set: VertexSet = u.iter().filter(|&v| !side_a[v]).collect();
    let m = x_set.len().max(y_set.len());

    let mut rng = seed.derive_str("absorber-choices").rng();
    let mut pick =
        |side: char, pool: Vec<usize>, have: usize| -> Result<(usize, Vec<usize>, Vec<usize>), AbsorberError> {
            let required = 2 * m - have + 1;
            if pool.len() < required {
                return Err(AbsorberError::InfeasibleDegree { side, available: pool.len(), required });
            }
            let mut pool = pool;
            pool.shuffle(&mut rng);
            let rest = pool.split_off(required);
            let end = pool[0];
            let mut padding = pool[1..].to_vec();
            padding.sort_unstable();
            Ok((end, padding, rest))
        };
    let (a, pad_a, rest_a) = pick('A', w.iter().filter(|&v| side_a[v]).collect(), x_set.len())?;
    let (b, pad_b, rest_b) = pick('B', w.iter().filter(|&v| !side_a[v]).collect(), y_set.len())?;
    let mut rest: Vec<usize> = rest_a.into_iter().chain(rest_b).collect();
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let slices = split_three(&rest, params.split);

    let template = build_template(m, params.matchings, seed.derive_str("template"), params.template_check)?;
    let u_a: Vec<usize> = x_set.iter().chain(pad_a).collect();
    let u_b: Vec<usize> = y_set.iter().chain(pad_b).collect();
    let f: Vec<usize> = u_a.iter().chain(&u_b).copied().collect();

    let route = |phase: u8, pairs: Vec<(usize, usize)>, slice: &VertexSet, allow_direct: bool| {
        let demand =
            ConnectionDemand::new(n, pairs.clone()).map_err(|source| AbsorberError::Connect { phase, source })?;
        let opts = RouteOptions { restarts: params.restarts, allow_direct };
        let sys = connect_all_with(g, &demand, slice, params.ell, opts, seed.derive(phase as u64))
            .map_err(|source| AbsorberError::Connect { phase, source })?;
        let routes: Vec<Path> = sys
            .routes
            .into_iter()
            .zip(&pairs)
            .map(|(p, &(s, _))| if p.start() == s { p } else { p.reversed() })
            .collect();
        Ok::<_, AbsorberError>((routes, sys.used_internal))
    };

    // Phase 1: two paths per template edge. A direct edge would give a
    // gadget with no interior, so it is not allowed here.
    let pairs: Vec<(usize, usize)> = template.edges.iter().flat_map(|&(x, y)| [(f[x], f[y]), (f[x], f[y])]).collect();
    let (paths, used1) = route(1, pairs, &slices[0], false)?;
    let mut gadgets: Vec<TwoVertexGadget> = Vec::with_capacity(template.edges.len());
    let mut rung_demand = Vec::new();
    for (i, &(x, y)) in template.edges.iter().enumerate() {
        let (mut p, mut q) = (paths[2 * i].clone(), paths[2 * i + 1].clone());
        if p.len() > q.len() {
            std::mem::swap(&mut p, &mut q);
        }
        let invalid = |reason: String| AbsorberError::GadgetInvalid { index: i, reason };
        let pairs = rung_pairs(&p, &q).map_err(invalid)?;
        let (gu, gv) = gadget_endpoints(&p, &q).map_err(invalid)?;
        rung_demand.push(pairs);
        gadgets.push(TwoVertexGadget {
            x,
            y,
            fx: f[x],
            fy: f[y],
            path_p: p,
            path_q: q,
            rungs: Vec::new(),
            u: gu,
            v: gv,
        });
    }

    // Phase 2: rungs.
    let flat: Vec<(usize, usize)> = rung_demand.iter().flatten().copied().collect();
    let (mut rungs, used2) = route(2, flat, &slices[1], true)?;
    for (gad, pairs) in gadgets.iter_mut().zip(&rung_demand) {
        let rest = rungs.split_off(pairs.len());
        gad.rungs = std::mem::replace(&mut rungs, rest);
    }

    // Phase 3: the chain a → gadget₁ → … → gadget_last → b.
    let mut ends = vec![a];
    for gad in &gadgets {
        ends.push(gad.u);
        ends.push(gad.v);
    }
    ends.push(b);
    let chain_pairs: Vec<(usize, usize)> = ends.chunks(2).map(|c| (c[0], c[1])).collect();
    let (chain, used3) = route(3, chain_pairs, &slices[2], true)?;

    for (index, gad) in gadgets.iter().enumerate() {
        gad.validate(g).map_err(|reason| AbsorberError::GadgetInvalid { index, reason })?;
    }
    let vertices = VertexSet::from_iter_unchecked(
        [a, b].into_iter().chain(f.iter().copied()).chain(used1.iter()).chain(used2.iter()).chain(used3.iter()),
    );
    let abs = AbsorberStructure {
        host_n: n,
        a,
        b,
        x_set,
        y_set,
        u_a,
        u_b,
        template,
        f,
        gadgets,
        chain,
        slices,
        slice_used: [used1, used2, used3],
        vertices,
    };
    abs.check_accounting()?;
    absorb_in(&abs, g, &VertexSet::empty(), &VertexSet::empty())?;
    Ok(abs)
}

fn split_three(items: &[usize], weights: [f64; 3]) -> [VertexSet; 3] {
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    let len = items.len();
    let c1 = ((weights[0].max(0.0) / total) * len as f64).round() as usize;
    let c2 = (((weights[0].max(0.0) + weights[1].max(0.0)) / total) * len as f64).round() as usize;
    let (c1, c2) = (c1.min(len), c2.clamp(c1.min(len), len));
    [
        items[..c1].iter().copied().collect(),
        items[c1..c2].iter().copied().collect(),
        items[c2..].iter().copied().collect(),
    ]
}

impl AbsorberStructure {
    /// Each slice's used interior lies in that slice, and the three interiors
    /// avoid each other, the terminals and the endpoints.
    pub fn check_accounting(&self) -> Result<(), AbsorberError> {
        let core: VertexSet = self.f.iter().copied().chain([self.a, self.b]).collect();
        if core.len() != self.f.len() + 2 {
            return Err(AbsorberError::Recount("template image and endpoints overlap".into()));
        }
        for i in 0..3 {
            if !self.slice_used[i].is_subset(&self.slices[i]) {
                return Err(AbsorberError::Recount(format!("phase {} interior leaves its slice", i + 1)));
            }
            if !self.slice_used[i].is_disjoint(&core) {
                return Err(AbsorberError::Recount(format!("phase {} interior meets U_A ∪ U_B ∪ {{a, b}}", i + 1)));
            }
            for j in i + 1..3 {
                if !self.slices[i].is_disjoint(&self.slices[j]) {
                    return Err(AbsorberError::Recount(format!("slices {} and {} overlap", i + 1, j + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn gadget_count(&self) -> usize {
        self.gadgets.len()
    }
}

/// The `ab`-path avoiding exactly `X′ ∪ Y′`. The vertex set is recounted
/// against `V(H) ∖ (X′ ∪ Y′)` before returning.
pub fn absorb(abs: &AbsorberStructure, x_prime: &VertexSet, y_prime: &VertexSet) -> Result<Path, AbsorberError> {
    if !x_prime.is_subset(&abs.x_set) || !y_prime.is_subset(&abs.y_set) {
        return Err(AbsorberError::NotAbsorbable("X′ ⊄ U ∩ A or Y′ ⊄ U ∩ B".into()));
    }
    if x_prime.len() != y_prime.len() {
        return Err(AbsorberError::UnbalancedAbsorptionRequest { a: x_prime.len(), b: y_prime.len() });
    }
    let inverse: HashMap<usize, usize> = abs.f.iter().enumerate().map(|(t, &h)| (h, t)).collect();
    let z: VertexSet = x_prime.iter().chain(y_prime.iter()).map(|h| inverse[&h]).collect();
    let matched: HashSet<(usize, usize)> = abs.template.matching_without(&z)?.into_iter().collect();
    if abs.chain.len() != abs.gadgets.len() + 1 {
        return Err(AbsorberError::Recount("chain length does not match gadget count".into()));
    }
    let mut seq = vec![abs.a];
    for (index, (gad, link)) in abs.gadgets.iter().zip(&abs.chain).enumerate() {
        let from = *seq.last().expect("non-empty");
        if (link.start(), link.end()) != (from, gad.u) {
            return Err(AbsorberError::Recount(format!("chain link {index} does not join {from} to {}", gad.u)));
        }
        seq.extend(link.internal());
        let (absorbing, skipping) =
            gad.traversals().map_err(|reason| AbsorberError::GadgetInvalid { index, reason })?;
        seq.extend(if matched.contains(&(gad.x, gad.y)) { absorbing } else { skipping });
    }
    let last = abs.chain.last().expect("chain has a final link");
    if (last.start(), last.end()) != (*seq.last().expect("non-empty"), abs.b) {
        return Err(AbsorberError::Recount("final chain link does not end at b".into()));
    }
    seq.extend(last.internal());
    seq.push(abs.b);

    let mut sorted = seq.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(AbsorberError::Recount(format!("vertex {} visited twice", w[0])));
    }
    let removed = x_prime.union(y_prime);
    if sorted != abs.vertices.difference(&removed).into_vec() {
        return Err(AbsorberError::Recount("path vertex set differs from V(H) ∖ (X′ ∪ Y′)".into()));
    }
    Ok(Path(seq))
}

/// [`absorb`] plus an adjacency check of the result in the host graph.
pub fn absorb_in(
    abs: &AbsorberStructure,
    g: &Graph,
    x_prime: &VertexSet,
    y_prime: &VertexSet,
) -> Result<Path, AbsorberError> {
    let path = absorb(abs, x_prime, y_prime)?;
    path.validate(g).map_err(|e| AbsorberError::Recount(format!("not a path of the host: {e}")))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x_prime: VertexSet,
    pub y_prime: VertexSet,
    pub error: AbsorberError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorberReport {
    pub cases: usize,
    pub passed: usize,
    pub counterexample: Option<Counterexample>,
}

impl AbsorberReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.cases
    }
}

/// Runs [`absorb_in`] on the empty request, the largest balanced request and
/// `trials` random balanced requests.
pub fn verify_absorber(abs: &AbsorberStructure, g: &Graph, trials: usize, seed: Seed) -> AbsorberReport {
    let k = abs.x_set.len().min(abs.y_set.len());
    let full = (abs.x_set.iter().take(k).collect::<VertexSet>(), abs.y_set.iter().take(k).collect::<VertexSet>());
    let mut cases = vec![(VertexSet::empty(), VertexSet::empty()), full];
    for t in 0..trials {
        let mut rng = seed.derive(t as u64).rng();
        let j = rand::Rng::gen_range(&mut rng, 0..=k);
        let xs: VertexSet = abs.x_set.as_slice().choose_multiple(&mut rng, j).copied().collect();
        let ys: VertexSet = abs.y_set.as_slice().choose_multiple(&mut rng, j).copied().collect();
        cases.push((xs, ys));
    }
    let results: Vec<Option<Counterexample>> = cases
        .par_iter()
        .map(|(xs, ys)| {
            absorb_in(abs, g, xs, ys).err().map(|error| Counterexample {
                x_prime: xs.clone(),
                y_prime: ys.clone(),
                error,
            })
        })
        .collect();
    let passed = results.iter().filter(|r| r.is_none()).count();
    AbsorberReport { cases: cases.len(), passed, counterexample: results.into_iter().flatten().next() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_bipartite(s: usize) -> (Graph, Vec<bool>) {
        let g = Graph::from_unique_edges(2 * s, (0..s).flat_map(|i| (s..2 * s).map(move |j| (i, j))));
        let side = (0..2 * s).map(|v| v < s).collect();
        (g, side)
    }

    fn small_params() -> AbsorberParams {
        AbsorberParams { matchings: 3, ..AbsorberParams::default() }
    }

    #[test]
    fn complete_bipartite_absorber() {
        let (g, side) = complete_bipartite(200);
        let u = VertexSet::from_iter_unchecked([0, 1, 200, 201]);
        let w: VertexSet = (0..400).filter(|v| !u.contains(*v)).collect();
        let abs = build_absorber(&g, &u, &w, &side, &small_params(), Seed(4)).unwrap();
        for gad in &abs.gadgets {
            gad.validate(&g).unwrap();
            assert_eq!(gad.path_p.len() % 2, 1);
        }
        let full = absorb_in(&abs, &g, &abs.x_set, &abs.y_set).unwrap();
        assert_eq!(full.vertices().len(), abs.vertices.len() - 4);
        assert_eq!((full.start(), full.end()), (abs.a, abs.b));
        let report = verify_absorber(&abs, &g, 50, Seed(1));
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.cases, 52);
    }

    #[test]
    fn unbalanced_u_is_padded() {
        // Rungs and chain links are mostly single edges here, so the first
        // slice gets most of W.
        let (g, side) = complete_bipartite(150);
        let u = VertexSet::from_iter_unchecked([0, 1, 2, 150]);
        let w: VertexSet = (0..300).filter(|v| !u.contains(*v)).collect();
        let params = AbsorberParams { split: [4.0, 1.0, 1.0], ..small_params() };
        let abs = build_absorber(&g, &u, &w, &side, &params, Seed(5)).unwrap();
        assert_eq!(abs.u_a.len(), 6);
        assert_eq!(abs.u_b.len(), 6);
        assert!(verify_absorber(&abs, &g, 30, Seed(2)).all_passed());
        let xs = VertexSet::from_iter_unchecked([0]);
        assert!(matches!(
            absorb(&abs, &xs, &VertexSet::empty()),
            Err(AbsorberError::UnbalancedAbsorptionRequest { a: 1, b: 0 })
        ));
    }

    #[test]
    fn preconditions() {
        let (g, side) = complete_bipartite(10);
        let w: VertexSet = (1..20).collect();
        let one = VertexSet::from_iter_unchecked([0]);
        assert!(matches!(
            build_absorber(&g, &one, &w, &side, &small_params(), Seed(0)),
            Err(AbsorberError::Precondition(_))
        ));
        let tri = Graph::complete(3);
        assert!(matches!(
            build_absorber(
                &tri,
                &VertexSet::from_iter_unchecked([0, 1]),
                &VertexSet::empty(),
                &[true, false, true],
                &small_params(),
                Seed(0)
            ),
            Err(AbsorberError::Precondition(_))
        ));
        let u = VertexSet::from_iter_unchecked([0, 10]);
        let tiny_w = VertexSet::from_iter_unchecked([1, 11]);
        assert!(matches!(
            build_absorber(&g, &u, &tiny_w, &side, &small_params(), Seed(0)),
            Err(AbsorberError::InfeasibleDegree { .. })
        ));
    }

    #[test]
    fn deleted_rung_is_witnessed() {
        let (g, side) = complete_bipartite(80);
        let u = VertexSet::from_iter_unchecked([0, 80]);
        let w: VertexSet = (0..160).filter(|v| !u.contains(*v)).collect();
        let mut abs = build_absorber(&g, &u, &w, &side, &small_params(), Seed(6)).unwrap();
        assert!(verify_absorber(&abs, &g, 0, Seed(0)).all_passed());
        abs.gadgets[0].rungs.pop();
        let report = verify_absorber(&abs, &g, 0, Seed(0));
        assert_eq!(report.cases, 2);
        assert_eq!(report.passed, 0);
        assert!(matches!(report.counterexample.unwrap().error, AbsorberError::GadgetInvalid { index: 0, .. }));
    }

    #[test]
    fn serde_round_trip() {
        let (g, side) = complete_bipartite(40);
        let u = VertexSet::from_iter_unchecked([0, 40]);
        let w: VertexSet = (0..80).filter(|v| !u.contains(*v)).collect();
        let abs = build_absorber(&g, &u, &w, &side, &small_params(), Seed(7)).unwrap();
        let json = serde_json::to_string(&abs).unwrap();
        let back: AbsorberStructure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, abs);
        assert!(verify_absorber(&back, &g, 5, Seed(3)).all_passed());
    }
}
