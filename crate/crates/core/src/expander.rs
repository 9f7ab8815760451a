//! Expansion: `G` is a `q`-expander if every bipartition `(V₁, V₂)` has
//! `e(V₁, V₂) ≥ q|V₁||V₂|`.
//!
//! Exact minimum ratio for small graphs, a spectral sweep-and-improve cut
//! search for large ones, and the max-cut bipartite subgraph that inherits
//! roughly half the expansion.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, VertexSet};
use crate::rng::Seed;

pub const EXACT_MAX_N: usize = 20;
pub const DEFAULT_CUT_BUDGET: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpanderError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("vertex {vertex} has degree {degree}, precondition requires at least {required}")]
    DegreePrecondition { vertex: usize, degree: usize, required: f64 },
}

/// A bipartition with its crossing-edge count and `crossing / (|V₁||V₂|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub side1: VertexSet,
    pub side2: VertexSet,
    pub crossing: usize,
    pub ratio: f64,
}

impl Cut {
    /// Cut with `side1` = marked vertices. Both sides must be nonempty.
    pub fn from_mask(g: &Graph, in1: &[bool]) -> Cut {
        let side1 = VertexSet::from_mask(in1);
        let side2 = VertexSet::from_iter_unchecked((0..g.n()).filter(|&v| !in1[v]));
        debug_assert!(!side1.is_empty() && !side2.is_empty());
        let crossing = side1.iter().map(|v| g.neighbors(v).iter().filter(|&&w| !in1[w]).count()).sum();
        let ratio = crossing as f64 / (side1.len() * side2.len()) as f64;
        Cut { side1, side2, crossing, ratio }
    }

    /// Recounts the crossing edges and checks the fields are consistent.
    pub fn recount(&self, g: &Graph) -> bool {
        if self.side1.is_empty() || self.side2.is_empty() || self.side1.len() + self.side2.len() != g.n() {
            return false;
        }
        if !self.side1.is_disjoint(&self.side2) {
            return false;
        }
        let fresh = Cut::from_mask(g, &self.side1.mask(g.n()));
        fresh.crossing == self.crossing && fresh.ratio == self.ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictKind {
    CertifiedExact { q_star: f64 },
    CutFound { cut: Cut },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionVerdict {
    #[serde(flatten)]
    pub kind: VerdictKind,
    pub threshold_tested: f64,
}

impl ExpansionVerdict {
    /// True unless a violating cut was found. `Unknown` counts as a
    /// provisional pass.
    pub fn passes(&self) -> bool {
        !matches!(self.kind, VerdictKind::CutFound { .. })
    }

    pub fn cut(&self) -> Option<&Cut> {
        match &self.kind {
            VerdictKind::CutFound { cut } => Some(cut),
            _ => None,
        }
    }
}

/// `a/b < c/d` for nonnegative integer ratios with positive denominators.
#[inline]
fn ratio_lt(a: usize, b: usize, c: usize, d: usize) -> bool {
    (a as u128) * (d as u128) < (c as u128) * (b as u128)
}

/// Minimum of `e(V₁, V₂)/(|V₁||V₂|)` over all nontrivial bipartitions, with
/// a cut attaining it. Graphs with fewer than two vertices have no
/// bipartition and return `(∞, None)`.
pub fn expansion_exact(g: &Graph) -> Result<(f64, Option<Cut>), GraphError> {
    let n = g.n();
    if n > EXACT_MAX_N {
        return Err(GraphError::SizeLimit { n, limit: EXACT_MAX_N });
    }
    if n < 2 {
        return Ok((f64::INFINITY, None));
    }
    let adj: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w))).collect();
    // Gray code over subsets of 0..n-1 that exclude vertex n-1.
    let mut s = 0u32;
    let mut size = 0usize;
    let mut crossing = 0i64;
    let mut best: Option<(usize, usize, u32)> = None;
    for i in 1u32..(1u32 << (n - 1)) {
        let v = i.trailing_zeros() as usize;
        let inside = (adj[v] & s).count_ones() as i64;
        let deg = g.degree(v) as i64;
        if s >> v & 1 == 0 {
            crossing += deg - 2 * inside;
            size += 1;
        } else {
            crossing -= deg - 2 * inside;
            size -= 1;
        }
        s ^= 1 << v;
        let denom = size * (n - size);
        let c = crossing as usize;
        if best.is_none_or(|(bc, bd, _)| ratio_lt(c, denom, bc, bd)) {
            best = Some((c, denom, s));
        }
    }
    let (c, d, mask) = best.expect("n >= 2");
    let in1: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
    Ok((c as f64 / d as f64, Some(Cut::from_mask(g, &in1))))
}

fn laplacian_apply(g: &Graph, x: &[f64], y: &mut [f64]) {
    for (v, yv) in y.iter_mut().enumerate() {
        let nb: f64 = g.neighbors(v).iter().map(|&w| x[w]).sum();
        *yv = g.degree(v) as f64 * x[v] - nb;
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients for `Lx = b` on the complement of the constant vector.
fn cg_solve(g: &Graph, b: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    remove_mean(&mut r);
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let b_norm = dot(&r, &r).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * b_norm {
            break;
        }
        laplacian_apply(g, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let a = rr / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        remove_mean(&mut r);
        let rr2 = dot(&r, &r);
        let beta = rr2 / rr;
        rr = rr2;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    remove_mean(&mut x);
    x
}

/// Approximate Fiedler vector by inverse power iteration from a random start.
fn fiedler(g: &Graph, seed: Seed) -> Vec<f64> {
    let n = g.n();
    let mut rng = seed.rng();
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    remove_mean(&mut x);
    for _ in 0..12 {
        let norm = dot(&x, &x).sqrt();
        if norm == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        x = cg_solve(g, &x, 1e-6, 150);
    }
    x
}

/// Sweep over prefixes of `order`, returning the mask of the best prefix.
fn sweep(g: &Graph, order: &[usize]) -> Vec<bool> {
    let n = g.n();
    let mut in1 = vec![false; n];
    let mut crossing = 0i64;
    let mut best = (usize::MAX, 1usize, 0usize);
    for (i, &v) in order[..n - 1].iter().enumerate() {
        let inside = g.neighbors(v).iter().filter(|&&w| in1[w]).count() as i64;
        crossing += g.degree(v) as i64 - 2 * inside;
        in1[v] = true;
        let size = i + 1;
        let denom = size * (n - size);
        if best.0 == usize::MAX || ratio_lt(crossing as usize, denom, best.0, best.1) {
            best = (crossing as usize, denom, size);
        }
    }
    let mut out = vec![false; n];
    for &v in &order[..best.2] {
        out[v] = true;
    }
    out
}

/// Single-vertex moves, lowest id first, while the ratio strictly drops.
fn improve(g: &Graph, in1: &mut [bool]) {
    let n = g.n();
    let mut size1 = in1.iter().filter(|&&b| b).count();
    let mut into1: Vec<usize> = (0..n).map(|v| g.neighbors(v).iter().filter(|&&w| in1[w]).count()).collect();
    let mut crossing: usize = (0..n).filter(|&v| in1[v]).map(|v| g.degree(v) - into1[v]).sum();
    let mut moves = 0;
    let mut changed = true;
    while changed && moves < 4 * n {
        changed = false;
        for v in 0..n {
            let (new_size, new_cross) = if in1[v] {
                if size1 == 1 {
                    continue;
                }
                // v leaves side 1: its edges into side 1 start crossing.
                (size1 - 1, crossing + 2 * into1[v] - g.degree(v))
            } else {
                if size1 == n - 1 {
                    continue;
                }
                (size1 + 1, crossing + g.degree(v) - 2 * into1[v])
            };
            if ratio_lt(new_cross, new_size * (n - new_size), crossing, size1 * (n - size1)) {
                let entering = !in1[v];
                in1[v] = entering;
                for &w in g.neighbors(v) {
                    if entering {
                        into1[w] += 1;
                    } else {
                        into1[w] -= 1;
                    }
                }
                size1 = new_size;
                crossing = new_cross;
                moves += 1;
                changed = true;
            }
        }
    }
}

/// Looks for a cut with ratio below `q`. A disconnected graph yields its first
/// component against the rest. Otherwise each of `budget` restarts sweeps an
/// approximate Fiedler vector and improves the best prefix by single-vertex
/// moves. Returns the lowest-ratio cut found, recounted, if it beats `q`.
pub fn sparse_cut_search(g: &Graph, q: f64, budget: usize, seed: Seed) -> Option<Cut> {
    let n = g.n();
    if n < 2 {
        return None;
    }
    let comps = g.components();
    if comps.len() > 1 {
        let in1 = crate::graph::mask_of(n, comps[0].iter().copied());
        let cut = Cut::from_mask(g, &in1);
        return (cut.ratio < q).then_some(cut);
    }
    let best = (0..budget.max(1))
        .into_par_iter()
        .map(|r| {
            let x = fiedler(g, seed.derive(r as u64));
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            let mut in1 = sweep(g, &order);
            improve(g, &mut in1);
            (Cut::from_mask(g, &in1), r)
        })
        .reduce_with(|a, b| {
            let (ca, cb) = (&a.0, &b.0);
            let da = ca.side1.len() * ca.side2.len();
            let db = cb.side1.len() * cb.side2.len();
            if ratio_lt(cb.crossing, db, ca.crossing, da) || (!ratio_lt(ca.crossing, da, cb.crossing, db) && b.1 < a.1)
            {
                b
            } else {
                a
            }
        })?
        .0;
    (best.ratio < q && best.recount(g)).then_some(best)
}

/// Exact verdict for `n ≤ 20`; otherwise a found cut or `Unknown`.
pub fn certify_expander(g: &Graph, q: f64, seed: Seed) -> ExpansionVerdict {
    certify_expander_with(g, q, DEFAULT_CUT_BUDGET, seed)
}

pub fn certify_expander_with(g: &Graph, q: f64, budget: usize, seed: Seed) -> ExpansionVerdict {
    let kind = if g.n() <= EXACT_MAX_N {
        let (q_star, cut) = expansion_exact(g).expect("within exact limit");
        match cut {
            Some(cut) if q_star < q => VerdictKind::CutFound { cut },
            _ => VerdictKind::CertifiedExact { q_star },
        }
    } else {
        match sparse_cut_search(g, q, budget, seed) {
            Some(cut) => VerdictKind::CutFound { cut },
            None => VerdictKind::Unknown,
        }
    };
    ExpansionVerdict { kind, threshold_tested: q }
}

/// Checks `e(A, V∖A) ≥ (αnp − β)|A|` after verifying every `a ∈ A` has
/// `deg(a) ≥ |A|p + αnp`.
pub fn edges_out_bound_check(
    g: &Graph,
    a: &VertexSet,
    alpha: f64,
    n: usize,
    p: f64,
    beta: f64,
) -> Result<bool, ExpanderError> {
    let required = a.len() as f64 * p + alpha * n as f64 * p;
    let in_a = a.mask(g.n());
    for v in a.iter() {
        g.check_vertex(v)?;
        if (g.degree(v) as f64) < required {
            return Err(ExpanderError::DegreePrecondition { vertex: v, degree: g.degree(v), required });
        }
    }
    let out: usize = a.iter().map(|v| g.neighbors(v).iter().filter(|&&w| !in_a[w]).count()).sum();
    Ok(out as f64 >= (alpha * n as f64 * p - beta) * a.len() as f64)
}

/// Result of the max-cut bipartite extraction.
#[derive(Debug, Clone)]
pub struct BipartiteSplit {
    /// `true` for side A.
    pub side: Vec<bool>,
    pub a: VertexSet,
    pub b: VertexSet,
    /// Spanning subgraph keeping only A–B edges.
    pub subgraph: Graph,
    pub crossing: usize,
    pub verdict: Option<ExpansionVerdict>,
}

/// Max-cut local search: from a random side assignment, move any vertex with
/// more neighbours on its own side (lowest id first) until none remains. The
/// best of `restarts` runs is kept. When `q` is given, `G[A, B]` is certified
/// at `q/2` and the verdict attached.
pub fn bipartite_expander_subgraph(g: &Graph, restarts: usize, q: Option<f64>, seed: Seed) -> BipartiteSplit {
    let n = g.n();
    let (side, crossing) = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.derive(r as u64).rng();
            let mut side: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let mut same: Vec<usize> =
                (0..n).map(|v| g.neighbors(v).iter().filter(|&&w| side[w] == side[v]).count()).collect();
            let mut changed = true;
            while changed {
                changed = false;
                for v in 0..n {
                    let d = g.degree(v);
                    if 2 * same[v] > d {
                        side[v] = !side[v];
                        same[v] = d - same[v];
                        for &w in g.neighbors(v) {
                            if side[w] == side[v] {
                                same[w] += 1;
                            } else {
                                same[w] -= 1;
                            }
                        }
                        changed = true;
                    }
                }
            }
            let crossing = (g.m() * 2 - same.iter().sum::<usize>()) / 2;
            (side, crossing, r)
        })
        .reduce_with(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.2 < a.2) { b } else { a })
        .map(|(s, c, _)| (s, c))
        .unwrap_or((Vec::new(), 0));
    let subgraph = g.filter_edges(|u, v| side[u] != side[v]);
    let verdict = q.map(|q| certify_expander(&subgraph, q / 2.0, seed.derive_str("bipartite-verdict")));
    BipartiteSplit {
        a: VertexSet::from_mask(&side),
        b: VertexSet::from_iter_unchecked((0..n).filter(|&v| !side[v])),
        side,
        subgraph,
        crossing,
        verdict,
    }
}
