//! Certifying and refuting `(p, β)`-sparseness: for all `X, Y ⊆ V`,
//! `e(X, Y) ≤ p|X||Y| + β√(|X||Y|)`.
//!
//! Three regimes. [`check_sparse_exact`] enumerates every `X` and, for each
//! `X`, only the best `Y` of each size: the `t` vertices with most neighbours in
//! `X` maximize `e(X, Y)` among `|Y| = t`. [`spectral_beta`] bounds the whole
//! family at once through `e(X, Y) = ⟨1_X, A 1_Y⟩ ≤ p|X||Y| + ‖A − pJ‖√(|X||Y|)`.
//! [`violation_search`] is a local-search refuter for large graphs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{edge_count_between, Graph, GraphError, VertexSet};
use crate::rng::Seed;

pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseMethod {
    Exact,
    Spectral,
    Heuristic,
}

/// A pair `(X, Y)` with `e(X, Y) > p|X||Y| + β√(|X||Y|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: VertexSet,
    pub y: VertexSet,
    pub edges: usize,
    pub excess: f64,
}

impl Witness {
    /// Recounts `e(X, Y)` and the excess from scratch.
    pub fn verify(&self, g: &Graph, p: f64, beta: f64) -> bool {
        match edge_count_between(g, &self.x, &self.y) {
            Ok(e) => excess(e, self.x.len(), self.y.len(), p, beta) > 0.0,
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBound {
    /// Estimate of `‖A − pJ‖`.
    pub beta: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the estimate in the last iteration.
    pub achieved_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsenessCertificate {
    pub p: f64,
    pub beta: f64,
    pub method: SparseMethod,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralBound>,
}

impl SparsenessCertificate {
    /// Whether the certificate proves sparseness at `beta2`. A sound
    /// certificate at `β` covers every `β' ≥ β`; heuristic runs prove nothing.
    pub fn certifies(&self, beta2: f64) -> bool {
        self.witness.is_none() && self.method != SparseMethod::Heuristic && beta2 >= self.beta
    }
}

#[inline]
fn excess(e: usize, sx: usize, sy: usize, p: f64, beta: f64) -> f64 {
    let s = (sx * sy) as f64;
    e as f64 - p * s - beta * s.sqrt()
}

/// For fixed `X` (given by its neighbour counts `d`), the best `Y` of every
/// size is a prefix of the vertices sorted by `d` descending. Returns
/// `(excess, t, order)` for the best prefix length `t ≥ 1`.
fn best_response(d: &[usize], sx: usize, p: f64, beta: f64) -> (f64, usize, Vec<usize>) {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[b].cmp(&d[a]).then(a.cmp(&b)));
    let mut best = (f64::NEG_INFINITY, 0);
    let mut e = 0;
    for (i, &v) in order.iter().enumerate() {
        e += d[v];
        let val = excess(e, sx, i + 1, p, beta);
        if val > best.0 {
            best = (val, i + 1);
        }
    }
    (best.0, best.1, order)
}

fn neighbour_counts(g: &Graph, x: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut d = vec![0; g.n()];
    for v in x {
        for &w in g.neighbors(v) {
            d[w] += 1;
        }
    }
    d
}

/// Exhaustive check for `n ≤ 20`. The witness, if any, maximizes the excess;
/// ties go to the numerically smallest `X` mask, then the smallest `|Y|`.
pub fn check_sparse_exact(g: &Graph, p: f64, beta: f64) -> Result<SparsenessCertificate, GraphError> {
    let n = g.n();
    if n > EXACT_MAX_N {
        return Err(GraphError::SizeLimit { n, limit: EXACT_MAX_N });
    }
    let adj: Vec<u32> = (0..n).map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w))).collect();
    let best = (1u32..(1u32 << n))
        .into_par_iter()
        .map(|xm| {
            let d: Vec<usize> = adj.iter().map(|&a| (a & xm).count_ones() as usize).collect();
            let (val, t, _) = best_response(&d, xm.count_ones() as usize, p, beta);
            (val, xm, t)
        })
        .reduce(|| (f64::NEG_INFINITY, u32::MAX, 0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let witness = (n > 0 && best.0 > 0.0).then(|| {
        let x = VertexSet::from_iter_unchecked((0..n).filter(|&v| best.1 >> v & 1 == 1));
        let d = neighbour_counts(g, x.iter());
        let (_, t, order) = best_response(&d, x.len(), p, beta);
        let y = VertexSet::from_iter_unchecked(order[..t].iter().copied());
        let edges = edge_count_between(g, &x, &y).expect("in range");
        Witness { excess: excess(edges, x.len(), y.len(), p, beta), x, y, edges }
    });
    Ok(SparsenessCertificate { p, beta, method: SparseMethod::Exact, witness, spectral: None })
}

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITERS: usize = 20_000;

/// `y = (A − pJ) x`, computed as `Ax − p(Σx)·1` in `O(n + m)`.
fn apply_shifted(g: &Graph, p: f64, x: &[f64], y: &mut [f64]) {
    let shift = p * x.iter().sum::<f64>();
    for (v, yv) in y.iter_mut().enumerate() {
        *yv = g.neighbors(v).iter().map(|&w| x[w]).sum::<f64>() - shift;
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// `‖A − pJ‖` by power iteration on `(A − pJ)²`, matrix-free. The graph is
/// then `(p, β)`-sparse for `β` equal to the returned value.
pub fn spectral_beta(g: &Graph, p: f64) -> SpectralBound {
    let n = g.n();
    if n == 0 {
        return SpectralBound { beta: 0.0, iterations: 0, converged: true, achieved_tolerance: 0.0 };
    }
    // Fixed irregular start vector so the run is reproducible and unlikely to
    // be orthogonal to the top eigenvector.
    let mut rng = Seed(0x5eed).rng();
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    normalize(&mut x);
    let mut tmp = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut est = 0.0f64;
    let mut rel = f64::INFINITY;
    for it in 1..=POWER_MAX_ITERS {
        apply_shifted(g, p, &x, &mut tmp);
        apply_shifted(g, p, &tmp, &mut y);
        // Rayleigh quotient of M² at unit x equals ‖Mx‖².
        let sq: f64 = tmp.iter().map(|v| v * v).sum();
        let next = sq.sqrt();
        let norm = normalize(&mut y);
        rel = if next > 0.0 { (next - est).abs() / next } else { 0.0 };
        est = est.max(next);
        if norm == 0.0 {
            return SpectralBound { beta: 0.0, iterations: it, converged: true, achieved_tolerance: 0.0 };
        }
        std::mem::swap(&mut x, &mut y);
        if rel < POWER_TOL && it > 2 {
            return SpectralBound { beta: est, iterations: it, converged: true, achieved_tolerance: rel };
        }
    }
    SpectralBound { beta: est, iterations: POWER_MAX_ITERS, converged: false, achieved_tolerance: rel }
}

/// Certificate backed by the spectral bound.
pub fn certify_spectral(g: &Graph, p: f64) -> SparsenessCertificate {
    let b = spectral_beta(g, p);
    SparsenessCertificate { p, beta: b.beta, method: SparseMethod::Spectral, witness: None, spectral: Some(b) }
}

/// Alternating best-response local search for a violating pair, `budget`
/// restarts from random `X`. Any returned witness has been recounted.
pub fn violation_search(g: &Graph, p: f64, beta: f64, budget: usize, seed: Seed) -> Option<Witness> {
    let n = g.n();
    if n == 0 {
        return None;
    }
    let best = (0..budget)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = seed.derive(r as u64).rng();
            let size = rng.gen_range(1..=n);
            let mut x: Vec<usize> = rand::seq::index::sample(&mut rng, n, size).into_vec();
            x.sort_unstable();
            let mut val = f64::NEG_INFINITY;
            let mut y = Vec::new();
            for _ in 0..64 {
                let d = neighbour_counts(g, x.iter().copied());
                let (v1, t, order) = best_response(&d, x.len(), p, beta);
                let mut ny: Vec<usize> = order[..t].to_vec();
                ny.sort_unstable();
                let d2 = neighbour_counts(g, ny.iter().copied());
                let (v2, s, order2) = best_response(&d2, ny.len(), p, beta);
                let mut nx: Vec<usize> = order2[..s].to_vec();
                nx.sort_unstable();
                let improved = v2.max(v1) > val + 1e-12;
                val = val.max(v1.max(v2));
                y = ny;
                if !improved {
                    break;
                }
                x = nx;
            }
            (val > 0.0).then_some((val, r, x, y))
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })?;
    let (_, _, x, y) = best;
    let x = VertexSet::from_iter_unchecked(x);
    let y = VertexSet::from_iter_unchecked(y);
    let edges = edge_count_between(g, &x, &y).ok()?;
    let w = Witness { excess: excess(edges, x.len(), y.len(), p, beta), x, y, edges };
    (w.excess > 0.0).then_some(w)
}

/// Direct recount of the excess of `(X, Y)`.
pub fn pair_excess(g: &Graph, x: &VertexSet, y: &VertexSet, p: f64, beta: f64) -> Result<f64, GraphError> {
    Ok(excess(edge_count_between(g, x, y)?, x.len(), y.len(), p, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_is_one_sparse() {
        for n in 1..8 {
            let c = check_sparse_exact(&Graph::complete(n), 1.0, 0.0).unwrap();
            assert!(c.witness.is_none());
        }
    }

    #[test]
    fn matching_is_zero_one_sparse() {
        let g = Graph::from_edges(8, (0..4).map(|i| (2 * i, 2 * i + 1))).unwrap();
        assert!(check_sparse_exact(&g, 0.0, 1.0).unwrap().witness.is_none());
    }

    #[test]
    fn four_cycle_witness_is_whole_vertex_set() {
        let c = check_sparse_exact(&Graph::cycle(4), 0.0, 1.9).unwrap();
        let w = c.witness.unwrap();
        assert_eq!(w.x, VertexSet::full(4));
        assert_eq!(w.y, VertexSet::full(4));
        assert_eq!(w.edges, 8);
        assert!((w.excess - 0.4).abs() < 1e-12);
        assert!(check_sparse_exact(&Graph::cycle(4), 0.0, 2.0).unwrap().witness.is_none());
    }

    #[test]
    fn spectral_simple_values() {
        assert_eq!(spectral_beta(&Graph::empty(5), 0.0).beta, 0.0);
        let b = spectral_beta(&Graph::complete(7), 1.0);
        assert!((b.beta - 1.0).abs() < 1e-8, "{b:?}");
        // C4 with p = 1/2: A − J/2 has eigenvalues 0, 0, 0, −2.
        let c4 = spectral_beta(&Graph::cycle(4), 0.5);
        assert!((c4.beta - 2.0).abs() < 1e-8, "{c4:?}");
    }

    #[test]
    fn refuter_trivial_cases() {
        assert!(violation_search(&Graph::complete(10), 1.0, 0.0, 20, Seed(1)).is_none());
        assert!(violation_search(&Graph::empty(10), 0.1, 0.0, 20, Seed(1)).is_none());
    }

    #[test]
    fn certificate_monotone_in_beta() {
        let c = certify_spectral(&Graph::petersen(), 0.3);
        assert!(c.certifies(c.beta) && c.certifies(c.beta + 1.0));
        assert!(!c.certifies(c.beta - 0.1));
    }
}
