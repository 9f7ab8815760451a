//! Robust bipartite template: after deleting any balanced set of flexible
//! vertices, what remains still has a perfect matching.
//!
//! `H` is the union of `r` random perfect matchings between two `n`-sets.
//! Every vertex of `H` is then duplicated, so an edge of `H` becomes four
//! edges. Template ids: side A is `0..2n` (copy `c` of `i` is `c·n + i`), side
//! B is `2n..4n` likewise, and the flexible halves are the copy-0 vertices.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matching::max_matching;
use super::AbsorberError;
use crate::graph::{Graph, VertexSet};
use crate::rng::Seed;

pub const MAX_RESAMPLES: usize = 50;
pub const EXHAUSTIVE_MAX_N: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TemplateCheck {
    /// Every balanced deletion set.
    Exhaustive,
    /// Random balanced deletion sets.
    Sampled {
        samples: usize,
    },
    /// Exhaustive for `n ≤ 6`, otherwise sampled.
    Auto {
        samples: usize,
    },
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateGraph {
    pub size_n: usize,
    pub matchings_used: usize,
    /// Edges `(a, b)` with `a ∈ 0..2n`, `b ∈ 2n..4n`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub attempts: usize,
}

impl TemplateGraph {
    fn from_h(n: usize, r: usize, h: &[(usize, usize)], attempts: usize) -> Self {
        let mut edges = Vec::with_capacity(4 * h.len());
        for &(a, b) in h {
            for ca in 0..2 {
                for cb in 0..2 {
                    edges.push((ca * n + a, 2 * n + cb * n + b));
                }
            }
        }
        edges.sort_unstable();
        TemplateGraph { size_n: n, matchings_used: r, edges, attempts }
    }

    pub fn vertex_count(&self) -> usize {
        4 * self.size_n
    }

    pub fn bip_a(&self) -> std::ops::Range<usize> {
        0..2 * self.size_n
    }

    pub fn bip_b(&self) -> std::ops::Range<usize> {
        2 * self.size_n..4 * self.size_n
    }

    pub fn flex_a(&self) -> std::ops::Range<usize> {
        0..self.size_n
    }

    pub fn flex_b(&self) -> std::ops::Range<usize> {
        2 * self.size_n..3 * self.size_n
    }

    pub fn is_flex(&self, v: usize) -> bool {
        self.flex_a().contains(&v) || self.flex_b().contains(&v)
    }

    /// The other copy of a template vertex.
    pub fn twin(&self, v: usize) -> usize {
        let n = self.size_n;
        let (base, local) = if v < 2 * n { (0, v) } else { (2 * n, v - 2 * n) };
        base + (local + n) % (2 * n)
    }

    pub fn graph(&self) -> Graph {
        Graph::from_unique_edges(self.vertex_count(), self.edges.iter().copied())
    }

    pub fn max_degree(&self) -> usize {
        self.graph().max_degree()
    }

    /// Perfect matching of the template minus `z`, as `(a, b)` pairs.
    pub fn matching_without(&self, z: &VertexSet) -> Result<Vec<(usize, usize)>, AbsorberError> {
        let n = self.size_n;
        if let Some(v) = z.iter().find(|&v| !self.is_flex(v)) {
            return Err(AbsorberError::NotAbsorbable(format!("template vertex {v} is not flexible")));
        }
        let za = z.iter().filter(|&v| v < n).count();
        if za != z.len() - za {
            return Err(AbsorberError::UnbalancedAbsorptionRequest { a: za, b: z.len() - za });
        }
        let removed = z.mask(4 * n);
        let mut adj = vec![Vec::new(); 2 * n];
        for &(a, b) in &self.edges {
            if !removed[a] && !removed[b] {
                adj[a].push(b - 2 * n);
            }
        }
        let mate = max_matching(&adj, 2 * n);
        let mut out = Vec::with_capacity(2 * n - za);
        for a in 0..2 * n {
            if removed[a] {
                continue;
            }
            if mate[a] == usize::MAX {
                return Err(AbsorberError::NoMatching);
            }
            out.push((a, 2 * n + mate[a]));
        }
        Ok(out)
    }

    fn passes(&self, check: TemplateCheck, seed: Seed) -> bool {
        let n = self.size_n;
        let exhaustive = match check {
            TemplateCheck::Skip => return true,
            TemplateCheck::Exhaustive => true,
            TemplateCheck::Auto { .. } => n <= EXHAUSTIVE_MAX_N,
            TemplateCheck::Sampled { .. } => false,
        };
        if exhaustive {
            let sets: Vec<(u32, u32)> = (0u32..1 << n)
                .flat_map(|sa| {
                    (0u32..1 << n).filter(move |sb| sb.count_ones() == sa.count_ones()).map(move |sb| (sa, sb))
                })
                .collect();
            sets.par_iter().all(|&(sa, sb)| {
                let z = VertexSet::from_iter_unchecked(
                    (0..n).filter(|&i| sa >> i & 1 == 1).chain((0..n).filter(|&i| sb >> i & 1 == 1).map(|i| 2 * n + i)),
                );
                self.matching_without(&z).is_ok()
            })
        } else {
            let samples = match check {
                TemplateCheck::Sampled { samples } | TemplateCheck::Auto { samples } => samples,
                _ => 0,
            };
            (0..samples).into_par_iter().all(|s| {
                let z = random_balanced(n, seed.derive(s as u64));
                self.matching_without(&z).is_ok()
            })
        }
    }
}

/// Uniform size `j ∈ 0..=n`, then uniform `j`-subsets of both flexible halves.
pub fn random_balanced(n: usize, seed: Seed) -> VertexSet {
    let mut rng = seed.rng();
    let j = rng.gen_range(0..=n);
    let a = rand::seq::index::sample(&mut rng, n, j).into_vec();
    let b = rand::seq::index::sample(&mut rng, n, j).into_vec();
    VertexSet::from_iter_unchecked(a.into_iter().chain(b.into_iter().map(|i| 2 * n + i)))
}

fn random_h(n: usize, r: usize, seed: Seed) -> Vec<(usize, usize)> {
    let mut rng = seed.rng();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut h = Vec::with_capacity(n * r);
    for _ in 0..r {
        perm.shuffle(&mut rng);
        h.extend(perm.iter().enumerate().map(|(a, &b)| (a, b)));
    }
    h.sort_unstable();
    h.dedup();
    h
}

/// Samples templates until one passes `check`, at most [`MAX_RESAMPLES`] times.
pub fn build_template(n: usize, r: usize, seed: Seed, check: TemplateCheck) -> Result<TemplateGraph, AbsorberError> {
    if n == 0 || r == 0 {
        return Err(AbsorberError::Precondition("template needs n ≥ 1 and r ≥ 1".into()));
    }
    for attempt in 0..MAX_RESAMPLES {
        let s = seed.derive(attempt as u64);
        let t = TemplateGraph::from_h(n, r, &random_h(n, r, s), attempt + 1);
        if t.passes(check, s.derive_str("check")) {
            return Ok(t);
        }
    }
    Err(AbsorberError::TemplateResampleExceeded { attempts: MAX_RESAMPLES })
}

/// Standalone matching query on a template.
pub fn template_matching(tpl: &TemplateGraph, z: &VertexSet) -> Result<Vec<(usize, usize)>, AbsorberError> {
    tpl.matching_without(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair_template() {
        let t = build_template(1, 1, Seed(0), TemplateCheck::Exhaustive).unwrap();
        assert_eq!(t.edges.len(), 4);
        assert_eq!(t.attempts, 1);
        assert_eq!(t.matching_without(&VertexSet::empty()).unwrap().len(), 2);
        assert_eq!(t.matching_without(&VertexSet::from_iter_unchecked([0, 2])).unwrap(), vec![(1, 3)]);
    }

    #[test]
    fn twins_share_neighbourhoods() {
        let t = build_template(5, 3, Seed(1), TemplateCheck::Skip).unwrap();
        let g = t.graph();
        for v in 0..20 {
            assert_eq!(g.neighbors(v), g.neighbors(t.twin(v)));
            assert_eq!(t.twin(t.twin(v)), v);
        }
        assert!(t.max_degree() <= 6);
    }

    #[test]
    fn unbalanced_and_inflexible_requests() {
        let t = build_template(3, 4, Seed(2), TemplateCheck::Exhaustive).unwrap();
        assert!(matches!(
            t.matching_without(&VertexSet::from_iter_unchecked([0])),
            Err(AbsorberError::UnbalancedAbsorptionRequest { a: 1, b: 0 })
        ));
        assert!(matches!(
            t.matching_without(&VertexSet::from_iter_unchecked([3, 6])),
            Err(AbsorberError::NotAbsorbable(_))
        ));
    }

    #[test]
    fn single_matching_is_not_robust() {
        // With r = 1, H is a perfect matching and deleting a0, b1 strands a1's twins.
        assert!(matches!(
            build_template(2, 1, Seed(3), TemplateCheck::Exhaustive),
            Err(AbsorberError::TemplateResampleExceeded { .. })
        ));
    }
}
