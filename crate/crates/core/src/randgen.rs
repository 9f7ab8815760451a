//! Instance generators and adversarial edge deletions.
//!
//! Every generator is a pure function of its parameters and seed. Rows of
//! `G(n, p)` use seeds derived from the row index, so output does not depend
//! on the thread count.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, GraphError};
use crate::rng::Seed;

/// Erdős–Rényi `G(n, p)`.
pub fn gnp(n: usize, p: f64, seed: Seed) -> Graph {
    let p = p.clamp(0.0, 1.0);
    let rows: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut rng = seed.derive(u as u64).rng();
            (u + 1..n).filter(|_| rng.gen_bool(p)).map(|v| (u, v)).collect()
        })
        .collect();
    Graph::from_unique_edges(n, rows.into_iter().flatten())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedInstance {
    pub graph: Graph,
    /// Block index of every vertex. Blocks are contiguous id ranges.
    pub blocks: Vec<usize>,
}

impl PlantedInstance {
    pub fn block_sets(&self) -> Vec<Vec<usize>> {
        let k = self.blocks.iter().max().map_or(0, |&b| b + 1);
        let mut out = vec![Vec::new(); k];
        for (v, &b) in self.blocks.iter().enumerate() {
            out[b].push(v);
        }
        out
    }
}

/// Disjoint union of `k` independent `G(n_i, p)` blocks; the first `n mod k`
/// blocks get one extra vertex. Block 0 uses `seed` itself, so `k = 1`
/// reproduces [`gnp`].
pub fn planted_blocks(k: usize, n: usize, p: f64, seed: Seed) -> PlantedInstance {
    let k = k.max(1);
    let mut graph = Graph::empty(0);
    let mut blocks = Vec::with_capacity(n);
    for i in 0..k {
        let size = n / k + usize::from(i < n % k);
        let s = if i == 0 { seed } else { seed.derive(i as u64) };
        graph = graph.disjoint_union(&gnp(size, p, s));
        blocks.extend(std::iter::repeat_n(i, size));
    }
    PlantedInstance { graph, blocks }
}

/// Random `d`-regular graph: points are paired at random while avoiding
/// loops and repeated edges, restarting when stuck.
pub fn random_regular(n: usize, d: usize, seed: Seed) -> Result<Graph, GraphError> {
    if d >= n.max(1) || (n * d) % 2 == 1 {
        return Err(GraphError::Argument(format!("no {d}-regular graph on {n} vertices")));
    }
    for attempt in 0..1000u64 {
        let mut rng = seed.derive(attempt).rng();
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut edges = std::collections::HashSet::with_capacity(n * d / 2);
        let mut stuck = false;
        while !points.is_empty() {
            let mut placed = false;
            for _ in 0..100 {
                let i = rng.gen_range(0..points.len());
                let j = rng.gen_range(0..points.len());
                let (u, v) = (points[i], points[j]);
                if i == j || u == v || edges.contains(&(u.min(v), u.max(v))) {
                    continue;
                }
                edges.insert((u.min(v), u.max(v)));
                let (hi, lo) = (i.max(j), i.min(j));
                points.swap_remove(hi);
                points.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed {
                stuck = true;
                break;
            }
        }
        if !stuck {
            let mut list: Vec<_> = edges.into_iter().collect();
            list.sort_unstable();
            return Ok(Graph::from_unique_edges(n, list));
        }
    }
    Err(GraphError::Argument(format!("could not sample a {d}-regular graph on {n} vertices")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum Strategy {
    /// Uniformly random edge order.
    RandomDeletion,
    /// Edges inside the two halves of a random bisection.
    BipartiteSplit,
    /// Edges between the parts of a random balanced `parts`-partition.
    CliqueSplit { parts: usize },
    /// Lowest-degree vertices first, each shedding edges to its
    /// highest-degree neighbours.
    TargetedMinDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adversary {
    #[serde(flatten)]
    pub strategy: Strategy,
    /// Resilience fraction: each vertex loses strictly fewer than `r·deg(v)` edges.
    pub r: f64,
}

/// Largest integer strictly below `r·d`.
pub fn deletion_cap(r: f64, d: usize) -> usize {
    let x = r * d as f64;
    if x <= 0.0 {
        return 0;
    }
    let c = x.ceil() as usize;
    c.saturating_sub(1)
}

pub fn apply_adversary(g: &Graph, adv: &Adversary, seed: Seed) -> Graph {
    let n = g.n();
    let cap: Vec<usize> = (0..n).map(|v| deletion_cap(adv.r, g.degree(v))).collect();
    let mut lost = vec![0usize; n];
    let mut rng = seed.rng();
    let mut removed = std::collections::HashSet::new();
    let try_delete =
        |u: usize, v: usize, lost: &mut Vec<usize>, removed: &mut std::collections::HashSet<(usize, usize)>| {
            if lost[u] < cap[u] && lost[v] < cap[v] {
                lost[u] += 1;
                lost[v] += 1;
                removed.insert((u.min(v), u.max(v)));
            }
        };
    let partition = |parts: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut label = vec![0usize; n];
        for (i, &v) in order.iter().enumerate() {
            label[v] = i % parts.max(1);
        }
        label
    };
    match adv.strategy {
        Strategy::RandomDeletion | Strategy::BipartiteSplit | Strategy::CliqueSplit { .. } => {
            let keep_inside: Option<Vec<usize>> = match adv.strategy {
                Strategy::BipartiteSplit => Some(partition(2, &mut rng)),
                Strategy::CliqueSplit { parts } => Some(partition(parts, &mut rng)),
                _ => None,
            };
            let mut edges: Vec<(usize, usize)> = g
                .edges()
                .filter(|&(u, v)| match (&keep_inside, adv.strategy) {
                    (Some(l), Strategy::BipartiteSplit) => l[u] == l[v],
                    (Some(l), _) => l[u] != l[v],
                    (None, _) => true,
                })
                .collect();
            edges.shuffle(&mut rng);
            for (u, v) in edges {
                try_delete(u, v, &mut lost, &mut removed);
            }
        }
        Strategy::TargetedMinDegree => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&v| (g.degree(v), v));
            for v in order {
                let mut nbrs = g.neighbors(v).to_vec();
                nbrs.sort_by_key(|&w| (std::cmp::Reverse(g.degree(w)), w));
                for w in nbrs {
                    if lost[v] >= cap[v] {
                        break;
                    }
                    if !removed.contains(&(v.min(w), v.max(w))) {
                        try_delete(v, w, &mut lost, &mut removed);
                    }
                }
            }
        }
    }
    g.filter_edges(|u, v| !removed.contains(&(u, v)))
}

/// First vertex whose deletion count reaches `r·deg_G(v)`, if any. Also
/// reports edges of `h` missing from `g`.
pub fn audit_deletion(g: &Graph, h: &Graph, r: f64) -> Result<(), String> {
    if g.n() != h.n() {
        return Err("vertex counts differ".into());
    }
    if let Some((u, v)) = h.edges().find(|&(u, v)| !g.has_edge(u, v)) {
        return Err(format!("edge {u}-{v} is not in the original graph"));
    }
    for v in 0..g.n() {
        let lost = g.degree(v) - h.degree(v);
        if lost > 0 && lost as f64 >= r * g.degree(v) as f64 {
            return Err(format!("vertex {v} lost {lost} of {} edges", g.degree(v)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_extremes() {
        assert_eq!(gnp(30, 0.0, Seed(1)).m(), 0);
        assert_eq!(gnp(30, 1.0, Seed(1)), Graph::complete(30));
        assert_eq!(gnp(200, 0.1, Seed(5)), gnp(200, 0.1, Seed(5)));
        assert_ne!(gnp(200, 0.1, Seed(5)), gnp(200, 0.1, Seed(6)));
    }

    #[test]
    fn gnp_edge_count_within_four_sigma() {
        let (n, p) = (2000usize, 0.05);
        let g = gnp(n, p, Seed(11));
        let pairs = (n * (n - 1) / 2) as f64;
        let sigma = (pairs * p * (1.0 - p)).sqrt();
        assert!((g.m() as f64 - pairs * p).abs() < 4.0 * sigma);
    }

    #[test]
    fn planted_examples() {
        assert_eq!(planted_blocks(1, 100, 0.2, Seed(3)).graph, gnp(100, 0.2, Seed(3)));
        let two = planted_blocks(2, 10, 1.0, Seed(0));
        assert_eq!(two.graph, Graph::complete(5).disjoint_union(&Graph::complete(5)));
        let odd = planted_blocks(3, 10, 0.5, Seed(0));
        assert_eq!(odd.block_sets().iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 3, 3]);
    }

    #[test]
    fn regular_graphs() {
        let g = random_regular(100, 6, Seed(2)).unwrap();
        assert!((0..100).all(|v| g.degree(v) == 6));
        assert!(random_regular(5, 3, Seed(0)).is_err());
    }

    #[test]
    fn caps_are_strict() {
        assert_eq!(deletion_cap(0.5, 4), 1);
        assert_eq!(deletion_cap(0.5, 5), 2);
        assert_eq!(deletion_cap(0.0, 9), 0);
        assert_eq!(deletion_cap(0.3, 1), 0);
    }

    #[test]
    fn adversaries_respect_caps() {
        let g = gnp(300, 0.1, Seed(8));
        for strategy in [
            Strategy::RandomDeletion,
            Strategy::BipartiteSplit,
            Strategy::CliqueSplit { parts: 3 },
            Strategy::TargetedMinDegree,
        ] {
            let adv = Adversary { strategy, r: 0.4 };
            let h = apply_adversary(&g, &adv, Seed(1));
            audit_deletion(&g, &h, 0.4).unwrap();
            assert!(h.m() < g.m());
            assert_eq!(h, apply_adversary(&g, &adv, Seed(1)));
        }
        let same = apply_adversary(&g, &Adversary { strategy: Strategy::RandomDeletion, r: 0.0 }, Seed(1));
        assert_eq!(same, g);
    }

    #[test]
    fn random_deletion_keeps_most_degree() {
        let g = gnp(400, 0.1, Seed(9));
        let h = apply_adversary(&g, &Adversary { strategy: Strategy::RandomDeletion, r: 0.3 }, Seed(2));
        assert!((0..400).all(|v| h.degree(v) as f64 > 0.7 * g.degree(v) as f64));
    }
}
