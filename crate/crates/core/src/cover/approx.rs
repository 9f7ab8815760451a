//! Approximate cycle covers and their boosting into full path-forest covers.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rotation::{approx_paths, chord_cycle, close_path, insert_vertex};
use super::CoverError;
use crate::graph::{Cycle, Graph, Path, PathForest};
use crate::rng::Seed;

/// Up to `k - 1` vertex-disjoint cycles leaving at most `μn` vertices
/// uncovered. Each cycle is grown as a path by extension and rotation, then
/// closed by rotating until the ends meet (or, failing that, cut at the
/// longest chord). `restarts` independent attempts run; the best is kept.
pub fn approx_cycle_cover(g: &Graph, k: usize, mu: f64, restarts: usize, seed: Seed) -> Result<Vec<Cycle>, CoverError> {
    if k < 2 {
        return Err(CoverError::Precondition(format!("k = {k}, at least 2 required")));
    }
    let n = g.n();
    let allowed = (mu.max(0.0) * n as f64 + 1e-9).floor() as usize;
    let rotations = 4 * n + 100;
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.derive(r as u64).rng();
            let mut active = vec![true; n];
            let mut cycles = Vec::new();
            for _ in 0..k - 1 {
                let Some(path) = approx_paths(g, &active, 1, rotations, &mut rng).pop() else { break };
                let cycle = match close_path(g, path, rotations, &mut rng) {
                    Ok(c) => Some(c),
                    Err(p) => chord_cycle(g, &p).map(|(i, j)| p[i..=j].to_vec()),
                };
                if let Some(c) = cycle {
                    for &v in &c {
                        active[v] = false;
                    }
                    cycles.push(Cycle(c));
                }
            }
            let leftover = active.iter().filter(|&&a| a).count();
            (leftover, r, cycles)
        })
        .min_by_key(|(leftover, r, _)| (*leftover, *r))
        .expect("at least one restart");
    let (leftover, _, cycles) = best;
    if leftover > allowed {
        return Err(CoverError::CoverageShortfall { leftover, allowed });
    }
    Ok(cycles)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    /// Levels stop halving once `n / 2^(m-1)` would drop to this size.
    pub level_floor: usize,
    /// Rotations allowed per stall during path growth.
    pub rotations: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { level_floor: 100, rotations: 2000 }
    }
}

/// Number of levels: the largest `m` with `n / 2^(m-1) > floor`, at least 1.
pub fn level_count(n: usize, floor: usize) -> usize {
    let mut m = 1;
    while (n as f64) / 2f64.powi(m as i32) > floor as f64 {
        m += 1;
    }
    m
}

/// `k - 1` vertex-disjoint path forests covering `V(G)`.
///
/// Vertices are split at random into levels of sizes `⌊n/2⌋, ⌊n/4⌋, …` and a
/// final remainder. Level `i` together with the vertices left over so far is
/// covered approximately by `k - 1` paths, one per forest; whatever stays
/// uncovered moves on to the next level. Final leftovers are inserted into
/// existing paths (see [`insert_vertex`]) or appended at a path end, and
/// otherwise become single-vertex paths of the first forest.
pub fn path_forest_cover(
    g: &Graph,
    k: usize,
    max_paths: usize,
    params: &ForestParams,
    seed: Seed,
) -> Result<Vec<PathForest>, CoverError> {
    if k < 2 {
        return Err(CoverError::Precondition(format!("k = {k}, at least 2 required")));
    }
    if max_paths == 0 {
        return Err(CoverError::Precondition("max_paths is 0".into()));
    }
    let n = g.n();
    let forests_wanted = k - 1;
    let mut forests: Vec<Vec<Vec<usize>>> = vec![Vec::new(); forests_wanted];
    if n == 0 {
        return Ok(vec![PathForest::default(); forests_wanted]);
    }
    let mut rng = seed.rng();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let m = level_count(n, params.level_floor);
    let mut levels = Vec::with_capacity(m);
    let mut at = 0;
    for i in 1..m {
        let size = n >> i;
        levels.push(order[at..at + size].to_vec());
        at += size;
    }
    levels.push(order[at..].to_vec());

    let mut leftover: Vec<usize> = Vec::new();
    for level in levels {
        let mut active = vec![false; n];
        for &v in level.iter().chain(&leftover) {
            active[v] = true;
        }
        let paths = approx_paths(g, &active, forests_wanted, params.rotations, &mut rng);
        for (j, p) in paths.into_iter().enumerate() {
            for &v in &p {
                active[v] = false;
            }
            forests[j].push(p);
        }
        leftover = (0..n).filter(|&v| active[v]).collect();
    }

    let mut stranded = Vec::new();
    for v in leftover {
        if !splice_vertex(g, &mut forests, v, true) {
            stranded.push(v);
        }
    }
    forests[0].extend(stranded.into_iter().map(|v| vec![v]));

    for (i, f) in forests.iter().enumerate() {
        if f.len() > max_paths {
            return Err(CoverError::PathBudget { forest: i, paths: f.len(), max_paths });
        }
    }
    let out: Vec<PathForest> = forests.into_iter().map(|f| PathForest(f.into_iter().map(Path).collect())).collect();
    check_forest_cover(g, &out).map_err(CoverError::Internal)?;
    Ok(out)
}

/// Inserts `v` into the first path (longest first) that admits it; see
/// [`insert_vertex`]. Ends are only extended when `at_ends` is set and no
/// interior insertion exists anywhere.
pub(super) fn splice_vertex(g: &Graph, forests: &mut [Vec<Vec<usize>>], v: usize, at_ends: bool) -> bool {
    let mut order: Vec<(usize, usize)> =
        forests.iter().enumerate().flat_map(|(f, ps)| (0..ps.len()).map(move |i| (f, i))).collect();
    order.sort_by_key(|&(f, i)| (std::cmp::Reverse(forests[f][i].len()), f, i));
    for pass_ends in [false, true] {
        if pass_ends && !at_ends {
            break;
        }
        for &(f, i) in &order {
            if forests[f][i].len() >= 2 && insert_vertex(g, &mut forests[f][i], v, pass_ends) {
                return true;
            }
        }
    }
    false
}

/// Breaks up paths shorter than `min_len` and inserts their vertices into the
/// longer paths. Short paths rotate poorly and every extra segment costs a
/// join. Vertices that fit nowhere stay behind as single-vertex paths in their
/// original forest. Returns the number of vertices placed.
pub(super) fn dissolve_short(g: &Graph, forests: &mut [Vec<Vec<usize>>], min_len: usize) -> usize {
    let mut loose: Vec<(usize, usize)> = Vec::new();
    for (f, paths) in forests.iter_mut().enumerate() {
        paths.retain(|p| {
            if p.len() < min_len {
                loose.extend(p.iter().map(|&v| (f, v)));
                false
            } else {
                true
            }
        });
    }
    if forests.iter().all(Vec::is_empty) {
        // Nothing long enough to host them; put everything back.
        for (f, v) in loose {
            forests[f].push(vec![v]);
        }
        return 0;
    }
    let mut placed = 0;
    for (f, v) in loose {
        if splice_vertex(g, forests, v, true) {
            placed += 1;
        } else {
            forests[f].push(vec![v]);
        }
    }
    placed
}

/// Moves path ends that have no neighbour on their path besides their
/// predecessor into the interior of some path. Such ends are where greedy
/// growth got stuck, and no rotation can move them. Returns the number of
/// vertices moved.
pub(super) fn tidy_ends(g: &Graph, forests: &mut [Vec<Vec<usize>>]) -> usize {
    let mut on_path = vec![usize::MAX; g.n()];
    let mut moved = 0;
    let mut id = 0;
    for f in 0..forests.len() {
        for p in 0..forests[f].len() {
            for _ in 0..2 {
                loop {
                    let path = &forests[f][p];
                    if path.len() < 4 {
                        break;
                    }
                    id += 1;
                    for &v in path {
                        on_path[v] = id;
                    }
                    let end = *path.last().expect("non-empty");
                    if g.neighbors(end).iter().filter(|&&w| on_path[w] == id).count() >= 2 {
                        break;
                    }
                    let end = forests[f][p].pop().expect("non-empty");
                    if splice_vertex(g, forests, end, false) {
                        moved += 1;
                    } else {
                        forests[f][p].push(end);
                        break;
                    }
                }
                forests[f][p].reverse();
            }
        }
    }
    moved
}

/// Each forest valid and the forests partition `V(G)`.
pub fn check_forest_cover(g: &Graph, forests: &[PathForest]) -> Result<(), String> {
    let mut seen = vec![false; g.n()];
    for (i, f) in forests.iter().enumerate() {
        f.validate(g).map_err(|e| format!("forest {i}: {e}"))?;
        for p in f.paths() {
            for &v in p.vertices() {
                if std::mem::replace(&mut seen[v], true) {
                    return Err(format!("vertex {v} lies in two forests"));
                }
            }
        }
    }
    match seen.iter().position(|&s| !s) {
        Some(v) => Err(format!("vertex {v} uncovered")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{validate_cycle_cover, CycleCover};
    use crate::randgen::{gnp, planted_blocks};

    #[test]
    fn complete_graph_hamilton_cycle() {
        let g = Graph::complete(25);
        let cycles = approx_cycle_cover(&g, 2, 0.0, 2, Seed(1)).unwrap();
        assert!(validate_cycle_cover(&g, &CycleCover { cycles, k: 2 }).pass);
    }

    #[test]
    fn two_blocks_two_cycles() {
        let inst = planted_blocks(2, 1000, 0.1, Seed(2));
        let cycles = approx_cycle_cover(&inst.graph, 3, 0.02, 2, Seed(3)).unwrap();
        assert_eq!(cycles.len(), 2);
        let covered: usize = cycles.iter().map(Cycle::len).sum();
        assert!(1000 - covered <= 20);
    }

    #[test]
    fn isolated_vertex_is_a_shortfall() {
        let g = Graph::complete(6).disjoint_union(&Graph::empty(1));
        assert!(matches!(
            approx_cycle_cover(&g, 2, 0.0, 2, Seed(0)),
            Err(CoverError::CoverageShortfall { leftover: 1, allowed: 0 })
        ));
    }

    #[test]
    fn complete_graph_single_path() {
        let g = Graph::complete(40);
        let f = path_forest_cover(&g, 2, 10, &ForestParams { level_floor: 100, rotations: 100 }, Seed(4)).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].len(), 1);
        assert_eq!(f[0].paths()[0].vertices().len(), 40);
    }

    #[test]
    fn levels_on_random_graph() {
        let g = gnp(1500, 0.03, Seed(5));
        let f = path_forest_cover(&g, 3, 50, &ForestParams::default(), Seed(6)).unwrap();
        assert_eq!(f.len(), 2);
        check_forest_cover(&g, &f).unwrap();
        // One path per level plus a few stranded singletons.
        assert!(f[0].len() <= level_count(1500, 100) + 20, "{} paths", f[0].len());
    }

    #[test]
    fn zero_path_budget() {
        assert!(matches!(
            path_forest_cover(&Graph::complete(5), 2, 0, &ForestParams::default(), Seed(0)),
            Err(CoverError::Precondition(_))
        ));
    }

    #[test]
    fn level_sizes() {
        assert_eq!(level_count(1000, 100), 4);
        assert_eq!(level_count(50, 100), 1);
    }
}
