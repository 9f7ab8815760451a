//! Exhaustive cycle-cover search for tiny graphs.
//!
//! `reach[S]` holds, as a bitmask, every vertex `v` such that `G[S]` has a
//! Hamilton path from the lowest vertex of `S` to `v`. A set `S` with at least
//! three vertices spans a cycle iff some such `v` is adjacent to that lowest
//! vertex. A second DP over vertex masks then finds the fewest spanning-cycle
//! sets whose union is everything; cycles may overlap.

use super::{Cycle, CycleCover, Graph, GraphError};

pub const ORACLE_MAX_N: usize = 12;

fn adjacency_masks(g: &Graph) -> Vec<u32> {
    (0..g.n()).map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w))).collect()
}

fn path_reach(g: &Graph) -> (Vec<u32>, Vec<u32>) {
    let n = g.n();
    let adj = adjacency_masks(g);
    let mut reach = vec![0u32; 1 << n];
    for v in 0..n {
        reach[1 << v] = 1 << v;
    }
    for s in 1u32..(1 << n) {
        let r = reach[s as usize];
        if r == 0 {
            continue;
        }
        let low = s.trailing_zeros();
        // Extend only with vertices above the start so it stays the minimum.
        let mut ends = r;
        while ends != 0 {
            let v = ends.trailing_zeros() as usize;
            ends &= ends - 1;
            let mut ext = adj[v] & !s & !((1u32 << (low + 1)) - 1);
            while ext != 0 {
                let w = ext.trailing_zeros();
                ext &= ext - 1;
                reach[(s | (1 << w)) as usize] |= 1 << w;
            }
        }
    }
    (reach, adj)
}

/// Every vertex set (as bitmask) whose induced subgraph is Hamiltonian.
/// Refuses graphs above [`ORACLE_MAX_N`] vertices.
pub fn hamiltonian_subsets(g: &Graph) -> Result<Vec<u32>, GraphError> {
    if g.n() > ORACLE_MAX_N {
        return Err(GraphError::SizeLimit { n: g.n(), limit: ORACLE_MAX_N });
    }
    let (reach, adj) = path_reach(g);
    Ok(spanning_cycle_sets(&reach, &adj))
}

fn spanning_cycle_sets(reach: &[u32], adj: &[u32]) -> Vec<u32> {
    (1u32..reach.len() as u32)
        .filter(|&s| s.count_ones() >= 3 && reach[s as usize] & adj[s.trailing_zeros() as usize] != 0)
        .collect()
}

/// True iff `V(G)` is covered by at most `k - 1` cycles of `G`.
pub fn exact_cycle_cover_oracle(g: &Graph, k: usize) -> Result<bool, GraphError> {
    Ok(exact_cycle_cover_witness(g, k)?.is_some())
}

/// A cover using the fewest cycles, if that number is at most `k - 1`.
pub fn exact_cycle_cover_witness(g: &Graph, k: usize) -> Result<Option<CycleCover>, GraphError> {
    let n = g.n();
    if n > ORACLE_MAX_N {
        return Err(GraphError::SizeLimit { n, limit: ORACLE_MAX_N });
    }
    let (reach, adj) = path_reach(g);
    let sets = spanning_cycle_sets(&reach, &adj);
    let full = ((1u64 << n) - 1) as usize;
    const INF: u8 = u8::MAX;
    let mut best = vec![INF; full + 1];
    let mut choice = vec![0u32; full + 1];
    best[0] = 0;
    for mask in 1..=full {
        let low = 1u32 << (mask as u32).trailing_zeros();
        for &s in &sets {
            if s & low == 0 {
                continue;
            }
            let rest = mask & !(s as usize);
            if best[rest] != INF && best[rest] + 1 < best[mask] {
                best[mask] = best[rest] + 1;
                choice[mask] = s;
            }
        }
    }
    if best[full] == INF || best[full] as usize > k.saturating_sub(1) {
        return Ok(None);
    }
    let mut cycles = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let s = choice[mask];
        cycles.push(Cycle(cycle_order(s, &reach, &adj)));
        mask &= !(s as usize);
    }
    Ok(Some(CycleCover { cycles, k }))
}

fn cycle_order(s: u32, reach: &[u32], adj: &[u32]) -> Vec<usize> {
    let start = s.trailing_zeros() as usize;
    let mut v = (reach[s as usize] & adj[start]).trailing_zeros() as usize;
    let mut rest = s;
    let mut order = Vec::with_capacity(s.count_ones() as usize);
    while v != start {
        order.push(v);
        rest &= !(1 << v);
        v = (reach[rest as usize] & adj[v]).trailing_zeros() as usize;
    }
    order.push(start);
    order.reverse();
    order
}
