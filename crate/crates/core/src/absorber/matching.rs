//! Hopcroft–Karp maximum bipartite matching.

use std::collections::VecDeque;

const NONE: usize = usize::MAX;

/// Maximum matching between left vertices `0..adj.len()` and right vertices
/// `0..n_right`. Returns `mate[l]`, the right partner of `l` or `usize::MAX`.
pub fn max_matching(adj: &[Vec<usize>], n_right: usize) -> Vec<usize> {
    let n_left = adj.len();
    let mut mate_l = vec![NONE; n_left];
    let mut mate_r = vec![NONE; n_right];
    // Greedy start.
    for l in 0..n_left {
        if let Some(&r) = adj[l].iter().find(|&&r| mate_r[r] == NONE) {
            mate_l[l] = r;
            mate_r[r] = l;
        }
    }
    let mut dist = vec![0usize; n_left];
    loop {
        // BFS layers from free left vertices.
        let mut queue = VecDeque::new();
        for l in 0..n_left {
            if mate_l[l] == NONE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = NONE;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let next = mate_r[r];
                if next == NONE {
                    found = true;
                } else if dist[next] == NONE {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; n_left];
        for l in 0..n_left {
            if mate_l[l] == NONE {
                augment(l, adj, &mut mate_l, &mut mate_r, &mut dist, &mut it);
            }
        }
    }
    mate_l
}

fn augment(
    root: usize,
    adj: &[Vec<usize>],
    mate_l: &mut [usize],
    mate_r: &mut [usize],
    dist: &mut [usize],
    it: &mut [usize],
) -> bool {
    // Iterative DFS along the BFS layering.
    let mut stack = vec![root];
    while let Some(&l) = stack.last() {
        if it[l] >= adj[l].len() {
            dist[l] = NONE;
            stack.pop();
            continue;
        }
        let r = adj[l][it[l]];
        it[l] += 1;
        let next = mate_r[r];
        if next == NONE {
            // Flip the alternating path recorded on the stack.
            let mut r = r;
            while let Some(l) = stack.pop() {
                let prev = mate_l[l];
                mate_l[l] = r;
                mate_r[r] = l;
                r = prev;
            }
            return true;
        }
        if dist[next] == dist[l] + 1 {
            stack.push(next);
        }
    }
    false
}

pub fn matching_size(mate: &[usize]) -> usize {
    mate.iter().filter(|&&r| r != NONE).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(adj: &[Vec<usize>], n_right: usize) -> usize {
        fn go(adj: &[Vec<usize>], i: usize, used: &mut Vec<bool>) -> usize {
            if i == adj.len() {
                return 0;
            }
            let mut best = go(adj, i + 1, used);
            for &r in &adj[i] {
                if !used[r] {
                    used[r] = true;
                    best = best.max(1 + go(adj, i + 1, used));
                    used[r] = false;
                }
            }
            best
        }
        go(adj, 0, &mut vec![false; n_right])
    }

    #[test]
    fn agrees_with_brute_force() {
        use rand::Rng;
        let mut rng = crate::rng::Seed(9).rng();
        for _ in 0..300 {
            let nl = rng.gen_range(0..7);
            let nr = rng.gen_range(1..7);
            let adj: Vec<Vec<usize>> = (0..nl).map(|_| (0..nr).filter(|_| rng.gen_bool(0.35)).collect()).collect();
            let mate = max_matching(&adj, nr);
            assert_eq!(matching_size(&mate), brute_force(&adj, nr));
            let mut seen = vec![false; nr];
            for (l, &r) in mate.iter().enumerate() {
                if r != NONE {
                    assert!(adj[l].contains(&r) && !std::mem::replace(&mut seen[r], true));
                }
            }
        }
    }
}
