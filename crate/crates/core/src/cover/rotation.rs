//! Path growth by extension and Pósa rotation.
//!
//! A rotation of `v₀ … v_L` at pivot `v_i` (with `v_L v_i` an edge) gives
//! `v₀ … v_i v_L v_{L-1} … v_{i+1}`: same vertex set, same start, new end
//! `v_{i+1}`. Growth extends the end while it has a free neighbour and
//! rotates when it does not.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

const NONE: usize = usize::MAX;

/// A path with a position index over the whole graph.
pub(crate) struct TrackedPath {
    pub verts: Vec<usize>,
    pos: Vec<usize>,
}

impl TrackedPath {
    pub fn new(n: usize, verts: Vec<usize>) -> Self {
        let mut pos = vec![NONE; n];
        for (i, &v) in verts.iter().enumerate() {
            pos[v] = i;
        }
        TrackedPath { verts, pos }
    }

    fn end(&self) -> usize {
        *self.verts.last().expect("non-empty path")
    }

    fn start(&self) -> usize {
        self.verts[0]
    }

    fn push(&mut self, v: usize) {
        self.pos[v] = self.verts.len();
        self.verts.push(v);
    }

    fn reverse(&mut self) {
        self.verts.reverse();
        for (i, &v) in self.verts.iter().enumerate() {
            self.pos[v] = i;
        }
    }

    /// Rotation with pivot at index `i`; the new end is the old `verts[i + 1]`.
    fn rotate(&mut self, i: usize) {
        self.verts[i + 1..].reverse();
        for j in i + 1..self.verts.len() {
            self.pos[self.verts[j]] = j;
        }
    }

    /// Pivot indices available at the current end.
    fn pivots(&self, g: &Graph) -> Vec<usize> {
        let len = self.verts.len();
        if len < 3 {
            return Vec::new();
        }
        g.neighbors(self.end()).iter().map(|&w| self.pos[w]).filter(|&i| i != NONE && i + 2 < len).collect()
    }
}

/// Free neighbours of `v`: active and not yet used.
fn free_degree(g: &Graph, v: usize, active: &[bool], used: &[bool]) -> usize {
    g.neighbors(v).iter().filter(|&&w| active[w] && !used[w]).count()
}

/// Free neighbour of `v` with the most free neighbours, lowest id on ties.
fn best_extension(g: &Graph, v: usize, active: &[bool], used: &[bool]) -> Option<usize> {
    g.neighbors(v)
        .iter()
        .copied()
        .filter(|&w| active[w] && !used[w])
        .max_by_key(|&w| (free_degree(g, w, active, used), std::cmp::Reverse(w)))
}

/// Grows a path from `start` inside `active`, marking its vertices in `used`.
/// `rotations` bounds the rotations spent on each stall.
pub(crate) fn grow_path(
    g: &Graph,
    active: &[bool],
    used: &mut [bool],
    start: usize,
    rotations: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut path = TrackedPath::new(g.n(), vec![start]);
    used[start] = true;
    'grow: loop {
        for _ in 0..2 {
            if let Some(w) = best_extension(g, path.end(), active, used) {
                used[w] = true;
                path.push(w);
                continue 'grow;
            }
            path.reverse();
        }
        for _ in 0..rotations {
            let pivots = path.pivots(g);
            if pivots.is_empty() {
                break;
            }
            if let Some(&i) = pivots.iter().find(|&&i| free_degree(g, path.verts[i + 1], active, used) > 0) {
                path.rotate(i);
                continue 'grow;
            }
            path.rotate(*pivots.choose(rng).expect("non-empty"));
            if rng.gen_bool(0.1) {
                path.reverse();
            }
        }
        break;
    }
    path.verts
}

/// Tries to turn `verts` into a cycle on the same vertex set.
pub(crate) fn close_path(
    g: &Graph,
    verts: Vec<usize>,
    rotations: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, Vec<usize>> {
    if verts.len() < 3 {
        return Err(verts);
    }
    let mut path = TrackedPath::new(g.n(), verts);
    for _ in 0..=rotations {
        if g.has_edge(path.start(), path.end()) {
            return Ok(path.verts);
        }
        let pivots = path.pivots(g);
        if let Some(&i) = pivots.iter().find(|&&i| g.has_edge(path.verts[i + 1], path.start())) {
            path.rotate(i);
            continue;
        }
        match pivots.choose(rng) {
            Some(&i) => path.rotate(i),
            None => path.reverse(),
        }
        if rng.gen_bool(0.05) {
            path.reverse();
        }
    }
    Err(path.verts)
}

/// Longest cycle formed by one path end and a chord: `v₀ … v_j` with
/// `v₀v_j` an edge, or `v_i … v_L` with `v_i v_L` an edge.
pub(crate) fn chord_cycle(g: &Graph, verts: &[usize]) -> Option<(usize, usize)> {
    let len = verts.len();
    if len < 3 {
        return None;
    }
    let head = (2..len).rev().find(|&j| g.has_edge(verts[0], verts[j]));
    let tail = (0..len - 2).find(|&i| g.has_edge(verts[i], verts[len - 1]));
    match (head, tail) {
        (Some(j), Some(i)) => Some(if j + 1 >= len - i { (0, j) } else { (i, len - 1) }),
        (Some(j), None) => Some((0, j)),
        (None, Some(i)) => Some((i, len - 1)),
        (None, None) => None,
    }
}

/// Rotates the end of `verts` (start fixed) until `target` accepts the end.
/// Breadth-first over rotated paths, at most `budget` states.
pub(crate) fn steer_end(g: &Graph, verts: &mut Vec<usize>, target: &dyn Fn(usize) -> bool, budget: usize) -> bool {
    if target(*verts.last().expect("non-empty")) {
        return true;
    }
    if verts.len() < 3 {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    seen.insert(*verts.last().expect("non-empty"));
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(verts.clone());
    let mut states = 1;
    let mut pos = std::collections::HashMap::with_capacity(verts.len());
    while let Some(cur) = queue.pop_front() {
        pos.clear();
        for (i, &v) in cur.iter().enumerate() {
            pos.insert(v, i);
        }
        let len = cur.len();
        let end = cur[len - 1];
        for &w in g.neighbors(end) {
            let Some(&i) = pos.get(&w) else { continue };
            if i + 2 >= len {
                continue;
            }
            let new_end = cur[i + 1];
            if !seen.insert(new_end) {
                continue;
            }
            let mut next = cur.clone();
            next[i + 1..].reverse();
            if target(new_end) {
                *verts = next;
                return true;
            }
            if states < budget {
                states += 1;
                queue.push_back(next);
            }
        }
    }
    false
}

/// [`steer_end`] applied to the start (end fixed).
pub(crate) fn steer_start(g: &Graph, verts: &mut Vec<usize>, target: &dyn Fn(usize) -> bool, budget: usize) -> bool {
    verts.reverse();
    let ok = steer_end(g, verts, target, budget);
    verts.reverse();
    ok
}

/// Puts `v` into `path` without changing its ends where possible: between two
/// consecutive neighbours, or, when `v` sees `P_i` and `P_j` (`i < j`) and
/// `P_{i+1} P_{j+1}` is an edge, as `P_0 … P_i v P_j … P_{i+1} P_{j+1} … P_L`.
/// As a last resort `v` is appended to an end it is adjacent to.
pub(crate) fn insert_vertex(g: &Graph, path: &mut Vec<usize>, v: usize, at_ends: bool) -> bool {
    let len = path.len();
    if len == 0 {
        return false;
    }
    let mut hits: Vec<usize> = Vec::new();
    for (i, &w) in path.iter().enumerate() {
        if g.has_edge(v, w) {
            if hits.last() == Some(&(i.wrapping_sub(1))) {
                path.insert(i, v);
                return true;
            }
            hits.push(i);
        }
    }
    for (a, &i) in hits.iter().enumerate() {
        for &j in &hits[a + 1..] {
            if j + 1 < len && g.has_edge(path[i + 1], path[j + 1]) {
                path[i + 1..=j].reverse();
                path.insert(i + 1, v);
                return true;
            }
            // Mirror image: P_0 … P_{i-1} P_{j-1} … P_i v P_j … P_L.
            if i >= 1 && g.has_edge(path[i - 1], path[j - 1]) {
                path[i..j].reverse();
                path.insert(j, v);
                return true;
            }
        }
    }
    if at_ends {
        if g.has_edge(v, path[len - 1]) {
            path.push(v);
            return true;
        }
        if g.has_edge(v, path[0]) {
            path.insert(0, v);
            return true;
        }
    }
    false
}

/// Shortest cycle through `v`: a shortest path in `G − v` between two
/// neighbours of `v`, closed through `v`.
pub(crate) fn cycle_through(g: &Graph, v: usize) -> Option<Vec<usize>> {
    let n = g.n();
    let nbrs = g.neighbors(v);
    let mut best: Option<Vec<usize>> = None;
    for (i, &a) in nbrs.iter().enumerate() {
        let mut parent = vec![NONE; n];
        parent[a] = a;
        parent[v] = v;
        let mut queue = std::collections::VecDeque::from([a]);
        let mut hit = None;
        'bfs: while let Some(x) = queue.pop_front() {
            for &y in g.neighbors(x) {
                if parent[y] == NONE {
                    parent[y] = x;
                    if nbrs[i + 1..].contains(&y) {
                        hit = Some(y);
                        break 'bfs;
                    }
                    queue.push_back(y);
                }
            }
        }
        if let Some(mut y) = hit {
            let mut cyc = vec![v];
            while y != a {
                cyc.push(y);
                y = parent[y];
            }
            cyc.push(a);
            if best.as_ref().is_none_or(|b| cyc.len() < b.len()) {
                best = Some(cyc);
            }
        }
    }
    best
}

/// Up to `count` vertex-disjoint paths inside `active`, grown one after
/// another from random unused starts.
pub(crate) fn approx_paths(
    g: &Graph,
    active: &[bool],
    count: usize,
    rotations: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut used = vec![false; g.n()];
    let mut out = Vec::new();
    let mut pool: Vec<usize> = (0..g.n()).filter(|&v| active[v]).collect();
    pool.shuffle(rng);
    for _ in 0..count {
        let Some(&start) = pool.iter().find(|&&v| !used[v]) else { break };
        out.push(grow_path(g, active, &mut used, start, rotations, rng));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn complete_graph_is_covered_by_one_path() {
        let g = Graph::complete(30);
        let mut rng = Seed(1).rng();
        let paths = approx_paths(&g, &[true; 30], 1, 50, &mut rng);
        assert_eq!(paths[0].len(), 30);
        let cyc = close_path(&g, paths[0].clone(), 10, &mut rng).unwrap();
        assert_eq!(cyc.len(), 30);
    }

    #[test]
    fn rotations_preserve_vertex_sets() {
        let g = crate::randgen::gnp(200, 0.08, Seed(3));
        let mut rng = Seed(4).rng();
        let path = approx_paths(&g, &[true; 200], 1, 500, &mut rng).remove(0);
        crate::graph::Path(path.clone()).validate(&g).unwrap();
        assert!(path.len() >= 190, "path covers only {}", path.len());
        let mut steered = path.clone();
        let target = g.neighbors(0).to_vec();
        if steer_end(&g, &mut steered, &|v| target.contains(&v) && v != path[0], 200) {
            crate::graph::Path(steered.clone()).validate(&g).unwrap();
            assert_eq!(steered[0], path[0]);
            let (mut a, mut b) = (path.clone(), steered.clone());
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn crossing_insertion() {
        // Path 0-1-2-3-4; vertex 5 sees 0 and 2, and 1-3 is an edge.
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (5, 0), (5, 2), (1, 3)]).unwrap();
        let mut p = vec![0, 1, 2, 3, 4];
        assert!(insert_vertex(&g, &mut p, 5, false));
        assert_eq!(p, vec![0, 5, 2, 1, 3, 4]);
        crate::graph::Path(p).validate(&g).unwrap();
        // Mirror: vertex 5 sees 2 and 4, and 1-3 is an edge.
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (5, 2), (5, 4), (1, 3)]).unwrap();
        let mut p = vec![0, 1, 2, 3, 4];
        assert!(insert_vertex(&g, &mut p, 5, false));
        crate::graph::Path(p.clone()).validate(&g).unwrap();
        assert_eq!((p[0], p[5]), (0, 4));
    }

    #[test]
    fn shortest_cycle_through_a_vertex() {
        let c = cycle_through(&Graph::petersen(), 0).unwrap();
        assert_eq!(c.len(), 5);
        crate::graph::Cycle(c).validate(&Graph::petersen()).unwrap();
        assert_eq!(cycle_through(&Graph::path(4), 1), None);
    }

    #[test]
    fn chord_cycles() {
        // Path 0-1-2-3 with chord 0-2.
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        assert_eq!(chord_cycle(&g, &[0, 1, 2, 3]), Some((0, 2)));
        assert_eq!(chord_cycle(&Graph::path(4), &[0, 1, 2, 3]), None);
    }
}
