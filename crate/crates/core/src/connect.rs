//! Joining terminal pairs by short, internally vertex-disjoint paths whose
//! interiors lie in a reservoir `W`.
//!
//! Routing is greedy shortest-path with rip-up: when a demand is stuck, the
//! routes blocking its unconstrained shortest path are torn out (the most
//! recent first, 1, 2, 4, … of them), the stuck demand is routed, and the torn
//! routes are queued again. Restarts use fresh random demand orders.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ball, Graph, GraphError, Path, VertexSet};
use crate::rng::Seed;

pub const HAXELL_MAX: usize = 14;

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConnectError {
    #[error("{0}")]
    Graph(String),
    #[error("invalid demand: {0}")]
    InvalidDemand(String),
    #[error("could not route demand {index} ({u}, {v}) after {restarts} restarts; reach sizes {reach_u}/{reach_v}")]
    ConnectivityExhausted { index: usize, u: usize, v: usize, restarts: usize, reach_u: usize, reach_v: usize },
    #[error("path system check failed: {0}")]
    InvalidPathSystem(String),
}

impl From<GraphError> for ConnectError {
    fn from(e: GraphError) -> Self {
        ConnectError::Graph(e.to_string())
    }
}

/// Multigraph of terminal pairs; parallel pairs are separate demands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionDemand {
    pub terminals: VertexSet,
    pub edges: Vec<(usize, usize)>,
    pub max_degree: usize,
}

impl ConnectionDemand {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, ConnectError> {
        let mut deg = std::collections::BTreeMap::new();
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(ConnectError::InvalidDemand(format!("pair ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(ConnectError::InvalidDemand(format!("pair ({u}, {u}) is a loop")));
            }
            *deg.entry(u).or_insert(0usize) += 1;
            *deg.entry(v).or_insert(0usize) += 1;
        }
        let max_degree = deg.values().copied().max().unwrap_or(0);
        Ok(ConnectionDemand { terminals: deg.keys().copied().collect(), edges, max_degree })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Parses lines `u v mult`; `mult` defaults to 1.
    pub fn parse(n: usize, text: &str) -> Result<Self, ConnectError> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
            match nums.as_deref() {
                Ok([u, v]) => edges.push((*u, *v)),
                Ok([u, v, m]) => edges.extend(std::iter::repeat_n((*u, *v), *m)),
                _ => return Err(ConnectError::InvalidDemand(format!("line {}: {line:?}", i + 1))),
            }
        }
        Self::new(n, edges)
    }
}

/// One route per demand edge, in demand order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSystem {
    pub routes: Vec<Path>,
    pub used_internal: VertexSet,
}

impl PathSystem {
    /// Full recount: endpoints, adjacency, interiors inside `W`, pairwise
    /// internal disjointness, length bound, and at most one use of each
    /// direct edge.
    pub fn validate(
        &self,
        g: &Graph,
        demand: &ConnectionDemand,
        w: &VertexSet,
        ell: usize,
    ) -> Result<(), ConnectError> {
        let bad = |m: String| Err(ConnectError::InvalidPathSystem(m));
        if self.routes.len() != demand.edges.len() {
            return bad(format!("{} routes for {} demands", self.routes.len(), demand.edges.len()));
        }
        let in_w = w.mask(g.n());
        let mut owner = vec![usize::MAX; g.n()];
        let mut direct = HashSet::new();
        for (i, (route, &(u, v))) in self.routes.iter().zip(&demand.edges).enumerate() {
            if let Err(e) = route.validate(g) {
                return bad(format!("route {i}: {e}"));
            }
            let (s, t) = (route.start(), route.end());
            if !((s, t) == (u, v) || (s, t) == (v, u)) {
                return bad(format!("route {i} joins {s}-{t}, demand is {u}-{v}"));
            }
            if route.len() > ell {
                return bad(format!("route {i} has length {} > {ell}", route.len()));
            }
            if route.len() == 1 && !direct.insert((u.min(v), u.max(v))) {
                return bad(format!("direct edge {u}-{v} used twice"));
            }
            for &x in route.internal() {
                if !in_w[x] {
                    return bad(format!("route {i} leaves W at {x}"));
                }
                if owner[x] != usize::MAX {
                    return bad(format!("routes {} and {i} share {x}", owner[x]));
                }
                owner[x] = i;
            }
        }
        let used = VertexSet::from_iter_unchecked((0..g.n()).filter(|&x| owner[x] != usize::MAX));
        if used != self.used_internal {
            return bad("used_internal does not match the routes".into());
        }
        Ok(())
    }
}

fn through_mask(g: &Graph, w: &VertexSet, z: &VertexSet) -> VertexSet {
    let zm = z.mask(g.n());
    VertexSet::from_iter_unchecked(w.iter().filter(|&v| !zm[v]))
}

/// `N^ℓ(X, W∖Z)`.
pub fn reach(g: &Graph, x: &VertexSet, w: &VertexSet, z: &VertexSet, ell: usize) -> Result<VertexSet, GraphError> {
    ball(g, x, &through_mask(g, w, z), ell)
}

/// `|N^i(X, W∖Z)|` for `i = 1..=ell_max`.
pub fn growth_profile(
    g: &Graph,
    x: &VertexSet,
    w: &VertexSet,
    z: &VertexSet,
    ell_max: usize,
) -> Result<Vec<usize>, GraphError> {
    let y = through_mask(g, w, z);
    if x.is_disjoint(&y) {
        // Plain layered BFS: sources never count themselves.
        let ym = y.mask(g.n());
        let mut dist = vec![usize::MAX; g.n()];
        let mut frontier: Vec<usize> = x.iter().collect();
        for &s in &frontier {
            dist[s] = 0;
        }
        let mut sizes = Vec::with_capacity(ell_max);
        let mut total = 0;
        for level in 1..=ell_max {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in g.neighbors(u) {
                    if ym[v] && dist[v] == usize::MAX {
                        dist[v] = level;
                        next.push(v);
                    }
                }
            }
            total += next.len();
            sizes.push(total);
            frontier = next;
        }
        Ok(sizes)
    } else {
        (1..=ell_max).map(|l| ball(g, x, &y, l).map(|b| b.len())).collect()
    }
}

/// Shortest `uv`-path of length at most `ell` whose interior avoids every
/// vertex not marked in `allowed`. Bidirectional BFS expanding the smaller
/// frontier one whole level at a time; ties go to the lowest meeting vertex.
pub fn find_path_in(g: &Graph, u: usize, v: usize, allowed: &[bool], ell: usize, allow_direct: bool) -> Option<Path> {
    if u == v || ell == 0 {
        return None;
    }
    if allow_direct && g.has_edge(u, v) {
        return Some(Path(vec![u, v]));
    }
    let n = g.n();
    let mut dist = [vec![usize::MAX; n], vec![usize::MAX; n]];
    let mut parent = [vec![usize::MAX; n], vec![usize::MAX; n]];
    dist[0][u] = 0;
    dist[1][v] = 0;
    let mut frontier = [vec![u], vec![v]];
    let mut depth = [0usize, 0usize];
    while depth[0] + depth[1] < ell {
        let side = match frontier[0].len().cmp(&frontier[1].len()) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Equal => usize::from(depth[1] < depth[0]),
        };
        if frontier[side].is_empty() {
            return None;
        }
        let other = 1 - side;
        let mut next = Vec::new();
        let mut best: Option<(usize, usize, usize)> = None;
        for &x in &frontier[side] {
            for &y in g.neighbors(x) {
                // Meeting the far side, possibly at its root terminal.
                if dist[other][y] != usize::MAX {
                    let total = depth[side] + 1 + dist[other][y];
                    if total >= 2 && total <= ell && best.is_none_or(|(bt, bx, by)| (total, x, y) < (bt, bx, by)) {
                        best = Some((total, x, y));
                    }
                }
                if !allowed[y] || y == u || y == v || dist[side][y] != usize::MAX {
                    continue;
                }
                dist[side][y] = depth[side] + 1;
                parent[side][y] = x;
                next.push(y);
            }
        }
        depth[side] += 1;
        if let Some((_, x, y)) = best {
            // Edge x–y joins the two search trees.
            let (mut a, mut b) = if side == 0 { (x, y) } else { (y, x) };
            let mut left = vec![a];
            while parent[0][a] != usize::MAX {
                a = parent[0][a];
                left.push(a);
            }
            left.reverse();
            left.push(b);
            while parent[1][b] != usize::MAX {
                b = parent[1][b];
                left.push(b);
            }
            return Some(Path(left));
        }
        frontier[side] = next;
    }
    None
}

/// [`find_path_in`] with the interior restricted to `W∖Z`; the direct edge
/// `uv` counts as a path of length 1.
pub fn find_path_avoiding(g: &Graph, u: usize, v: usize, w: &VertexSet, z: &VertexSet, ell: usize) -> Option<Path> {
    let allowed = through_mask(g, w, z).mask(g.n());
    find_path_in(g, u, v, &allowed, ell, true)
}

/// Routing knobs beyond the path-length bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteOptions {
    /// Full restarts with fresh demand orders.
    pub restarts: usize,
    /// Whether a demand `uv` may use the edge `uv` itself (at most once).
    pub allow_direct: bool,
}

impl Default for RouteOptions {
    fn default() -> Self {
        RouteOptions { restarts: 8, allow_direct: true }
    }
}

/// Routes every demand. See the module notes for the strategy. The result is
/// checked with [`PathSystem::validate`] before it is returned.
pub fn connect_all(
    g: &Graph,
    demand: &ConnectionDemand,
    w: &VertexSet,
    ell: usize,
    budget: usize,
    seed: Seed,
) -> Result<PathSystem, ConnectError> {
    connect_all_with(g, demand, w, ell, RouteOptions { restarts: budget, allow_direct: true }, seed)
}

pub fn connect_all_with(
    g: &Graph,
    demand: &ConnectionDemand,
    w: &VertexSet,
    ell: usize,
    opts: RouteOptions,
    seed: Seed,
) -> Result<PathSystem, ConnectError> {
    let n = g.n();
    let in_w = w.mask(n);
    if let Some(t) = demand.terminals.iter().find(|&t| t >= n || in_w[t]) {
        return Err(ConnectError::InvalidDemand(format!("terminal {t} lies in W or out of range")));
    }
    let mut last_stuck = 0;
    for attempt in 0..opts.restarts.max(1) {
        match route_once(g, demand, &in_w, ell, opts.allow_direct, seed.derive(attempt as u64)) {
            Ok(routes) => {
                let used = VertexSet::from_iter_unchecked(routes.iter().flat_map(|r| r.internal().iter().copied()));
                let sys = PathSystem { routes, used_internal: used };
                sys.validate(g, demand, w, ell)?;
                return Ok(sys);
            }
            Err(d) => last_stuck = d,
        }
    }
    let (u, v) = demand.edges[last_stuck];
    let empty = VertexSet::empty();
    let reach_u = reach(g, &VertexSet::from_iter_unchecked([u]), w, &empty, ell)?.len();
    let reach_v = reach(g, &VertexSet::from_iter_unchecked([v]), w, &empty, ell)?.len();
    Err(ConnectError::ConnectivityExhausted {
        index: last_stuck,
        u,
        v,
        restarts: opts.restarts.max(1),
        reach_u,
        reach_v,
    })
}

/// One routing pass. Returns the stuck demand index on failure.
fn route_once(
    g: &Graph,
    demand: &ConnectionDemand,
    in_w: &[bool],
    ell: usize,
    allow_direct: bool,
    seed: Seed,
) -> Result<Vec<Path>, usize> {
    let n = g.n();
    let m = demand.edges.len();
    let mut rng = seed.rng();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let mut queue: VecDeque<usize> = order.into();
    let mut routes: Vec<Option<Path>> = vec![None; m];
    // owner[x] = demand whose route uses x internally.
    let mut owner = vec![usize::MAX; n];
    let mut free = in_w.to_vec();
    let mut direct_used: HashSet<(usize, usize)> = HashSet::new();
    let mut recency: Vec<usize> = Vec::new();
    let mut ripups = 0usize;
    let ripup_cap = 20 * m + 100;

    let install = |d: usize,
                   p: Path,
                   routes: &mut Vec<Option<Path>>,
                   owner: &mut Vec<usize>,
                   free: &mut Vec<bool>,
                   direct_used: &mut HashSet<(usize, usize)>,
                   recency: &mut Vec<usize>| {
        for &x in p.internal() {
            owner[x] = d;
            free[x] = false;
        }
        if p.len() == 1 {
            direct_used.insert((p.start().min(p.end()), p.start().max(p.end())));
        }
        recency.push(d);
        routes[d] = Some(p);
    };

    while let Some(d) = queue.pop_front() {
        let (u, v) = demand.edges[d];
        let key = (u.min(v), u.max(v));
        let direct_ok = allow_direct && !direct_used.contains(&key);
        if let Some(p) = find_path_in(g, u, v, &free, ell, direct_ok) {
            install(d, p, &mut routes, &mut owner, &mut free, &mut direct_used, &mut recency);
            continue;
        }
        // Stuck: find what blocks the unconstrained shortest route.
        let Some(ideal) = find_path_in(g, u, v, in_w, ell, false) else {
            return Err(d);
        };
        let mut radius = 1usize;
        loop {
            if ripups > ripup_cap || radius > recency.len() * 2 + 1 {
                return Err(d);
            }
            let mut blockers: Vec<usize> = Vec::new();
            for &x in ideal.internal() {
                if owner[x] != usize::MAX && !blockers.contains(&owner[x]) {
                    blockers.push(owner[x]);
                }
            }
            // Most recently routed first, then any other recent routes near u or v.
            blockers.sort_by_key(|b| std::cmp::Reverse(recency.iter().position(|r| r == b)));
            let near: Vec<usize> = recency
                .iter()
                .rev()
                .copied()
                .filter(|r| !blockers.contains(r))
                .filter(|&r| {
                    let p = routes[r].as_ref().expect("recency lists routed demands");
                    p.internal().iter().any(|&x| g.has_edge(x, u) || g.has_edge(x, v))
                })
                .collect();
            blockers.extend(near);
            if blockers.is_empty() {
                return Err(d);
            }
            let torn: Vec<usize> = blockers.into_iter().take(radius).collect();
            for &b in &torn {
                let p = routes[b].take().expect("blocker is routed");
                for &x in p.internal() {
                    owner[x] = usize::MAX;
                    free[x] = true;
                }
                if p.len() == 1 {
                    direct_used.remove(&(p.start().min(p.end()), p.start().max(p.end())));
                }
                recency.retain(|&r| r != b);
            }
            ripups += torn.len();
            let direct_ok = allow_direct && !direct_used.contains(&key);
            if let Some(p) = find_path_in(g, u, v, &free, ell, direct_ok) {
                install(d, p, &mut routes, &mut owner, &mut free, &mut direct_used, &mut recency);
                for &b in torn.iter().rev() {
                    queue.push_front(b);
                }
                break;
            }
            // Still stuck: requeue the torn routes and tear more next time.
            for &b in torn.iter().rev() {
                queue.push_front(b);
            }
            radius *= 2;
            if ripups > ripup_cap {
                return Err(d);
            }
        }
    }
    Ok(routes.into_iter().map(|r| r.expect("all routed")).collect())
}

/// Default path-length bound `⌈30 ln n / (γ ln ln n)⌉`.
pub fn default_path_length(n: usize, gamma: f64) -> usize {
    let nf = (n.max(16)) as f64;
    (30.0 * nf.ln() / (gamma * nf.ln().ln())).ceil() as usize
}

/// Hypergraph with parts `A = 0..a` and `B = 0..b`; each edge holds one
/// `A`-vertex and `r − 1` distinct `B`-vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitHypergraph {
    pub a: usize,
    pub b: usize,
    pub edges: Vec<(usize, Vec<usize>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaxellReport {
    pub matching_exists: bool,
    /// For all `S ⊆ A` and `Z ⊆ B` with `|Z| ≤ (2r − 3)(|S| − 1)`, some edge
    /// meets `S` and avoids `Z`.
    pub condition_holds: bool,
}

/// Exhaustive check of both the existence of an `A`-saturating matching and
/// the hypothesis of Haxell's criterion. Requires `|A| + |B| ≤ 14`.
pub fn haxell_check_small(h: &SplitHypergraph) -> Result<HaxellReport, ConnectError> {
    if h.a + h.b > HAXELL_MAX {
        return Err(GraphError::SizeLimit { n: h.a + h.b, limit: HAXELL_MAX }.into());
    }
    let r = h.edges.first().map_or(2, |e| e.1.len() + 1);
    let mut links: Vec<Vec<u32>> = vec![Vec::new(); h.a];
    for (x, ys) in &h.edges {
        if *x >= h.a || ys.iter().any(|&y| y >= h.b) || ys.len() + 1 != r {
            return Err(ConnectError::InvalidDemand("malformed hyperedge".into()));
        }
        links[*x].push(ys.iter().fold(0u32, |m, &y| m | (1 << y)));
    }
    fn saturate(links: &[Vec<u32>], i: usize, used: u32) -> bool {
        i == links.len() || links[i].iter().any(|&e| e & used == 0 && saturate(links, i + 1, used | e))
    }
    let matching_exists = saturate(&links, 0, 0);
    let mut condition_holds = true;
    'outer: for s in 1u32..(1u32 << h.a) {
        let bound = (2 * r - 3) * (s.count_ones() as usize - 1);
        for z in 0u32..(1u32 << h.b) {
            if z.count_ones() as usize > bound {
                continue;
            }
            let avoided = (0..h.a).filter(|&x| s >> x & 1 == 1).any(|x| links[x].iter().any(|&e| e & z == 0));
            if !avoided {
                condition_holds = false;
                break 'outer;
            }
        }
    }
    Ok(HaxellReport { matching_exists, condition_holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(it: impl IntoIterator<Item = usize>) -> VertexSet {
        VertexSet::from_iter_unchecked(it)
    }

    #[test]
    fn reach_examples() {
        let k = Graph::complete(6);
        assert_eq!(reach(&k, &vs([0]), &vs(1..6), &vs([]), 1).unwrap(), vs(1..6));
        // x = 0 with pendant path 1-2-...-10.
        let g = Graph::path(11);
        assert_eq!(reach(&g, &vs([0]), &vs(1..11), &vs([2]), 9).unwrap(), vs([1]));
    }

    #[test]
    fn growth_examples() {
        let g = Graph::complete(3).disjoint_union(&Graph::empty(1));
        assert_eq!(growth_profile(&g, &vs([3]), &vs(0..3), &vs([]), 3).unwrap(), vec![0, 0, 0]);
        let k = Graph::complete(6);
        assert_eq!(growth_profile(&k, &vs([0]), &vs(1..6), &vs([]), 3).unwrap(), vec![5, 5, 5]);
        let p = Graph::path(5);
        assert_eq!(growth_profile(&p, &vs([0]), &vs(1..5), &vs([]), 4).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn path_examples() {
        let k = Graph::complete(4);
        assert_eq!(find_path_avoiding(&k, 0, 1, &vs([2, 3]), &vs([]), 3).unwrap().len(), 1);
        let g = Graph::from_edges(4, [(0, 2), (1, 2), (0, 3)]).unwrap();
        assert_eq!(find_path_avoiding(&g, 0, 1, &vs([2, 3]), &vs([]), 3).unwrap(), Path(vec![0, 2, 1]));
        let c = Graph::cycle(6);
        assert!(find_path_avoiding(&c, 0, 2, &vs([1, 3, 4, 5]), &vs([1, 3, 4, 5]), 6).is_none());
        assert_eq!(find_path_avoiding(&c, 0, 3, &vs([1, 2, 4, 5]), &vs([]), 3).unwrap().len(), 3);
        assert!(find_path_avoiding(&c, 0, 3, &vs([1, 2, 4, 5]), &vs([]), 2).is_none());
    }

    #[test]
    fn double_demand_in_clique() {
        let g = Graph::complete(10);
        let d = ConnectionDemand::new(10, vec![(0, 1), (0, 1)]).unwrap();
        let w = vs(2..6);
        let sys = connect_all(&g, &d, &w, 3, 4, Seed(3)).unwrap();
        assert_ne!(sys.routes[0], sys.routes[1]);
        sys.validate(&g, &d, &w, 3).unwrap();
    }

    #[test]
    fn pigeonhole_failure() {
        // Terminals 0..8 pairwise nonadjacent, all joined to W = {8, 9, 10}.
        let mut edges = Vec::new();
        for t in 0..8 {
            for x in 8..11 {
                edges.push((t, x));
            }
        }
        let g = Graph::from_edges(11, edges).unwrap();
        let d = ConnectionDemand::new(11, vec![(0, 1), (2, 3), (4, 5), (6, 7)]).unwrap();
        assert!(matches!(
            connect_all(&g, &d, &vs(8..11), 4, 3, Seed(0)),
            Err(ConnectError::ConnectivityExhausted { .. })
        ));
        let d3 = ConnectionDemand::new(11, vec![(0, 1), (2, 3), (4, 5)]).unwrap();
        assert!(connect_all(&g, &d3, &vs(8..11), 4, 3, Seed(0)).is_ok());
    }

    #[test]
    fn ripup_recovers_from_bad_greedy_choice() {
        // Demand (0,1) can use w=4 or w=5; demand (2,3) can only use w=4.
        let g = Graph::from_edges(6, [(0, 4), (1, 4), (0, 5), (1, 5), (2, 4), (3, 4)]).unwrap();
        let d = ConnectionDemand::new(6, vec![(0, 1), (2, 3)]).unwrap();
        for s in 0..10 {
            let sys = connect_all(&g, &d, &vs([4, 5]), 2, 1, Seed(s)).unwrap();
            assert_eq!(sys.routes[1], Path(vec![2, 4, 3]));
        }
    }

    #[test]
    fn haxell_examples() {
        let hall = SplitHypergraph { a: 2, b: 2, edges: vec![(0, vec![0]), (0, vec![1]), (1, vec![1])] };
        let r = haxell_check_small(&hall).unwrap();
        assert!(r.matching_exists && r.condition_holds);
        let empty_link = SplitHypergraph { a: 2, b: 2, edges: vec![(0, vec![0])] };
        let r = haxell_check_small(&empty_link).unwrap();
        assert!(!r.matching_exists && !r.condition_holds);
        assert!(haxell_check_small(&SplitHypergraph { a: 8, b: 7, edges: vec![] }).is_err());
    }

    #[test]
    fn demand_parsing() {
        let d = ConnectionDemand::parse(5, "0 1 2\n# note\n2 3\n").unwrap();
        assert_eq!(d.edges, vec![(0, 1), (0, 1), (2, 3)]);
        assert_eq!(d.max_degree, 2);
        assert!(ConnectionDemand::parse(5, "1 1\n").is_err());
    }
}
