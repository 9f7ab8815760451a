use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Graph, GraphError};

/// Sorted, duplicate-free set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    /// Validates every id against `n`; duplicates are merged.
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self, GraphError> {
        let mut v: Vec<usize> = members.into_iter().collect();
        if let Some(&bad) = v.iter().find(|&&x| x >= n) {
            return Err(GraphError::VertexOutOfRange { vertex: bad, n });
        }
        v.sort_unstable();
        v.dedup();
        Ok(VertexSet(v))
    }

    /// Unvalidated constructor for ids already known to be in range.
    pub fn from_iter_unchecked(members: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        VertexSet(v)
    }

    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        VertexSet((0..n).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        VertexSet(mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        super::mask_of(n, self.iter())
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        VertexSet::from_iter_unchecked(self.iter().chain(other.iter()))
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.iter().filter(|&v| !other.contains(v)).collect())
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.iter().filter(|&v| other.contains(v)).collect())
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        self.iter().all(|v| !other.contains(v))
    }

    fn check(&self, g: &Graph) -> Result<(), GraphError> {
        match self.0.last() {
            Some(&v) if v >= g.n() => Err(GraphError::VertexOutOfRange { vertex: v, n: g.n() }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        VertexSet::from_iter_unchecked(iter)
    }
}

/// `e(X, Y)`: ordered pairs in `X × Y` that are edges. Edges inside `X ∩ Y`
/// are counted twice.
pub fn edge_count_between(g: &Graph, x: &VertexSet, y: &VertexSet) -> Result<usize, GraphError> {
    x.check(g)?;
    y.check(g)?;
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let mask = large.mask(g.n());
    Ok(small.iter().map(|v| g.degree_into(v, &mask)).sum())
}

/// `N^ℓ(X, Y)`: vertices of `Y` joined to some vertex of `X` by a path of
/// length between 1 and `depth` whose internal vertices lie in `Y`.
pub fn ball(g: &Graph, x: &VertexSet, y: &VertexSet, depth: usize) -> Result<VertexSet, GraphError> {
    if depth == 0 {
        return Err(GraphError::Argument("ball depth must be at least 1".into()));
    }
    x.check(g)?;
    y.check(g)?;
    let n = g.n();
    let in_y = y.mask(n);
    let in_x = x.mask(n);
    let dist = multi_source_dist(g, x.iter(), &in_y, depth);
    let mut out: Vec<usize> = y.iter().filter(|&v| !in_x[v] && dist[v] != usize::MAX && dist[v] >= 1).collect();
    // A source inside Y only counts if another source reaches it.
    for v in y.iter().filter(|&v| in_x[v]) {
        let others = x.iter().filter(|&s| s != v);
        let mut y_without_v = in_y.clone();
        y_without_v[v] = false;
        let d = multi_source_dist(g, others, &y_without_v, depth);
        let reached = g.neighbors(v).iter().any(|&w| d[w] != usize::MAX && d[w] < depth && (in_x[w] || y_without_v[w]));
        if reached {
            out.push(v);
        }
    }
    Ok(VertexSet::from_iter_unchecked(out))
}

/// BFS distances from `sources`, continuing only through `through`, capped at `depth`.
fn multi_source_dist(g: &Graph, sources: impl Iterator<Item = usize>, through: &[bool], depth: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.n()];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s] == usize::MAX {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u];
        if d >= depth {
            continue;
        }
        for &w in g.neighbors(u) {
            if through[w] && dist[w] == usize::MAX {
                dist[w] = d + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// `δ_ξ(G)`: largest `d` such that all but at most `ξ·n` vertices have degree
/// at least `d`. For `ξ = 0` this is the minimum degree.
pub fn essential_min_degree(g: &Graph, xi: f64) -> usize {
    let n = g.n();
    if n == 0 {
        return 0;
    }
    let mut degs: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    degs.sort_unstable();
    let allowed = (xi.clamp(0.0, 1.0) * n as f64 + 1e-9).floor() as usize;
    degs[allowed.min(n - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(v: &[usize]) -> VertexSet {
        VertexSet::from_iter_unchecked(v.iter().copied())
    }

    #[test]
    fn edge_count_examples() {
        let k3 = Graph::complete(3);
        assert_eq!(edge_count_between(&k3, &vs(&[0, 1]), &vs(&[1, 2])).unwrap(), 3);
        let e = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(edge_count_between(&e, &vs(&[0, 1]), &vs(&[0, 1])).unwrap(), 2);
        assert_eq!(edge_count_between(&k3, &vs(&[]), &vs(&[0, 1, 2])).unwrap(), 0);
        assert!(edge_count_between(&k3, &vs(&[7]), &vs(&[0])).is_err());
    }

    #[test]
    fn ball_examples() {
        let p4 = Graph::path(4);
        assert_eq!(ball(&p4, &vs(&[0]), &vs(&[1, 2, 3]), 2).unwrap(), vs(&[1, 2]));
        assert_eq!(ball(&p4, &vs(&[0]), &vs(&[2, 3]), 5).unwrap(), vs(&[]));
        let k5 = Graph::complete(5);
        assert_eq!(ball(&k5, &vs(&[0]), &vs(&[1, 2, 3, 4]), 1).unwrap(), vs(&[1, 2, 3, 4]));
        assert!(ball(&k5, &vs(&[0]), &vs(&[1]), 0).is_err());
    }

    #[test]
    fn ball_source_inside_target() {
        let p3 = Graph::path(3);
        // 0 reaches 1, and 1 is a source itself: only counted via another source.
        assert_eq!(ball(&p3, &vs(&[0, 1]), &vs(&[1, 2]), 1).unwrap(), vs(&[1, 2]));
        assert_eq!(ball(&p3, &vs(&[1]), &vs(&[1, 2]), 3).unwrap(), vs(&[2]));
    }

    #[test]
    fn essential_min_degree_examples() {
        // K4 plus a pendant vertex on vertex 0.
        let mut edges: Vec<_> = Graph::complete(4).edges().collect();
        edges.push((0, 4));
        let g = Graph::from_edges(5, edges).unwrap();
        assert_eq!(essential_min_degree(&g, 0.0), 1);
        assert_eq!(essential_min_degree(&g, 0.2), 3);
        for xi in [0.0, 0.3, 1.0] {
            assert_eq!(essential_min_degree(&Graph::complete(6), xi), 5);
        }
    }
}
