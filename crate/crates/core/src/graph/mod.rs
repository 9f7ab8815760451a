//! Simple undirected graphs on `0..n`, vertex sets, and the path/cycle
//! structures every other module produces.
//!
//! Adjacency lists are kept sorted, so two graphs built from the same edge set
//! compare equal and every traversal is deterministic.

mod io;
mod oracle;
mod sets;
mod structures;

pub use io::{format_edge_list, parse_edge_list, read_edge_list, write_edge_list};
pub use oracle::{exact_cycle_cover_oracle, exact_cycle_cover_witness, hamiltonian_subsets, ORACLE_MAX_N};
pub use sets::{ball, edge_count_between, essential_min_degree, VertexSet};
pub use structures::{
    validate_cycle_cover, CoverReport, CoverViolation, Cycle, CycleCover, Path, PathForest, StructureError,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
    #[error("instance has {n} vertices, limit for this operation is {limit}")]
    SizeLimit { n: usize, limit: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n], m: 0 }
    }

    /// Builds a graph, rejecting self-loops, duplicates (in either
    /// orientation) and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        let mut m = 0;
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
            m += 1;
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (u.min(w[0]), u.max(w[0]));
                return Err(GraphError::DuplicateEdge(a, b));
            }
        }
        Ok(Graph { adj, m })
    }

    /// Builds a graph from edges known to be valid and distinct.
    pub(crate) fn from_unique_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        let mut m = 0;
        for (u, v) in edges {
            debug_assert!(u != v && u < n && v < n);
            adj[u].push(v);
            adj[v].push(u);
            m += 1;
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Graph { adj, m }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_unique_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Self::from_unique_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn path(n: usize) -> Self {
        Self::from_unique_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::with_capacity(15);
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Self::from_unique_edges(10, edges)
    }

    /// Disjoint union, second graph's vertices shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let off = self.n();
        let edges = self.edges().chain(other.edges().map(|(u, v)| (u + off, v + off)));
        Self::from_unique_edges(off + other.n(), edges)
    }

    /// `G × K₂`: vertex `v` becomes `v` (side A) and `n + v` (side B), and
    /// each edge `uv` becomes `u(n+v)` and `v(n+u)`. Returns the side mask.
    pub fn bipartite_double_cover(&self) -> (Graph, Vec<bool>) {
        let n = self.n();
        let edges = self.edges().flat_map(|(u, v)| [(u, n + v), (v, n + u)]);
        let side = (0..2 * n).map(|v| v < n).collect();
        (Self::from_unique_edges(2 * n, edges), side)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u >= self.n() || v >= self.n() {
            return false;
        }
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() { (u, v) } else { (v, u) };
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn min_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn density(&self) -> f64 {
        let n = self.n() as f64;
        if self.n() < 2 {
            0.0
        } else {
            self.m as f64 / (n * (n - 1.0) / 2.0)
        }
    }

    /// Number of neighbours of `v` inside the set marked by `mask`.
    #[inline]
    pub fn degree_into(&self, v: usize, mask: &[bool]) -> usize {
        self.adj[v].iter().filter(|&&w| mask[w]).count()
    }

    /// Induced subgraph on `vertices` (any order, no duplicates). Local vertex
    /// `i` corresponds to global `vertices[i]`.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut adj = Vec::with_capacity(vertices.len());
        let mut m2 = 0;
        for &v in vertices {
            let mut list: Vec<usize> =
                self.adj[v].iter().filter_map(|&w| (local[w] != usize::MAX).then_some(local[w])).collect();
            list.sort_unstable();
            m2 += list.len();
            adj.push(list);
        }
        Graph { adj, m: m2 / 2 }
    }

    /// Spanning subgraph keeping the edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        let edges: Vec<_> = self.edges().filter(|&(u, v)| keep(u, v)).collect();
        Self::from_unique_edges(self.n(), edges)
    }

    /// Graph on the same vertex set with `extra` edges added; duplicates and
    /// already-present edges are ignored.
    pub fn with_extra_edges(&self, extra: impl IntoIterator<Item = (usize, usize)>) -> Graph {
        let mut adj = self.adj.clone();
        for (u, v) in extra {
            if u != v && !self.has_edge(u, v) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut m = 0;
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            m += list.len();
        }
        Graph { adj, m: m / 2 }
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_bipartite_with(&self, side: &[bool]) -> bool {
        self.edges().all(|(u, v)| side[u] != side[v])
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v < self.n() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }
}

/// Boolean membership mask of length `n`.
pub fn mask_of(n: usize, members: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut mask = vec![false; n];
    for v in members {
        mask[v] = true;
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::from_edges(3, [(0, 0)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(Graph::from_edges(3, [(0, 1), (1, 0)]), Err(GraphError::DuplicateEdge(0, 1)));
        assert!(matches!(Graph::from_edges(3, [(0, 3)]), Err(GraphError::VertexOutOfRange { vertex: 3, n: 3 })));
    }

    #[test]
    fn canonical_adjacency() {
        let a = Graph::from_edges(4, [(2, 3), (0, 1), (1, 2)]).unwrap();
        let b = Graph::from_edges(4, [(1, 0), (3, 2), (2, 1)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.neighbors(1), &[0, 2]);
        assert_eq!(a.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn double_cover_of_a_triangle_is_a_hexagon() {
        let (h, side) = Graph::cycle(3).bipartite_double_cover();
        assert_eq!((h.n(), h.m()), (6, 6));
        assert!(h.is_bipartite_with(&side));
        assert_eq!(h.components().len(), 1);
        assert!((0..6).all(|v| h.degree(v) == 2));
    }

    #[test]
    fn petersen_is_cubic() {
        let g = Graph::petersen();
        assert_eq!(g.m(), 15);
        assert!((0..10).all(|v| g.degree(v) == 3));
    }

    #[test]
    fn induced_and_components() {
        let g = Graph::complete(3).disjoint_union(&Graph::complete(3));
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let h = g.induced(&[4, 0, 5]);
        assert_eq!(h.m(), 1);
        assert!(h.has_edge(0, 2));
    }
}
