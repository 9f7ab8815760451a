use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Graph;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureError {
    #[error("empty vertex sequence")]
    Empty,
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("vertex {0} repeated")]
    Repeated(usize),
    #[error("{0}-{1} is not an edge")]
    NonEdge(usize, usize),
    #[error("cycle has {0} vertices, at least 3 required")]
    TooShort(usize),
    #[error("paths {0} and {1} share vertex {2}")]
    Overlap(usize, usize, usize),
}

/// A path given by its vertex sequence. A single vertex is a path of length 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn single(v: usize) -> Self {
        Path(vec![v])
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn start(&self) -> usize {
        self.0[0]
    }

    pub fn end(&self) -> usize {
        *self.0.last().expect("non-empty path")
    }

    pub fn internal(&self) -> &[usize] {
        if self.0.len() <= 2 {
            &[]
        } else {
            &self.0[1..self.0.len() - 1]
        }
    }

    pub fn reversed(&self) -> Path {
        Path(self.0.iter().rev().copied().collect())
    }

    pub fn validate(&self, g: &Graph) -> Result<(), StructureError> {
        check_sequence(g, &self.0, false)
    }
}

/// A cycle given by its cyclic vertex sequence (first vertex not repeated).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cycle(pub Vec<usize>);

impl Cycle {
    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, g: &Graph) -> Result<(), StructureError> {
        if self.0.len() < 3 {
            return Err(StructureError::TooShort(self.0.len()));
        }
        check_sequence(g, &self.0, true)
    }
}

fn check_sequence(g: &Graph, seq: &[usize], closed: bool) -> Result<(), StructureError> {
    if seq.is_empty() {
        return Err(StructureError::Empty);
    }
    let mut seen = vec![false; g.n()];
    for &v in seq {
        if v >= g.n() {
            return Err(StructureError::OutOfRange(v));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(StructureError::Repeated(v));
        }
    }
    for w in seq.windows(2) {
        if !g.has_edge(w[0], w[1]) {
            return Err(StructureError::NonEdge(w[0], w[1]));
        }
    }
    if closed {
        let (a, b) = (seq[seq.len() - 1], seq[0]);
        if !g.has_edge(a, b) {
            return Err(StructureError::NonEdge(a, b));
        }
    }
    Ok(())
}

/// Pairwise vertex-disjoint paths.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathForest(pub Vec<Path>);

impl PathForest {
    pub fn paths(&self) -> &[Path] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.0.iter().map(|p| p.0.len()).sum()
    }

    pub fn validate(&self, g: &Graph) -> Result<(), StructureError> {
        let mut owner = vec![usize::MAX; g.n()];
        for (i, p) in self.0.iter().enumerate() {
            p.validate(g)?;
            for &v in &p.0 {
                if owner[v] != usize::MAX {
                    return Err(StructureError::Overlap(owner[v], i, v));
                }
                owner[v] = i;
            }
        }
        Ok(())
    }
}

/// At most `k - 1` cycles whose vertex sets together cover the graph.
/// Cycles may share vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCover {
    pub cycles: Vec<Cycle>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverViolation {
    TooManyCycles { count: usize, budget: usize },
    InvalidCycle { index: usize, reason: StructureError },
    Uncovered { vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    pub pass: bool,
    pub violation: Option<CoverViolation>,
}

impl CoverReport {
    fn fail(v: CoverViolation) -> Self {
        CoverReport { pass: false, violation: Some(v) }
    }
}

/// Exact check: cycle count within `k - 1`, every cycle valid in `g`, and the
/// union of cycle vertex sets equal to `V(g)`.
pub fn validate_cycle_cover(g: &Graph, cover: &CycleCover) -> CoverReport {
    let budget = cover.k.saturating_sub(1);
    if cover.cycles.len() > budget {
        return CoverReport::fail(CoverViolation::TooManyCycles { count: cover.cycles.len(), budget });
    }
    let mut covered = vec![false; g.n()];
    for (index, c) in cover.cycles.iter().enumerate() {
        if let Err(reason) = c.validate(g) {
            return CoverReport::fail(CoverViolation::InvalidCycle { index, reason });
        }
        for &v in &c.0 {
            covered[v] = true;
        }
    }
    if let Some(vertex) = covered.iter().position(|&c| !c) {
        return CoverReport::fail(CoverViolation::Uncovered { vertex });
    }
    CoverReport { pass: true, violation: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_basics() {
        let g = Graph::path(4);
        assert!(Path(vec![0, 1, 2, 3]).validate(&g).is_ok());
        assert_eq!(Path(vec![2]).len(), 0);
        assert!(Path(vec![2]).validate(&g).is_ok());
        assert_eq!(Path(vec![0, 2]).validate(&g), Err(StructureError::NonEdge(0, 2)));
        assert_eq!(Path(vec![0, 1, 0]).validate(&g), Err(StructureError::Repeated(0)));
    }

    #[test]
    fn cycles_need_three_vertices() {
        let g = Graph::complete(3);
        assert_eq!(Cycle(vec![0, 1]).validate(&g), Err(StructureError::TooShort(2)));
        assert!(Cycle(vec![0, 1, 2]).validate(&g).is_ok());
    }

    #[test]
    fn forest_overlap_detected() {
        let g = Graph::path(4);
        let f = PathForest(vec![Path(vec![0, 1]), Path(vec![1, 2])]);
        assert_eq!(f.validate(&g), Err(StructureError::Overlap(0, 1, 1)));
    }

    #[test]
    fn cover_examples() {
        let c5 = Graph::cycle(5);
        let ok = CycleCover { cycles: vec![Cycle(vec![0, 1, 2, 3, 4])], k: 2 };
        assert!(validate_cycle_cover(&c5, &ok).pass);

        let two = Graph::complete(3).disjoint_union(&Graph::complete(3));
        let one = CycleCover { cycles: vec![Cycle(vec![0, 1, 2])], k: 2 };
        let r = validate_cycle_cover(&two, &one);
        assert_eq!(r.violation, Some(CoverViolation::Uncovered { vertex: 3 }));

        let bad = CycleCover { cycles: vec![Cycle(vec![0, 2, 1, 3, 4])], k: 2 };
        assert!(matches!(
            validate_cycle_cover(&c5, &bad).violation,
            Some(CoverViolation::InvalidCycle { index: 0, .. })
        ));

        let many = CycleCover { cycles: vec![Cycle(vec![0, 1, 2]), Cycle(vec![3, 4, 5])], k: 2 };
        assert_eq!(
            validate_cycle_cover(&two, &many).violation,
            Some(CoverViolation::TooManyCycles { count: 2, budget: 1 })
        );
    }

    #[test]
    fn shared_vertices_allowed() {
        // Bowtie: two triangles sharing vertex 2.
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]).unwrap();
        let c = CycleCover { cycles: vec![Cycle(vec![0, 1, 2]), Cycle(vec![2, 3, 4])], k: 3 };
        assert!(validate_cycle_cover(&g, &c).pass);
    }
}
