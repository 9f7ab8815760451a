//! Two-vertex absorbers.
//!
//! A gadget joins host vertices `s = f(x)` and `t = f(y)` by two paths
//! `P = s p₁ … p_{2ℓp} t` and `Q = s q₁ … q_{2ℓq} t` with `ℓp ≤ ℓq`, plus rung
//! paths between interior vertices. Taking the even-indexed edges of `P` and
//! `Q` (the ones touching `s` and `t`) together with all rungs gives a
//! `p₁ → q_{ℓp+ℓq}` path through every gadget vertex. Taking the odd-indexed
//! edges instead gives a path between the same ends that skips `s` and `t`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, Path};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoVertexGadget {
    /// Template vertices (A side, B side).
    pub x: usize,
    pub y: usize,
    /// Their host images; `path_p` and `path_q` run from `fx` to `fy`.
    pub fx: usize,
    pub fy: usize,
    pub path_p: Path,
    pub path_q: Path,
    /// One path per pair of [`rung_pairs`], oriented the same way.
    pub rungs: Vec<Path>,
    pub u: usize,
    pub v: usize,
}

/// Half-lengths `(ℓp, ℓq)` when both paths have odd length at least 3.
fn half_lengths(p: &Path, q: &Path) -> Result<(usize, usize), String> {
    for (name, path) in [("P", p), ("Q", q)] {
        let len = path.len();
        if len < 3 || len % 2 == 0 {
            return Err(format!("path {name} has length {len}, need odd ≥ 3"));
        }
    }
    Ok(((p.len() - 1) / 2, (q.len() - 1) / 2))
}

/// Host vertex pairs the rungs must join, given `P` no longer than `Q`.
pub fn rung_pairs(p: &Path, q: &Path) -> Result<Vec<(usize, usize)>, String> {
    let (lp, lq) = half_lengths(p, q)?;
    if lp > lq {
        return Err("P must not be longer than Q".into());
    }
    let (p, q) = (p.vertices(), q.vertices());
    // a^i = position 2i-1, b^i = position 2i.
    let a = |s: &[usize], i: usize| s[2 * i - 1];
    let b = |s: &[usize], i: usize| s[2 * i];
    let mut pairs = Vec::new();
    for i in 1..=lp {
        pairs.push((b(p, i), a(q, i)));
    }
    for i in 1..lp {
        pairs.push((a(p, i + 1), b(q, i)));
    }
    for i in 1..=(lq - lp).div_ceil(2) {
        for (s, t) in [(b(q, lp + i - 1), b(q, lq - i + 1)), (a(q, lp + i), a(q, lq - i + 1))] {
            if s != t {
                pairs.push((s, t));
            }
        }
    }
    Ok(pairs)
}

/// Gadget endpoints `(u, v)`: the first interior vertex of `P` and position
/// `ℓp + ℓq` of `Q`.
pub fn endpoints(p: &Path, q: &Path) -> Result<(usize, usize), String> {
    let (lp, lq) = half_lengths(p, q)?;
    Ok((p.vertices()[1], q.vertices()[lp + lq]))
}

impl TwoVertexGadget {
    /// Both traversals `(absorbing, skipping)`, derived from the paths and
    /// rungs by walking the chosen edge set from `u`.
    pub fn traversals(&self) -> Result<(Vec<usize>, Vec<usize>), String> {
        let (u, v) = endpoints(&self.path_p, &self.path_q)?;
        if (u, v) != (self.u, self.v) {
            return Err(format!("stored endpoints ({}, {}) differ from derived ({u}, {v})", self.u, self.v));
        }
        let expected = rung_pairs(&self.path_p, &self.path_q)?;
        if expected.len() != self.rungs.len() {
            return Err(format!("{} rungs present, {} required", self.rungs.len(), expected.len()));
        }
        for (r, &(s, t)) in self.rungs.iter().zip(&expected) {
            if r.is_empty() || r.start() != s || r.end() != t {
                return Err(format!("rung {:?} does not join {s}-{t}", r.vertices()));
            }
        }
        let absorbing = self.walk(0)?;
        let skipping = self.walk(1)?;
        let mut all: Vec<usize> = self.path_p.vertices().to_vec();
        all.extend(self.path_q.internal());
        all.extend(self.rungs.iter().flat_map(|r| r.internal().iter().copied()));
        all.sort_unstable();
        let mut sorted = absorbing.clone();
        sorted.sort_unstable();
        if sorted != all {
            return Err("absorbing traversal misses gadget vertices".into());
        }
        all.retain(|&w| w != self.fx && w != self.fy);
        let mut sorted = skipping.clone();
        sorted.sort_unstable();
        if sorted != all {
            return Err("skipping traversal does not cover exactly the gadget minus its pair".into());
        }
        Ok((absorbing, skipping))
    }

    /// Walks the edge set of the given parity from `u` and checks it ends at `v`.
    fn walk(&self, parity: usize) -> Result<Vec<usize>, String> {
        // (end, end, rung index) per edge.
        let mut edges: Vec<(usize, usize, Option<usize>)> = Vec::new();
        for path in [&self.path_p, &self.path_q] {
            let s = path.vertices();
            for j in (parity..s.len() - 1).step_by(2) {
                edges.push((s[j], s[j + 1], None));
            }
        }
        for (i, r) in self.rungs.iter().enumerate() {
            edges.push((r.start(), r.end(), Some(i)));
        }
        let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
        for (id, &(s, t, _)) in edges.iter().enumerate() {
            incident.entry(s).or_default().push(id);
            incident.entry(t).or_default().push(id);
        }
        if let Some((w, _)) = incident.iter().find(|(_, ids)| ids.len() > 2) {
            return Err(format!("vertex {w} has degree above 2 in traversal {parity}"));
        }
        let mut out = vec![self.u];
        let mut used = vec![false; edges.len()];
        let mut cur = self.u;
        loop {
            let next = incident.get(&cur).and_then(|ids| ids.iter().copied().find(|&id| !used[id]));
            let Some(id) = next else { break };
            used[id] = true;
            let (s, t, rung) = edges[id];
            let (from_start, other) = if s == cur { (true, t) } else { (false, s) };
            if let Some(i) = rung {
                let inner = self.rungs[i].internal();
                if from_start {
                    out.extend(inner.iter().copied());
                } else {
                    out.extend(inner.iter().rev().copied());
                }
            }
            out.push(other);
            cur = other;
        }
        if used.iter().any(|&b| !b) {
            return Err(format!("traversal {parity} leaves edges unused (contains a cycle)"));
        }
        if cur != self.v {
            return Err(format!("traversal {parity} ends at {cur}, expected {}", self.v));
        }
        Ok(out)
    }

    /// Host-level checks: odd path lengths, every path and both traversals
    /// valid in `g`, and the two connecting paths sharing only their ends.
    pub fn validate(&self, g: &Graph) -> Result<(), String> {
        let (absorbing, skipping) = self.traversals()?;
        for (name, path) in [("P", &self.path_p), ("Q", &self.path_q)] {
            path.validate(g).map_err(|e| format!("path {name}: {e}"))?;
            if (path.start(), path.end()) != (self.fx, self.fy) {
                return Err(format!("path {name} does not run from {} to {}", self.fx, self.fy));
            }
        }
        for r in &self.rungs {
            r.validate(g).map_err(|e| format!("rung: {e}"))?;
        }
        Path(absorbing).validate(g).map_err(|e| format!("absorbing traversal: {e}"))?;
        Path(skipping).validate(g).map_err(|e| format!("skipping traversal: {e}"))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gadget on abstract ids with rungs realised as direct edges.
    fn abstract_gadget(lp: usize, lq: usize) -> TwoVertexGadget {
        let (s, t) = (0, 1);
        let mut next = 2;
        let mut build = |l: usize| {
            let mut v = vec![s];
            for _ in 0..2 * l {
                v.push(next);
                next += 1;
            }
            v.push(t);
            Path(v)
        };
        let p = build(lp);
        let q = build(lq);
        let rungs = rung_pairs(&p, &q).unwrap().into_iter().map(|(a, b)| Path(vec![a, b])).collect();
        let (u, v) = endpoints(&p, &q).unwrap();
        TwoVertexGadget { x: 0, y: 0, fx: s, fy: t, path_p: p, path_q: q, rungs, u, v }
    }

    #[test]
    fn traversals_exist_for_all_length_pairs() {
        for lp in 1..=9 {
            for lq in lp..=12 {
                let g = abstract_gadget(lp, lq);
                let (abs, skip) = g.traversals().unwrap_or_else(|e| panic!("({lp},{lq}): {e}"));
                assert_eq!(abs.len(), 2 * lp + 2 * lq + 2);
                assert_eq!(skip.len(), 2 * lp + 2 * lq);
            }
        }
    }

    #[test]
    fn figure_example_walks() {
        // P = x a1 b1 a2 b2 a3 b3 y, Q = x c1 d1 … c5 d5 y.
        let g = abstract_gadget(3, 5);
        let (abs, skip) = g.traversals().unwrap();
        let p = g.path_p.vertices();
        let q = g.path_q.vertices();
        let (a, b) = (|i: usize| p[2 * i - 1], |i: usize| p[2 * i]);
        let (c, d) = (|i: usize| q[2 * i - 1], |i: usize| q[2 * i]);
        let want_abs =
            vec![a(1), 0, c(1), b(1), a(2), d(1), c(2), b(2), a(3), d(2), c(3), b(3), 1, d(5), d(3), c(4), c(5), d(4)];
        assert_eq!(abs, want_abs);
        let want_skip =
            vec![a(1), b(1), c(1), d(1), a(2), b(2), c(2), d(2), a(3), b(3), c(3), d(3), d(5), c(5), c(4), d(4)];
        assert_eq!(skip, want_skip);
    }

    #[test]
    fn missing_rung_is_detected() {
        let mut g = abstract_gadget(2, 3);
        g.rungs.pop();
        assert!(g.traversals().is_err());
    }

    #[test]
    fn even_path_rejected() {
        let p = Path(vec![0, 2, 1]);
        let q = Path(vec![0, 3, 4, 5, 1]);
        assert!(rung_pairs(&p, &q).is_err());
    }
}
