//! Side bookkeeping for connections routed through `U`.
//!
//! A connection whose ends both attach to `U ∩ A` runs through the bipartite
//! graph on `U` from A to A, so it uses one more A-vertex than B-vertices; an
//! A–A pair is an *A-pair* and shifts the balance `n_A − n_B` by +1. B-pairs
//! shift it by −1 and mixed pairs not at all. The absorber only swallows
//! balanced leftovers, so the balance has to be zero. Spare vertices from
//! `Q_A` / `Q_B` spliced in front of the absorber endpoint `a` move it by ±1
//! each.

use serde::{Deserialize, Serialize};

use super::CoverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Which sides of `U` a vertex has enough neighbours in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expansion {
    Only(Side),
    Both,
    Neither,
}

impl Expansion {
    pub fn classify(into_a: usize, into_b: usize, threshold: usize) -> Expansion {
        match (into_a >= threshold, into_b >= threshold) {
            (true, true) => Expansion::Both,
            (true, false) => Expansion::Only(Side::A),
            (false, true) => Expansion::Only(Side::B),
            (false, false) => Expansion::Neither,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerPair {
    pub x: usize,
    pub y: usize,
    pub x_class: Expansion,
    pub y_class: Expansion,
    /// Side of `U` each end attaches to, once assigned.
    pub x_side: Option<Side>,
    pub y_side: Option<Side>,
    /// Joined by an edge of `G`; uses no vertex of `U`.
    pub direct: bool,
}

impl LedgerPair {
    pub fn new(x: usize, y: usize, x_class: Expansion, y_class: Expansion, direct: bool) -> Self {
        LedgerPair { x, y, x_class, y_class, x_side: None, y_side: None, direct }
    }

    /// `Some(side)` for a pure routed pair.
    pub fn kind(&self) -> Option<Side> {
        if self.direct {
            return None;
        }
        match (self.x_side, self.y_side) {
            (Some(s), Some(t)) if s == t => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairLedger {
    pub pairs: Vec<LedgerPair>,
    /// Index of the pair ending at the absorber endpoint `a`; insertions are
    /// spliced there.
    pub anchor: Option<usize>,
    /// Spare vertices spliced before `a`, in cycle order.
    pub insertions: Vec<usize>,
    pub n_a: usize,
    pub n_b: usize,
}

impl PairLedger {
    pub fn recount(&mut self) {
        self.n_a = self.pairs.iter().filter(|p| p.kind() == Some(Side::A)).count();
        self.n_b = self.pairs.iter().filter(|p| p.kind() == Some(Side::B)).count();
    }

    pub fn imbalance(&self) -> i64 {
        self.n_a as i64 - self.n_b as i64
    }

    pub fn routed(&self) -> usize {
        self.pairs.iter().filter(|p| !p.direct).count()
    }
}

fn forced(class: Expansion) -> Option<Side> {
    match class {
        Expansion::Only(s) => Some(s),
        _ => None,
    }
}

/// Assigns sides to every routed pair, then splices spare vertices in front of
/// the anchor until `n_A = n_B`. Flexible ends copy a forced partner, so the
/// pair stays easy to route through a single common neighbour; two flexible
/// ends take the side that shrinks the imbalance (A when it is zero), so
/// such pairs alternate. Deterministic: pools are consumed in the given order.
pub fn balance_pairs(mut ledger: PairLedger, q_a: &[usize], q_b: &[usize]) -> Result<PairLedger, CoverError> {
    let mut d: i64 = 0;
    for pair in ledger.pairs.iter_mut().filter(|p| !p.direct) {
        let (fx, fy) = (forced(pair.x_class), forced(pair.y_class));
        let flex = |c: Expansion| c == Expansion::Both;
        let (sx, sy) = match (fx, fy) {
            (Some(s), Some(t)) => (Some(s), Some(t)),
            (Some(s), None) => (Some(s), flex(pair.y_class).then_some(s)),
            (None, Some(t)) => (flex(pair.x_class).then_some(t), Some(t)),
            (None, None) if flex(pair.x_class) && flex(pair.y_class) => {
                let s = if d > 0 { Side::B } else { Side::A };
                (Some(s), Some(s))
            }
            (None, None) => {
                let s = if flex(pair.x_class) { Some(Side::A) } else { None };
                let t = if flex(pair.y_class) { Some(Side::A) } else { None };
                (s, t)
            }
        };
        pair.x_side = sx;
        pair.y_side = sy;
        d += match pair.kind() {
            Some(Side::A) => 1,
            Some(Side::B) => -1,
            None => 0,
        };
    }
    ledger.recount();

    let (mut next_a, mut next_b) = (0, 0);
    while ledger.imbalance() != 0 {
        let need = if ledger.imbalance() > 0 { Side::B } else { Side::A };
        let (pool, next) = match need {
            Side::A => (q_a, &mut next_a),
            Side::B => (q_b, &mut next_b),
        };
        let Some(&u) = pool.get(*next).filter(|u| !ledger.insertions.contains(u)) else {
            return Err(CoverError::BalanceInfeasible {
                n_a: ledger.n_a,
                n_b: ledger.n_b,
                q_a: q_a.len(),
                q_b: q_b.len(),
            });
        };
        *next += 1;
        let Some(anchor) = ledger.anchor else {
            return Err(CoverError::BalanceInfeasible { n_a: ledger.n_a, n_b: ledger.n_b, q_a: 0, q_b: 0 });
        };
        // (prev, a) becomes (prev, u), (u, a); prev keeps its side.
        let old = ledger.pairs[anchor].clone();
        let class = Expansion::Only(need);
        let prev_side = if old.direct { forced(old.x_class).or(Some(need)) } else { old.x_side };
        let first = LedgerPair {
            x: old.x,
            y: u,
            x_class: old.x_class,
            y_class: class,
            x_side: prev_side,
            y_side: Some(need),
            direct: false,
        };
        let second = LedgerPair {
            x: u,
            y: old.y,
            x_class: class,
            y_class: old.y_class,
            x_side: Some(need),
            y_side: forced(old.y_class).or(old.y_side),
            direct: false,
        };
        ledger.pairs[anchor] = first;
        ledger.pairs.insert(anchor + 1, second);
        ledger.anchor = Some(anchor + 1);
        ledger.insertions.push(u);
        let before = ledger.imbalance();
        ledger.recount();
        if ledger.imbalance() == before {
            return Err(CoverError::BalanceInfeasible {
                n_a: ledger.n_a,
                n_b: ledger.n_b,
                q_a: q_a.len(),
                q_b: q_b.len(),
            });
        }
    }
    Ok(ledger)
}
