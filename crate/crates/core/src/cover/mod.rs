//! Covers by `k − 1` cycles.
//!
//! [`cover_expander`] handles one expanding graph: reserve a small set `U`
//! and a reservoir `W`, build an absorber for `U` inside a bipartite slice,
//! cover everything else by `k − 1` path forests, join consecutive paths into
//! cycles, and let the absorber swallow whatever part of `U` the joins did
//! not use. Consecutive paths are joined directly whenever rotations can make
//! their ends adjacent; only the remaining joins are routed through `U`.
//! [`cover_graph`] first splits the graph into expanding parts and spreads the
//! cycle budget over them.
//!
//! Every cover leaving this module has passed [`validate_cycle_cover`].

mod approx;
mod balance;
mod rotation;

pub use approx::{approx_cycle_cover, check_forest_cover, level_count, path_forest_cover, ForestParams};
pub use balance::{balance_pairs, Expansion, LedgerPair, PairLedger, Side};

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::absorber::{absorb_in, build_absorber, AbsorberParams, AbsorberStructure, TemplateCheck};
use crate::connect::{connect_all_with, ConnectionDemand, RouteOptions};
use crate::expander::{bipartite_expander_subgraph, certify_expander_with};
use crate::graph::{validate_cycle_cover, Cycle, CycleCover, Graph, VertexSet};
use crate::partition::{split_into_expanders, PartitionParams};
use crate::rng::Seed;
use crate::sparse::spectral_beta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Precheck,
    Partition,
    Split,
    Absorber,
    Reservoir,
    PathCover,
    Steering,
    Balancing,
    Connect,
    Absorb,
    Validate,
}

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoverError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("graph has {components} components and cannot be covered as one expander")]
    Disconnected { components: usize },
    #[error("{leftover} vertices left uncovered, at most {allowed} allowed")]
    CoverageShortfall { leftover: usize, allowed: usize },
    #[error("forest {forest} has {paths} paths, limit {max_paths}")]
    PathBudget { forest: usize, paths: usize, max_paths: usize },
    #[error("pair balance {n_a}:{n_b} cannot be evened out with spare pools of sizes {q_a} and {q_b}")]
    BalanceInfeasible { n_a: usize, n_b: usize, q_a: usize, q_b: usize },
    #[error("parts need {needed} cycles, budget is {budget}")]
    PartitionBudgetError { needed: usize, budget: usize },
    #[error("stage {stage:?} failed after {attempts} attempt(s): {message}")]
    Failed { stage: Stage, attempts: usize, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CoverError {
    pub fn stage(&self) -> Stage {
        match self {
            CoverError::Precondition(_) | CoverError::Disconnected { .. } => Stage::Precheck,
            CoverError::CoverageShortfall { .. } | CoverError::PathBudget { .. } => Stage::PathCover,
            CoverError::BalanceInfeasible { .. } => Stage::Balancing,
            CoverError::PartitionBudgetError { .. } => Stage::Partition,
            CoverError::Failed { stage, .. } => *stage,
            CoverError::Internal(_) => Stage::Validate,
        }
    }

    fn at(self, stage: Stage) -> CoverError {
        match self {
            CoverError::Failed { .. } | CoverError::Internal(_) => self,
            e => CoverError::Failed { stage, attempts: 1, message: e.to_string() },
        }
    }

    fn retryable(&self) -> bool {
        !matches!(self, CoverError::Precondition(_) | CoverError::Disconnected { .. } | CoverError::Internal(_))
    }
}

fn failed(stage: Stage, message: impl ToString) -> CoverError {
    CoverError::Failed { stage, attempts: 1, message: message.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum BetaSource {
    Skip,
    Given { beta: f64 },
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionSettings {
    pub c: f64,
    pub xi: f64,
    pub cut_budget: usize,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        PartitionSettings { c: 0.2, xi: 0.1, cut_budget: 3 }
    }
}

/// Knobs of the pipeline. Defaults are tuned for graphs of a few thousand
/// vertices with average degree in the tens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Minimum-degree slack over `n p / k`; reported, not enforced.
    pub alpha: f64,
    /// Expansion target: parts are meant to be `γp`-expanders.
    pub gamma: f64,
    /// Edge density; measured when absent.
    pub p: Option<f64>,
    pub beta: BetaSource,
    pub seed: u64,
    /// Attempts per expander, each with a fresh derived seed.
    pub retries: usize,
    /// `|Q| = |Y| = ⌊εn⌋`, also the numerator of `|U|`.
    pub epsilon: f64,
    /// `|U| = ⌊εn / (C ln² n)⌋`, capped at `u_max` and made even.
    pub u_constant: f64,
    pub u_max: usize,
    /// `|W|` as a fraction of `n`.
    pub w_fraction: f64,
    pub absorber: AbsorberParams,
    /// Path-length bound for joins routed through `U` and for the spare path.
    pub route_ell: usize,
    pub route_restarts: usize,
    pub forest: ForestParams,
    /// Paths allowed per forest; unlimited when absent.
    pub max_paths: Option<usize>,
    /// Rotated paths explored per join.
    pub steer_budget: usize,
    /// A vertex attaches to a side of `U` with at least
    /// `max(1, ⌈γ′|U|p⌉)` neighbours there.
    pub expanding_fraction: f64,
    pub bipartite_restarts: usize,
    pub partition: PartitionSettings,
    /// Expansion checks on random pieces of the split, recorded only.
    pub inheritance_checks: bool,
    pub inheritance_budget: usize,
    /// Pieces are tested as `γ₁p`-expanders with `γ₁ = inheritance_fraction·γ`.
    pub inheritance_fraction: f64,
    /// Below this many vertices the rotation cover is used on its own.
    pub small_n: usize,
    pub rotation_restarts: usize,
    /// When every absorbing attempt fails, try the rotation cover before
    /// giving up. `stats.method` shows which one produced the cover.
    pub rotation_fallback: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha: 0.05,
            gamma: 0.2,
            p: None,
            beta: BetaSource::Skip,
            seed: 0,
            retries: 12,
            epsilon: 0.05,
            u_constant: 1.0,
            u_max: 2,
            w_fraction: 0.7,
            absorber: AbsorberParams {
                matchings: 2,
                ell: 8,
                template_check: TemplateCheck::Auto { samples: 2000 },
                restarts: 8,
                split: [2.0, 1.0, 1.0],
            },
            route_ell: 8,
            route_restarts: 8,
            forest: ForestParams::default(),
            max_paths: None,
            steer_budget: 200,
            expanding_fraction: 0.1,
            bipartite_restarts: 4,
            partition: PartitionSettings::default(),
            inheritance_checks: true,
            inheritance_budget: 2,
            inheritance_fraction: 0.25,
            small_n: 64,
            rotation_restarts: 8,
            rotation_fallback: true,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self, k: usize) -> Result<(), CoverError> {
        if k < 2 {
            return Err(CoverError::Precondition(format!("k = {k}, at least 2 required")));
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("w_fraction", self.w_fraction),
            ("expanding_fraction", self.expanding_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CoverError::Precondition(format!("{name} = {v} must lie strictly between 0 and 1")));
            }
        }
        if !(self.inheritance_fraction > 0.0 && self.inheritance_fraction <= 1.0) {
            return Err(CoverError::Precondition("inheritance_fraction must lie in (0, 1]".into()));
        }
        if self.u_max < 2 {
            return Err(CoverError::Precondition("u_max must be at least 2".into()));
        }
        if self.retries == 0 {
            return Err(CoverError::Precondition("retries must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Absorbing,
    Rotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InheritanceCheck {
    pub set: String,
    pub size: usize,
    /// `None` when no sparse cut was found but expansion is not proved.
    pub expanding: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverStats {
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub attempts: usize,
    pub u_size: usize,
    pub w_size: usize,
    pub absorber_vertices: usize,
    pub gadgets: usize,
    pub q_a: usize,
    pub q_b: usize,
    pub spare_path: usize,
    pub forest_paths: Vec<usize>,
    pub direct_joins: usize,
    pub routed_joins: usize,
    pub insertions: usize,
    pub used_u: usize,
    pub inheritance: Vec<InheritanceCheck>,
    pub beta: Option<f64>,
}

impl CoverStats {
    fn new(method: Method, n: usize, k: usize) -> Self {
        CoverStats {
            method,
            n,
            k,
            attempts: 0,
            u_size: 0,
            w_size: 0,
            absorber_vertices: 0,
            gadgets: 0,
            q_a: 0,
            q_b: 0,
            spare_path: 0,
            forest_paths: Vec::new(),
            direct_joins: 0,
            routed_joins: 0,
            insertions: 0,
            used_u: 0,
            inheritance: Vec::new(),
            beta: None,
        }
    }
}

/// Wall-clock seconds per stage. Kept apart from the stats so that reports
/// built from stats stay reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings(pub Vec<(Stage, f64)>);

struct Timer {
    timings: StageTimings,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Timer { timings: StageTimings::default(), last: Instant::now() }
    }

    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.timings.0.push((stage, (now - self.last).as_secs_f64()));
        self.last = now;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverOutcome {
    pub cover: CycleCover,
    pub stats: CoverStats,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCoverOutcome {
    pub cover: CycleCover,
    /// Vertex sets of the expanding parts, with the cycle budget of each.
    pub parts: Vec<(VertexSet, usize)>,
    pub part_stats: Vec<CoverStats>,
    pub timings: StageTimings,
}

fn density(g: &Graph) -> f64 {
    g.density().max(f64::MIN_POSITIVE)
}

/// Covers an expanding graph by at most `k − 1` cycles.
pub fn cover_expander(g: &Graph, k: usize, cfg: &PipelineConfig) -> Result<CoverOutcome, CoverError> {
    cover_expander_seeded(g, k, cfg, Seed(cfg.seed))
}

fn cover_expander_seeded(g: &Graph, k: usize, cfg: &PipelineConfig, seed: Seed) -> Result<CoverOutcome, CoverError> {
    cfg.check(k)?;
    let n = g.n();
    if n < 3 {
        return Err(CoverError::Precondition(format!("{n} vertices, a cycle needs 3")));
    }
    if let Some(v) = (0..n).find(|&v| g.degree(v) < 2) {
        return Err(CoverError::Precondition(format!(
            "vertex {v} has degree {}, no cycle passes through it",
            g.degree(v)
        )));
    }
    let components = g.components().len();
    if components > 1 {
        return Err(CoverError::Disconnected { components });
    }
    let mut timer = Timer::new();
    timer.lap(Stage::Precheck);

    let beta = match cfg.beta {
        BetaSource::Skip => None,
        BetaSource::Given { beta } => Some(beta),
        BetaSource::Spectral => Some(spectral_beta(g, cfg.p.unwrap_or_else(|| density(g))).beta),
    };

    let mut plan = vec![if n < cfg.small_n { Method::Rotation } else { Method::Absorbing }];
    if plan[0] == Method::Absorbing && cfg.rotation_fallback {
        plan.push(Method::Rotation);
    }
    let mut first_error = None;
    for (round, &method) in plan.iter().enumerate() {
        let round_seed = if round == 0 { seed } else { seed.derive_str("fallback") };
        let mut last = None;
        for attempt in 0..cfg.retries {
            let s = round_seed.derive(attempt as u64);
            let result = match method {
                Method::Rotation => rotation_cover(g, k, cfg, s),
                Method::Absorbing => absorbing_cover(g, k, cfg, s, &mut timer),
            };
            match result {
                Ok((cycles, mut stats)) => {
                    stats.attempts = attempt + 1;
                    stats.beta = beta;
                    let cover = CycleCover { cycles, k };
                    let report = validate_cycle_cover(g, &cover);
                    timer.lap(Stage::Validate);
                    if !report.pass {
                        return Err(CoverError::Internal(format!("assembled cover rejected: {:?}", report.violation)));
                    }
                    return Ok(CoverOutcome { cover, stats, timings: timer.timings });
                }
                Err(e) if e.retryable() => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        first_error.get_or_insert(last.expect("at least one attempt"));
    }
    // The first method's failure is the informative one.
    Err(match first_error.expect("at least one method") {
        CoverError::Failed { stage, message, .. } => CoverError::Failed { stage, attempts: cfg.retries, message },
        e => CoverError::Failed { stage: e.stage(), attempts: cfg.retries, message: e.to_string() },
    })
}

/// Disjoint cycles from the approximate cover, then, while the budget lasts,
/// one extra cycle through each vertex still uncovered (extra cycles may
/// reuse covered vertices).
fn rotation_cover(
    g: &Graph,
    k: usize,
    cfg: &PipelineConfig,
    seed: Seed,
) -> Result<(Vec<Cycle>, CoverStats), CoverError> {
    let n = g.n();
    let mut cycles = approx_cycle_cover(g, k, 1.0, cfg.rotation_restarts, seed).map_err(|e| e.at(Stage::PathCover))?;
    let mut covered = vec![false; n];
    for c in &cycles {
        for &v in c.vertices() {
            covered[v] = true;
        }
    }
    while let Some(v) = covered.iter().position(|&c| !c) {
        if cycles.len() >= k - 1 {
            let leftover = covered.iter().filter(|&&c| !c).count();
            return Err(failed(Stage::PathCover, CoverError::CoverageShortfall { leftover, allowed: 0 }));
        }
        let Some(c) = rotation::cycle_through(g, v) else {
            return Err(failed(Stage::PathCover, format!("no cycle passes through vertex {v}")));
        };
        for &w in &c {
            covered[w] = true;
        }
        cycles.push(Cycle(c));
    }
    Ok((cycles, CoverStats::new(Method::Rotation, n, k)))
}

/// A piece of a cycle between two joins.
#[derive(Debug, Clone)]
struct Segment {
    verts: Vec<usize>,
    rotatable: bool,
    /// Stands for the absorber path; `verts` is `[a, b]` until absorption.
    absorber: bool,
}

impl Segment {
    fn path(verts: Vec<usize>) -> Self {
        Segment { rotatable: verts.len() >= 3, verts, absorber: false }
    }

    fn fixed(verts: Vec<usize>) -> Self {
        Segment { verts, rotatable: false, absorber: false }
    }

    fn start(&self) -> usize {
        self.verts[0]
    }

    fn end(&self) -> usize {
        *self.verts.last().expect("non-empty segment")
    }
}

/// Sizes `(|U|, |W|, |Q|)`, with `|Y| = |Q|`.
fn split_sizes(n: usize, k: usize, cfg: &PipelineConfig) -> (usize, usize, usize) {
    let nf = n as f64;
    let raw = (cfg.epsilon * nf / (cfg.u_constant * nf.ln().powi(2))).floor() as usize;
    let u = (raw.min(cfg.u_max) / 2 * 2).max(2);
    let w = (cfg.w_fraction * nf).floor() as usize;
    let q = if k >= 3 { (cfg.epsilon * nf).floor() as usize } else { 0 };
    (u, w, q)
}

fn absorbing_cover(
    g: &Graph,
    k: usize,
    cfg: &PipelineConfig,
    seed: Seed,
    timer: &mut Timer,
) -> Result<(Vec<Cycle>, CoverStats), CoverError> {
    let n = g.n();
    let p = cfg.p.unwrap_or_else(|| density(g));
    let mut stats = CoverStats::new(Method::Absorbing, n, k);
    let (u_size, w_size, q_size) = split_sizes(n, k, cfg);
    if u_size + w_size + 2 * q_size + 3 > n {
        return Err(CoverError::Precondition(format!(
            "{n} vertices cannot hold |U| = {u_size}, |W| = {w_size}, |Q| = |Y| = {q_size} and a remainder"
        )));
    }

    // Split. For k = 2 the bipartition is random and F keeps the crossing
    // edges inside U ∪ W; otherwise F is a max-cut subgraph of the whole graph.
    let mut rng = seed.derive_str("split").rng();
    let (side_a, f_graph, u_set, w_set, q_set, y_set) = if k == 2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let u: Vec<usize> = order[..u_size].to_vec();
        let w: Vec<usize> = order[u_size..u_size + w_size].to_vec();
        let mut side = vec![false; n];
        for &v in u[..u_size / 2].iter().chain(&w[..w_size / 2]) {
            side[v] = true;
        }
        let in_uw = crate::graph::mask_of(n, u.iter().chain(&w).copied());
        let f = g.filter_edges(|x, y| in_uw[x] && in_uw[y] && side[x] != side[y]);
        (
            side,
            f,
            VertexSet::from_iter_unchecked(u),
            VertexSet::from_iter_unchecked(w),
            VertexSet::empty(),
            VertexSet::empty(),
        )
    } else {
        let split = bipartite_expander_subgraph(g, cfg.bipartite_restarts, None, seed.derive_str("bipartite"));
        let mut a: Vec<usize> = split.a.iter().collect();
        let mut b: Vec<usize> = split.b.iter().collect();
        if a.len() < u_size / 2 || b.len() < u_size / 2 {
            return Err(failed(Stage::Split, "one side of the bipartite subgraph is too small for U"));
        }
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        let u: Vec<usize> = a[..u_size / 2].iter().chain(&b[..u_size / 2]).copied().collect();
        let in_u = crate::graph::mask_of(n, u.iter().copied());
        let mut rest: Vec<usize> = (0..n).filter(|&v| !in_u[v]).collect();
        rest.shuffle(&mut rng);
        let w = &rest[..w_size];
        let q = &rest[w_size..w_size + q_size];
        let y = &rest[w_size + q_size..w_size + 2 * q_size];
        (
            split.side,
            split.subgraph,
            VertexSet::from_iter_unchecked(u),
            w.iter().copied().collect(),
            q.iter().copied().collect(),
            y.iter().copied().collect(),
        )
    };
    stats.u_size = u_set.len();
    stats.w_size = w_set.len();
    timer.lap(Stage::Split);

    if k >= 3 && cfg.inheritance_checks {
        stats.inheritance = inheritance_checks(g, &f_graph, &u_set, &w_set, &q_set, &y_set, cfg, p, seed);
    }

    let abs = build_absorber(&f_graph, &u_set, &w_set, &side_a, &cfg.absorber, seed.derive_str("absorber"))
        .map_err(|e| failed(Stage::Absorber, e))?;
    stats.absorber_vertices = abs.vertices.len();
    stats.gadgets = abs.gadget_count();
    timer.lap(Stage::Absorber);

    // Which side of U each vertex can reach.
    let u_a = abs.x_set.mask(n);
    let u_b = abs.y_set.mask(n);
    let threshold = ((cfg.expanding_fraction * u_set.len() as f64 * p).ceil() as usize).max(1);
    let classify = |v: usize| Expansion::classify(g.degree_into(v, &u_a), g.degree_into(v, &u_b), threshold);

    // Spare pools and the path through them.
    let (q_a, q_b, spare_path) = if k >= 3 {
        reservoir(g, k, &q_set, &y_set, &classify, cfg, seed).map_err(|e| e.at(Stage::Reservoir))?
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    stats.q_a = q_a.len();
    stats.q_b = q_b.len();
    stats.spare_path = spare_path.len();
    timer.lap(Stage::Reservoir);

    // Everything else is covered by k − 1 path forests.
    let mut taken = abs.vertices.mask(n);
    for &v in &spare_path {
        taken[v] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| !taken[v]).collect();
    let sub = g.induced(&rest);
    let max_paths = cfg.max_paths.unwrap_or(n.max(1));
    let forests = path_forest_cover(&sub, k, max_paths, &cfg.forest, seed.derive_str("forests"))
        .map_err(|e| e.at(Stage::PathCover))?;
    let mut forests: Vec<Vec<Vec<usize>>> = forests
        .into_iter()
        .map(|f| f.0.into_iter().map(|p| p.0.into_iter().map(|v| rest[v]).collect()).collect())
        .collect();
    approx::dissolve_short(g, &mut forests, SHORT_PATH);
    approx::tidy_ends(g, &mut forests);
    give_rotatable_path(&mut forests, if k == 2 { 0 } else { 1 });
    stats.forest_paths = forests.iter().map(Vec::len).collect();
    timer.lap(Stage::PathCover);

    // Cycle layout. The absorber cycle holds the absorber first, so the join
    // into `a` is its last one.
    let absorber_cycle = if k == 2 { 0 } else { 1 };
    let mut cycles: Vec<Vec<Segment>> = Vec::with_capacity(k - 1);
    for (i, forest) in forests.into_iter().enumerate() {
        let mut segs = Vec::new();
        if i == absorber_cycle {
            segs.push(Segment { verts: vec![abs.a, abs.b], rotatable: false, absorber: true });
        }
        if i == 0 && !spare_path.is_empty() {
            segs.push(Segment::path(spare_path.clone()));
        }
        segs.extend(forest.into_iter().map(Segment::path));
        cycles.push(segs);
    }
    // Cycles too small to close hand their paths to the absorber cycle.
    for i in 0..cycles.len() {
        let size: usize = cycles[i].iter().map(|s| s.verts.len()).sum();
        if i != absorber_cycle && size < 3 {
            let moved = std::mem::take(&mut cycles[i]);
            cycles[absorber_cycle].extend(moved);
        }
    }
    cycles.retain(|c| !c.is_empty());
    let absorber_cycle = cycles.iter().position(|c| c.iter().any(|s| s.absorber)).expect("absorber cycle kept");

    // Joins: direct where rotations allow, else through U.
    let mut ledger = PairLedger::default();
    let mut joins_per_cycle = Vec::with_capacity(cycles.len());
    for (ci, segs) in cycles.iter_mut().enumerate() {
        let t = segs.len();
        for j in 0..t {
            let direct = steer_join(g, segs, j, cfg.steer_budget, &|v| classify(v) != Expansion::Neither);
            let (x, y) = (segs[j].end(), segs[(j + 1) % t].start());
            ledger.pairs.push(LedgerPair::new(x, y, classify(x), classify(y), direct));
        }
        if ci == absorber_cycle {
            ledger.anchor = Some(ledger.pairs.len() - 1);
        }
        joins_per_cycle.push(t);
    }
    // A single-segment cycle closes on itself; both ends must differ.
    if let Some(p) = ledger.pairs.iter().find(|p| p.x == p.y) {
        return Err(failed(Stage::Steering, format!("segment of one vertex {} cannot close a cycle", p.x)));
    }
    stats.direct_joins = ledger.pairs.iter().filter(|p| p.direct).count();
    timer.lap(Stage::Steering);

    let ledger = balance_pairs(ledger, &q_a, &q_b).map_err(|e| e.at(Stage::Balancing))?;
    joins_per_cycle[absorber_cycle] += ledger.insertions.len();
    cycles[absorber_cycle].extend(ledger.insertions.iter().map(|&u| Segment::fixed(vec![u])));
    stats.insertions = ledger.insertions.len();
    stats.routed_joins = ledger.routed();
    timer.lap(Stage::Balancing);

    let interiors = route_joins(g, &f_graph, &abs, &ledger, &u_set, cfg, seed)?;
    timer.lap(Stage::Connect);

    // Absorb exactly the unused part of U; the recount must balance.
    let used: VertexSet = interiors.iter().flatten().copied().collect();
    let x_used = used.intersection(&abs.x_set);
    let y_used = used.intersection(&abs.y_set);
    stats.used_u = used.len();
    if x_used.len() != y_used.len() {
        return Err(failed(
            Stage::Balancing,
            format!("joins use {} vertices of U ∩ A and {} of U ∩ B", x_used.len(), y_used.len()),
        ));
    }
    let absorbed = absorb_in(&abs, g, &x_used, &y_used).map_err(|e| failed(Stage::Absorb, e))?;
    timer.lap(Stage::Absorb);

    let mut out = Vec::with_capacity(cycles.len());
    let mut pair_index = 0;
    for (segs, &t) in cycles.iter().zip(&joins_per_cycle) {
        debug_assert_eq!(segs.len(), t);
        let mut seq = Vec::new();
        for seg in segs {
            if seg.absorber {
                seq.extend_from_slice(absorbed.vertices());
            } else {
                seq.extend_from_slice(&seg.verts);
            }
            seq.extend_from_slice(&interiors[pair_index]);
            pair_index += 1;
        }
        out.push(Cycle(seq));
    }
    Ok((out, stats))
}

/// Paths shorter than this are broken up before the joins are steered.
const SHORT_PATH: usize = 8;

/// The absorber cycle cannot close without a path that rotations can steer.
/// When its forest has no long path, the longest path elsewhere is cut in
/// half and the second half moves over.
fn give_rotatable_path(forests: &mut [Vec<Vec<usize>>], target: usize) {
    if forests[target].iter().any(|p| p.len() >= 4 * SHORT_PATH) {
        return;
    }
    let longest = forests
        .iter()
        .enumerate()
        .flat_map(|(f, paths)| paths.iter().enumerate().map(move |(i, p)| (p.len(), f, i)))
        .max_by_key(|&(len, f, i)| (len, std::cmp::Reverse((f, i))));
    if let Some((len, f, i)) = longest.filter(|&(len, f, _)| len >= 8 * SHORT_PATH && f != target) {
        let half = forests[f][i].split_off(len / 2);
        forests[target].push(half);
    }
}

/// Makes the end of segment `j` adjacent to the start of segment `j + 1`
/// (cyclically), rotating whichever side may move. Joins already fixed keep
/// their ends: `j`'s start and `j + 1`'s end never change. Falls back to ends
/// accepted by `routable`.
fn steer_join(g: &Graph, segs: &mut [Segment], j: usize, budget: usize, routable: &dyn Fn(usize) -> bool) -> bool {
    let t = segs.len();
    let next = (j + 1) % t;
    if next == j {
        let seg = &mut segs[j];
        let start = seg.start();
        if seg.rotatable && rotation::steer_end(g, &mut seg.verts, &|v| v != start && g.has_edge(v, start), budget) {
            return true;
        }
        return g.has_edge(seg.end(), seg.start()) && seg.verts.len() >= 3;
    }
    let head = segs[next].start();
    if g.has_edge(segs[j].end(), head) {
        return true;
    }
    if segs[j].rotatable && rotation::steer_end(g, &mut segs[j].verts, &|v| g.has_edge(v, head), budget) {
        return true;
    }
    let tail = segs[j].end();
    // Moving the start of segment 0 would break the join closing the cycle.
    if next != 0
        && segs[next].rotatable
        && rotation::steer_start(g, &mut segs[next].verts, &|v| g.has_edge(v, tail), budget)
    {
        return true;
    }
    if !routable(segs[j].end()) && segs[j].rotatable {
        rotation::steer_end(g, &mut segs[j].verts, routable, budget);
    }
    let tail = segs[j].end();
    if !routable(segs[next].start()) && next != 0 && segs[next].rotatable {
        rotation::steer_start(g, &mut segs[next].verts, &|v| routable(v) || g.has_edge(v, tail), budget);
    }
    g.has_edge(segs[j].end(), segs[next].start())
}

/// Picks `Q_A`, `Q_B` from `Q` and threads them on one path through `Y` and
/// the rest of `Q`.
#[allow(clippy::type_complexity)]
fn reservoir(
    g: &Graph,
    k: usize,
    q_set: &VertexSet,
    y_set: &VertexSet,
    classify: &dyn Fn(usize) -> Expansion,
    cfg: &PipelineConfig,
    seed: Seed,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>), CoverError> {
    let n = g.n();
    let cap = (k as f64 * n as f64 / (n as f64).ln().powi(3)).floor() as usize;
    let mut q_a = Vec::new();
    let mut q_b = Vec::new();
    let mut order: Vec<usize> = q_set.iter().collect();
    order.shuffle(&mut seed.derive_str("pools").rng());
    for v in order {
        let pool = match classify(v) {
            Expansion::Only(Side::A) => &mut q_a,
            Expansion::Only(Side::B) => &mut q_b,
            Expansion::Both if q_a.len() <= q_b.len() => &mut q_a,
            Expansion::Both => &mut q_b,
            Expansion::Neither => continue,
        };
        if pool.len() < cap {
            pool.push(v);
        }
    }
    let terminals: Vec<usize> = q_a.iter().chain(&q_b).copied().collect();
    if terminals.len() <= 1 {
        return Ok((q_a, q_b, terminals));
    }
    let pairs: Vec<(usize, usize)> = terminals.windows(2).map(|w| (w[0], w[1])).collect();
    let demand = ConnectionDemand::new(n, pairs.clone()).map_err(|e| CoverError::Precondition(e.to_string()))?;
    let opts = RouteOptions { restarts: cfg.route_restarts, allow_direct: true };
    // Spare vertices of Q outside the pools may carry the path as well.
    let pooled: VertexSet = terminals.iter().copied().collect();
    let through = y_set.union(&q_set.difference(&pooled));
    let sys = connect_all_with(g, &demand, &through, cfg.route_ell, opts, seed.derive_str("spare-path"))
        .map_err(|e| failed(Stage::Reservoir, e))?;
    let mut path = vec![terminals[0]];
    for (route, &(s, _)) in sys.routes.iter().zip(&pairs) {
        let route = if route.start() == s { route.clone() } else { route.reversed() };
        path.extend_from_slice(&route.vertices()[1..]);
    }
    Ok((q_a, q_b, path))
}

/// Routes every non-direct join through `U` in one call and returns, per
/// ledger pair, the interior vertices in order from `x` to `y`.
fn route_joins(
    g: &Graph,
    f_graph: &Graph,
    abs: &AbsorberStructure,
    ledger: &PairLedger,
    u_set: &VertexSet,
    cfg: &PipelineConfig,
    seed: Seed,
) -> Result<Vec<Vec<usize>>, CoverError> {
    let n = g.n();
    let mut interiors = vec![Vec::new(); ledger.pairs.len()];
    let routed: Vec<usize> = (0..ledger.pairs.len()).filter(|&i| !ledger.pairs[i].direct).collect();
    if routed.is_empty() {
        return Ok(interiors);
    }
    // Interiors run in F[U]; ends attach to their assigned side.
    let mut edges: Vec<(usize, usize)> =
        f_graph.edges().filter(|&(x, y)| u_set.contains(x) && u_set.contains(y)).collect();
    for &i in &routed {
        let pair = &ledger.pairs[i];
        for (v, side) in [(pair.x, pair.x_side), (pair.y, pair.y_side)] {
            let target = match side {
                Some(Side::A) => &abs.x_set,
                Some(Side::B) => &abs.y_set,
                None => continue,
            };
            edges.extend(g.neighbors(v).iter().filter(|&&u| target.contains(u)).map(|&u| (v, u)));
        }
    }
    let host = Graph::empty(n).with_extra_edges(edges);
    let pairs: Vec<(usize, usize)> = routed.iter().map(|&i| (ledger.pairs[i].x, ledger.pairs[i].y)).collect();
    let demand = ConnectionDemand::new(n, pairs.clone()).map_err(|e| failed(Stage::Connect, e))?;
    let opts = RouteOptions { restarts: cfg.route_restarts, allow_direct: false };
    let sys = connect_all_with(&host, &demand, u_set, cfg.route_ell, opts, seed.derive_str("joins"))
        .map_err(|e| failed(Stage::Connect, e))?;
    for ((&i, route), &(x, _)) in routed.iter().zip(&sys.routes).zip(&pairs) {
        let route = if route.start() == x { route.clone() } else { route.reversed() };
        interiors[i] = route.internal().to_vec();
    }
    Ok(interiors)
}

#[allow(clippy::too_many_arguments)]
fn inheritance_checks(
    g: &Graph,
    f_graph: &Graph,
    u: &VertexSet,
    w: &VertexSet,
    q: &VertexSet,
    y: &VertexSet,
    cfg: &PipelineConfig,
    p: f64,
    seed: Seed,
) -> Vec<InheritanceCheck> {
    let sets: Vec<(&str, &Graph, VertexSet)> = vec![
        ("G[Q]", g, q.clone()),
        ("G[Y]", g, y.clone()),
        ("G[U ∪ Q]", g, u.union(q)),
        ("F[U]", f_graph, u.clone()),
        ("F[W]", f_graph, w.clone()),
        ("F[U ∪ W]", f_graph, u.union(w)),
    ];
    let q_target = cfg.inheritance_fraction * cfg.gamma * p;
    sets.into_par_iter()
        .enumerate()
        .map(|(i, (name, host, set))| {
            let sub = host.induced(set.as_slice());
            let verdict = certify_expander_with(
                &sub,
                q_target,
                cfg.inheritance_budget,
                seed.derive_str("inherit").derive(i as u64),
            );
            let expanding = if verdict.cut().is_some() {
                Some(false)
            } else if verdict.passes() {
                Some(true)
            } else {
                None
            };
            InheritanceCheck { set: name.to_string(), size: set.len(), expanding }
        })
        .collect()
}

/// Splits `G` into expanding parts, gives part `i` the budget
/// `k_i = ⌈k n_i / n⌉` (raised to 2 when it comes out as 1), and covers each
/// part independently. The total budget `Σ (k_i − 1) ≤ k − 1` is checked
/// before any part is covered.
/// Partition parameters the pipeline uses for `g`; `p` defaults to the
/// edge density.
pub fn partition_params(g: &Graph, cfg: &PipelineConfig) -> PartitionParams {
    PartitionParams {
        c: cfg.partition.c,
        alpha: cfg.alpha,
        xi: cfg.partition.xi,
        p: cfg.p.unwrap_or_else(|| density(g)),
        gamma: cfg.gamma,
        cut_budget: cfg.partition.cut_budget,
    }
}

pub fn cover_graph(g: &Graph, k: usize, cfg: &PipelineConfig) -> Result<GraphCoverOutcome, CoverError> {
    cfg.check(k)?;
    let n = g.n();
    if n < 3 {
        return Err(CoverError::Precondition(format!("{n} vertices, a cycle needs 3")));
    }
    let seed = Seed(cfg.seed);
    let mut timer = Timer::new();
    let params = partition_params(g, cfg);
    let outcome =
        split_into_expanders(g, &params, seed.derive_str("partition")).map_err(|e| failed(Stage::Partition, e))?;
    timer.lap(Stage::Partition);
    let budgets: Vec<usize> = outcome.parts.iter().map(|part| part_budget(k, part.len(), n)).collect();
    let needed: usize = budgets.iter().map(|b| b - 1).sum();
    if needed > k - 1 {
        return Err(CoverError::PartitionBudgetError { needed, budget: k - 1 });
    }
    let results: Vec<Result<CoverOutcome, CoverError>> = outcome
        .parts
        .par_iter()
        .zip(&budgets)
        .enumerate()
        .map(|(i, (part, &ki))| {
            let sub = g.induced(part.as_slice());
            cover_expander_seeded(&sub, ki, cfg, seed.derive_str("part").derive(i as u64))
        })
        .collect();
    let mut cycles = Vec::new();
    let mut part_stats = Vec::new();
    for (part, result) in outcome.parts.iter().zip(results) {
        let out = result?;
        let ids = part.as_slice();
        cycles.extend(out.cover.cycles.into_iter().map(|c| Cycle(c.0.into_iter().map(|v| ids[v]).collect())));
        part_stats.push(out.stats);
        timer.timings.0.extend(out.timings.0);
    }
    let cover = CycleCover { cycles, k };
    let report = validate_cycle_cover(g, &cover);
    timer.lap(Stage::Validate);
    if !report.pass {
        return Err(CoverError::Internal(format!("combined cover rejected: {:?}", report.violation)));
    }
    let parts = outcome.parts.into_iter().zip(budgets).collect();
    Ok(GraphCoverOutcome { cover, parts, part_stats, timings: timer.timings })
}

/// `⌈k n_i / n⌉`, with 1 raised to 2 so a nonempty part gets a cycle.
pub fn part_budget(k: usize, part: usize, n: usize) -> usize {
    (k * part).div_ceil(n).max(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgen::{apply_adversary, gnp, planted_blocks, Adversary, Strategy};

    #[test]
    fn complete_graph_hamilton_cycle() {
        for n in [10, 100] {
            let out = cover_expander(&Graph::complete(n), 2, &PipelineConfig::default()).unwrap();
            assert_eq!(out.cover.cycles.len(), 1);
            assert_eq!(out.cover.cycles[0].len(), n);
        }
    }

    #[test]
    fn small_graphs_use_rotation() {
        let out = cover_expander(&Graph::petersen(), 3, &PipelineConfig::default()).unwrap();
        assert_eq!(out.stats.method, Method::Rotation);
        assert!(validate_cycle_cover(&Graph::petersen(), &out.cover).pass);
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let inst = planted_blocks(2, 400, 0.1, Seed(1));
        assert!(matches!(
            cover_expander(&inst.graph, 2, &PipelineConfig::default()),
            Err(CoverError::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn pendant_vertex_is_a_precondition_failure() {
        let g = Graph::complete(5).with_extra_edges([]).disjoint_union(&Graph::empty(1)).with_extra_edges([(0, 5)]);
        let err = cover_expander(&g, 2, &PipelineConfig::default()).unwrap_err();
        assert_eq!(err.stage(), Stage::Precheck);
    }

    #[test]
    fn random_graph_after_deletion() {
        let g = gnp(1500, 0.05, Seed(7));
        let h = apply_adversary(&g, &Adversary { strategy: Strategy::RandomDeletion, r: 0.3 }, Seed(8));
        let out = cover_expander(&h, 2, &PipelineConfig { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(out.cover.cycles.len(), 1);
        assert_eq!(out.stats.method, Method::Absorbing);
        assert!(validate_cycle_cover(&h, &out.cover).pass);
    }

    #[test]
    fn three_cycles_budget() {
        let g = gnp(1500, 0.05, Seed(9));
        let out = cover_expander(&g, 3, &PipelineConfig { seed: 4, ..Default::default() }).unwrap();
        assert!(out.cover.cycles.len() <= 2);
        assert!(validate_cycle_cover(&g, &out.cover).pass);
    }

    #[test]
    fn planted_blocks_split_budget() {
        let inst = planted_blocks(2, 800, 0.1, Seed(5));
        let out = cover_graph(&inst.graph, 3, &PipelineConfig::default()).unwrap();
        assert_eq!(out.parts.len(), 2);
        assert_eq!(out.cover.cycles.len(), 2);
    }

    #[test]
    fn exact_thirds_exceed_the_budget() {
        assert_eq!(part_budget(3, 800, 2400), 2);
        assert_eq!(part_budget(3, 1000, 2400), 2);
        assert_eq!(part_budget(3, 2400, 2400), 3);
        let inst = planted_blocks(3, 600, 0.15, Seed(6));
        assert!(matches!(
            cover_graph(&inst.graph, 3, &PipelineConfig::default()),
            Err(CoverError::PartitionBudgetError { needed: 3, budget: 2 })
        ));
    }
}
