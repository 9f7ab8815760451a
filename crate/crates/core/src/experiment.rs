//! Reproducible resilience experiments: generate instances, let an adversary
//! delete edges, cover, validate, aggregate.
//!
//! Every trial draws its seeds from the spec seed and the trial index alone,
//! so a report depends on nothing but the spec. Wall-clock timings are kept
//! out of the report and written to a separate file.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cover::{cover_graph, CoverError, Method, PipelineConfig, Stage};
use crate::graph::{validate_cycle_cover, write_edge_list, CycleCover};
use crate::randgen::{apply_adversary, gnp, planted_blocks, random_regular, Adversary, Strategy};
use crate::{Graph, GraphError, Seed};

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid experiment spec: {0}")]
    Config(String),
    #[error("spec schema mismatch: {0}")]
    Schema(String),
    #[error("trial {trial} returned a cover that failed validation: {message}")]
    Validation { trial: usize, message: String },
}

impl ExperimentError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Instance {
    Gnp { n: usize, p: f64 },
    PlantedBlocks { blocks: usize, n: usize, p: f64 },
    RandomRegular { n: usize, d: usize },
}

impl Instance {
    pub fn generate(&self, seed: Seed) -> Result<Graph, GraphError> {
        match *self {
            Instance::Gnp { n, p } => Ok(gnp(n, p, seed)),
            Instance::PlantedBlocks { blocks, n, p } => Ok(planted_blocks(blocks, n, p, seed).graph),
            Instance::RandomRegular { n, d } => random_regular(n, d, seed),
        }
    }

    /// Expected degree, used to report `δ / np`.
    pub fn expected_degree(&self) -> f64 {
        match *self {
            Instance::Gnp { n, p } => n as f64 * p,
            Instance::PlantedBlocks { blocks, n, p } => (n / blocks.max(1)) as f64 * p,
            Instance::RandomRegular { d, .. } => d as f64,
        }
    }
}

/// Bisection of the adversary fraction `r`. A point counts as a success when
/// its success rate reaches `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    pub name: String,
    pub instance: Instance,
    /// Without an adversary the instance is covered as generated.
    pub adversary: Option<Adversary>,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub config: PipelineConfig,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Write each trial's graph and cover next to the report.
    #[serde(default)]
    pub save_artifacts: bool,
}

impl ExperimentSpec {
    pub fn new(
        name: &str,
        instance: Instance,
        adversary: Option<Adversary>,
        k: usize,
        trials: usize,
        seed: u64,
    ) -> Self {
        ExperimentSpec {
            version: SPEC_VERSION,
            name: name.to_string(),
            instance,
            adversary,
            k,
            trials,
            seed,
            config: PipelineConfig::default(),
            sweep: None,
            save_artifacts: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.version != SPEC_VERSION {
            return Err(ExperimentError::Schema(format!("version {} (expected {SPEC_VERSION})", self.version)));
        }
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if let Some(adv) = &self.adversary {
            if !(0.0..=1.0).contains(&adv.r) {
                return bad("adversary r must lie in [0, 1]");
            }
        }
        if let Some(s) = &self.sweep {
            if self.adversary.is_none() {
                return bad("a sweep needs an adversary");
            }
            if !(0.0 <= s.lo && s.lo < s.hi && s.hi <= 1.0) {
                return bad("sweep needs 0 ≤ lo < hi ≤ 1");
            }
            if !(0.0..=1.0).contains(&s.threshold) {
                return bad("sweep threshold must lie in [0, 1]");
            }
        }
        self.config.check(self.k).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| ExperimentError::Schema(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub r: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub min_degree: usize,
    /// `δ / np` of the graph the pipeline saw.
    pub relative_min_degree: f64,
    pub success: bool,
    pub stage: Option<Stage>,
    pub error: Option<String>,
    pub cycles: Option<usize>,
    pub parts: Option<usize>,
    pub attempts: Option<usize>,
    /// Reservoir vertices the absorber swallowed, summed over parts.
    pub absorbed: Option<usize>,
    /// Paths in the approximate forests, summed over parts.
    pub forest_paths: Option<usize>,
    /// Parts covered by the rotation method rather than the absorber.
    pub rotation_parts: Option<usize>,
    /// SHA-256 of the validated cover; present exactly on success rows.
    pub cover_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r: Option<f64>,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub spec_hash: String,
    pub rows: Vec<TrialRow>,
    /// One point per evaluated `r`, in evaluation order.
    pub points: Vec<RatePoint>,
    pub success_rate: f64,
    /// `[last r that met the threshold, first r that did not]`.
    pub bracket: Option<[f64; 2]>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV of the rate points, one line per evaluated `r`.
    pub fn points_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["r", "trials", "successes", "rate"]).expect("in-memory write");
        for p in &self.points {
            let r = p.r.map(|r| r.to_string()).unwrap_or_default();
            w.write_record([r, p.trials.to_string(), p.successes.to_string(), p.rate.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Canonical digest of a cover: cycles in order, vertices comma-separated.
pub fn cover_hash(cover: &CycleCover) -> String {
    let mut h = Sha256::new();
    h.update(format!("k={}\n", cover.k));
    for c in &cover.cycles {
        let line: Vec<String> = c.vertices().iter().map(usize::to_string).collect();
        h.update(line.join(","));
        h.update("\n");
    }
    hex::encode(h.finalize())
}

fn spec_hash(spec: &ExperimentSpec) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(spec).expect("spec serializes")))
}

/// Per-trial artifacts kept out of the report.
struct TrialOutput {
    row: TrialRow,
    graph: Graph,
    cover: Option<CycleCover>,
    seconds: f64,
}

fn run_trial(spec: &ExperimentSpec, trial: usize, r: Option<f64>) -> Result<TrialOutput, ExperimentError> {
    let start = std::time::Instant::now();
    let seed = Seed(spec.seed).derive_str("trial").derive(trial as u64);
    let base =
        spec.instance.generate(seed.derive_str("instance")).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let graph = match (spec.adversary, r) {
        (Some(adv), Some(r)) => apply_adversary(&base, &Adversary { r, ..adv }, seed.derive_str("adversary")),
        _ => base,
    };
    let config = PipelineConfig { seed: seed.derive_str("cover").0, ..spec.config.clone() };
    let min_degree = graph.min_degree();
    let mut row = TrialRow {
        trial,
        r,
        n: graph.n(),
        m: graph.m(),
        min_degree,
        relative_min_degree: min_degree as f64 / spec.instance.expected_degree().max(f64::MIN_POSITIVE),
        success: false,
        stage: None,
        error: None,
        cycles: None,
        parts: None,
        attempts: None,
        absorbed: None,
        forest_paths: None,
        rotation_parts: None,
        cover_hash: None,
    };
    let mut cover = None;
    match cover_graph(&graph, spec.k, &config) {
        Ok(out) => {
            let report = validate_cycle_cover(&graph, &out.cover);
            if !report.pass {
                return Err(ExperimentError::Validation { trial, message: format!("{:?}", report.violation) });
            }
            row.success = true;
            row.cycles = Some(out.cover.cycles.len());
            row.parts = Some(out.parts.len());
            row.attempts = Some(out.part_stats.iter().map(|s| s.attempts).sum());
            row.absorbed = Some(out.part_stats.iter().map(|s| s.u_size - s.used_u).sum());
            row.forest_paths = Some(out.part_stats.iter().map(|s| s.forest_paths.iter().sum::<usize>()).sum());
            row.rotation_parts = Some(out.part_stats.iter().filter(|s| s.method == Method::Rotation).count());
            row.cover_hash = Some(cover_hash(&out.cover));
            cover = Some(out.cover);
        }
        Err(CoverError::Internal(message)) => return Err(ExperimentError::Validation { trial, message }),
        Err(e) => {
            row.stage = Some(e.stage());
            row.error = Some(e.to_string());
        }
    }
    Ok(TrialOutput { row, graph, cover, seconds: start.elapsed().as_secs_f64() })
}

fn run_point(spec: &ExperimentSpec, r: Option<f64>) -> Result<Vec<TrialOutput>, ExperimentError> {
    (0..spec.trials).into_par_iter().map(|t| run_trial(spec, t, r)).collect()
}

fn rate_point(r: Option<f64>, outs: &[TrialOutput]) -> RatePoint {
    let successes = outs.iter().filter(|o| o.row.success).count();
    let trials = outs.len();
    RatePoint { r, trials, successes, rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 } }
}

fn run_all(spec: &ExperimentSpec) -> Result<(RunReport, Vec<TrialOutput>), ExperimentError> {
    spec.validate()?;
    let mut outputs: Vec<TrialOutput> = Vec::new();
    let mut points = Vec::new();
    let mut bracket = None;
    match (spec.sweep, spec.adversary) {
        (Some(sweep), Some(_)) => {
            let mut eval = |r: f64, outputs: &mut Vec<TrialOutput>| -> Result<bool, ExperimentError> {
                let outs = run_point(spec, Some(r))?;
                let point = rate_point(Some(r), &outs);
                let ok = point.rate >= sweep.threshold;
                points.push(point);
                outputs.extend(outs);
                Ok(ok)
            };
            let (mut lo, mut hi) = (sweep.lo, sweep.hi);
            let lo_ok = eval(lo, &mut outputs)?;
            let hi_ok = eval(hi, &mut outputs)?;
            // A bracket exists only when the endpoints disagree.
            if lo_ok && !hi_ok {
                for _ in 0..sweep.steps {
                    let mid = (lo + hi) / 2.0;
                    if eval(mid, &mut outputs)? {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                bracket = Some([lo, hi]);
            }
        }
        _ => {
            let r = spec.adversary.map(|a| a.r);
            let outs = run_point(spec, r)?;
            points.push(rate_point(r, &outs));
            outputs = outs;
        }
    }
    let rows: Vec<TrialRow> = outputs.iter().map(|o| o.row.clone()).collect();
    let successes = rows.iter().filter(|r| r.success).count();
    let report = RunReport {
        name: spec.name.clone(),
        spec_hash: spec_hash(spec),
        success_rate: if rows.is_empty() { 0.0 } else { successes as f64 / rows.len() as f64 },
        rows,
        points,
        bracket,
    };
    Ok((report, outputs))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport, ExperimentError> {
    run_all(spec).map(|(report, _)| report)
}

/// Runs the experiment and writes `spec.json`, `report.json`, `points.csv`
/// and `timings.json` into `dir`, plus `graphs/` and `covers/` when the spec
/// asks for artifacts.
pub fn run_experiment_to(spec: &ExperimentSpec, dir: &Path) -> Result<RunReport, ExperimentError> {
    let (report, outputs) = run_all(spec)?;
    let write = |name: &str, text: String| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| ExperimentError::io(&path, e))
    };
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    write("spec.json", spec.to_json())?;
    write("report.json", report.to_json())?;
    write("points.csv", report.points_csv())?;
    let timings: Vec<(usize, Option<f64>, f64)> = outputs.iter().map(|o| (o.row.trial, o.row.r, o.seconds)).collect();
    write("timings.json", serde_json::to_string_pretty(&timings).expect("timings serialize"))?;
    if spec.save_artifacts {
        for sub in ["graphs", "covers"] {
            let path = dir.join(sub);
            fs::create_dir_all(&path).map_err(|e| ExperimentError::io(&path, e))?;
        }
        for (i, o) in outputs.iter().enumerate() {
            let stem = format!("{i:04}-trial{}", o.row.trial);
            let path = dir.join("graphs").join(format!("{stem}.txt"));
            write_edge_list(&o.graph, &path).map_err(|e| ExperimentError::Config(e.to_string()))?;
            if let Some(cover) = &o.cover {
                write(&format!("covers/{stem}.json"), serde_json::to_string(cover).expect("cover serializes"))?;
            }
        }
    }
    Ok(report)
}

/// Reruns the spec stored at `spec_file`.
pub fn replay(spec_file: &Path) -> Result<RunReport, ExperimentError> {
    let text = fs::read_to_string(spec_file).map_err(|e| ExperimentError::io(spec_file, e))?;
    run_experiment(&ExperimentSpec::from_json(&text)?)
}

/// The clique-split and bipartite-split strategies emulate the extremal
/// constructions for `k` parts.
pub fn default_strategy(k: usize) -> Strategy {
    if k == 2 {
        Strategy::RandomDeletion
    } else {
        Strategy::CliqueSplit { parts: k }
    }
}
