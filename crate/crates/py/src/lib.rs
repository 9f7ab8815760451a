//! Python bindings. Structured results cross the boundary as JSON and come
//! out as plain dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use cyclecover::cover::{cover_graph, PipelineConfig};
use cyclecover::experiment::{run_experiment, ExperimentSpec};
use cyclecover::graph::{self, Cycle, CycleCover};
use cyclecover::randgen::{self, Adversary, Strategy};
use cyclecover::{expander, sparse, Seed};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Simple undirected graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "cyclecover_py", frozen)]
struct PyGraph {
    inner: cyclecover::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyGraph { inner: cyclecover::Graph::from_edges(n, edges).map_err(value_err)? })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: graph::read_edge_list(path).map_err(value_err)? })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: graph::parse_edge_list(text).map_err(value_err)? })
    }

    fn to_edge_list(&self) -> String {
        graph::format_edge_list(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        self.check(v)?;
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        self.check(v)?;
        Ok(self.inner.degree(v))
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.inner.has_edge(u, v)
    }

    fn min_degree(&self) -> usize {
        self.inner.min_degree()
    }

    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    fn density(&self) -> f64 {
        self.inner.density()
    }

    fn induced(&self, vertices: Vec<usize>) -> PyResult<Self> {
        let set = cyclecover::VertexSet::new(self.inner.n(), vertices).map_err(value_err)?;
        Ok(PyGraph { inner: self.inner.induced(set.as_slice()) })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

impl PyGraph {
    fn check(&self, v: usize) -> PyResult<()> {
        if v < self.inner.n() {
            Ok(())
        } else {
            Err(value_err(format!("vertex {v} out of range for graph on {} vertices", self.inner.n())))
        }
    }
}

fn wrap(inner: cyclecover::Graph) -> PyGraph {
    PyGraph { inner }
}

#[pyfunction]
#[pyo3(signature = (n, p, seed=0))]
fn gnp(n: usize, p: f64, seed: u64) -> PyResult<PyGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(value_err(format!("p = {p} must lie in [0, 1]")));
    }
    Ok(wrap(randgen::gnp(n, p, Seed(seed))))
}

/// Returns the graph and the block vertex lists.
#[pyfunction]
#[pyo3(signature = (blocks, n, p, seed=0))]
fn planted_blocks(blocks: usize, n: usize, p: f64, seed: u64) -> (PyGraph, Vec<Vec<usize>>) {
    let inst = randgen::planted_blocks(blocks, n, p, Seed(seed));
    let sets = inst.block_sets();
    (wrap(inst.graph), sets)
}

#[pyfunction]
#[pyo3(signature = (n, d, seed=0))]
fn random_regular(n: usize, d: usize, seed: u64) -> PyResult<PyGraph> {
    Ok(wrap(randgen::random_regular(n, d, Seed(seed)).map_err(value_err)?))
}

fn strategy_of(name: &str, parts: usize) -> PyResult<Strategy> {
    Ok(match name {
        "random-deletion" => Strategy::RandomDeletion,
        "bipartite-split" => Strategy::BipartiteSplit,
        "clique-split" => Strategy::CliqueSplit { parts },
        "targeted-min-degree" => Strategy::TargetedMinDegree,
        other => return Err(value_err(format!("unknown strategy {other:?}"))),
    })
}

/// Deletes edges so that each vertex keeps more than `(1 - r)` of its degree.
#[pyfunction]
#[pyo3(signature = (g, strategy, r, seed=0, parts=2))]
fn apply_adversary(g: &PyGraph, strategy: &str, r: f64, seed: u64, parts: usize) -> PyResult<PyGraph> {
    let adv = Adversary { strategy: strategy_of(strategy, parts)?, r };
    Ok(wrap(randgen::apply_adversary(&g.inner, &adv, Seed(seed))))
}

/// `None` when `h` is a legal `r`-bounded deletion of `g`, else the reason.
#[pyfunction]
fn audit_deletion(g: &PyGraph, h: &PyGraph, r: f64) -> Option<String> {
    randgen::audit_deletion(&g.inner, &h.inner, r).err()
}

#[pyfunction]
fn spectral_beta(g: &PyGraph, p: f64) -> f64 {
    sparse::spectral_beta(&g.inner, p).beta
}

#[pyfunction]
fn check_sparse_exact<'py>(py: Python<'py>, g: &PyGraph, p: f64, beta: f64) -> PyResult<Bound<'py, PyAny>> {
    let cert = sparse::check_sparse_exact(&g.inner, p, beta).map_err(value_err)?;
    to_py(py, &cert)
}

/// A cut with `crossing / (|V₁||V₂|) < q`, or `None` if the search finds none.
#[pyfunction]
#[pyo3(signature = (g, q, budget=200, seed=0))]
fn sparse_cut<'py>(py: Python<'py>, g: &PyGraph, q: f64, budget: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let inner = g.inner.clone();
    let cut = py.detach(move || expander::sparse_cut_search(&inner, q, budget, Seed(seed)));
    to_py(py, &cut)
}

/// Covers `g` by at most `k - 1` cycles. `config` is an optional JSON object
/// of pipeline settings; missing fields take their defaults.
#[pyfunction]
#[pyo3(signature = (g, k, seed=0, config=None))]
fn cover<'py>(py: Python<'py>, g: &PyGraph, k: usize, seed: u64, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg: PipelineConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => PipelineConfig::default(),
    };
    cfg.seed = seed;
    let inner = g.inner.clone();
    let out = py.detach(move || cover_graph(&inner, k, &cfg)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    #[derive(Serialize)]
    struct Out<'a> {
        cycles: &'a [Cycle],
        parts: Vec<&'a cyclecover::VertexSet>,
        budgets: Vec<usize>,
    }
    to_py(
        py,
        &Out {
            cycles: &out.cover.cycles,
            parts: out.parts.iter().map(|(s, _)| s).collect(),
            budgets: out.parts.iter().map(|&(_, b)| b).collect(),
        },
    )
}

/// Exact check of a cycle cover; returns `(passed, violation)`.
#[pyfunction]
fn validate_cover<'py>(
    py: Python<'py>,
    g: &PyGraph,
    cycles: Vec<Vec<usize>>,
    k: usize,
) -> PyResult<(bool, Bound<'py, PyAny>)> {
    let cover = CycleCover { cycles: cycles.into_iter().map(Cycle).collect(), k };
    let report = graph::validate_cycle_cover(&g.inner, &cover);
    Ok((report.pass, to_py(py, &report.violation)?))
}

/// Whether `g` (at most 12 vertices) has a cover by at most `k - 1` cycles.
#[pyfunction]
fn exact_cover_exists(g: &PyGraph, k: usize) -> PyResult<bool> {
    graph::exact_cycle_cover_oracle(&g.inner, k).map_err(value_err)
}

/// Runs an experiment from its JSON spec and returns the report.
#[pyfunction]
fn run_experiment_json<'py>(py: Python<'py>, spec: &str) -> PyResult<Bound<'py, PyAny>> {
    let spec = ExperimentSpec::from_json(spec).map_err(value_err)?;
    let report = py.detach(move || run_experiment(&spec)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &report)
}

#[pymodule]
fn cyclecover_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(gnp, m)?)?;
    m.add_function(wrap_pyfunction!(planted_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(random_regular, m)?)?;
    m.add_function(wrap_pyfunction!(apply_adversary, m)?)?;
    m.add_function(wrap_pyfunction!(audit_deletion, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_beta, m)?)?;
    m.add_function(wrap_pyfunction!(check_sparse_exact, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_cut, m)?)?;
    m.add_function(wrap_pyfunction!(cover, m)?)?;
    m.add_function(wrap_pyfunction!(validate_cover, m)?)?;
    m.add_function(wrap_pyfunction!(exact_cover_exists, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_json, m)?)?;
    Ok(())
}
