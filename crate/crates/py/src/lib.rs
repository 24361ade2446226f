//! Python bindings for `souvlaki`.
//!
//! Exact quantities cross the boundary as `int` and `fractions.Fraction`;
//! graph vertices are exposed by their canonical address strings.

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use souvlaki::assembly::{self, AssembledTree, CanonicalVertex, GlueMode, SpineTruncation};
use souvlaki::census;
use souvlaki::diagnostics::{self, DeltaMode, MtpInstance, RootLaw, TransportFunction};
use souvlaki::electrical::{self, TreeStrategy};
use souvlaki::flow;
use souvlaki::graph::Graph;
use souvlaki::linalg::SolverConfig;
use souvlaki::rational::Rational;
use souvlaki::topology::{self, H3Vertex, MeatballSpec};
use souvlaki::{walk, Error, DEFAULT_BUDGET, DEFAULT_D};

create_exception!(souvlaki, SouvlakiError, PyException);
create_exception!(souvlaki, BudgetExceeded, SouvlakiError);
create_exception!(souvlaki, NotConverged, SouvlakiError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(e.to_string()),
        Error::NotConverged { .. } => NotConverged::new_err(e.to_string()),
        Error::InvalidParameter(_) | Error::Parse(_) | Error::CoordinateOutOfRange(_) | Error::NonCanonical(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => SouvlakiError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for souvlaki::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn glue(mode: &str) -> PyResult<GlueMode> {
    mode.parse().py_err()
}

fn solver(tol: f64) -> SolverConfig {
    SolverConfig::with_tol(tol)
}

/// One meatball `M_k`.
#[pyclass(name = "Meatball", frozen)]
struct PyMeatball {
    spec: MeatballSpec,
}

#[pymethods]
impl PyMeatball {
    #[new]
    #[pyo3(signature = (k, d = DEFAULT_D))]
    fn new(k: u32, d: u32) -> PyResult<Self> {
        Ok(PyMeatball { spec: MeatballSpec::new(k, d).py_err()? })
    }

    #[getter]
    fn k(&self) -> u32 {
        self.spec.k
    }

    #[getter]
    fn d(&self) -> u32 {
        self.spec.d
    }

    #[getter]
    fn base_len(&self) -> u64 {
        self.spec.base_len()
    }

    #[getter]
    fn split(&self) -> u64 {
        self.spec.split()
    }

    #[getter]
    fn left_volume(&self) -> u128 {
        self.spec.left_volume()
    }

    #[getter]
    fn full_volume(&self) -> u128 {
        self.spec.full_volume()
    }

    /// Neighbors of a vertex given as `t:<digits>/w:<row>,<pos>`.
    fn neighbors(&self, vertex: &str) -> PyResult<Vec<String>> {
        let v: H3Vertex = vertex.parse().py_err()?;
        Ok(topology::neighbors_in_meatball(&self.spec, &v)
            .py_err()?
            .iter()
            .map(ToString::to_string)
            .collect())
    }

    fn side(&self, vertex: &str) -> PyResult<&'static str> {
        let v: H3Vertex = vertex.parse().py_err()?;
        self.spec.validate(&v).py_err()?;
        Ok(match topology::side_of(&self.spec, &v) {
            topology::Side::Left => "left",
            topology::Side::Right => "right",
        })
    }

    /// Vertex counts of `M^L_k` by row, by enumeration.
    #[pyo3(signature = (budget = DEFAULT_BUDGET))]
    fn left_rows(&self, budget: u64) -> PyResult<Vec<u64>> {
        topology::enumerate_left_rows(&self.spec, budget).py_err()
    }

    fn __repr__(&self) -> String {
        format!("Meatball(k={}, d={})", self.spec.k, self.spec.d)
    }
}

/// An assembled graph with canonical vertex addresses.
#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    graph: Graph<CanonicalVertex>,
    spine: Vec<bool>,
    skeleton: assembly::Skeleton,
}

impl PyGraph {
    fn from_tree(t: AssembledTree) -> Self {
        let spine = t.spine_mask();
        PyGraph { graph: t.graph, spine, skeleton: t.skeleton }
    }
}

#[pymethods]
impl PyGraph {
    fn __len__(&self) -> usize {
        self.graph.len()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    #[getter]
    fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    #[getter]
    fn components(&self) -> usize {
        self.graph.components().1
    }

    fn vertex(&self, i: u32) -> PyResult<String> {
        if (i as usize) < self.graph.len() {
            Ok(self.graph.vertex(i).to_string())
        } else {
            Err(PyValueError::new_err(format!("vertex id {i} out of range")))
        }
    }

    fn index(&self, address: &str) -> PyResult<Option<u32>> {
        let v: CanonicalVertex = address.parse().py_err()?;
        Ok(self.graph.id(&v))
    }

    fn neighbors(&self, i: u32) -> PyResult<Vec<u32>> {
        self.vertex(i)?;
        Ok(self.graph.neighbors(i).to_vec())
    }

    fn degree(&self, i: u32) -> PyResult<usize> {
        self.vertex(i)?;
        Ok(self.graph.degree(i))
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.graph.edges().collect()
    }

    /// Ids of vertices on the leftmost skeleton ray.
    fn spine_vertices(&self) -> Vec<u32> {
        (0..self.graph.len() as u32).filter(|&v| self.spine[v as usize]).collect()
    }

    /// `(level, M^L vertices, other vertices)` per owner level.
    fn level_census(&self) -> Vec<(u32, u64, u64)> {
        assembly::level_census(&self.skeleton, &self.graph)
    }

    /// Sorted edge list with the given header line.
    fn export_edges(&self, header: &str) -> String {
        assembly::export_edges(&self.graph, header)
    }

    /// Empirical spine-hitting frequency from vertex `start`.
    #[pyo3(signature = (start, runs = 10_000, horizon = 100_000, seed = 0))]
    fn spine_hitting(&self, start: u32, runs: u64, horizon: u64, seed: u64) -> PyResult<f64> {
        self.vertex(start)?;
        Ok(walk::simulate_hitting(&self.graph, &self.spine, start, runs, horizon, seed).frequency())
    }

    /// Both sides of the mass transport identity for a transport rule.
    ///
    /// `rule` is `"adjacency"`, `"degree-gradient"` or `"random:<seed>"`;
    /// `root` is `"uniform"` or `"degree"`.
    #[pyo3(signature = (rule, root = "uniform", radius = 2, reach = 2))]
    fn mass_transport(&self, rule: &str, root: &str, radius: u32, reach: u32) -> PyResult<(Rational, Rational)> {
        let f = match rule {
            "adjacency" => TransportFunction::Adjacency,
            "degree-gradient" => TransportFunction::DegreeGradient,
            _ => match rule.strip_prefix("random:").and_then(|s| s.parse().ok()) {
                Some(seed) => TransportFunction::Random { seed },
                None => return Err(PyValueError::new_err(format!("unknown transport rule {rule:?}"))),
            },
        };
        let law = match root {
            "uniform" => RootLaw::Uniform,
            "degree" => RootLaw::DegreeBiased,
            _ => return Err(PyValueError::new_err(format!("unknown root law {root:?}"))),
        };
        Ok(MtpInstance::new(&self.graph, radius, reach).sides(f, law))
    }

    /// Twice the four-point hyperbolicity constant; exact unless
    /// `samples` is given.
    #[pyo3(signature = (samples = None, seed = 0))]
    fn twice_delta(&self, py: Python<'_>, samples: Option<u64>, seed: u64) -> PyResult<u32> {
        let mode = match samples {
            None => DeltaMode::Exact,
            Some(quadruples) => DeltaMode::Sampled { quadruples, seed },
        };
        py.detach(|| diagnostics::gromov_delta(&self.graph, mode)).py_err().map(|s| s.twice_delta)
    }

    fn __repr__(&self) -> String {
        format!("Graph(vertices={}, edges={})", self.graph.len(), self.graph.edge_count())
    }
}

/// A spine truncation `M^L_1, M_2, ..., M_K`.
#[pyclass(name = "Spine", frozen)]
struct PySpine {
    spine: SpineTruncation,
}

#[pymethods]
impl PySpine {
    #[new]
    #[pyo3(signature = (k_max, d = DEFAULT_D, glue_mode = "tower", budget = DEFAULT_BUDGET))]
    fn new(py: Python<'_>, k_max: u32, d: u32, glue_mode: &str, budget: u64) -> PyResult<Self> {
        let mode = glue(glue_mode)?;
        let spine = py.detach(|| assembly::spine_truncation(k_max, d, mode, budget)).py_err()?;
        Ok(PySpine { spine })
    }

    fn __len__(&self) -> usize {
        self.spine.graph.len()
    }

    #[getter]
    fn source(&self) -> u32 {
        self.spine.source
    }

    #[getter]
    fn frontier(&self) -> Vec<u32> {
        self.spine.frontier.clone()
    }

    /// `R_eff(source, wired frontier)`.
    #[pyo3(signature = (tol = 1e-10))]
    fn resistance(&self, py: Python<'_>, tol: f64) -> PyResult<f64> {
        let s = &self.spine;
        py.detach(|| electrical::effective_resistance(&s.graph, &[s.source], &s.frontier, solver(tol)))
            .py_err()
            .map(|r| r.value)
    }

    /// Escape probability `(via resistance, via Green function)`.
    #[pyo3(signature = (tol = 1e-10))]
    fn escape_probability(&self, py: Python<'_>, tol: f64) -> PyResult<(f64, f64)> {
        py.detach(|| walk::escape_probability(&self.spine, solver(tol)))
            .py_err()
            .map(|e| (e.via_resistance, e.via_green))
    }

    /// `R(source, frontier)` inside a spanning tree: `"bfs"`, `"dfs"` or
    /// `"wilson:<seed>"`.
    fn tree_resistance(&self, strategy: &str) -> PyResult<f64> {
        let s: TreeStrategy = strategy.parse().py_err()?;
        Ok(electrical::subtree_resistance(&self.spine, s))
    }

    /// `[(k, R(v_k, v_{k+1}))]` after contracting the junctions.
    #[pyo3(signature = (tol = 1e-10))]
    fn junction_resistances(&self, py: Python<'_>, tol: f64) -> PyResult<Vec<(u32, f64)>> {
        py.detach(|| {
            let c = electrical::contract_junctions(&self.spine);
            electrical::junction_resistance_profile(&c, solver(tol))
        })
        .py_err()
        .map(|p| p.into_iter().map(|(k, r)| (k, r.value)).collect())
    }

    fn junction_degrees(&self) -> Vec<usize> {
        let c = electrical::contract_junctions(&self.spine);
        (1..=self.spine.k_max()).map(|k| c.junction_degree(k)).collect()
    }

    /// Exact energy of the concatenated flow, summed edge by edge.
    #[pyo3(signature = (budget = DEFAULT_BUDGET))]
    fn flow_energy(&self, budget: u64) -> PyResult<Rational> {
        let f = flow::concatenate_spine_flow(&self.spine, budget).py_err()?;
        f.check_conservation().py_err()?;
        flow::energy_exact(&f, &self.spine.graph).py_err().map(|e| e.total)
    }

    fn graph(&self) -> PyGraph {
        let spine = vec![true; self.spine.graph.len()];
        PyGraph { graph: self.spine.graph.clone(), spine, skeleton: self.spine.skeleton }
    }
}

/// Assembles `T'_n`.
#[pyfunction]
#[pyo3(signature = (n, d = DEFAULT_D, glue_mode = "tower", budget = DEFAULT_BUDGET))]
fn assemble_tn(py: Python<'_>, n: u32, d: u32, glue_mode: &str, budget: u64) -> PyResult<PyGraph> {
    let mode = glue(glue_mode)?;
    py.detach(|| assembly::assemble_tn(n, d, mode, budget)).py_err().map(PyGraph::from_tree)
}

/// `|M^L_k|`.
#[pyfunction]
fn volume_vk(k: u32) -> BigUint {
    census::volume_vk(k)
}

/// `p_{k,n}` for the uniform root of `T'_n`.
#[pyfunction]
#[pyo3(signature = (k, n, d = DEFAULT_D))]
fn root_level_prob(k: u32, n: u32, d: u32) -> PyResult<Rational> {
    census::root_level_prob(k, n, d).py_err()
}

/// Enclosure `(lo, hi)` of the limit probability `p_k`.
#[pyfunction]
#[pyo3(signature = (k, d = DEFAULT_D, tol = None))]
fn limit_level_prob(k: u32, d: u32, tol: Option<Rational>) -> PyResult<(Rational, Rational)> {
    let tol = tol.unwrap_or_else(|| souvlaki::rational::frac(1, 1_000_000_000_000u64));
    census::limit_level_prob(k, d, &tol).py_err().map(|iv| (iv.lo, iv.hi))
}

/// Closed-form energy of `g^(k)` by phase.
#[pyfunction]
fn energy_analytic(k: u32) -> PyResult<Vec<(&'static str, Rational)>> {
    let e = flow::energy_analytic(k).py_err()?;
    Ok(vec![
        ("ascent", e.ascent),
        ("horizontal", e.horizontal),
        ("descent", e.descent),
        ("redistribution", e.redistribution),
        ("total", e.total),
    ])
}

/// Energy of `g^(k)` summed over its support on a materialized `M_{k+1}`,
/// after an exact conservation check.
#[pyfunction]
#[pyo3(signature = (k, budget = DEFAULT_BUDGET))]
fn energy_exact(py: Python<'_>, k: u32, budget: u64) -> PyResult<Rational> {
    py.detach(|| {
        let g = flow::build_flow_gk(k, budget)?;
        g.check_conservation()?;
        let spec = MeatballSpec::new(k + 1, DEFAULT_D)?;
        flow::energy_exact_oracle(&g, &spec)
    })
    .py_err()
    .map(|e| e.total)
}

/// `(sup_{k <= k_max} k^2 E(g^(k)), argmax)`.
#[pyfunction]
fn k2_energy_constant(k_max: u32) -> PyResult<(Rational, u32)> {
    flow::k2_energy_constant(k_max).py_err()
}

/// Runs the command line front end; returns `(exit code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("souvlaki".to_owned()).chain(args);
    let code = souvlaki::cli::run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

#[pymodule]
#[pyo3(name = "souvlaki")]
fn souvlaki_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("SouvlakiError", py.get_type::<SouvlakiError>())?;
    m.add("BudgetExceeded", py.get_type::<BudgetExceeded>())?;
    m.add("NotConverged", py.get_type::<NotConverged>())?;
    m.add("DEFAULT_BUDGET", DEFAULT_BUDGET)?;
    m.add_class::<PyMeatball>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PySpine>()?;
    m.add_function(wrap_pyfunction!(assemble_tn, m)?)?;
    m.add_function(wrap_pyfunction!(volume_vk, m)?)?;
    m.add_function(wrap_pyfunction!(root_level_prob, m)?)?;
    m.add_function(wrap_pyfunction!(limit_level_prob, m)?)?;
    m.add_function(wrap_pyfunction!(energy_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(energy_exact, m)?)?;
    m.add_function(wrap_pyfunction!(k2_energy_constant, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
