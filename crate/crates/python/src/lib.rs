//! Python module `qgraph`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qgraph_core::boundary::{self, classify_bc};
use qgraph_core::classify::{generator_verdict, report, similarity_verdict_star, ReportOptions};
use qgraph_core::evolve::{step_heat, step_schrodinger, DiscreteLaplacian, DEFAULT_EXT_LENGTH};
use qgraph_core::graph::{self, EdgeRef};
use qgraph_core::matrixcore::{from_rows, to_rows, RankTolerance};
use qgraph_core::problem::{bc_from_json, graph_from_json, GraphSpec};
use qgraph_core::spectral::{self, RootOptions, SearchRegion};
use qgraph_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidMatrix(_)
        | Error::Shape(_)
        | Error::InvalidGraph(_)
        | Error::InvalidArgument(_)
        | Error::Spec(_)
        | Error::ZeroK
        | Error::NotAStarGraph
        | Error::WrongClass { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn tolerance(tol: Option<f64>) -> PyResult<RankTolerance> {
    match tol {
        Some(t) => RankTolerance::new(t).map_err(py_err),
        None => Ok(RankTolerance::default()),
    }
}

type Rows = Vec<Vec<Complex64>>;

#[pyclass(name = "MetricGraph", module = "qgraph", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMetricGraph {
    inner: graph::MetricGraph,
}

#[pymethods]
impl PyMetricGraph {
    #[staticmethod]
    fn interval(a: f64) -> PyResult<Self> {
        Ok(Self { inner: graph::MetricGraph::interval(a).map_err(py_err)? })
    }

    #[staticmethod]
    fn star(n: usize) -> PyResult<Self> {
        Ok(Self { inner: graph::MetricGraph::star(n).map_err(py_err)? })
    }

    #[staticmethod]
    fn lasso(a: f64) -> PyResult<Self> {
        Ok(Self { inner: graph::MetricGraph::lasso(a).map_err(py_err)? })
    }

    #[staticmethod]
    fn pumpkin(n: usize, a: f64) -> PyResult<Self> {
        Ok(Self { inner: graph::MetricGraph::pumpkin(n, a).map_err(py_err)? })
    }

    #[staticmethod]
    fn half_line_with_interval(a: f64) -> PyResult<Self> {
        Ok(Self { inner: graph::MetricGraph::half_line_with_interval(a).map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: graph_from_json(s).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&GraphSpec::from_graph(&self.inner)).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn deficiency_index(&self) -> usize {
        self.inner.deficiency_index()
    }

    #[getter]
    fn n_internal(&self) -> usize {
        self.inner.n_internal()
    }

    #[getter]
    fn n_external(&self) -> usize {
        self.inner.n_external()
    }

    #[getter]
    fn a_min(&self) -> f64 {
        self.inner.a_min()
    }

    fn __repr__(&self) -> String {
        format!("MetricGraph(internal={}, external={})", self.inner.n_internal(), self.inner.n_external())
    }
}

#[pyclass(name = "BoundaryConditions", module = "qgraph", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBoundaryConditions {
    inner: boundary::BoundaryConditions,
}

fn wrap(bc: qgraph_core::Result<boundary::BoundaryConditions>) -> PyResult<PyBoundaryConditions> {
    Ok(PyBoundaryConditions { inner: bc.map_err(py_err)? })
}

#[pymethods]
impl PyBoundaryConditions {
    #[new]
    fn new(a: Rows, b: Rows) -> PyResult<Self> {
        let a = from_rows(&a).map_err(py_err)?;
        let b = from_rows(&b).map_err(py_err)?;
        wrap(boundary::BoundaryConditions::new(a, b))
    }

    #[staticmethod]
    fn dirichlet(d: usize) -> Self {
        Self { inner: boundary::BoundaryConditions::dirichlet(d) }
    }

    #[staticmethod]
    fn neumann(d: usize) -> Self {
        Self { inner: boundary::BoundaryConditions::neumann(d) }
    }

    #[staticmethod]
    fn delta(d: usize, gamma: Complex64) -> Self {
        Self { inner: boundary::BoundaryConditions::delta(d, gamma) }
    }

    #[staticmethod]
    fn delta_prime(d: usize, gamma: Complex64) -> Self {
        Self { inner: boundary::BoundaryConditions::delta_prime(d, gamma) }
    }

    #[staticmethod]
    fn pt_point(tau: f64) -> PyResult<Self> {
        wrap(boundary::BoundaryConditions::pt_point(tau))
    }

    #[staticmethod]
    fn pt_point_with_dirichlet_end(tau: f64) -> PyResult<Self> {
        wrap(boundary::BoundaryConditions::pt_point_with_dirichlet_end(tau))
    }

    #[staticmethod]
    fn intermediate() -> Self {
        Self { inner: boundary::BoundaryConditions::intermediate() }
    }

    #[staticmethod]
    fn totally_degenerate() -> Self {
        Self { inner: boundary::BoundaryConditions::totally_degenerate() }
    }

    #[staticmethod]
    fn kirchhoff_on(graph: &PyMetricGraph) -> Self {
        Self { inner: boundary::BoundaryConditions::kirchhoff_on(&graph.inner) }
    }

    #[staticmethod]
    fn from_json(s: &str, graph: &PyMetricGraph) -> PyResult<Self> {
        wrap(bc_from_json(s, &graph.inner))
    }

    #[getter]
    fn a(&self) -> Rows {
        to_rows(self.inner.a())
    }

    #[getter]
    fn b(&self) -> Rows {
        to_rows(self.inner.b())
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Class name: `self_adjoint`, `quasi_sectorial`,
    /// `regular_non_quasi_sectorial`, `irregular` or `rank_deficient`.
    #[pyo3(signature = (tol=None))]
    fn classify(&self, tol: Option<f64>) -> PyResult<String> {
        Ok(classify_bc(&self.inner, tolerance(tol)?).map_err(py_err)?.tag.to_string())
    }

    fn cayley(&self, k: Complex64) -> PyResult<Rows> {
        Ok(to_rows(&boundary::cayley(&self.inner, k).map_err(py_err)?))
    }

    #[pyo3(signature = (other, tol=boundary::EQUIVALENCE_TOL))]
    fn is_equivalent(&self, other: &PyBoundaryConditions, tol: f64) -> PyResult<bool> {
        boundary::equivalent(&self.inner, &other.inner, tol).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("BoundaryConditions(dim={})", self.inner.dim())
    }
}

/// `det(I - S(k) T(k))`.
#[pyfunction]
fn secular(bc: &PyBoundaryConditions, graph: &PyMetricGraph, k: Complex64) -> PyResult<Complex64> {
    spectral::secular(&bc.inner, &graph.inner, k).map_err(py_err)
}

/// Eigenvalues as `(k, multiplicity)` pairs: zeros of the secular function in
/// the rectangle for graphs with internal edges, pencil roots on star graphs.
#[pyfunction]
#[pyo3(signature = (bc, graph, region=None, tol=None))]
fn spectrum(
    bc: &PyBoundaryConditions,
    graph: &PyMetricGraph,
    region: Option<(f64, f64, f64, f64)>,
    tol: Option<f64>,
) -> PyResult<Vec<(Complex64, usize)>> {
    let rep = if graph.inner.is_star() {
        spectral::star_point_spectrum(&bc.inner, &graph.inner, tolerance(tol)?).map_err(py_err)?
    } else {
        let (r0, r1, i0, i1) = region.ok_or_else(|| PyValueError::new_err("region is required for graphs with internal edges"))?;
        let region = SearchRegion::new(r0, r1, i0, i1).map_err(py_err)?;
        spectral::compact_spectrum(&bc.inner, &graph.inner, region, RootOptions::default()).map_err(py_err)?
    };
    if rep.whole_plane {
        return Err(PyRuntimeError::new_err("every complex number is in the spectrum"));
    }
    Ok(rep.points.into_iter().filter(|p| p.is_eigenvalue).map(|p| (p.k, p.multiplicity)).collect())
}

/// Enclosure of the spectrum as a JSON document.
#[pyfunction]
#[pyo3(signature = (bc, graph, tol=None))]
fn enclosure(bc: &PyBoundaryConditions, graph: &PyMetricGraph, tol: Option<f64>) -> PyResult<String> {
    let r = spectral::enclosure(&bc.inner, &graph.inner, tolerance(tol)?).map_err(py_err)?;
    serde_json::to_string(&r).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (bc, tol=None))]
fn generates_semigroup(bc: &PyBoundaryConditions, tol: Option<f64>) -> PyResult<bool> {
    Ok(generator_verdict(&bc.inner, tolerance(tol)?).map_err(py_err)?.generates_c0_semigroup)
}

#[pyfunction]
#[pyo3(signature = (bc, graph, tol=None))]
fn similar_to_selfadjoint(bc: &PyBoundaryConditions, graph: &PyMetricGraph, tol: Option<f64>) -> PyResult<bool> {
    Ok(similarity_verdict_star(&bc.inner, &graph.inner, tolerance(tol)?).map_err(py_err)?.is_similar_to_selfadjoint)
}

/// The full report as JSON.
#[pyfunction]
#[pyo3(signature = (bc, graph, region=None, tol=None))]
fn report_json(
    bc: &PyBoundaryConditions,
    graph: &PyMetricGraph,
    region: Option<(f64, f64, f64, f64)>,
    tol: Option<f64>,
) -> PyResult<String> {
    let region = match region {
        Some((r0, r1, i0, i1)) => Some(SearchRegion::new(r0, r1, i0, i1).map_err(py_err)?),
        None => None,
    };
    let r = report(&bc.inner, &graph.inner, ReportOptions { tol: tolerance(tol)?, region }).map_err(py_err)?;
    serde_json::to_string(&r).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn resolvent_witness(bc: &PyBoundaryConditions, graph: &PyMetricGraph, kappa: f64) -> PyResult<f64> {
    Ok(spectral::resolvent_witness_nqs(&bc.inner, &graph.inner, kappa).map_err(py_err)?.quotient)
}

/// Norm series of a heat (`"heat"`) or Schrödinger (`"schrodinger"`) run
/// from `sin(pi x / a)` on internal edges and `exp(-x^2)` on external ones.
#[pyfunction]
#[pyo3(signature = (bc, graph, equation, h, dt, steps, ext_length=DEFAULT_EXT_LENGTH))]
fn evolve_norms(
    bc: &PyBoundaryConditions,
    graph: &PyMetricGraph,
    equation: &str,
    h: f64,
    dt: f64,
    steps: usize,
    ext_length: f64,
) -> PyResult<Vec<f64>> {
    let dl = DiscreteLaplacian::new(&graph.inner, &bc.inner, h, ext_length).map_err(py_err)?;
    let g = &graph.inner;
    let psi0 = dl.sample(|e, x| match e {
        EdgeRef::Internal(i) => Complex64::new((std::f64::consts::PI * x / g.internal_edges()[i].length).sin(), 0.0),
        EdgeRef::External(_) => Complex64::new((-x * x).exp(), 0.0),
    });
    let r = match equation {
        "heat" => step_heat(&dl, &psi0, dt, steps),
        "schrodinger" => step_schrodinger(&dl, &psi0, dt, steps),
        other => return Err(PyValueError::new_err(format!("unknown equation {other:?}"))),
    };
    Ok(r.map_err(py_err)?.norms)
}

#[pymodule]
fn qgraph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetricGraph>()?;
    m.add_class::<PyBoundaryConditions>()?;
    m.add_function(wrap_pyfunction!(secular, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(enclosure, m)?)?;
    m.add_function(wrap_pyfunction!(generates_semigroup, m)?)?;
    m.add_function(wrap_pyfunction!(similar_to_selfadjoint, m)?)?;
    m.add_function(wrap_pyfunction!(report_json, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_witness, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_norms, m)?)?;
    Ok(())
}
