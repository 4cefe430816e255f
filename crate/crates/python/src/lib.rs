use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rlsmcg::bench::{self, Metric, SolverKind};
use rlsmcg::error::Error;
use rlsmcg::params::SolverParams;
use rlsmcg::problem::{Objective, Problem};
use rlsmcg::problems;
use rlsmcg::state::RunReport;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(m) => PyOSError::new_err(m),
        Error::UnknownProblem(_) | Error::UnknownSolver(_) => PyKeyError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn text(value: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(b) = value.extract::<bool>() {
        return Ok(b.to_string());
    }
    Ok(value.str()?.to_string())
}

/// Solver parameters for a problem of dimension `dim`, with optional
/// keyword overrides such as `grad_tol=1e-8` or `enable_rqn=False`.
#[pyclass(name = "Params", module = "rlsmcg_py", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: SolverParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (dim, **overrides))]
    fn new(dim: usize, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = PyParams { inner: SolverParams::for_dim(dim) };
        if let Some(kw) = overrides {
            for (k, v) in kw.iter() {
                p.set(&k.extract::<String>()?, &v)?;
            }
        }
        Ok(p)
    }

    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        self.inner.set(key, &text(value)?).map_err(to_py)
    }

    #[getter]
    fn grad_tol(&self) -> f64 {
        self.inner.grad_tol
    }

    #[getter]
    fn max_iter(&self) -> usize {
        self.inner.max_iter
    }

    #[getter]
    fn memory_m(&self) -> usize {
        self.inner.memory_m
    }

    #[getter]
    fn enable_rqn(&self) -> bool {
        self.inner.enable_rqn
    }

    fn l_reset(&self) -> usize {
        self.inner.l_reset()
    }

    fn descent_constant(&self) -> f64 {
        self.inner.descent_constant()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Params(grad_tol={}, max_iter={}, memory_m={})", self.inner.grad_tol, self.inner.max_iter, self.inner.memory_m)
    }
}

/// A registered test problem.
#[pyclass(name = "TestProblem", module = "rlsmcg_py", frozen)]
struct PyTestProblem {
    spec: problems::ProblemSpec,
}

#[pymethods]
impl PyTestProblem {
    #[getter]
    fn name(&self) -> String {
        self.spec.name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.spec.dim
    }

    #[getter]
    fn x0(&self) -> Vec<f64> {
        self.spec.problem.x0().to_vec()
    }

    #[getter]
    fn known_fmin(&self) -> Option<f64> {
        self.spec.known_fmin
    }

    #[getter]
    fn quadratic(&self) -> bool {
        self.spec.quadratic
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        check_dim(self.spec.dim, &x)?;
        Ok(self.spec.problem.value(&x))
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        check_dim(self.spec.dim, &x)?;
        Ok(self.spec.problem.gradient(&x))
    }

    fn __repr__(&self) -> String {
        format!("TestProblem('{}')", self.spec.name())
    }
}

fn check_dim(n: usize, x: &[f64]) -> PyResult<()> {
    if x.len() != n {
        return Err(to_py(Error::DimensionMismatch { expected: n, got: x.len() }));
    }
    Ok(())
}

/// Objective backed by Python callables. The first exception raised by a
/// callback is kept and re-raised once the run returns; evaluations after
/// it report NaN.
struct PyObjective {
    dim: usize,
    f: Py<PyAny>,
    g: Py<PyAny>,
    error: Arc<Mutex<Option<PyErr>>>,
}

impl PyObjective {
    fn record(&self, e: PyErr) {
        let mut slot = self.error.lock().unwrap();
        if slot.is_none() {
            *slot = Some(e);
        }
    }

    fn failed(&self) -> bool {
        self.error.lock().unwrap().is_some()
    }
}

impl Objective for PyObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.failed() {
            return f64::NAN;
        }
        Python::attach(|py| match self.f.bind(py).call1((x.to_vec(),)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                self.record(e);
                f64::NAN
            }
        })
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        if self.failed() {
            g.fill(f64::NAN);
            return;
        }
        Python::attach(|py| match self.g.bind(py).call1((x.to_vec(),)).and_then(|v| v.extract::<Vec<f64>>()) {
            Ok(v) if v.len() == g.len() => g.copy_from_slice(&v),
            Ok(v) => {
                self.record(PyValueError::new_err(format!("gradient has length {}, expected {}", v.len(), g.len())));
                g.fill(f64::NAN);
            }
            Err(e) => {
                self.record(e);
                g.fill(f64::NAN);
            }
        })
    }
}

/// Outcome of [`minimize`].
#[pyclass(name = "Result", module = "rlsmcg_py", frozen, get_all)]
struct PyRunResult {
    x: Vec<f64>,
    f: f64,
    gnorm_inf: f64,
    n_iter: usize,
    n_f: usize,
    n_g: usize,
    wall_time: f64,
    status: String,
    converged: bool,
    /// Per-iteration rows `(k, case, alpha, gnorm_inf, Ck, state, mu)` when
    /// requested.
    trace: Option<Vec<(usize, String, f64, f64, f64, String, f64)>>,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!("Result(status='{}', f={:e}, n_iter={}, n_g={})", self.status, self.f, self.n_iter, self.n_g)
    }
}

fn result_from(report: RunReport, trace: Option<Vec<bench::TraceRow>>) -> PyRunResult {
    PyRunResult {
        converged: report.status == rlsmcg::state::RunStatus::Converged,
        status: report.status.as_str().to_string(),
        x: report.x,
        f: report.final_f,
        gnorm_inf: report.final_gnorm_inf,
        n_iter: report.n_iter,
        n_f: report.n_f,
        n_g: report.n_g,
        wall_time: report.wall_time,
        trace: trace.map(|rows| rows.into_iter().map(|r| (r.k, r.case, r.alpha, r.gnorm_inf, r.ck, r.state, r.mu)).collect()),
    }
}

/// Minimizes a registered problem (by name or `TestProblem`) or a Python
/// function `fun(x) -> float` with gradient `grad(x) -> list[float]`.
#[pyfunction]
#[pyo3(signature = (fun, x0=None, grad=None, solver="rlsmcg", params=None, trace=false))]
fn minimize(
    py: Python<'_>,
    fun: &Bound<'_, PyAny>,
    x0: Option<Vec<f64>>,
    grad: Option<Py<PyAny>>,
    solver: &str,
    params: Option<PyParams>,
    trace: bool,
) -> PyResult<PyRunResult> {
    let solver = SolverKind::parse(solver).map_err(to_py)?;
    let mut error = None;
    let problem = if let Ok(name) = fun.extract::<String>() {
        problems::lookup(&name).map_err(to_py)?.problem
    } else if let Ok(tp) = fun.cast::<PyTestProblem>() {
        tp.get().spec.problem.clone()
    } else {
        let grad = grad.ok_or_else(|| PyValueError::new_err("`grad` is required when `fun` is a callable"))?;
        let x0 = x0.clone().ok_or_else(|| PyValueError::new_err("`x0` is required when `fun` is a callable"))?;
        let slot = Arc::new(Mutex::new(None));
        error = Some(slot.clone());
        let obj = PyObjective { dim: x0.len(), f: fun.clone().unbind(), g: grad, error: slot };
        Problem::new("python", x0, Arc::new(obj)).map_err(to_py)?
    };
    let problem = match x0 {
        Some(x0) if error.is_none() => problem.with_start(x0).map_err(to_py)?,
        _ => problem,
    };
    let params = params.map(|p| p.inner).unwrap_or_else(|| solver.default_params(problem.dim()));
    let outcome = py.detach(|| {
        if trace {
            bench::trace(solver, &problem, &params).map(|(rows, r)| (r, Some(rows)))
        } else {
            solver.run(&problem, &params).map(|r| (r, None))
        }
    });
    if let Some(e) = error.and_then(|slot| slot.lock().unwrap().take()) {
        return Err(e);
    }
    let (report, rows) = outcome.map_err(to_py)?;
    Ok(result_from(report, rows))
}

/// Names of every registered problem.
#[pyfunction]
fn problem_names() -> Vec<String> {
    problems::registry().iter().map(|s| s.name()).collect()
}

#[pyfunction]
fn problem(name: &str) -> PyResult<PyTestProblem> {
    Ok(PyTestProblem { spec: problems::lookup(name).map_err(to_py)? })
}

/// `(passed, worst_rel_err)` of the finite-difference gradient check.
#[pyfunction]
#[pyo3(signature = (name, n_points=10, seed=0))]
fn verify_gradients(name: &str, n_points: usize, seed: u64) -> PyResult<(bool, f64)> {
    let spec = problems::lookup(name).map_err(to_py)?;
    let r = problems::verify_gradients(&spec.problem, n_points, seed).map_err(to_py)?;
    Ok((r.passed, r.worst_rel_err))
}

/// Runs a benchmark config given as text and returns one dict per row.
#[pyfunction]
fn run_bench<'py>(py: Python<'py>, config: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = bench::BenchConfig::parse(config).map_err(to_py)?;
    let rows = py.detach(|| bench::run_matrix(&cfg)).map_err(to_py)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("solver", r.solver)?;
            d.set_item("problem", r.problem)?;
            d.set_item("dim", r.dim)?;
            d.set_item("n_iter", r.n_iter)?;
            d.set_item("n_f", r.n_f)?;
            d.set_item("n_g", r.n_g)?;
            d.set_item("wall_time_s", r.wall_time_s)?;
            d.set_item("status", r.status)?;
            d.set_item("final_gnorm_inf", r.final_gnorm_inf)?;
            Ok(d)
        })
        .collect()
}

/// Performance profile of a results CSV: `(solvers, taus, curves)`.
#[pyfunction]
#[pyo3(signature = (results_csv, metric="n_g"))]
fn performance_profile(results_csv: PathBuf, metric: &str) -> PyResult<(Vec<String>, Vec<f64>, Vec<Vec<f64>>)> {
    let metric: Metric = metric.parse().map_err(to_py)?;
    let rows = bench::read_results(&results_csv).map_err(to_py)?;
    let p = bench::performance_profile(&rows, metric).map_err(to_py)?;
    Ok((p.solvers, p.taus, p.curves))
}

#[pymodule]
pub fn rlsmcg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyTestProblem>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(problem_names, m)?)?;
    m.add_function(wrap_pyfunction!(problem, m)?)?;
    m.add_function(wrap_pyfunction!(verify_gradients, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(performance_profile, m)?)?;
    Ok(())
}
