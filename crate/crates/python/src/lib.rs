//! Python bindings for `dpsa`. Variable indices are 0-based, as in the Rust API.

use std::path::PathBuf;

use dpsa::distributions::{DistributionSpec, TiltComponent};
use dpsa::estimation::{EvaluatedSample, FailureEstimate, PlanEntry};
use dpsa::models::{build_sample, draw_points, write_sample, LinearLimitState, PerformanceFunction};
use dpsa::numeric::LambertBranch;
use dpsa::tilt::{Branch, ModeLiteral, PerturbationMode, TiltSolution};
use dpsa::{Error, Result};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(pydpsa, DpsaError, PyException, "Base class for dpsa failures.");
create_exception!(
    pydpsa,
    NoSolutionError,
    DpsaError,
    "The requested perturbation does not exist."
);
create_exception!(pydpsa, NumericalError, DpsaError, "A numerical routine failed.");
create_exception!(
    pydpsa,
    UndefinedIndexError,
    DpsaError,
    "The reference failure probability is zero."
);
create_exception!(pydpsa, IngestError, DpsaError, "A sample file could not be read.");

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Parameter(_) | Error::Domain(_) | Error::Unsupported(_) => PyValueError::new_err(msg),
        Error::NoSolution(_) => NoSolutionError::new_err(msg),
        Error::Numerical(_) => NumericalError::new_err(msg),
        Error::UndefinedIndex(_) => UndefinedIndexError::new_err(msg),
        Error::Ingest { .. } => IngestError::new_err(msg),
        Error::Io(_) => PyOSError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn component(s: &str) -> PyResult<TiltComponent> {
    match s {
        "first" => Ok(TiltComponent::First),
        "second" => Ok(TiltComponent::Second),
        _ => Err(PyValueError::new_err(format!(
            "component must be \"first\" or \"second\", got {s:?}"
        ))),
    }
}

fn lambert_branch(s: &str) -> PyResult<LambertBranch> {
    match s {
        "0" => Ok(LambertBranch::W0),
        "-1" => Ok(LambertBranch::Wm1),
        _ => Err(PyValueError::new_err(format!(
            "branch must be \"0\" or \"-1\", got {s:?}"
        ))),
    }
}

fn mode_name(mode: PerturbationMode, dist: &DistributionSpec) -> String {
    ModeLiteral::for_mode(mode, dist)
        .map(|m| m.to_string())
        .unwrap_or_else(|| format!("{mode:?}"))
}

/// A marginal distribution, built from a literal such as "normal(0,1)".
#[pyclass(name = "Distribution", module = "pydpsa", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyDistribution(DistributionSpec);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(literal: &str) -> PyResult<Self> {
        Ok(PyDistribution(parse(literal)?))
    }

    fn __repr__(&self) -> String {
        format!("Distribution('{}')", self.0)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    #[getter]
    fn family(&self) -> String {
        self.0.family().to_string()
    }

    #[getter]
    fn support(&self) -> (f64, f64) {
        self.0.support()
    }

    #[getter]
    fn is_discrete(&self) -> bool {
        self.0.is_discrete()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn density(&self, x: f64) -> f64 {
        self.0.density(x)
    }

    fn log_density(&self, x: f64) -> f64 {
        self.0.log_density(x)
    }

    #[pyo3(signature = (tau, component = "first"))]
    fn cumulant_psi(&self, tau: f64, component: &str) -> PyResult<f64> {
        self.0.cumulant_psi(tau, self::component(component)?).py_err()
    }

    #[pyo3(signature = (tau, component = "first"))]
    fn psi_derivatives(&self, tau: f64, component: &str) -> PyResult<(f64, f64)> {
        self.0.psi_derivatives(tau, self::component(component)?).py_err()
    }

    #[pyo3(signature = (tau, component = "first"))]
    fn tilted(&self, tau: f64, component: &str) -> PyResult<Self> {
        Ok(PyDistribution(
            self.0.tilted(tau, self::component(component)?).py_err()?,
        ))
    }

    /// `n` draws from the stream `seed`.
    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        draw_points(std::slice::from_ref(&self.0), n, seed).py_err()
    }
}

#[pyclass(name = "TiltSolution", module = "pydpsa", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTiltSolution(TiltSolution);

#[pymethods]
impl PyTiltSolution {
    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta
    }

    #[getter]
    fn psi_tau(&self) -> f64 {
        self.0.psi_tau
    }

    #[getter]
    fn mode(&self) -> String {
        mode_name(self.0.mode, &self.0.original)
    }

    #[getter]
    fn branch(&self) -> String {
        self.0.branch.to_string()
    }

    #[getter]
    fn found_branch(&self) -> String {
        self.0.found_branch.to_string()
    }

    #[getter]
    fn original(&self) -> PyDistribution {
        PyDistribution(self.0.original)
    }

    #[getter]
    fn perturbed(&self) -> PyDistribution {
        PyDistribution(self.0.perturbed)
    }

    /// E[w²] of the likelihood ratio under the original law; inf if unbounded.
    fn weight_second_moment(&self) -> PyResult<f64> {
        self.0.weight_second_moment().py_err()
    }

    fn __repr__(&self) -> String {
        format!(
            "TiltSolution(mode='{}', branch='{}', delta={}, tau={}, perturbed='{}')",
            self.mode(),
            self.0.branch,
            self.0.delta,
            self.0.tau,
            self.0.perturbed
        )
    }
}

#[pyclass(name = "FailureEstimate", module = "pydpsa", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFailureEstimate {
    p_hat: f64,
    n: usize,
    var_hat: f64,
    failures: usize,
    ess: f64,
}

impl From<FailureEstimate> for PyFailureEstimate {
    fn from(e: FailureEstimate) -> Self {
        PyFailureEstimate {
            p_hat: e.p_hat,
            n: e.n,
            var_hat: e.var_hat,
            failures: e.failures,
            ess: e.ess,
        }
    }
}

impl PyFailureEstimate {
    fn inner(&self) -> FailureEstimate {
        FailureEstimate {
            p_hat: self.p_hat,
            n: self.n,
            var_hat: self.var_hat,
            failures: self.failures,
            ess: self.ess,
        }
    }
}

#[pymethods]
impl PyFailureEstimate {
    fn __repr__(&self) -> String {
        format!(
            "FailureEstimate(p_hat={}, n={}, var_hat={}, failures={})",
            self.p_hat, self.n, self.var_hat, self.failures
        )
    }
}

#[pyclass(name = "IndexEstimate", module = "pydpsa", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyIndexEstimate {
    s_hat: f64,
    stderr: f64,
    ci_lo: f64,
    ci_hi: f64,
    variance_floored: bool,
}

#[pymethods]
impl PyIndexEstimate {
    fn __repr__(&self) -> String {
        format!(
            "IndexEstimate(s_hat={}, stderr={}, ci=({}, {}))",
            self.s_hat, self.stderr, self.ci_lo, self.ci_hi
        )
    }
}

/// Points, performance values and marginals of one Monte Carlo run.
#[pyclass(name = "Sample", module = "pydpsa", frozen)]
struct PySample(EvaluatedSample);

#[pymethods]
impl PySample {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.0.seed()
    }

    #[getter]
    fn g_values(&self) -> Vec<f64> {
        self.0.g_values().to_vec()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.0.points().chunks(self.0.dim()).map(|r| r.to_vec()).collect()
    }

    #[getter]
    fn marginals(&self) -> Vec<PyDistribution> {
        self.0.marginals().iter().copied().map(PyDistribution).collect()
    }

    #[getter]
    fn failure_indices(&self) -> Vec<usize> {
        self.0.failure_indices().to_vec()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.0.warnings().to_vec()
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        write_sample(&self.0, &path).py_err()
    }
}

fn specs(marginals: &[PyRef<'_, PyDistribution>]) -> Vec<DistributionSpec> {
    marginals.iter().map(|d| d.0).collect()
}

/// A Python callable g(x: list[float]) -> float.
struct PyPerformance {
    func: Py<PyAny>,
    dim: usize,
}

impl PerformanceFunction for PyPerformance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Python::attach(|py| {
            self.func
                .call1(py, (x.to_vec(),))
                .and_then(|v| v.extract::<f64>(py))
                .map_err(|e| Error::Numerical(format!("performance function raised: {e}")))
        })
    }
}

/// Solves the perturbation `mode` (e.g. "tilt.mean", "boundary.upper") of
/// size `delta` on `branch` ("neg" or "pos").
#[pyfunction]
fn solve_tau(dist: &PyDistribution, mode: &str, delta: f64, branch: &str) -> PyResult<PyTiltSolution> {
    let lit: ModeLiteral = parse(mode)?;
    lit.check(&dist.0).py_err()?;
    let sol = dpsa::tilt::solve_tau(&dist.0, lit.mode(), delta, parse(branch)?).py_err()?;
    Ok(PyTiltSolution(sol))
}

#[pyfunction]
fn kl_divergence(p: &PyDistribution, q: &PyDistribution) -> PyResult<f64> {
    dpsa::tilt::kl_divergence(&p.0, &q.0).py_err()
}

#[pyfunction]
fn delta_max(p: &PyDistribution, q: &PyDistribution) -> PyResult<f64> {
    dpsa::tilt::delta_max(&p.0, &q.0).py_err()
}

#[pyfunction]
#[pyo3(signature = (x, branch = "0"))]
fn lambert_w(x: f64, branch: &str) -> PyResult<f64> {
    dpsa::tilt::lambert_w(lambert_branch(branch)?, x).py_err()
}

fn linear(intercept: f64, coefficients: Vec<f64>) -> PyResult<LinearLimitState> {
    LinearLimitState::new(intercept, coefficients).py_err()
}

/// Exact failure probability of g = intercept − Σ cᵢxᵢ with normal inputs.
#[pyfunction]
fn analytic_pf_linear(
    intercept: f64,
    coefficients: Vec<f64>,
    marginals: Vec<PyRef<'_, PyDistribution>>,
) -> PyResult<f64> {
    dpsa::models::analytic_pf_linear(&linear(intercept, coefficients)?, &specs(&marginals)).py_err()
}

#[pyfunction]
fn build_linear_sample(
    py: Python<'_>,
    intercept: f64,
    coefficients: Vec<f64>,
    marginals: Vec<PyRef<'_, PyDistribution>>,
    n: usize,
    seed: u64,
) -> PyResult<PySample> {
    let model = linear(intercept, coefficients)?;
    let m = specs(&marginals);
    let sample = py.detach(|| build_sample(&model, &m, n, seed)).py_err()?;
    Ok(PySample(sample))
}

/// Samples the marginals and evaluates the Python callable `func` at each point.
#[pyfunction]
fn build_sample_from(
    py: Python<'_>,
    func: Py<PyAny>,
    marginals: Vec<PyRef<'_, PyDistribution>>,
    n: usize,
    seed: u64,
) -> PyResult<PySample> {
    let m = specs(&marginals);
    let model = PyPerformance { func, dim: m.len() };
    let sample = py.detach(|| build_sample(&model, &m, n, seed)).py_err()?;
    Ok(PySample(sample))
}

/// Wraps precomputed points (rows) and performance values.
#[pyfunction]
fn sample_from_values(
    points: Vec<Vec<f64>>,
    g_values: Vec<f64>,
    marginals: Vec<PyRef<'_, PyDistribution>>,
) -> PyResult<PySample> {
    let d = marginals.len();
    if let Some(bad) = points.iter().position(|r| r.len() != d) {
        return Err(PyValueError::new_err(format!(
            "row {bad} has {} values, expected {d}",
            points[bad].len()
        )));
    }
    let flat = points.into_iter().flatten().collect();
    Ok(PySample(
        EvaluatedSample::new(flat, g_values, specs(&marginals), None).py_err()?,
    ))
}

#[pyfunction]
fn ingest_sample(path: PathBuf, marginals: Vec<PyRef<'_, PyDistribution>>) -> PyResult<PySample> {
    Ok(PySample(
        dpsa::models::ingest_sample(&path, &specs(&marginals)).py_err()?,
    ))
}

#[pyfunction]
fn estimate_pf(sample: &PySample) -> PyFailureEstimate {
    dpsa::estimation::estimate_pf(&sample.0).into()
}

#[pyfunction]
fn estimate_perturbed_pf(sample: &PySample, i: usize, tilt: &PyTiltSolution) -> PyResult<PyFailureEstimate> {
    Ok(dpsa::estimation::estimate_perturbed_pf(&sample.0, i, &tilt.0)
        .py_err()?
        .into())
}

#[pyfunction]
fn estimate_interaction_pf(
    sample: &PySample,
    i: usize,
    j: usize,
    tilt_i: &PyTiltSolution,
    tilt_j: &PyTiltSolution,
) -> PyResult<PyFailureEstimate> {
    Ok(
        dpsa::estimation::estimate_interaction_pf(&sample.0, i, j, &tilt_i.0, &tilt_j.0)
            .py_err()?
            .into(),
    )
}

#[pyfunction]
#[pyo3(signature = (p_delta, p_f, confidence = 0.95))]
fn sensitivity_index(
    p_delta: &PyFailureEstimate,
    p_f: &PyFailureEstimate,
    confidence: f64,
) -> PyResult<PyIndexEstimate> {
    let e = dpsa::estimation::sensitivity_index(&p_delta.inner(), &p_f.inner(), confidence).py_err()?;
    Ok(PyIndexEstimate {
        s_hat: e.s_hat,
        stderr: e.stderr,
        ci_lo: e.ci_lo,
        ci_hi: e.ci_hi,
        variance_floored: e.variance_floored,
    })
}

/// Runs a sweep. `plan` is a list of dicts with keys variable (0-based),
/// mode, branch and deltas. Returns one dict per cell, sorted.
#[pyfunction]
#[pyo3(signature = (sample, plan, confidence = 0.95))]
fn sweep<'py>(
    py: Python<'py>,
    sample: &PySample,
    plan: Vec<Bound<'py, PyDict>>,
    confidence: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut entries = Vec::with_capacity(plan.len());
    for item in &plan {
        let get = |key: &str| {
            item.get_item(key)?
                .ok_or_else(|| PyValueError::new_err(format!("plan entry is missing `{key}`")))
        };
        let variable: usize = get("variable")?.extract()?;
        let mode: ModeLiteral = parse(&get("mode")?.extract::<String>()?)?;
        let branch: Branch = parse(&get("branch")?.extract::<String>()?)?;
        let deltas: Vec<f64> = get("deltas")?.extract()?;
        if let Some(dist) = sample.0.marginals().get(variable) {
            mode.check(dist).py_err()?;
        }
        entries.push(PlanEntry {
            variable,
            mode: mode.mode(),
            branch,
            deltas,
        });
    }
    let records = py
        .detach(|| dpsa::estimation::sweep(&sample.0, &entries, confidence))
        .py_err()?;
    records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("variable", r.variable)?;
            d.set_item("mode", mode_name(r.mode, &sample.0.marginals()[r.variable]))?;
            d.set_item("branch", r.branch.to_string())?;
            d.set_item("delta", r.delta)?;
            d.set_item("tau", r.tau)?;
            d.set_item("p_delta", r.p_delta_hat)?;
            d.set_item("s_hat", r.s_hat)?;
            d.set_item("stderr", r.stderr)?;
            d.set_item("ci_lo", r.ci_lo)?;
            d.set_item("ci_hi", r.ci_hi)?;
            d.set_item("ess", r.ess)?;
            d.set_item("low_ess", r.flags.low_ess)?;
            d.set_item("variance_floored", r.flags.variance_floored)?;
            d.set_item("branch_substituted", r.flags.branch_substituted)?;
            d.set_item("unbounded_weight_variance", r.flags.unbounded_weight_variance)?;
            d.set_item("infeasible", r.infeasible.clone())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn pydpsa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("DpsaError", py.get_type::<DpsaError>())?;
    m.add("NoSolutionError", py.get_type::<NoSolutionError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add("UndefinedIndexError", py.get_type::<UndefinedIndexError>())?;
    m.add("IngestError", py.get_type::<IngestError>())?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyTiltSolution>()?;
    m.add_class::<PyFailureEstimate>()?;
    m.add_class::<PyIndexEstimate>()?;
    m.add_class::<PySample>()?;
    m.add_function(wrap_pyfunction!(solve_tau, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(delta_max, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_pf_linear, m)?)?;
    m.add_function(wrap_pyfunction!(build_linear_sample, m)?)?;
    m.add_function(wrap_pyfunction!(build_sample_from, m)?)?;
    m.add_function(wrap_pyfunction!(sample_from_values, m)?)?;
    m.add_function(wrap_pyfunction!(ingest_sample, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pf, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_perturbed_pf, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_interaction_pf, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity_index, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_parsing() {
        assert!(matches!(component("second"), Ok(TiltComponent::Second)));
        assert!(component("third").is_err());
        assert!(matches!(lambert_branch("-1"), Ok(LambertBranch::Wm1)));
        assert!(lambert_branch("1").is_err());
        let d: DistributionSpec = "exponential(2)".parse().unwrap();
        assert_eq!(mode_name(ModeLiteral::Rate.mode(), &d), "tilt.rate");
    }
}
