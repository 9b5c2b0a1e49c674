//! Python bindings for `ioi_core`.
//!
//! Structured values (conditional specs, scan orders, reports) cross the boundary
//! as plain dicts and lists, converted through the `json` module.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use ioi_core::bayes::{conjugate_normal_update as core_conjugate, grid_bayes_update as core_grid_update};
use ioi_core::bayes::{LikelihoodKernel, NormalPrior};
use ioi_core::bispatial::{BispatialConfig, Calibration, PValueResult};
use ioi_core::fiducial::{fiducial_region_probability, normal_mean_pivot, Side};
use ioi_core::gibbs::{build_conditional_set, default_burn_in, ConditionalSet, LinearNormalConditional};
use ioi_core::gibbs::{ScanOrder, WorkingBox};
use ioi_core::{normal, IoiError, PriorKnowledge};

create_exception!(ioi, IoiException, PyException, "Base class for engine errors.");
create_exception!(ioi, AnalogyRejected, IoiException, "The method's justifying analogy was rejected.");
create_exception!(ioi, ValidationError, IoiException, "Invalid input or configuration.");
create_exception!(ioi, NumericalError, IoiException, "A numerical procedure failed.");

fn to_py(e: IoiError) -> PyErr {
    let msg = e.to_string();
    match e.exit_code() {
        2 => AnalogyRejected::new_err(msg),
        3 => ValidationError::new_err(msg),
        _ => NumericalError::new_err(msg),
    }
}

fn to_json_obj<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ValidationError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_json_obj<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| ValidationError::new_err(e.to_string()))
}

fn knowledge(name: &str) -> PyResult<PriorKnowledge> {
    match name {
        "none_or_very_little" => Ok(PriorKnowledge::NoneOrVeryLittle),
        "substantive" => Ok(PriorKnowledge::Substantive),
        other => Err(ValidationError::new_err(format!("unknown prior knowledge flag '{other}'"))),
    }
}

/// One-dimensional density: normal, grid or mixture.
#[pyclass(name = "Density", module = "ioi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensity(ioi_core::Density1D);

#[pymethods]
impl PyDensity {
    #[staticmethod]
    fn normal(mean: f64, variance: f64) -> PyResult<Self> {
        ioi_core::Density1D::normal(mean, variance).map(PyDensity).map_err(to_py)
    }

    #[staticmethod]
    fn grid(lo: f64, hi: f64, weights: Vec<f64>) -> PyResult<Self> {
        ioi_core::Density1D::grid(lo, hi, weights).map(PyDensity).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(PyDensity)
            .map_err(|e| ValidationError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("densities serialize")
    }

    #[getter]
    fn form(&self) -> &'static str {
        self.0.form()
    }

    fn pdf(&self, t: f64) -> f64 {
        self.0.pdf(t)
    }

    fn cdf(&self, t: f64) -> f64 {
        self.0.cdf(t)
    }

    fn quantile(&self, p: f64) -> PyResult<f64> {
        self.0.quantile(p).map_err(to_py)
    }

    fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.0.mass_between(lo, hi)
    }

    fn sample(&self, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        self.0.sample(count, seed).map(|b| b.values).map_err(to_py)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn support(&self) -> (f64, f64) {
        self.0.support()
    }

    fn normalize(&self) -> Self {
        PyDensity(self.0.normalize())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Density({})", self.to_json())
    }
}

/// Known-variance normal sample summary.
#[pyclass(name = "DataSummary", module = "ioi", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyDataSummary(ioi_core::DataSummary);

#[pymethods]
impl PyDataSummary {
    #[new]
    fn new(mean: f64, n: u64, sigma2: f64) -> PyResult<Self> {
        ioi_core::DataSummary::new(mean, n, sigma2).map(PyDataSummary).map_err(to_py)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n()
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.0.sigma2()
    }

    #[getter]
    fn standard_error(&self) -> f64 {
        self.0.standard_error()
    }

    fn __repr__(&self) -> String {
        format!("DataSummary(mean={}, n={}, sigma2={})", self.0.mean(), self.0.n(), self.0.sigma2())
    }
}

#[pyfunction]
fn std_normal_cdf(z: f64) -> PyResult<f64> {
    normal::std_normal_cdf(z).map_err(to_py)
}

#[pyfunction]
fn std_normal_quantile(p: f64) -> PyResult<f64> {
    normal::std_normal_quantile(p).map_err(to_py)
}

/// Fiducial density of a normal mean.
#[pyfunction]
#[pyo3(signature = (data, prior_knowledge = "none_or_very_little"))]
fn fiducial_density(data: &PyDataSummary, prior_knowledge: &str) -> PyResult<PyDensity> {
    ioi_core::fiducial::fiducial_density(&normal_mean_pivot(), &data.0, knowledge(prior_knowledge)?)
        .map(PyDensity)
        .map_err(to_py)
}

/// Mass of `density` at or below (`side="leq"`) or above (`side="gt"`) the threshold.
#[pyfunction]
#[pyo3(signature = (density, threshold, side = "leq"))]
fn region_probability(density: &PyDensity, threshold: f64, side: &str) -> PyResult<f64> {
    let side = match side {
        "leq" => Side::Leq,
        "gt" => Side::Gt,
        other => return Err(ValidationError::new_err(format!("unknown side '{other}'"))),
    };
    Ok(fiducial_region_probability(&density.0, threshold, side))
}

#[pyfunction]
fn conjugate_normal_update(prior_mean: f64, prior_variance: f64, data: &PyDataSummary) -> PyResult<PyDensity> {
    let prior = NormalPrior::new(prior_mean, prior_variance).map_err(to_py)?;
    core_conjugate(&prior, &data.0).map(PyDensity).map_err(to_py)
}

/// Grid posterior for a normal mean under a grid prior.
#[pyfunction]
fn grid_bayes_update(prior: &PyDensity, data: &PyDataSummary) -> PyResult<PyDensity> {
    core_grid_update(&prior.0, &LikelihoodKernel::normal_mean(), &data.0)
        .map(PyDensity)
        .map_err(to_py)
}

/// Returns `(p0, applicable)` for the one-sided test of `mu <= epsilon`.
#[pyfunction]
fn one_sided_p_value(data: &PyDataSummary, epsilon: f64) -> PyResult<(f64, bool)> {
    let pv = ioi_core::bispatial::one_sided_p_value(&data.0, epsilon).map_err(to_py)?;
    Ok((pv.p0, pv.applicable))
}

fn bispatial_config(epsilon: f64, pre_data_mass: f64, calibration: &str) -> PyResult<BispatialConfig> {
    let cal = Calibration::from_name(calibration).map_err(to_py)?;
    BispatialConfig::new(epsilon, pre_data_mass, cal).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p0, pre_data_mass, calibration = "odds-default"))]
fn assess_region_probability(p0: f64, pre_data_mass: f64, calibration: &str) -> PyResult<f64> {
    let cfg = bispatial_config(0.0, pre_data_mass, calibration)?;
    let pv = PValueResult {
        p0,
        applicable: p0 < ioi_core::bispatial::APPLICABILITY_THRESHOLD,
    };
    ioi_core::bispatial::assess_region_probability(&pv, &cfg).map_err(to_py)
}

/// Bispatial region probabilities composed with fiducial regional densities.
#[pyfunction]
#[pyo3(signature = (data, epsilon, pre_data_mass, calibration = "odds-default", prior_knowledge = "none_or_very_little"))]
fn ioi_pipeline<'py>(
    py: Python<'py>,
    data: &PyDataSummary,
    epsilon: f64,
    pre_data_mass: f64,
    calibration: &str,
    prior_knowledge: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = bispatial_config(epsilon, pre_data_mass, calibration)?;
    let out = ioi_core::composition::ioi_pipeline(&data.0, &cfg, knowledge(prior_knowledge)?).map_err(to_py)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("p0", out.p0)?;
    dict.set_item("region_probability", out.region_probability)?;
    dict.set_item("density", PyDensity(out.density))?;
    Ok(dict.into_any())
}

fn conditional_set(conditionals: &Bound<'_, PyAny>) -> PyResult<ConditionalSet> {
    let specs: Vec<LinearNormalConditional> = from_json_obj(conditionals)?;
    build_conditional_set(&specs).map_err(to_py)
}

/// Compatibility report for two linear-normal conditionals, given as dicts such as
/// `{"method": "fiducial", "coef": 0.7, "sigma2": 0.51}`.
#[pyfunction]
#[pyo3(signature = (conditionals, half_width = 6.0, grid_n = 201))]
fn check_compatibility<'py>(
    py: Python<'py>,
    conditionals: &Bound<'py, PyAny>,
    half_width: f64,
    grid_n: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let set = conditional_set(conditionals)?;
    let bx = WorkingBox::new([-half_width; 2], [half_width; 2]).map_err(to_py)?;
    let mut report = ioi_core::gibbs::check_compatibility(&set, bx, grid_n).map_err(to_py)?;
    report.joint = None;
    to_json_obj(py, &report)
}

/// Runs one chain; `scan` is `{"sweep": [1, 2]}` or `{"random": seed}`. Returns the kept draws.
#[pyfunction]
#[pyo3(signature = (conditionals, scan, init, iterations, seed, burn_in = None))]
fn gibbs_run(
    conditionals: &Bound<'_, PyAny>,
    scan: &Bound<'_, PyAny>,
    init: Vec<f64>,
    iterations: usize,
    seed: u64,
    burn_in: Option<usize>,
) -> PyResult<Vec<Vec<f64>>> {
    let set = conditional_set(conditionals)?;
    let scan: ScanOrder = from_json_obj(scan)?;
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(iterations));
    let chain = ioi_core::gibbs::gibbs_run(&set, &scan, &init, iterations, burn_in, seed).map_err(to_py)?;
    Ok(chain.kept().map(<[f64]>::to_vec).collect())
}

#[pyfunction]
#[pyo3(signature = (conditionals, scans, init, iterations, seed, burn_in = None))]
fn scan_sensitivity<'py>(
    py: Python<'py>,
    conditionals: &Bound<'py, PyAny>,
    scans: &Bound<'py, PyAny>,
    init: Vec<f64>,
    iterations: usize,
    seed: u64,
    burn_in: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let set = conditional_set(conditionals)?;
    let scans: Vec<ScanOrder> = from_json_obj(scans)?;
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(iterations));
    let sens = py
        .detach(|| ioi_core::gibbs::scan_sensitivity(&set, &scans, &init, iterations, burn_in, seed))
        .map_err(to_py)?;
    to_json_obj(py, &sens)
}

#[pymodule]
pub fn ioi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", ioi_core::VERSION)?;
    m.add("IoiException", py.get_type::<IoiException>())?;
    m.add("AnalogyRejected", py.get_type::<AnalogyRejected>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyDataSummary>()?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(fiducial_density, m)?)?;
    m.add_function(wrap_pyfunction!(region_probability, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_normal_update, m)?)?;
    m.add_function(wrap_pyfunction!(grid_bayes_update, m)?)?;
    m.add_function(wrap_pyfunction!(one_sided_p_value, m)?)?;
    m.add_function(wrap_pyfunction!(assess_region_probability, m)?)?;
    m.add_function(wrap_pyfunction!(ioi_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(check_compatibility, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_run, m)?)?;
    m.add_function(wrap_pyfunction!(scan_sensitivity, m)?)?;
    Ok(())
}
