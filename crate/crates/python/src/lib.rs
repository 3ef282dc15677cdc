//! Python bindings: the test itself, its building blocks and the data
//! generators.

use bnpnorm::dirichlet::{sample_dp as draw_dp, BaseFamily, BaseMeasure, DPApproximation, RngStream};
use bnpnorm::distance;
use bnpnorm::mahalanobis::{self, DataMatrix};
use bnpnorm::rbtest::{self, RbError};
use bnpnorm::simgen::{self, AlternativeSpec, Family};
use bnpnorm::specialfn::{self, ChiSquare, DegreesOfFreedom};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rb_error(e: RbError) -> PyErr {
    match e {
        RbError::DegenerateGrid { .. } | RbError::Mahalanobis(_) | RbError::Distance(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => value_error(e),
    }
}

fn df(m: u32) -> PyResult<DegreesOfFreedom> {
    DegreesOfFreedom::new(m).map_err(value_error)
}

fn parse_base(name: &str) -> PyResult<BaseFamily> {
    match name {
        "chi_square" => Ok(BaseFamily::ChiSquare),
        "normal" => Ok(BaseFamily::Normal),
        "cauchy" => Ok(BaseFamily::Cauchy),
        other => Err(value_error(format!(
            "unknown base `{other}`; known: chi_square, normal, cauchy"
        ))),
    }
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<DataMatrix> {
    DataMatrix::from_rows(&rows).map_err(value_error)
}

/// Tuning of the Monte Carlo test.
#[pyclass(module = "pybnpnorm", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
pub struct TestConfig {
    pub a: f64,
    #[pyo3(name = "N")]
    pub n_atoms: usize,
    pub r1: usize,
    pub r2: usize,
    #[pyo3(name = "M")]
    pub bins: usize,
    pub i0: Option<usize>,
    pub seed: u64,
    pub base: String,
}

#[pymethods]
impl TestConfig {
    #[new]
    #[pyo3(signature = (a, *, N = 500, r1 = 1000, r2 = 1000, M = 20, i0 = None, seed = 0, base = "chi_square".to_string()))]
    #[allow(non_snake_case)]
    fn py_new(a: f64, N: usize, r1: usize, r2: usize, M: usize, i0: Option<usize>, seed: u64, base: String) -> Self {
        Self {
            a,
            n_atoms: N,
            r1,
            r2,
            bins: M,
            i0,
            seed,
            base,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "TestConfig(a={}, N={}, r1={}, r2={}, M={}, i0={:?}, seed={}, base='{}')",
            self.a, self.n_atoms, self.r1, self.r2, self.bins, self.i0, self.seed, self.base
        )
    }
}

impl TestConfig {
    fn to_core(&self) -> PyResult<rbtest::TestConfig> {
        let cfg = rbtest::TestConfig {
            a: self.a,
            n_atoms: self.n_atoms,
            r1: self.r1,
            r2: self.r2,
            bins: self.bins,
            i0: self.i0.unwrap_or_else(|| rbtest::default_i0(self.bins)),
            seed: self.seed,
            base: parse_base(&self.base)?,
        };
        cfg.validate().map_err(value_error)?;
        Ok(cfg)
    }
}

/// Outcome of one test.
#[pyclass(module = "pybnpnorm", get_all, frozen)]
#[derive(Debug)]
pub struct RbReport {
    pub rb_at_zero: f64,
    pub strength: f64,
    /// `"favor_H0"`, `"against_H0"` or `"no_evidence"`.
    pub verdict: String,
    pub rb_per_bin: Vec<f64>,
    pub quantile_grid: Vec<f64>,
    pub prior_distances: Vec<f64>,
    pub posterior_distances: Vec<f64>,
    pub warnings: Vec<String>,
}

#[pymethods]
impl RbReport {
    fn __repr__(&self) -> String {
        format!(
            "RbReport(rb_at_zero={}, strength={}, verdict='{}')",
            self.rb_at_zero, self.strength, self.verdict
        )
    }
}

impl From<rbtest::RbReport> for RbReport {
    fn from(r: rbtest::RbReport) -> Self {
        Self {
            verdict: r.verdict().name().to_string(),
            rb_at_zero: r.rb_at_zero,
            strength: r.strength,
            rb_per_bin: r.rb_per_bin,
            quantile_grid: r.quantile_grid.points().to_vec(),
            prior_distances: r.prior_distances.values().to_vec(),
            posterior_distances: r.posterior_distances.values().to_vec(),
            warnings: r.diagnostics.warnings,
        }
    }
}

/// Runs the relative-belief normality test on an n x m data array.
#[pyfunction]
pub fn run_test(py: Python<'_>, data: Vec<Vec<f64>>, config: &TestConfig) -> PyResult<RbReport> {
    let data = to_matrix(data)?;
    let cfg = config.to_core()?;
    let report = py.detach(|| rbtest::run_test(&data, &cfg)).map_err(rb_error)?;
    Ok(report.into())
}

/// Squared Mahalanobis distances of the rows from the sample mean.
#[pyfunction]
pub fn squared_mahalanobis(data: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let data = to_matrix(data)?;
    let d = mahalanobis::squared_mahalanobis(&data).map_err(|e| PyArithmeticError::new_err(e.to_string()))?;
    Ok(d.into_vec())
}

/// Draws `n` rows from a named preset or a JSON family description.
#[pyfunction]
#[pyo3(signature = (family, m, n, seed, stream = 0))]
pub fn generate(family: &str, m: usize, n: usize, seed: u64, stream: u64) -> PyResult<Vec<Vec<f64>>> {
    let family = if family.trim_start().starts_with('{') {
        serde_json::from_str::<Family>(family).map_err(value_error)?
    } else {
        Family::preset(family, m).map_err(value_error)?
    };
    let spec = AlternativeSpec { family, m, n };
    let x = simgen::generate(&spec, &mut RngStream::new(seed, stream).rng()).map_err(value_error)?;
    Ok(x.rows().map(<[f64]>::to_vec).collect())
}

/// Names accepted by `generate`.
#[pyfunction]
pub fn presets() -> Vec<&'static str> {
    simgen::PRESETS.to_vec()
}

/// One truncated draw from the Dirichlet process prior centred at
/// chi-square(m), as `(atoms, jumps)` with sorted atoms.
#[pyfunction]
#[pyo3(signature = (a, m, n_atoms, seed, stream = 0))]
pub fn sample_dp(a: f64, m: u32, n_atoms: usize, seed: u64, stream: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let base = BaseMeasure::prior_chi_square(df(m)?);
    let p = draw_dp(a, &base, n_atoms, &mut RngStream::new(seed, stream).rng()).map_err(value_error)?;
    Ok((p.atoms().to_vec(), p.jumps().to_vec()))
}

fn discrete(atoms: Vec<f64>, jumps: Vec<f64>) -> PyResult<DPApproximation> {
    DPApproximation::from_parts(atoms, jumps).map_err(value_error)
}

/// Anderson-Darling distance between a discrete law and chi-square(m).
#[pyfunction]
pub fn ad_distance(atoms: Vec<f64>, jumps: Vec<f64>, m: u32) -> PyResult<f64> {
    distance::ad_distance(&discrete(atoms, jumps)?, &ChiSquare::new(df(m)?)).map_err(value_error)
}

/// Cramér-von Mises distance between a discrete law and chi-square(m).
#[pyfunction]
pub fn cvm_distance(atoms: Vec<f64>, jumps: Vec<f64>, m: u32) -> PyResult<f64> {
    distance::cvm_distance(&discrete(atoms, jumps)?, &ChiSquare::new(df(m)?)).map_err(value_error)
}

/// `reps` prior Anderson-Darling distances at concentration `a`.
#[pyfunction]
pub fn prior_distance_sample(py: Python<'_>, a: f64, n_atoms: usize, reps: usize, seed: u64) -> PyResult<Vec<f64>> {
    let d = py
        .detach(|| rbtest::prior_distance_sample(a, n_atoms, reps, seed))
        .map_err(rb_error)?;
    Ok(d.values().to_vec())
}

#[pyfunction]
pub fn ad_prior_mean(a: f64) -> f64 {
    distance::ad_prior_mean(a)
}

#[pyfunction]
pub fn ad_prior_variance(a: f64) -> f64 {
    distance::ad_prior_variance(a)
}

#[pyfunction]
pub fn chi2_cdf(x: f64, m: u32) -> PyResult<f64> {
    Ok(specialfn::chi2_cdf(x, df(m)?).map_err(value_error)?.value())
}

#[pyfunction]
pub fn chi2_quantile(p: f64, m: u32) -> PyResult<f64> {
    specialfn::chi2_quantile(p, df(m)?).map_err(value_error)
}

#[pymodule]
fn pybnpnorm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TestConfig>()?;
    m.add_class::<RbReport>()?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(squared_mahalanobis, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(sample_dp, m)?)?;
    m.add_function(wrap_pyfunction!(ad_distance, m)?)?;
    m.add_function(wrap_pyfunction!(cvm_distance, m)?)?;
    m.add_function(wrap_pyfunction!(prior_distance_sample, m)?)?;
    m.add_function(wrap_pyfunction!(ad_prior_mean, m)?)?;
    m.add_function(wrap_pyfunction!(ad_prior_variance, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_quantile, m)?)?;
    Ok(())
}
