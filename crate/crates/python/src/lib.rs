//! Python bindings for the cuspfuse toolkit: the cusp potential and its
//! minimizers, population sampling, model fitting, susceptibility
//! analysis, and the batch pipeline.
//!
//! Build with `cargo build --release -p cuspfuse-py`; the resulting
//! `libcuspfuse_py.so` imports as the module `cuspfuse_py` once renamed
//! to `cuspfuse_py.so` on the Python path (`python/smoke_test.py` does
//! this automatically).

use cuspfuse::config::RunConfig;
use cuspfuse::cusp::{CuspParams, MinimizerConfig, Stability};
use cuspfuse::datastore::{DbTable, TableSchema};
use cuspfuse::influence;
use cuspfuse::model::{self, FeatureSpec, FittedModel};
use cuspfuse::pipeline;
use cuspfuse::sampler::{self, SamplerConfig};
use cuspfuse::stats;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;

fn value_err(message: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(message.to_string())
}

fn runtime_err(message: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(message.to_string())
}

/// One simulated individual.
#[pyclass(frozen, get_all, from_py_object)]
#[derive(Clone)]
struct Person {
    id: u64,
    a: f64,
    b: f64,
    x0: f64,
    x: f64,
    p: f64,
    y: u8,
}

impl From<sampler::Person> for Person {
    fn from(p: sampler::Person) -> Self {
        Self {
            id: p.id,
            a: p.a,
            b: p.b,
            x0: p.x0,
            x: p.x,
            p: p.p,
            y: p.y,
        }
    }
}

impl Person {
    fn inner(&self) -> sampler::Person {
        sampler::Person {
            id: self.id,
            a: self.a,
            b: self.b,
            x0: self.x0,
            x: self.x,
            p: self.p,
            y: self.y,
        }
    }
}

#[pymethods]
impl Person {
    fn __repr__(&self) -> String {
        format!(
            "Person(id={}, a={:.4}, b={:.4}, x={:.4}, p={:.4}, y={})",
            self.id, self.a, self.b, self.x, self.p, self.y
        )
    }
}

/// A fitted logistic regression on polynomial features.
#[pyclass(frozen)]
struct Model {
    inner: FittedModel,
}

#[pymethods]
impl Model {
    /// Probability of a positive vote for the given inputs.
    #[pyo3(signature = (a=None, b=None))]
    fn predict(&self, a: Option<f64>, b: Option<f64>) -> PyResult<f64> {
        self.inner.predict_proba(a, b).map_err(value_err)
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    fn term_names(&self) -> Vec<String> {
        self.inner
            .spec
            .term_names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(inputs={:?}, terms={})",
            self.inner.spec.inputs,
            self.inner.weights.len()
        )
    }
}

/// `V(x; a, b) = x^4/4 - a*x - b*x^2/2`.
#[pyfunction]
fn potential(x: f64, a: f64, b: f64) -> f64 {
    CuspParams::new(a, b).potential(x)
}

/// `dV/dx = x^3 - a - b*x`.
#[pyfunction]
fn gradient(x: f64, a: f64, b: f64) -> f64 {
    CuspParams::new(a, b).gradient(x)
}

/// "monostable", "bistable", or "degenerate" (on the fold curve).
#[pyfunction]
fn stability(a: f64, b: f64) -> &'static str {
    match CuspParams::new(a, b).stability() {
        Stability::Monostable => "monostable",
        Stability::Bistable => "bistable",
        Stability::Degenerate => "degenerate",
    }
}

/// Smallest b at which (a, b) lies on the fold curve.
#[pyfunction]
fn fold_boundary_b(a: f64) -> f64 {
    cuspfuse::cusp::fold_boundary_b(a)
}

/// Closed-form critical points: (minima, maximum, degenerate).
#[pyfunction]
fn critical_points(a: f64, b: f64) -> (Vec<f64>, Option<f64>, bool) {
    let points = CuspParams::new(a, b).critical_points();
    (points.minima, points.maximum, points.degenerate)
}

/// Nelder-Mead minimum of the potential from an initial guess.
#[pyfunction]
#[pyo3(signature = (x0, a, b, max_iterations=500))]
fn local_minimum_from(x0: f64, a: f64, b: f64, max_iterations: u32) -> PyResult<f64> {
    let cfg = MinimizerConfig {
        max_iterations,
        ..MinimizerConfig::default()
    };
    CuspParams::new(a, b)
        .local_minimum_from(x0, &cfg)
        .map_err(runtime_err)
}

/// Logistic vote probability of a latent state.
#[pyfunction]
fn vote_probability(x: f64, sigma: f64) -> f64 {
    sampler::vote_probability(x, sigma)
}

/// Sample a reproducible population.
#[pyfunction]
#[pyo3(signature = (n=1000, seed=42, sigma=10.0, exact=false))]
fn sample_population(n: usize, seed: u64, sigma: f64, exact: bool) -> PyResult<Vec<Person>> {
    let cfg = SamplerConfig {
        n,
        seed,
        sigma,
        exact_mode: exact,
        ..SamplerConfig::default()
    };
    let population = sampler::sample_population(&cfg).map_err(value_err)?;
    Ok(population.into_iter().map(Person::from).collect())
}

fn record_to_dict<'py>(
    py: Python<'py>,
    record: &influence::SusceptibilityRecord,
) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("id", record.id)?;
    dict.set_item("branch", record.branch.to_string())?;
    dict.set_item("delta_b_flip", record.delta_b_flip)?;
    dict.set_item(
        "flip_direction",
        record.flip_direction.map(|d| d.to_string()),
    )?;
    dict.set_item("on_degenerate", record.on_degenerate)?;
    Ok(dict)
}

/// Susceptibility classification of one individual.
#[pyfunction]
fn susceptibility<'py>(py: Python<'py>, person: Person) -> PyResult<Bound<'py, PyDict>> {
    let record = influence::susceptibility(&person.inner()).map_err(value_err)?;
    record_to_dict(py, &record)
}

/// Rank a population by flippability (metastable first, closest fold first).
#[pyfunction]
fn rank_targets<'py>(
    py: Python<'py>,
    population: Vec<Person>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let inner: Vec<sampler::Person> = population.iter().map(Person::inner).collect();
    influence::rank_targets(&inner)
        .iter()
        .map(|record| record_to_dict(py, record))
        .collect()
}

/// Move one individual's behavior index with hysteresis semantics.
#[pyfunction]
#[pyo3(signature = (person, new_b, sigma=10.0))]
fn apply_intervention<'py>(
    py: Python<'py>,
    person: Person,
    new_b: f64,
    sigma: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let result =
        influence::apply_intervention(&person.inner(), new_b, sigma, &MinimizerConfig::default())
            .map_err(runtime_err)?;
    let dict = PyDict::new(py);
    dict.set_item("id", result.id)?;
    dict.set_item("new_b", result.new_b)?;
    dict.set_item("new_x", result.new_x)?;
    dict.set_item("new_p", result.new_p)?;
    dict.set_item("flipped", result.flipped)?;
    Ok(dict)
}

fn table_from_columns(a: Option<&[f64]>, b: Option<&[f64]>, y: &[u8]) -> PyResult<DbTable> {
    let mut columns = vec!["id"];
    if a.is_some() {
        columns.push("a");
    }
    if b.is_some() {
        columns.push("b");
    }
    columns.push("y");
    let mut table = DbTable::new(TableSchema::new("training", &columns)).map_err(value_err)?;
    for (i, &label) in y.iter().enumerate() {
        let mut row = Vec::new();
        if let Some(a) = a {
            row.push(
                *a.get(i)
                    .ok_or_else(|| value_err("column a shorter than y"))?,
            );
        }
        if let Some(b) = b {
            row.push(
                *b.get(i)
                    .ok_or_else(|| value_err("column b shorter than y"))?,
            );
        }
        row.push(label as f64);
        table.insert(i as u64, row).map_err(value_err)?;
    }
    Ok(table)
}

fn spec_from_name(inputs: &str) -> PyResult<FeatureSpec> {
    match inputs {
        "a" => Ok(FeatureSpec::a_only()),
        "b" => Ok(FeatureSpec::b_only()),
        "ab" => Ok(FeatureSpec::joint()),
        other => Err(value_err(format!(
            "inputs must be 'a', 'b', or 'ab', got '{other}'"
        ))),
    }
}

/// Fit an L2-regularized logistic regression on degree-3 polynomial
/// features of the given columns.
#[pyfunction]
#[pyo3(signature = (y, a=None, b=None, inputs="ab", lambda_=1.0))]
fn fit_model(
    y: Vec<u8>,
    a: Option<Vec<f64>>,
    b: Option<Vec<f64>>,
    inputs: &str,
    lambda_: f64,
) -> PyResult<Model> {
    let spec = spec_from_name(inputs)?;
    let table = table_from_columns(a.as_deref(), b.as_deref(), &y)?;
    let inner = model::fit(&table, &spec, lambda_).map_err(value_err)?;
    Ok(Model { inner })
}

/// Log-loss, AUC, and accuracy of a model against labelled columns.
#[pyfunction]
#[pyo3(signature = (model, y, a=None, b=None))]
fn evaluate_model<'py>(
    py: Python<'py>,
    model: &Model,
    y: Vec<u8>,
    a: Option<Vec<f64>>,
    b: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let table = table_from_columns(a.as_deref(), b.as_deref(), &y)?;
    let report = model::evaluate(&model.inner, &table).map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("log_loss", report.log_loss)?;
    dict.set_item("auc", report.auc)?;
    dict.set_item("accuracy", report.accuracy)?;
    dict.set_item("n", report.n)?;
    dict.set_item("auc_degenerate", report.auc_degenerate)?;
    Ok(dict)
}

/// Chi-square independence test of a binary label against decile bins of
/// a continuous covariate: returns (statistic, degrees_of_freedom, p_value).
#[pyfunction]
fn chi_square_independence(values: Vec<f64>, labels: Vec<u8>) -> PyResult<(f64, usize, f64)> {
    let test = stats::chi_square_independence(&values, &labels).map_err(value_err)?;
    Ok((test.statistic, test.degrees_of_freedom, test.p_value))
}

/// Run the full pipeline into `out`; returns (path, hash) per artifact.
#[pyfunction]
#[pyo3(signature = (out, n=1000, seed=42, sigma=10.0, lambda_=1.0, resolution=100, svg=true, exact=false))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline(
    out: PathBuf,
    n: usize,
    seed: u64,
    sigma: f64,
    lambda_: f64,
    resolution: usize,
    svg: bool,
    exact: bool,
) -> PyResult<Vec<(String, String)>> {
    let cfg = RunConfig {
        sampler: SamplerConfig {
            n,
            seed,
            sigma,
            exact_mode: exact,
            ..SamplerConfig::default()
        },
        lambda: lambda_,
        grid_resolution: resolution,
        output_dir: out,
        emit_svg: svg,
    };
    cfg.validate().map_err(value_err)?;
    let manifest = pipeline::run_pipeline(&cfg).map_err(runtime_err)?;
    Ok(manifest
        .files
        .into_iter()
        .map(|f| (f.path, f.hash))
        .collect())
}

#[pymodule]
fn cuspfuse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Person>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(potential, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(fold_boundary_b, m)?)?;
    m.add_function(wrap_pyfunction!(critical_points, m)?)?;
    m.add_function(wrap_pyfunction!(local_minimum_from, m)?)?;
    m.add_function(wrap_pyfunction!(vote_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sample_population, m)?)?;
    m.add_function(wrap_pyfunction!(susceptibility, m)?)?;
    m.add_function(wrap_pyfunction!(rank_targets, m)?)?;
    m.add_function(wrap_pyfunction!(apply_intervention, m)?)?;
    m.add_function(wrap_pyfunction!(fit_model, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_model, m)?)?;
    m.add_function(wrap_pyfunction!(chi_square_independence, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
