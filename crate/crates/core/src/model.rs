//! Logistic regression on third-order polynomial features, for the three
//! estimators P(Y=1|A), P(Y=1|B), and P(Y=1|A,B), plus dense probability
//! grids over the control plane.
//!
//! Fitting minimizes the mean negative log-likelihood plus an L2 penalty
//! `(lambda / 2n) * ||w_nonbias||^2` on standardized features with an
//! unpenalized bias. The optimizer is deterministic: full-batch Newton
//! steps with Armijo backtracking from the zero vector, so refits are
//! bit-reproducible.

use crate::datastore::DbTable;
use crate::stats::{evaluate_predictions, stable_logistic, MetricsReport, StatsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gradient infinity-norm below which the fit is converged.
pub const FIT_GRADIENT_TOLERANCE: f64 = 1e-9;

const MAX_NEWTON_ITERATIONS: usize = 500;
const MAX_BACKTRACKS: usize = 60;
const ARMIJO_SLOPE_FRACTION: f64 = 1e-4;

/// Which raw inputs feed the polynomial expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inputs {
    A,
    B,
    Ab,
}

/// Feature expansion descriptor. Only degree 3 is supported; the term
/// order is fixed and documented by [`FeatureSpec::term_names`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub inputs: Inputs,
    pub degree: u32,
}

impl FeatureSpec {
    pub fn a_only() -> Self {
        Self {
            inputs: Inputs::A,
            degree: 3,
        }
    }

    pub fn b_only() -> Self {
        Self {
            inputs: Inputs::B,
            degree: 3,
        }
    }

    pub fn joint() -> Self {
        Self {
            inputs: Inputs::Ab,
            degree: 3,
        }
    }

    /// Term order of the expansion, bias first.
    pub fn term_names(&self) -> &'static [&'static str] {
        match self.inputs {
            Inputs::A => &["1", "a", "a2", "a3"],
            Inputs::B => &["1", "b", "b2", "b3"],
            Inputs::Ab => &["1", "a", "b", "a2", "ab", "b2", "a3", "a2b", "ab2", "b3"],
        }
    }

    pub fn dimension(&self) -> usize {
        self.term_names().len()
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.degree != 3 {
            return Err(ModelError::SpecMismatch(format!(
                "only degree-3 expansions are defined, got degree {}",
                self.degree
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error("feature spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("labels are degenerate: need both classes present")]
    DegenerateLabels,
    #[error(
        "optimizer stalled: gradient inf-norm {gradient_inf_norm:e} after {iterations} iterations"
    )]
    ConvergenceFailure {
        iterations: usize,
        gradient_inf_norm: f64,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Unstandardized polynomial features for one observation.
pub fn expand_features(
    a: Option<f64>,
    b: Option<f64>,
    spec: &FeatureSpec,
) -> Result<Vec<f64>, ModelError> {
    spec.validate()?;
    let need = |value: Option<f64>, name: &str| {
        value.ok_or_else(|| ModelError::SpecMismatch(format!("input {name} required by spec")))
    };
    Ok(match spec.inputs {
        Inputs::A => {
            let a = need(a, "a")?;
            vec![1.0, a, a * a, a * a * a]
        }
        Inputs::B => {
            let b = need(b, "b")?;
            vec![1.0, b, b * b, b * b * b]
        }
        Inputs::Ab => {
            let a = need(a, "a")?;
            let b = need(b, "b")?;
            vec![
                1.0,
                a,
                b,
                a * a,
                a * b,
                b * b,
                a * a * a,
                a * a * b,
                a * b * b,
                b * b * b,
            ]
        }
    })
}

/// Per-feature standardization learned on the training set; the bias entry
/// stays untouched (mean 0, scale 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// True when some non-bias feature had zero variance and its scale was
    /// pinned to 1.
    pub singular_scale: bool,
}

impl Standardization {
    /// Learn means and scales from unstandardized feature rows.
    pub fn learn(rows: &[Vec<f64>]) -> Self {
        let k = rows[0].len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; k];
        let mut scales = vec![1.0; k];
        let mut singular_scale = false;
        for j in 1..k {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let variance = rows
                .iter()
                .map(|r| (r[j] - mean) * (r[j] - mean))
                .sum::<f64>()
                / n;
            let sd = variance.sqrt();
            means[j] = mean;
            if sd > 1e-12 * mean.abs().max(1.0) {
                scales[j] = sd;
            } else {
                scales[j] = 1.0;
                singular_scale = true;
            }
        }
        Self {
            means,
            scales,
            singular_scale,
        }
    }

    /// Standardize one feature row in place (bias untouched).
    pub fn apply(&self, features: &mut [f64]) {
        for j in 1..features.len() {
            features[j] = (features[j] - self.means[j]) / self.scales[j];
        }
    }
}

/// Convergence record of one fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub gradient_inf_norm: f64,
    pub iterations: usize,
    /// Penalized loss after every accepted step, starting at the zero
    /// vector. Non-increasing by construction.
    pub loss_trace: Vec<f64>,
}

/// A fitted logistic regression: expansion, standardization, and weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: FeatureSpec,
    pub standardization: Standardization,
    /// Weight vector aligned with [`FeatureSpec::term_names`].
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub diagnostics: FitDiagnostics,
}

impl FittedModel {
    /// Probability of the positive class for one observation.
    pub fn predict_proba(&self, a: Option<f64>, b: Option<f64>) -> Result<f64, ModelError> {
        let mut features = expand_features(a, b, &self.spec)?;
        self.standardization.apply(&mut features);
        let t: f64 = features.iter().zip(&self.weights).map(|(f, w)| f * w).sum();
        Ok(stable_logistic(t))
    }

    /// Predictions for every row of a table carrying the spec's inputs.
    pub fn predict_table(&self, table: &DbTable) -> Result<Vec<f64>, ModelError> {
        let (a_col, b_col) = input_columns(table, &self.spec)?;
        let n = table.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(
                self.predict_proba(a_col.as_ref().map(|c| c[i]), b_col.as_ref().map(|c| c[i]))?,
            );
        }
        Ok(out)
    }
}

fn input_columns(
    table: &DbTable,
    spec: &FeatureSpec,
) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>), ModelError> {
    let want_a = matches!(spec.inputs, Inputs::A | Inputs::Ab);
    let want_b = matches!(spec.inputs, Inputs::B | Inputs::Ab);
    let grab = |name: &str| {
        table.column(name).ok_or_else(|| {
            ModelError::SpecMismatch(format!("table {} lacks column {name}", table.schema.name))
        })
    };
    Ok((
        if want_a { Some(grab("a")?) } else { None },
        if want_b { Some(grab("b")?) } else { None },
    ))
}

/// The penalized training objective on standardized features; exposed so
/// tests can difference the analytic gradient.
pub struct TrainingProblem {
    /// Standardized feature rows, bias first.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub lambda: f64,
}

impl TrainingProblem {
    pub fn dimension(&self) -> usize {
        self.features[0].len()
    }

    fn linear(&self, weights: &[f64], row: usize) -> f64 {
        self.features[row]
            .iter()
            .zip(weights)
            .map(|(f, w)| f * w)
            .sum()
    }

    /// Mean negative log-likelihood plus `(lambda / 2n) * ||w_nonbias||^2`.
    pub fn loss(&self, weights: &[f64]) -> f64 {
        let n = self.labels.len() as f64;
        let mut total = 0.0;
        for i in 0..self.labels.len() {
            let t = self.linear(weights, i);
            // ln(1 + e^t) - y*t, computed without overflow.
            total += t.max(0.0) + (-t.abs()).exp().ln_1p() - self.labels[i] as f64 * t;
        }
        let penalty: f64 = weights[1..].iter().map(|w| w * w).sum();
        total / n + self.lambda * penalty / (2.0 * n)
    }

    pub fn gradient(&self, weights: &[f64]) -> Vec<f64> {
        let k = self.dimension();
        let n = self.labels.len() as f64;
        let mut grad = vec![0.0; k];
        for i in 0..self.labels.len() {
            let residual = stable_logistic(self.linear(weights, i)) - self.labels[i] as f64;
            for (g, f) in grad.iter_mut().zip(&self.features[i]) {
                *g += residual * f;
            }
        }
        for g in grad.iter_mut() {
            *g /= n;
        }
        for j in 1..k {
            grad[j] += self.lambda * weights[j] / n;
        }
        grad
    }

    /// Dense symmetric Hessian, row-major.
    fn hessian(&self, weights: &[f64]) -> Vec<f64> {
        let k = self.dimension();
        let n = self.labels.len() as f64;
        let mut h = vec![0.0; k * k];
        for i in 0..self.labels.len() {
            let p = stable_logistic(self.linear(weights, i));
            let w = p * (1.0 - p);
            let row = &self.features[i];
            for r in 0..k {
                let wr = w * row[r];
                for c in 0..=r {
                    h[r * k + c] += wr * row[c];
                }
            }
        }
        for v in h.iter_mut() {
            *v /= n;
        }
        for j in 1..k {
            h[j * k + j] += self.lambda / n;
        }
        // Mirror the lower triangle.
        for r in 0..k {
            for c in (r + 1)..k {
                h[r * k + c] = h[c * k + r];
            }
        }
        h
    }
}

/// In-place Cholesky solve of `m x = rhs` for a symmetric positive-definite
/// `m`; returns `None` when the decomposition breaks down.
fn cholesky_solve(mut m: Vec<f64>, k: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    for j in 0..k {
        let mut d = m[j * k + j];
        for p in 0..j {
            d -= m[j * k + p] * m[j * k + p];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let root = d.sqrt();
        m[j * k + j] = root;
        for i in (j + 1)..k {
            let mut v = m[i * k + j];
            for p in 0..j {
                v -= m[i * k + p] * m[j * k + p];
            }
            m[i * k + j] = v / root;
        }
    }
    let mut x = rhs.to_vec();
    for i in 0..k {
        for p in 0..i {
            x[i] -= m[i * k + p] * x[p];
        }
        x[i] /= m[i * k + i];
    }
    for i in (0..k).rev() {
        for p in (i + 1)..k {
            x[i] -= m[p * k + i] * x[p];
        }
        x[i] /= m[i * k + i];
    }
    Some(x)
}

/// Fit a model on a table carrying the spec's inputs plus the label column
/// `y`. Requires both classes present; a zero-variance feature is flagged
/// rather than fatal.
pub fn fit(table: &DbTable, spec: &FeatureSpec, lambda: f64) -> Result<FittedModel, ModelError> {
    spec.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ModelError::SpecMismatch(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let label_column = table.column("y").ok_or_else(|| {
        ModelError::SpecMismatch(format!("table {} lacks column y", table.schema.name))
    })?;
    let mut labels = Vec::with_capacity(label_column.len());
    for v in &label_column {
        if *v == 0.0 || *v == 1.0 {
            labels.push(*v as u8);
        } else {
            return Err(ModelError::SpecMismatch(format!("label {v} is not 0 or 1")));
        }
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if labels.len() < 2 || positives == 0 || positives == labels.len() {
        return Err(ModelError::DegenerateLabels);
    }
    let (a_col, b_col) = input_columns(table, spec)?;
    let mut rows = Vec::with_capacity(labels.len());
    for i in 0..labels.len() {
        rows.push(expand_features(
            a_col.as_ref().map(|c| c[i]),
            b_col.as_ref().map(|c| c[i]),
            spec,
        )?);
    }
    let standardization = Standardization::learn(&rows);
    for row in rows.iter_mut() {
        standardization.apply(row);
    }
    let problem = TrainingProblem {
        features: rows,
        labels,
        lambda,
    };
    let (weights, diagnostics) = minimize(&problem)?;
    Ok(FittedModel {
        spec: *spec,
        standardization,
        weights,
        lambda,
        diagnostics,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Newton descent with Armijo backtracking from the zero vector.
fn minimize(problem: &TrainingProblem) -> Result<(Vec<f64>, FitDiagnostics), ModelError> {
    let k = problem.dimension();
    let mut weights = vec![0.0; k];
    let mut loss = problem.loss(&weights);
    let mut trace = vec![loss];
    for iteration in 0..MAX_NEWTON_ITERATIONS {
        let grad = problem.gradient(&weights);
        let grad_norm = inf_norm(&grad);
        if grad_norm <= FIT_GRADIENT_TOLERANCE {
            return Ok((
                weights,
                FitDiagnostics {
                    gradient_inf_norm: grad_norm,
                    iterations: iteration,
                    loss_trace: trace,
                },
            ));
        }
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut direction = cholesky_solve(problem.hessian(&weights), k, &neg_grad)
            .unwrap_or_else(|| neg_grad.clone());
        let mut slope: f64 = grad.iter().zip(&direction).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) {
            direction = neg_grad;
            slope = -grad.iter().map(|g| g * g).sum::<f64>();
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let candidate: Vec<f64> = weights
                .iter()
                .zip(&direction)
                .map(|(w, d)| w + step * d)
                .collect();
            let candidate_loss = problem.loss(&candidate);
            if candidate_loss <= loss + ARMIJO_SLOPE_FRACTION * step * slope {
                weights = candidate;
                loss = candidate_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        trace.push(loss);
        if !accepted {
            return Err(ModelError::ConvergenceFailure {
                iterations: iteration,
                gradient_inf_norm: grad_norm,
            });
        }
    }
    let grad_norm = inf_norm(&problem.gradient(&weights));
    Err(ModelError::ConvergenceFailure {
        iterations: MAX_NEWTON_ITERATIONS,
        gradient_inf_norm: grad_norm,
    })
}

/// A dense probability surface over the control plane, row-major with `a`
/// as the outer (row) axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityGrid {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ProbabilityGrid {
    pub fn probability_at(&self, a_index: usize, b_index: usize) -> f64 {
        self.probabilities[a_index * self.b_values.len() + b_index]
    }

    /// Iterate `(a, b, p)` in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.a_values.iter().enumerate().flat_map(move |(i, &a)| {
            self.b_values
                .iter()
                .enumerate()
                .map(move |(j, &b)| (a, b, self.probability_at(i, j)))
        })
    }

    /// CSV form with `a,b,p` header, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,p\n");
        for (a, b, p) in self.points() {
            out.push_str(&format!("{a},{b},{p}\n"));
        }
        out
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + i as f64 * (hi - lo) / (n - 1) as f64
            }
        })
        .collect()
}

/// Evaluate the model on an evenly spaced grid. Both axes are always swept;
/// single-input models simply ignore the other coordinate.
pub fn probability_grid(
    model: &FittedModel,
    a_range: (f64, f64),
    b_range: (f64, f64),
    resolution: usize,
) -> Result<ProbabilityGrid, ModelError> {
    if resolution < 2 {
        return Err(ModelError::SpecMismatch(format!(
            "grid resolution must be >= 2, got {resolution}"
        )));
    }
    let a_values = linspace(a_range.0, a_range.1, resolution);
    let b_values = linspace(b_range.0, b_range.1, resolution);
    let mut probabilities = Vec::with_capacity(resolution * resolution);
    for &a in &a_values {
        for &b in &b_values {
            probabilities.push(model.predict_proba(Some(a), Some(b))?);
        }
    }
    Ok(ProbabilityGrid {
        a_values,
        b_values,
        probabilities,
    })
}

/// Log-loss, AUC, and accuracy of a model on a labelled table.
pub fn evaluate(model: &FittedModel, table: &DbTable) -> Result<MetricsReport, ModelError> {
    let labels: Vec<u8> = table
        .column("y")
        .ok_or_else(|| {
            ModelError::SpecMismatch(format!("table {} lacks column y", table.schema.name))
        })?
        .iter()
        .map(|&v| v as u8)
        .collect();
    let predictions = model.predict_table(table)?;
    Ok(evaluate_predictions(&predictions, &labels)?)
}
