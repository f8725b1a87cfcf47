//! Shared statistical numerics: the stable logistic link, classification
//! metrics (log-loss, rank-based AUC, accuracy), and the chi-square
//! independence test with its regularized-incomplete-gamma p-value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest value strictly below 1 that the logistic link may return.
const ONE_MINUS_HALF_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// Probabilities are clipped to `[CLIP, 1 - CLIP]` inside the log-loss only.
pub const LOG_LOSS_CLIP: f64 = 1e-12;

/// Number of equal-count bins used by the independence test.
pub const DECILE_BINS: usize = 10;

/// Minimum samples required in every decile bin.
pub const MIN_BIN_COUNT: usize = 10;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StatsError {
    #[error("labels are degenerate: only one class present")]
    DegenerateLabels,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// `1 / (1 + e^-t)` evaluated without overflow for |t| up to ~1e3 and
/// clamped into the open unit interval.
pub fn stable_logistic(t: f64) -> f64 {
    let p = if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, ONE_MINUS_HALF_ULP)
}

/// Evaluation summary for a set of probabilistic binary predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean negative log-likelihood, probabilities clipped at 1e-12.
    pub log_loss: f64,
    /// Rank-based area under the ROC curve, ties averaged.
    pub auc: f64,
    /// Fraction correct when thresholding at 0.5.
    pub accuracy: f64,
    pub n: usize,
    /// True when AUC was undefined (one class only) and reported as 0.5.
    pub auc_degenerate: bool,
}

/// Compute log-loss, AUC, and accuracy for predictions against labels.
pub fn evaluate_predictions(
    probabilities: &[f64],
    labels: &[u8],
) -> Result<MetricsReport, StatsError> {
    if probabilities.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            left: probabilities.len(),
            right: labels.len(),
        });
    }
    if probabilities.is_empty() {
        return Err(StatsError::InsufficientData(
            "no predictions to evaluate".into(),
        ));
    }
    let (auc, auc_degenerate) = match rank_auc(probabilities, labels) {
        Some(auc) => (auc, false),
        None => (0.5, true),
    };
    Ok(MetricsReport {
        log_loss: log_loss(probabilities, labels),
        auc,
        accuracy: accuracy(probabilities, labels),
        n: labels.len(),
        auc_degenerate,
    })
}

/// Mean negative log-likelihood with probabilities clipped at
/// [`LOG_LOSS_CLIP`].
pub fn log_loss(probabilities: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(LOG_LOSS_CLIP, 1.0 - LOG_LOSS_CLIP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / labels.len() as f64
}

/// Fraction of labels matched when predicting 1 for p >= 0.5.
pub fn accuracy(probabilities: &[f64], labels: &[u8]) -> f64 {
    let hits = probabilities
        .iter()
        .zip(labels)
        .filter(|&(&p, &y)| (p >= 0.5) as u8 == y)
        .count();
    hits as f64 / labels.len() as f64
}

/// Mann-Whitney AUC with tied scores assigned their average rank.
/// Returns `None` when only one class is present.
pub fn rank_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let n = scores.len();
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = n - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut rank_sum_positive = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks are 1-based; tied block [start, end) shares the average.
        let average_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            if labels[idx] == 1 {
                rank_sum_positive += average_rank;
            }
        }
        start = end;
    }
    let p = positives as f64;
    let u = rank_sum_positive - p * (p + 1.0) / 2.0;
    Some(u / (p * negatives as f64))
}

/// Result of the chi-square independence test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Chi-square test of a binary label against decile bins of a continuous
/// covariate (9 degrees of freedom). Bins are equal-count by sort order.
pub fn chi_square_independence(
    values: &[f64],
    labels: &[u8],
) -> Result<IndependenceTest, StatsError> {
    if values.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            left: values.len(),
            right: labels.len(),
        });
    }
    let n = values.len();
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == n {
        return Err(StatsError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));

    let mut statistic = 0.0;
    let positive_rate = positives as f64 / n as f64;
    for bin in 0..DECILE_BINS {
        let lo = bin * n / DECILE_BINS;
        let hi = (bin + 1) * n / DECILE_BINS;
        let size = hi - lo;
        if size < MIN_BIN_COUNT {
            return Err(StatsError::InsufficientData(format!(
                "decile bin {bin} holds {size} samples, need at least {MIN_BIN_COUNT}"
            )));
        }
        let observed_pos = order[lo..hi].iter().filter(|&&i| labels[i] == 1).count() as f64;
        let expected_pos = size as f64 * positive_rate;
        let expected_neg = size as f64 * (1.0 - positive_rate);
        let d_pos = observed_pos - expected_pos;
        let d_neg = (size as f64 - observed_pos) - expected_neg;
        statistic += d_pos * d_pos / expected_pos + d_neg * d_neg / expected_neg;
    }
    let degrees_of_freedom = DECILE_BINS - 1;
    Ok(IndependenceTest {
        statistic,
        degrees_of_freedom,
        p_value: gamma_q(degrees_of_freedom as f64 / 2.0, statistic / 2.0),
    })
}

/// Natural log of the gamma function (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut series = 1.000000000190015;
    for (j, &c) in COEFFS.iter().enumerate() {
        series += c / (x + 1.0 + j as f64);
    }
    -tmp + (2.5066282746310005 * series / x).ln()
}

/// Regularized upper incomplete gamma function Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

/// Series expansion of the regularized lower incomplete gamma P(a, x),
/// valid for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-15;
    const MAX_ITER: usize = 500;
    let mut term = 1.0 / a;
    let mut sum = term;
    for k in 1..MAX_ITER {
        term *= x / (a + k as f64);
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified-Lentz continued fraction for the regularized upper incomplete
/// gamma Q(a, x), valid for x >= a + 1.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-15;
    const FPMIN: f64 = 1e-300;
    const MAX_ITER: usize = 500;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}
