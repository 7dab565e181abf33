//! Binary C-SVM on precomputed kernels, balanced-accuracy scoring, and the
//! performant / underperforming labeling rule.
//!
//! Training solves the standard dual
//! `max sum a_i - 1/2 sum_ij a_i a_j y_i y_j G_ij` subject to `0 <= a_i <= C`
//! and `sum a_i y_i = 0` with sequential minimal optimization. The working
//! pair is always the maximal violating pair, with ties broken by lowest
//! index, so training is deterministic.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    pub bias: f64,
    pub support: Vec<usize>,
    pub c: f64,
    pub dual_objective: f64,
    /// KKT gap `m(alpha) - M(alpha)` at the last iteration.
    pub kkt_gap: f64,
    pub converged: bool,
}

impl SvmModel {
    /// Text dump for audit: alphas, labels, bias and support indices.
    pub fn dump(&self) -> String {
        let alphas: Vec<String> = self.alpha.iter().map(|a| a.to_string()).collect();
        let labels: Vec<String> = self.y.iter().map(|y| (*y as i32).to_string()).collect();
        let support: Vec<String> = self.support.iter().map(|s| s.to_string()).collect();
        format!(
            "alpha {}\ny {}\nbias {}\nsupport {}\n",
            alphas.join(","),
            labels.join(","),
            self.bias,
            support.join(",")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerformanceLabel {
    Performant,
    Underperforming,
    Discarded,
}

impl PerformanceLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PerformanceLabel::Performant => "performant",
            PerformanceLabel::Underperforming => "underperforming",
            PerformanceLabel::Discarded => "discarded",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "performant" => Ok(PerformanceLabel::Performant),
            "underperforming" => Ok(PerformanceLabel::Underperforming),
            "discarded" => Ok(PerformanceLabel::Discarded),
            _ => Err(Error::Parse(format!("unknown performance label {token:?}"))),
        }
    }
}

/// How the labeling margin is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginMode {
    /// Margin in absolute accuracy units (0.10 means ten points).
    Absolute,
    /// Margin as a fraction of the max-min accuracy range.
    RelativeToRange,
}

const MAX_SMO_ITERATIONS: usize = 200_000;
const TAU: f64 = 1e-12;

fn validate_labels(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::InvalidArgument(
            "labels must be exactly +1 or -1".into(),
        ));
    }
    let pos = y.iter().filter(|v| **v > 0.0).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Degenerate("training labels are single-class".into()));
    }
    Ok(())
}

/// Train a C-SVM on a precomputed kernel matrix.
pub fn train_svm(gram: &[Vec<f64>], y: &[f64], c: f64, tol: f64) -> Result<SvmModel> {
    let n = y.len();
    if gram.len() != n || gram.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "gram must be {n}x{n} to match {n} labels"
        )));
    }
    validate_labels(y)?;
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    let q = |i: usize, j: usize| y[i] * y[j] * gram[i][j];
    let mut alpha = vec![0.0f64; n];
    // grad_i = d/d alpha_i of (1/2 a^T Q a - e^T a) = (Q a)_i - 1.
    let mut grad = vec![-1.0f64; n];
    let mut converged = false;
    let mut gap = f64::INFINITY;

    for _ in 0..MAX_SMO_ITERATIONS {
        // Maximal violating pair over u_t = -y_t * grad_t.
        let mut i_up: Option<(usize, f64)> = None;
        let mut i_low: Option<(usize, f64)> = None;
        for t in 0..n {
            let u = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && i_up.map_or(true, |(_, best)| u > best) {
                i_up = Some((t, u));
            }
            if in_low && i_low.map_or(true, |(_, best)| u < best) {
                i_low = Some((t, u));
            }
        }
        let ((i, m), (j, m_low)) = match (i_up, i_low) {
            (Some(a), Some(b)) => (a, b),
            _ => break,
        };
        gap = m - m_low;
        if gap <= tol {
            converged = true;
            break;
        }

        // Two-variable update along alpha_i += y_i d, alpha_j -= y_j d.
        let hessian = q(i, i) + q(j, j) - 2.0 * y[i] * y[j] * q(i, j);
        let mut d = gap / hessian.max(TAU);
        let room_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let room_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        d = d.min(room_i).min(room_j);
        if d <= 0.0 {
            converged = true;
            break;
        }
        let delta_i = y[i] * d;
        let delta_j = -y[j] * d;
        alpha[i] += delta_i;
        alpha[j] += delta_j;
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * delta_i + q(t, j) * delta_j;
        }
    }

    // Bias from free support vectors, else the midpoint of the KKT bracket.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let u = -y[t] * grad[t];
        if alpha[t] > TAU && alpha[t] < c - TAU {
            free_sum += u;
            free_count += 1;
        }
        let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if in_up {
            m_up = m_up.max(u);
        }
        if in_low {
            m_low = m_low.min(u);
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (m_up + m_low) / 2.0
    };

    let mut objective = 0.0;
    for t in 0..n {
        // W = e^T a - 1/2 a^T Q a; grad = Q a - e, so a^T Q a = a . (grad + e).
        objective += alpha[t] - 0.5 * alpha[t] * (grad[t] + 1.0);
    }
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > TAU).collect();

    Ok(SvmModel {
        alpha,
        y: y.to_vec(),
        bias,
        support,
        c,
        dual_objective: objective,
        kkt_gap: gap.max(0.0),
        converged,
    })
}

/// Decision values for rows of a test-by-train kernel matrix.
pub fn decision_values(model: &SvmModel, cross_gram: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = model.alpha.len();
    if cross_gram.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "cross kernel rows must have {n} columns"
        )));
    }
    Ok(cross_gram
        .iter()
        .map(|row| {
            model
                .alpha
                .iter()
                .zip(&model.y)
                .zip(row)
                .map(|((a, y), k)| a * y * k)
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

/// Predicted labels; a decision value of exactly zero resolves to +1.
pub fn predict(model: &SvmModel, cross_gram: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(decision_values(model, cross_gram)?
        .into_iter()
        .map(|v| if v >= 0.0 { 1.0 } else { -1.0 })
        .collect())
}

/// Balanced average of the true positive and true negative rates.
pub fn balanced_accuracy(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} truths",
            predicted.len(),
            actual.len()
        )));
    }
    let mut pos_total = 0usize;
    let mut pos_hit = 0usize;
    let mut neg_total = 0usize;
    let mut neg_hit = 0usize;
    for (p, a) in predicted.iter().zip(actual) {
        if *a > 0.0 {
            pos_total += 1;
            if *p > 0.0 {
                pos_hit += 1;
            }
        } else {
            neg_total += 1;
            if *p <= 0.0 {
                neg_hit += 1;
            }
        }
    }
    if pos_total == 0 || neg_total == 0 {
        return Err(Error::Degenerate(
            "both classes must appear in the reference labels".into(),
        ));
    }
    let tpr = pos_hit as f64 / pos_total as f64;
    let tnr = neg_hit as f64 / neg_total as f64;
    Ok((tpr + tnr) / 2.0)
}

/// Label each accuracy against the boundary `(max + min) / 2`: performant
/// above `boundary + margin`, underperforming below `boundary - margin`,
/// discarded inside the band.
pub fn label_performance(
    accuracies: &[f64],
    margin: f64,
    mode: MarginMode,
) -> Result<Vec<PerformanceLabel>> {
    if accuracies.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot label an empty accuracy list".into(),
        ));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "margin must be nonnegative, got {margin}"
        )));
    }
    let max = accuracies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = accuracies.iter().cloned().fold(f64::INFINITY, f64::min);
    let boundary = (max + min) / 2.0;
    let half_band = match mode {
        MarginMode::Absolute => margin,
        MarginMode::RelativeToRange => margin * (max - min),
    };
    Ok(accuracies
        .iter()
        .map(|&acc| {
            if acc > boundary + half_band {
                PerformanceLabel::Performant
            } else if acc < boundary - half_band {
                PerformanceLabel::Underperforming
            } else {
                PerformanceLabel::Discarded
            }
        })
        .collect())
}
