//! L2-penalized logistic regression fitted by iteratively reweighted least
//! squares (Newton's method with step-halving).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Ridge penalty on the slopes. The intercept is not penalized.
    pub l2: f64,
    pub max_iter: usize,
    /// Convergence threshold on the largest absolute component of the
    /// per-row average score (the summed score carries rounding noise that
    /// grows with the row count).
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
}

/// Fitted logistic model; `weights[0]` is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryPredictor {
    pub weights: Vec<f64>,
    pub fit_meta: FitMeta,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl BinaryPredictor {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.weights[0]
            + self.weights[1..]
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }

    /// Unclipped probability of the positive class.
    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }
}

fn objective(features: &[&[f64]], labels: &[u8], beta: &[f64], l2: f64) -> f64 {
    let nll: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let eta = beta[0] + beta[1..].iter().zip(*x).map(|(b, v)| b * v).sum::<f64>();
            softplus(eta) - f64::from(y) * eta
        })
        .sum();
    nll + 0.5 * l2 * beta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Fit by IRLS. Stops when the average score is below `tol` or the Newton
/// decrement falls below the objective's rounding noise. `converged` is
/// false when `max_iter` is exhausted or no step-halving reduces the
/// objective.
pub fn fit_logistic(
    features: &[&[f64]],
    labels: &[u8],
    config: &LogisticConfig,
) -> Result<BinaryPredictor> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(AuditError::Config(format!(
            "logistic fit needs matching non-empty features/labels ({} vs {})",
            features.len(),
            labels.len()
        )));
    }
    if !(config.l2 > 0.0) {
        return Err(AuditError::Config("l2 penalty must be positive".into()));
    }
    let p = features[0].len() + 1;
    if features.iter().any(|x| x.len() + 1 != p) {
        return Err(AuditError::Config("ragged feature matrix".into()));
    }

    let n = features.len() as f64;
    let mut beta = vec![0.0; p];
    let mut obj = objective(features, labels, &beta, config.l2);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        let mut grad = DVector::<f64>::zeros(p);
        let mut hess = DMatrix::<f64>::zeros(p, p);
        for (x, &y) in features.iter().zip(labels) {
            let eta = beta[0] + beta[1..].iter().zip(*x).map(|(b, v)| b * v).sum::<f64>();
            let mu = sigmoid(eta);
            let w = mu * (1.0 - mu);
            let r = mu - f64::from(y);
            grad[0] += r;
            hess[(0, 0)] += w;
            for j in 1..p {
                let xj = x[j - 1];
                grad[j] += r * xj;
                hess[(j, 0)] += w * xj;
                for l in 1..=j {
                    hess[(j, l)] += w * xj * x[l - 1];
                }
            }
        }
        for j in 1..p {
            grad[j] += config.l2 * beta[j];
            hess[(j, j)] += config.l2;
            for l in 0..j {
                hess[(l, j)] = hess[(j, l)];
            }
        }
        if grad.amax() <= config.tol * n {
            converged = true;
            break;
        }
        let step = hess
            .cholesky()
            .ok_or(AuditError::DegenerateDesign)?
            .solve(&grad);
        if step.iter().any(|v| !v.is_finite()) {
            return Err(AuditError::DegenerateDesign);
        }
        // Newton decrement below the objective's rounding noise: no step can
        // make measurable progress.
        if grad.dot(&step) <= 1e-12 * (1.0 + obj.abs()) {
            converged = true;
            break;
        }

        iterations += 1;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b - scale * s).collect();
            let cand_obj = objective(features, labels, &candidate, config.l2);
            if cand_obj <= obj {
                beta = candidate;
                obj = cand_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    Ok(BinaryPredictor {
        weights: beta,
        fit_meta: FitMeta {
            iterations,
            objective: obj,
            converged,
        },
    })
}
