//! L2-regularized logistic regression fit by damped Newton iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{logistic_loss, sigmoid, Margin};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Margin for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Penalty `l2/2 · |w|²` added to the mean loss; the intercept is free.
    pub l2: f64,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { l2: 1e-4, tol: 1e-8, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticReport {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

fn objective(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, l2: f64) -> f64 {
    let k = x.nrows();
    let n = x.ncols();
    let mut loss = 0.0;
    for i in 0..n {
        let m = beta[k] + (0..k).map(|f| beta[f] * x[(f, i)]).sum::<f64>();
        loss += logistic_loss(y[i], m);
    }
    loss / n as f64 + 0.5 * l2 * beta.rows(0, k).norm_squared()
}

/// `x` is `n_features × n_samples`.
pub fn train_logistic(x: &DMatrix<f64>, labels: &[u8], params: &LogisticParams) -> (LogisticModel, LogisticReport) {
    let (k, n) = x.shape();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    // parameters: weights then intercept
    let mut beta = DVector::<f64>::zeros(k + 1);
    let mut report = LogisticReport { iterations: 0, gradient_norm: f64::INFINITY, converged: false };
    let inv_n = 1.0 / n as f64;
    let mut current = objective(x, &y, &beta, params.l2);
    for it in 0..=params.max_iter {
        let mut grad = DVector::<f64>::zeros(k + 1);
        let mut hess = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut row = DVector::<f64>::zeros(k + 1);
        for i in 0..n {
            for f in 0..k {
                row[f] = x[(f, i)];
            }
            row[k] = 1.0;
            let p = sigmoid(row.dot(&beta));
            grad.axpy((p - y[i]) * inv_n, &row, 1.0);
            hess.ger(p * (1.0 - p) * inv_n, &row, &row, 1.0);
        }
        for f in 0..k {
            grad[f] += params.l2 * beta[f];
            hess[(f, f)] += params.l2;
        }
        hess[(k, k)] += 1e-12;
        report.gradient_norm = grad.norm();
        report.iterations = it;
        if report.gradient_norm < params.tol {
            report.converged = true;
            break;
        }
        if it == params.max_iter {
            break;
        }
        let dir = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let mut t = 1.0;
        let slope = grad.dot(&dir);
        loop {
            let cand = &beta - &dir * t;
            let val = objective(x, &y, &cand, params.l2);
            if val <= current - 1e-4 * t * slope || t < 1e-10 {
                beta = cand;
                current = val;
                break;
            }
            t *= 0.5;
        }
    }
    (
        LogisticModel { weights: beta.rows(0, k).iter().copied().collect(), intercept: beta[k] },
        report,
    )
}
