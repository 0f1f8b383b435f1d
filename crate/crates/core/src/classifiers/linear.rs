//! Linear SVM and logistic regression trained by full-batch (sub)gradient
//! descent. Both are deterministic: no sampling, fixed iteration order.

use crate::dataset::Label;
use crate::linalg::Matrix;

use super::TrainSet;

/// Hinge labels: Tampered -> +1, Clean -> -1.
fn signed(label: Label) -> f64 {
    match label {
        Label::Tampered => 1.0,
        Label::Clean => -1.0,
    }
}

/// Primal subgradient descent on L2-regularized hinge loss with the
/// 1/(lambda*t) step schedule. The bias is treated as an extra weight on
/// a constant-1 feature and regularized with the rest, which keeps the
/// schedule stable on imbalanced data.
///
/// Margin exactly 1 is treated as satisfied (no subgradient
/// contribution); that is the convention the finite-difference checks
/// rely on at differentiable points.
pub(crate) fn train_svm(ts: &TrainSet, lambda: f64, epochs: usize) -> (Vec<f64>, f64) {
    let n = ts.x.rows();
    let f = ts.x.cols();
    let mut w = vec![0.0; f + 1]; // last entry is the bias
    for t in 1..=epochs {
        let step = 1.0 / (lambda * t as f64);
        let mut grad = vec![0.0; f + 1];
        for (i, g) in grad.iter_mut().enumerate().take(f + 1) {
            *g = lambda * w[i];
        }
        for r in 0..n {
            let row = ts.x.row(r);
            let y = signed(ts.y[r]);
            let margin = y * (dot(&w[..f], row) + w[f]);
            if margin < 1.0 {
                for (g, x) in grad.iter_mut().zip(row) {
                    *g -= y * x / n as f64;
                }
                grad[f] -= y / n as f64;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= step * g;
        }
    }
    let bias = w[f];
    w.truncate(f);
    (w, bias)
}

/// The SVM training objective: lambda/2 * ||[w, b]||^2 + mean hinge loss.
pub fn svm_loss(weights: &[f64], bias: f64, x: &Matrix, y: &[Label], lambda: f64) -> f64 {
    let n = x.rows();
    let reg = 0.5 * lambda * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let hinge: f64 = (0..n)
        .map(|r| {
            let margin = signed(y[r]) * (dot(weights, x.row(r)) + bias);
            (1.0 - margin).max(0.0)
        })
        .sum();
    reg + hinge / n as f64
}

/// Full-batch gradient descent on cross-entropy with L2 on the weights
/// (the bias is not regularized).
pub(crate) fn train_logreg(ts: &TrainSet, learning_rate: f64, epochs: usize, l2: f64) -> (Vec<f64>, f64) {
    let n = ts.x.rows();
    let f = ts.x.cols();
    let mut w = vec![0.0; f];
    let mut b = 0.0;
    let inv_n = 1.0 / n as f64;
    for _ in 0..epochs {
        let mut grad_w = vec![0.0; f];
        let mut grad_b = 0.0;
        for r in 0..n {
            let row = ts.x.row(r);
            let p = sigmoid(dot(&w, row) + b);
            let err = p - ts.y[r].as_u8() as f64;
            for (g, x) in grad_w.iter_mut().zip(row) {
                *g += err * x;
            }
            grad_b += err;
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= learning_rate * (g * inv_n + l2 * *wi);
        }
        b -= learning_rate * grad_b * inv_n;
    }
    (w, b)
}

/// The logistic training objective: mean cross-entropy + l2/2 * ||w||^2.
pub fn logreg_loss(weights: &[f64], bias: f64, x: &Matrix, y: &[Label], l2: f64) -> f64 {
    let n = x.rows();
    let ce: f64 = (0..n)
        .map(|r| {
            let z = dot(weights, x.row(r)) + bias;
            // softplus(z) - y*z, computed overflow-safe
            softplus(z) - y[r].as_u8() as f64 * z
        })
        .sum();
    ce / n as f64 + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
