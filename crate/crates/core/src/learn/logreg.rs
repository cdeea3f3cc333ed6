//! L2-regularized multinomial logistic regression.
//!
//! Minimizes `mean cross-entropy + l2 / (2n) * ||W||²` over standardized
//! features by full-batch gradient descent with a backtracking line search.
//! Intercepts are not penalized.

use serde::{Deserialize, Serialize};

use super::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    pub l2: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            l2: 1.0,
            max_epochs: 500,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    scaler: Standardizer,
    /// `n_classes × n_features`
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    pub epochs: usize,
    pub gradient_norm: f64,
}

/// Numerically stable softmax in place.
pub fn softmax(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    k: usize,
    d: usize,
    l2: f64,
}

impl Problem<'_> {
    /// Parameters are laid out as `k` rows of `d` weights followed by `k` biases.
    fn logits(&self, params: &[f64], row: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &params[c * self.d..(c + 1) * self.d];
            *o = params[self.k * self.d + c] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    fn loss(&self, params: &[f64]) -> f64 {
        let n = self.x.len() as f64;
        let mut z = vec![0.0; self.k];
        let mut total = 0.0;
        for (row, &y) in self.x.iter().zip(self.y) {
            self.logits(params, row, &mut z);
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            total += lse - z[y];
        }
        let reg: f64 = params[..self.k * self.d].iter().map(|w| w * w).sum();
        total / n + self.l2 / (2.0 * n) * reg
    }

    fn gradient(&self, params: &[f64], grad: &mut [f64]) {
        let n = self.x.len() as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut p = vec![0.0; self.k];
        for (row, &y) in self.x.iter().zip(self.y) {
            self.logits(params, row, &mut p);
            softmax(&mut p);
            for c in 0..self.k {
                let err = p[c] - f64::from(u8::from(c == y));
                let g = &mut grad[c * self.d..(c + 1) * self.d];
                for (gj, xj) in g.iter_mut().zip(row) {
                    *gj += err * xj;
                }
                grad[self.k * self.d + c] += err;
            }
        }
        for (i, g) in grad.iter_mut().enumerate() {
            *g /= n;
            if i < self.k * self.d {
                *g += self.l2 / n * params[i];
            }
        }
    }
}

impl LogisticRegression {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        params: &LogRegParams,
    ) -> Self {
        let scaler = Standardizer::fit(rows);
        let x = scaler.transform_all(rows);
        let d = scaler.width();
        let problem = Problem {
            x: &x,
            y: labels,
            k: n_classes,
            d,
            l2: params.l2,
        };

        let dim = n_classes * (d + 1);
        let mut w = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        let mut candidate = vec![0.0; dim];
        let mut loss = problem.loss(&w);
        let mut step = 1.0;
        let mut epochs = 0;
        let mut gnorm = f64::INFINITY;
        while epochs < params.max_epochs {
            problem.gradient(&w, &mut grad);
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            gnorm = g2.sqrt();
            if gnorm <= params.tolerance {
                break;
            }
            epochs += 1;
            step *= 2.0;
            loop {
                for ((c, wi), gi) in candidate.iter_mut().zip(&w).zip(&grad) {
                    *c = wi - step * gi;
                }
                let next = problem.loss(&candidate);
                if next <= loss - 0.5 * step * g2 || step < 1e-12 {
                    loss = next;
                    break;
                }
                step *= 0.5;
            }
            std::mem::swap(&mut w, &mut candidate);
        }

        let weights = (0..n_classes)
            .map(|c| w[c * d..(c + 1) * d].to_vec())
            .collect();
        let bias = w[n_classes * d..].to_vec();
        LogisticRegression {
            scaler,
            weights,
            bias,
            epochs,
            gradient_norm: gnorm,
        }
    }

    pub fn n_features(&self) -> usize {
        self.scaler.width()
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn probabilities(&self, row: &[f64]) -> Vec<f64> {
        let x = self.scaler.transform(row);
        let mut z: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>())
            .collect();
        softmax(&mut z);
        z
    }
}
