//! Binary linear SVM trained with Pegasos (stochastic sub-gradient descent on
//! the regularized hinge loss).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    scaler: Standardizer,
    /// Weights over standardized features; the intercept is the last entry and
    /// is regularized like the rest (constant feature of value 1).
    weights: Vec<f64>,
}

impl LinearSvm {
    /// `labels` must be 0/1; class 1 is the positive side of the margin.
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], params: &SvmParams, seed: u64) -> Self {
        let scaler = Standardizer::fit(rows);
        let x: Vec<Vec<f64>> = scaler
            .transform_all(rows)
            .into_iter()
            .map(|mut r| {
                r.push(1.0);
                r
            })
            .collect();
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { -1.0 })
            .collect();
        let dim = scaler.width() + 1;
        let lambda = params.lambda;
        let radius = 1.0 / lambda.sqrt();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut w = vec![0.0; dim];
        let mut t = 0u64;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = y[i] * dot(&w, &x[i]);
                let shrink = 1.0 - eta * lambda;
                for wj in w.iter_mut() {
                    *wj *= shrink;
                }
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(&x[i]) {
                        *wj += eta * y[i] * xj;
                    }
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|wj| *wj *= s);
                }
            }
        }
        LinearSvm { scaler, weights: w }
    }

    pub fn n_features(&self) -> usize {
        self.scaler.width()
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        let x = self.scaler.transform(row);
        let d = x.len();
        dot(&self.weights[..d], &x) + self.weights[d]
    }

    /// `[1 - σ(m), σ(m)]` for margin `m`.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let p = 1.0 / (1.0 + (-self.margin(row)).exp());
        vec![1.0 - p, p]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_clusters() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let j = (i % 5) as f64 * 0.1;
            rows.push(vec![1.0 + j, 2.0 - j]);
            labels.push(1);
            rows.push(vec![-1.0 - j, -2.0 + j]);
            labels.push(0);
        }
        let m = LinearSvm::fit(&rows, &labels, &SvmParams::default(), 4);
        for (r, &y) in rows.iter().zip(&labels) {
            assert_eq!(usize::from(m.margin(r) > 0.0), y);
        }
        let s = m.scores(&rows[0]);
        assert!((s[0] + s[1] - 1.0).abs() < 1e-12);
    }
}
