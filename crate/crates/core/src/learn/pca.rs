//! Principal component analysis over standardized columns.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    /// Input columns that were not constant, in input order.
    pub kept_columns: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// One unit vector per component, each of length `kept_columns.len()`.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the kept components, descending.
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    pub input_width: usize,
}

fn is_constant(std: f64, mean: f64) -> bool {
    std <= 1e-12 * (1.0 + mean.abs())
}

impl Pca {
    /// Fits on `rows` and keeps the fewest leading components whose variance
    /// reaches `variance_kept` of the total.
    pub fn fit(rows: &[Vec<f64>], variance_kept: f64) -> Result<Self> {
        if !(variance_kept > 0.0 && variance_kept <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "variance to keep must be in (0, 1], got {variance_kept}"
            )));
        }
        let n = rows.len();
        if n < 2 {
            return Err(Error::Degenerate("PCA needs at least two rows".into()));
        }
        let width = rows[0].len();
        let nf = n as f64;

        let mut kept_columns = Vec::new();
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for j in 0..width {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / nf;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nf;
            let std = var.sqrt();
            if !is_constant(std, mean) {
                kept_columns.push(j);
                means.push(mean);
                stds.push(std);
            }
        }
        if kept_columns.is_empty() {
            return Err(Error::Degenerate("every column is constant".into()));
        }

        let d = kept_columns.len();
        let z = DMatrix::from_fn(n, d, |i, k| (rows[i][kept_columns[k]] - means[k]) / stds[k]);
        let cov = (z.transpose() * &z) / nf;
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = values.iter().sum();

        let target = variance_kept * total * (1.0 - 1e-12);
        let mut keep = 0;
        let mut acc = 0.0;
        while keep < d && acc < target {
            acc += values[keep];
            keep += 1;
        }
        let keep = keep.max(1);

        let components = order[..keep]
            .iter()
            .map(|&i| {
                let v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                orient(v)
            })
            .collect();
        Ok(Pca {
            kept_columns,
            means,
            stds,
            components,
            explained_variance: values[..keep].to_vec(),
            total_variance: total,
            input_width: width,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn explained_ratio(&self) -> f64 {
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }

    pub fn standardize(&self, row: &[f64]) -> Vec<f64> {
        self.kept_columns
            .iter()
            .enumerate()
            .map(|(k, &j)| (row[j] - self.means[k]) / self.stds[k])
            .collect()
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_width {
            return Err(Error::WidthMismatch {
                expected: self.input_width,
                got: row.len(),
            });
        }
        let z = self.standardize(row);
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Maps projected coordinates back to standardized input space.
    pub fn reconstruct_standardized(&self, projected: &[f64]) -> Vec<f64> {
        let d = self.kept_columns.len();
        let mut out = vec![0.0; d];
        for (score, comp) in projected.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += score * c;
            }
        }
        out
    }
}

/// Flips a vector so its largest-magnitude entry is positive, making the
/// output independent of the solver's sign choice.
fn orient(mut v: Vec<f64>) -> Vec<f64> {
    let pivot = v.iter().copied().fold(
        0.0f64,
        |best, x| if x.abs() > best.abs() { x } else { best },
    );
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_in_three_dimensions() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.3 - 2.0;
                vec![t, 2.0 * t + 1.0, -t]
            })
            .collect();
        let p = Pca::fit(&rows, 0.95).unwrap();
        assert_eq!(p.n_components(), 1);
        assert!(p.explained_ratio() >= 0.999);
    }

    #[test]
    fn keeps_everything_at_one() {
        let rows = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let p = Pca::fit(&rows, 1.0).unwrap();
        assert_eq!(p.n_components(), 2);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let rows = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let p = Pca::fit(&rows, 1.0).unwrap();
        assert_eq!(p.kept_columns, [0]);
        assert!(Pca::fit(&[vec![1.0], vec![1.0]], 0.9).is_err());
        assert!(Pca::fit(&rows, 0.0).is_err());
        assert!(Pca::fit(&rows[..1], 0.5).is_err());
    }
}
