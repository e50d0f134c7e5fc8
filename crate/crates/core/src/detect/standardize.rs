use serde::{Deserialize, Serialize};

/// Per-dimension z-scoring fitted on training data. Dimensions with zero
/// spread are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub keep: Vec<usize>,
}

impl Standardizer {
    pub fn fit<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        let keep = (0..dim)
            .filter(|&i| std[i] > 0.0 && std[i].is_finite())
            .collect();
        Self { mean, std, keep }
    }

    /// Identity transform over `dim` dimensions.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            keep: (0..dim).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.keep.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.keep
            .iter()
            .map(|&i| (x[i] - self.mean[i]) / self.std[i])
            .collect()
    }
}
