use serde::{Deserialize, Serialize};

use super::{check_training_rows, FeatureRow, Label, Standardizer};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 5;

/// Binary k-nearest-neighbour classifier with Euclidean distance.
///
/// Training points are stored already transformed by `scaler`. Equal
/// distances are resolved in favour of the lower training index, and `k`
/// must be odd so the binary vote never ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub scaler: Standardizer,
    pub labels: Vec<Label>,
    pub points: Vec<Vec<f64>>,
}

/// Trains on `rows`; `standardize = false` keeps raw features.
pub fn knn_train(rows: &[FeatureRow], k: usize, standardize: bool) -> Result<KnnModel> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::Validation(format!(
            "k must be a positive odd number, got {k}"
        )));
    }
    let dim = check_training_rows(rows)?;
    if rows.len() < k {
        return Err(Error::InsufficientData(format!(
            "k = {k} needs at least {k} training rows, got {}",
            rows.len()
        )));
    }
    let scaler = if standardize {
        Standardizer::fit(dim, rows.iter().map(|r| r.features.as_slice()))
    } else {
        Standardizer::identity(dim)
    };
    Ok(KnnModel {
        k,
        labels: rows.iter().map(|r| r.label).collect(),
        points: rows.iter().map(|r| scaler.transform(&r.features)).collect(),
        scaler,
    })
}

impl KnnModel {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbours(&self, features: &[f64]) -> Result<Vec<usize>> {
        if features.len() != self.scaler.input_dim() {
            return Err(Error::Validation(format!(
                "expected {} features, got {}",
                self.scaler.input_dim(),
                features.len()
            )));
        }
        let q = self.scaler.transform(features);
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(dist.into_iter().take(self.k).map(|(_, i)| i).collect())
    }

    pub fn predict(&self, features: &[f64]) -> Result<Label> {
        let fakes = self
            .neighbours(features)?
            .into_iter()
            .filter(|&i| self.labels[i] == Label::Fake)
            .count();
        Ok(if 2 * fakes > self.k {
            Label::Fake
        } else {
            Label::Real
        })
    }
}
