//! High-frequency decay features and the detectors built on them.

mod evaluate;
mod fit;
mod knn;
mod mlp;
mod standardize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::spectrum::ReducedSpectrum;
use crate::{Error, Result};

pub use crate::dataset::Label;
pub use evaluate::{evaluate, ClassifierSpec, DetectionReport, Protocol, TrainedClassifier};
pub use fit::{fit_decay, fit_power_law, DecayFeatures, HIGH_BAND_FRACTION, ZERO_CLAMP};
pub use knn::{knn_train, KnnModel, DEFAULT_K};
pub use mlp::{mlp_train, Dense, MlpHyper, MlpModel, HIDDEN};
pub use standardize::Standardizer;

/// One labelled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub id: String,
    pub label: Label,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    /// `[b1, b2, b3]` from the high-band power-law fit.
    #[serde(rename = "decay3")]
    Decay3,
    /// The raw reduced spectrum without its DC bin.
    #[serde(rename = "fullspec")]
    FullSpectrum,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Decay3 => "decay3",
            FeatureMode::FullSpectrum => "fullspec",
        }
    }

    /// Guesses the mode from a feature-vector length. Full spectra always
    /// have at least 4 entries, so length 3 is unambiguous.
    pub fn from_dim(dim: usize) -> Self {
        if dim == 3 {
            FeatureMode::Decay3
        } else {
            FeatureMode::FullSpectrum
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decay3" => Ok(FeatureMode::Decay3),
            "fullspec" => Ok(FeatureMode::FullSpectrum),
            _ => Err(Error::Validation(format!(
                "mode must be decay3 or fullspec, got {s:?}"
            ))),
        }
    }
}

/// Feature vector of an un-normalized reduced spectrum.
pub fn extract_features(rs: &ReducedSpectrum, mode: FeatureMode) -> Result<Vec<f64>> {
    match mode {
        FeatureMode::Decay3 => Ok(fit_decay(rs)?.to_vec()),
        FeatureMode::FullSpectrum => Ok(rs.values()[1..].to_vec()),
    }
}

// Shared training preconditions: non-empty, uniform finite vectors, both
// labels present. Returns the feature dimension.
pub(crate) fn check_training_rows(rows: &[FeatureRow]) -> Result<usize> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InsufficientData("no training rows".into()))?;
    let dim = first.features.len();
    if dim == 0 {
        return Err(Error::Validation("feature vectors are empty".into()));
    }
    for r in rows {
        if r.features.len() != dim {
            return Err(Error::Validation(format!(
                "row {:?} has {} features, expected {dim}",
                r.id,
                r.features.len()
            )));
        }
        if r.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "row {:?} has non-finite features",
                r.id
            )));
        }
    }
    let fakes = rows.iter().filter(|r| r.label == Label::Fake).count();
    if fakes == 0 || fakes == rows.len() {
        return Err(Error::InsufficientData(
            "training data must contain both real and fake rows".into(),
        ));
    }
    Ok(dim)
}
