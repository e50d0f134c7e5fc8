use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{knn_train, mlp_train, FeatureMode, FeatureRow, KnnModel, Label, MlpHyper, MlpModel};
use crate::dataset::split_indices;
use crate::{Error, Result};

/// Which detector to train, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Knn {
        k: usize,
        standardize: bool,
    },
    /// `hyper.seed` is ignored by [`evaluate`], which seeds every run itself.
    Mlp {
        hyper: MlpHyper,
    },
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::Mlp { .. } => "mlp",
        }
    }

    pub fn train(&self, rows: &[FeatureRow], seed: u64) -> Result<TrainedClassifier> {
        match *self {
            ClassifierSpec::Knn { k, standardize } => {
                Ok(TrainedClassifier::Knn(knn_train(rows, k, standardize)?))
            }
            ClassifierSpec::Mlp { hyper } => {
                let hyper = MlpHyper { seed, ..hyper };
                Ok(TrainedClassifier::Mlp(mlp_train(rows, &hyper)?.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedClassifier {
    Knn(KnnModel),
    Mlp(MlpModel),
}

impl TrainedClassifier {
    pub fn predict(&self, features: &[f64]) -> Result<Label> {
        match self {
            TrainedClassifier::Knn(m) => m.predict(features),
            TrainedClassifier::Mlp(m) => m.predict(features),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub train_fraction: f64,
    pub n_runs: usize,
    pub seed_base: u64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            train_fraction: 0.10,
            n_runs: 10,
            seed_base: 0,
        }
    }
}

/// Detection rates of one target setup over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub setup: String,
    pub mode: FeatureMode,
    pub train_fraction: f64,
    pub n_runs: usize,
    pub seed_base: u64,
    pub rates: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub classifier: ClassifierSpec,
}

impl DetectionReport {
    /// `setup  mean±std%` with two decimals.
    pub fn summary(&self) -> String {
        format!(
            "{}\t{:.2}±{:.2}%",
            self.setup,
            100.0 * self.mean,
            100.0 * self.std
        )
    }
}

const MIN_ROWS: usize = 10;

/// Trains on reals vs. `train_setup` fakes and measures how many fakes of each
/// target setup are flagged.
///
/// Run `r` uses seed `seed_base + r` to draw `train_fraction` of the reals and
/// of the training fakes. A target equal to `train_setup` is tested on the
/// held-out training fakes; any other target is tested on all of its rows.
pub fn evaluate(
    spec: &ClassifierSpec,
    real: &[FeatureRow],
    fakes_by_setup: &BTreeMap<String, Vec<FeatureRow>>,
    train_setup: &str,
    targets: &[&str],
    protocol: &Protocol,
) -> Result<Vec<DetectionReport>> {
    if protocol.n_runs == 0 {
        return Err(Error::Validation("need at least one run".into()));
    }
    let train_fake = fakes_by_setup
        .get(train_setup)
        .ok_or_else(|| Error::UnknownSetup(train_setup.to_string()))?;
    let target_rows = targets
        .iter()
        .map(|t| {
            fakes_by_setup
                .get(*t)
                .map(Vec::as_slice)
                .ok_or_else(|| Error::UnknownSetup(t.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;

    if real.len() < MIN_ROWS || train_fake.len() < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_ROWS} rows per class, got {} real and {} fake",
            real.len(),
            train_fake.len()
        )));
    }
    if let Some(r) = real.iter().find(|r| r.label != Label::Real) {
        return Err(Error::Validation(format!(
            "real set contains fake row {:?}",
            r.id
        )));
    }
    for (name, rows) in fakes_by_setup {
        if rows.iter().any(|r| r.label != Label::Fake) {
            return Err(Error::Validation(format!(
                "setup {name:?} contains real rows"
            )));
        }
    }
    for (t, rows) in targets.iter().zip(&target_rows) {
        if rows.is_empty() {
            return Err(Error::InsufficientData(format!("setup {t:?} has no rows")));
        }
    }
    let dim = real[0].features.len();
    let mode = FeatureMode::from_dim(dim);

    let per_run: Vec<Vec<f64>> = (0..protocol.n_runs)
        .into_par_iter()
        .map(|run| -> Result<Vec<f64>> {
            let seed = protocol.seed_base.wrapping_add(run as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (real_train, _real_test) =
                split_indices(real.len(), protocol.train_fraction, &mut rng)?;
            let (fake_train, fake_test) =
                split_indices(train_fake.len(), protocol.train_fraction, &mut rng)?;

            let train: Vec<FeatureRow> = real_train
                .iter()
                .map(|&i| real[i].clone())
                .chain(fake_train.iter().map(|&i| train_fake[i].clone()))
                .collect();
            let model = spec.train(&train, seed)?;

            targets
                .iter()
                .zip(&target_rows)
                .map(|(name, rows)| {
                    let test: Vec<&FeatureRow> = if *name == train_setup {
                        fake_test.iter().map(|&i| &rows[i]).collect()
                    } else {
                        rows.iter().collect()
                    };
                    let mut flagged = 0usize;
                    for row in &test {
                        if model.predict(&row.features)? == Label::Fake {
                            flagged += 1;
                        }
                    }
                    Ok(flagged as f64 / test.len() as f64)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(targets
        .iter()
        .enumerate()
        .map(|(t, name)| {
            let rates: Vec<f64> = per_run.iter().map(|r| r[t]).collect();
            let n = rates.len() as f64;
            let mean = rates.iter().sum::<f64>() / n;
            let std = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
            DetectionReport {
                setup: name.to_string(),
                mode,
                train_fraction: protocol.train_fraction,
                n_runs: protocol.n_runs,
                seed_base: protocol.seed_base,
                rates,
                mean,
                std,
                classifier: *spec,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rows(n: usize, label: Label, center: f64, seed: u64) -> Vec<FeatureRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| FeatureRow {
                id: format!("{label}{i}"),
                label,
                features: vec![
                    center + rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    center + rng.random_range(-1.0..1.0),
                ],
            })
            .collect()
    }

    fn fixture() -> (Vec<FeatureRow>, BTreeMap<String, Vec<FeatureRow>>) {
        let real = rows(100, Label::Real, 0.0, 1);
        let mut fakes = BTreeMap::new();
        fakes.insert("far".to_string(), rows(100, Label::Fake, 5.0, 2));
        fakes.insert("close".to_string(), rows(100, Label::Fake, 0.0, 3));
        (real, fakes)
    }

    const KNN: ClassifierSpec = ClassifierSpec::Knn {
        k: 5,
        standardize: true,
    };

    #[test]
    fn separable_target_is_detected_and_real_like_target_is_not() {
        let (real, fakes) = fixture();
        let reports = evaluate(
            &KNN,
            &real,
            &fakes,
            "far",
            &["far", "close"],
            &Protocol::default(),
        )
        .unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].n_runs, 10);
        assert_eq!(reports[0].rates.len(), 10);
        assert!(reports[0].mean >= 0.9, "{}", reports[0].mean);
        assert!(reports[1].mean <= 0.2, "{}", reports[1].mean);
        assert_eq!(reports[0].mode, FeatureMode::Decay3);
        for r in &reports {
            assert!(r.rates.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn single_run_has_zero_std_and_runs_are_reproducible() {
        let (real, fakes) = fixture();
        let one = Protocol {
            n_runs: 1,
            ..Default::default()
        };
        let r = evaluate(&KNN, &real, &fakes, "far", &["close"], &one).unwrap();
        assert_eq!(r[0].std, 0.0);

        let p = Protocol {
            seed_base: 7,
            train_fraction: 0.5,
            n_runs: 4,
        };
        let a = evaluate(&KNN, &real, &fakes, "far", &["far", "close"], &p).unwrap();
        let b = evaluate(&KNN, &real, &fakes, "far", &["far", "close"], &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mlp_detector_runs() {
        let (real, fakes) = fixture();
        let spec = ClassifierSpec::Mlp {
            hyper: MlpHyper {
                epochs: 300,
                lr: 0.5,
                seed: 0,
            },
        };
        let p = Protocol {
            n_runs: 2,
            ..Default::default()
        };
        let r = evaluate(&spec, &real, &fakes, "far", &["far"], &p).unwrap();
        assert!(r[0].mean >= 0.9, "{}", r[0].mean);
    }

    #[test]
    fn errors() {
        let (real, fakes) = fixture();
        let p = Protocol::default();
        assert!(matches!(
            evaluate(&KNN, &real, &fakes, "nope", &["far"], &p),
            Err(Error::UnknownSetup(_))
        ));
        assert!(matches!(
            evaluate(&KNN, &real, &fakes, "far", &["nope"], &p),
            Err(Error::UnknownSetup(_))
        ));
        assert!(matches!(
            evaluate(&KNN, &real[..9], &fakes, "far", &["far"], &p),
            Err(Error::InsufficientData(_))
        ));
        let mut mislabeled = fakes.clone();
        mislabeled.get_mut("far").unwrap()[0].label = Label::Real;
        assert!(evaluate(&KNN, &real, &mislabeled, "far", &["far"], &p).is_err());
    }
}
