use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusManifest, Label};
use crate::{Error, Result};

/// Train/test ids, stratified by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Shuffles `0..n` with `rng` and cuts off a prefix of `round(fraction * n)`
/// indices (at least one on each side).
pub fn split_indices(
    n: usize,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Validation(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    let n_train = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let test = order.split_off(n_train);
    Ok((order, test))
}

/// Seeded stratified split of a manifest; each label is shuffled and split
/// on its own, reals first.
pub fn split(manifest: &CorpusManifest, fraction: f64, seed: u64) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for label in [Label::Real, Label::Fake] {
        let ids: Vec<&str> = manifest.ids_with(label).collect();
        if ids.is_empty() {
            continue;
        }
        if ids.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "label {label} has {} entr{}, need at least 2",
                ids.len(),
                if ids.len() == 1 { "y" } else { "ies" }
            )));
        }
        let (train, test) = split_indices(ids.len(), fraction, &mut rng)?;
        out.train
            .extend(train.into_iter().map(|i| ids[i].to_string()));
        out.test
            .extend(test.into_iter().map(|i| ids[i].to_string()));
    }
    Ok(out)
}
