use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Negatives kept per positive when no ratio is configured.
pub const DEFAULT_UNDERSAMPLE_RATIO: f64 = 10.0;

/// Keep every positive row and `floor(ratio * n_pos)` negatives drawn without
/// replacement (capped at the available negatives). Row order is preserved.
pub fn undersample(d: &Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::Config(format!("invalid undersampling ratio {ratio}")));
    }
    let (pos, mut neg) = d.class_indices()?;
    if pos.is_empty() {
        return Err(Error::Data("undersampling needs at least one positive sample".into()));
    }
    let keep = ((ratio * pos.len() as f64).floor() as usize).min(neg.len());
    let mut r = rng::splitmix(seed);
    let (chosen, _) = neg.partial_shuffle(&mut r, keep);
    let mut rows: Vec<usize> = pos.iter().copied().chain(chosen.iter().copied()).collect();
    rows.sort_unstable();
    Ok(d.select_rows(&rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(validation_fraction: f64, seed: u64) -> Result<Self> {
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation fraction {validation_fraction} must lie strictly between 0 and 1"
            )));
        }
        Ok(SplitSpec {
            validation_fraction,
            seed,
        })
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            validation_fraction: 0.25,
            seed: 0,
        }
    }
}

/// Stratified random split into (train, validation).
pub fn train_validation_split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    SplitSpec::new(spec.validation_fraction, spec.seed)?;
    let (mut pos, mut neg) = d.class_indices()?;
    let mut r = rng::splitmix(spec.seed);
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);
    let n_pos_val = (spec.validation_fraction * pos.len() as f64).round() as usize;
    let n_neg_val = (spec.validation_fraction * neg.len() as f64).round() as usize;
    let mut val: Vec<usize> = pos[..n_pos_val]
        .iter()
        .chain(&neg[..n_neg_val])
        .copied()
        .collect();
    let mut train: Vec<usize> = pos[n_pos_val..]
        .iter()
        .chain(&neg[n_neg_val..])
        .copied()
        .collect();
    val.sort_unstable();
    train.sort_unstable();
    Ok((d.select_rows(&train), d.select_rows(&val)))
}
