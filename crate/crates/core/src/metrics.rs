//! Confusion-matrix evaluation: MCC, ROC/AUC and MCC-vs-threshold sweeps.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Default threshold grid resolution for [`mcc_sweep`].
pub const DEFAULT_GRID_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Matthews correlation coefficient; see [`mcc`].
    pub fn mcc(&self) -> f64 {
        mcc(self)
    }
}

fn check_inputs(labels: &[u8], probs: &[f64]) -> Result<()> {
    if labels.len() != probs.len() {
        return Err(Error::Data(format!(
            "{} labels but {} scores",
            labels.len(),
            probs.len()
        )));
    }
    if let Some(y) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Data(format!("label {y} is not 0 or 1")));
    }
    if probs.iter().any(|p| p.is_nan()) {
        return Err(Error::Data("NaN score".into()));
    }
    Ok(())
}

/// Counts with the rule "predict 1 iff prob > threshold".
pub fn confusion(labels: &[u8], probs: &[f64], threshold: f64) -> Result<ConfusionMatrix> {
    check_inputs(labels, probs)?;
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(probs) {
        match (y == 1, p > threshold) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// `(TP·TN − FP·FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN))`, or 0 when any
/// factor of the denominator is 0.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let (tp, tn, fp, fn_) = (cm.tp as f64, cm.tn as f64, cm.fp as f64, cm.fn_ as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.iter().any(|&f| f == 0.0) {
        return 0.0;
    }
    // Two square roots keep the product of four large counts in range.
    let denom = (factors[0] * factors[1]).sqrt() * (factors[2] * factors[3]).sqrt();
    ((tp * tn - fp * fn_) / denom).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)`, from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    /// Score cut for each point: the point counts scores `>= threshold` as
    /// positive. The first point uses +inf.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

impl RocCurve {
    /// Trapezoidal area under `points`.
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
            .sum()
    }
}

/// ROC curve over every distinct score, and AUC as the Mann–Whitney
/// statistic (ties count one half).
pub fn roc_auc(labels: &[u8], probs: &[f64]) -> Result<RocCurve> {
    check_inputs(labels, probs)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap_or(Ordering::Equal));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the concordant-pair count, kept in integers for exactness.
    let mut twice_concordant: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let score = probs[order[i]];
        let (mut gp, mut gn) = (0u64, 0u64);
        while i < order.len() && probs[order[i]] == score {
            if labels[order[i]] == 1 {
                gp += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        twice_concordant += gn as u128 * (2 * tp as u128 + gp as u128);
        tp += gp;
        fp += gn;
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        thresholds.push(score);
    }
    let auc = twice_concordant as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Ok(RocCurve {
        points,
        thresholds,
        auc,
    })
}

/// AUC only.
pub fn auc(labels: &[u8], probs: &[f64]) -> Result<f64> {
    roc_auc(labels, probs).map(|r| r.auc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub thresholds: Vec<f64>,
    pub mcc_values: Vec<f64>,
    pub best_threshold: f64,
    pub best_mcc: f64,
}

/// Thresholds `0, step, 2·step, …` up to and including 1.
pub fn threshold_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Config(format!("grid step {step} must lie in (0, 1)")));
    }
    let n = (1.0 / step).round() as usize;
    let mut grid: Vec<f64> = (0..=n)
        .map(|i| i as f64 * step)
        .take_while(|&t| t < 1.0 - 1e-9)
        .collect();
    grid.push(1.0);
    Ok(grid)
}

/// MCC at every grid threshold; the best threshold is the smallest argmax.
pub fn mcc_sweep(labels: &[u8], probs: &[f64], grid_step: f64) -> Result<ThresholdSweep> {
    let thresholds = threshold_grid(grid_step)?;
    let mcc_values = thresholds
        .iter()
        .map(|&t| confusion(labels, probs, t).map(|cm| mcc(&cm)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, &m) in mcc_values.iter().enumerate() {
        if m > mcc_values[best] {
            best = k;
        }
    }
    Ok(ThresholdSweep {
        best_threshold: thresholds[best],
        best_mcc: mcc_values[best],
        thresholds,
        mcc_values,
    })
}
