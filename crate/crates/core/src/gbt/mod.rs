//! Gradient-boosted decision trees for binary logistic loss.
//!
//! Each round fits a regression tree to the gradients `g = p - y` and hessians
//! `h = p(1 - p)` of the current ensemble, using exact greedy split
//! enumeration. Missing values follow a per-node default direction learned
//! during split search.

mod format;
mod tree;

pub use format::{read_model, write_model};
pub use tree::{Node, Tree};

use rand::seq::SliceRandom;

use crate::dataio::{ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::math::{log1p_exp, logit, sigmoid};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Fraction of features sampled (once per tree).
    pub colsample_bytree: f64,
    pub min_child_weight: f64,
    pub l2_reg: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_trees: 100,
            max_depth: 6,
            learning_rate: 0.1,
            colsample_bytree: 1.0,
            min_child_weight: 1.0,
            l2_reg: 1.0,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub fn with_depth_and_colsample(max_depth: usize, colsample_bytree: f64) -> Self {
        GbtParams {
            max_depth,
            colsample_bytree,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("gbt: {m}")));
        if self.n_trees == 0 {
            return bad("n_trees must be positive");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad("colsample_bytree must lie in (0, 1]");
        }
        if !(self.min_child_weight >= 0.0) {
            return bad("min_child_weight must be >= 0");
        }
        if !(self.l2_reg >= 0.0) {
            return bad("l2_reg must be >= 0");
        }
        Ok(())
    }

    /// The three base-learner settings used for stacking: depth 15 / 0.7,
    /// depth 5 / 0.7 and depth 15 / 0.3.
    pub fn stacking_sets() -> Vec<GbtParams> {
        vec![
            GbtParams::with_depth_and_colsample(15, 0.7),
            GbtParams::with_depth_and_colsample(5, 0.7),
            GbtParams::with_depth_and_colsample(15, 0.3),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    /// Prior positive probability; predictions start at its logit.
    pub base_score: f64,
    pub params: GbtParams,
    pub feature_names: Vec<String>,
}

impl TreeEnsemble {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Raw score for one row given feature lookup by model feature index.
    pub fn margin_with<F: Fn(usize) -> Option<f64>>(&self, value: F) -> f64 {
        let mut m = logit(self.base_score);
        for t in &self.trees {
            m += t.leaf_weight(&value);
        }
        m
    }

    /// Map model features to dataset columns by name.
    fn column_map(&self, d: &Dataset) -> Result<Vec<usize>> {
        self.feature_names
            .iter()
            .map(|n| d.column_index(n))
            .collect()
    }
}

/// Per-feature sum of split gains.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    pub feature_names: Vec<String>,
    pub gains: Vec<f64>,
}

/// Probability clamp keeping outputs strictly inside (0, 1).
const PROB_EPS: f64 = 1e-15;

fn feature_columns(d: &Dataset) -> Result<Vec<Vec<Option<f64>>>> {
    if let Some(c) = d
        .columns()
        .iter()
        .find(|c| c.kind == ColumnKind::Categorical)
    {
        return Err(Error::Data(format!(
            "categorical column `{}` must be one-hot encoded first",
            c.name
        )));
    }
    Ok((0..d.n_cols()).map(|j| d.column_values(j)).collect())
}

/// Mean logistic loss of margins against labels.
pub fn logistic_loss(labels: &[u8], margins: &[f64]) -> f64 {
    labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| log1p_exp(m) - y as f64 * m)
        .sum::<f64>()
        / labels.len() as f64
}

pub fn fit(d: &Dataset, params: &GbtParams) -> Result<TreeEnsemble> {
    fit_with_trace(d, params).map(|(m, _)| m)
}

/// Fit and also return the training loss before the first tree and after
/// each boosting round.
pub fn fit_with_trace(d: &Dataset, params: &GbtParams) -> Result<(TreeEnsemble, Vec<f64>)> {
    params.validate()?;
    let labels = d.require_labels()?;
    let n = d.n_rows();
    if n == 0 || d.n_cols() == 0 {
        return Err(Error::Data("gbt needs a non-empty dataset".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::Data("gbt needs both classes in the labels".into()));
    }
    let cols = feature_columns(d)?;
    let p = cols.len();
    let sorted = tree::presort(&cols);

    let base_score = n_pos as f64 / n as f64;
    let mut margins = vec![logit(base_score); n];
    let mut losses = vec![logistic_loss(labels, &margins)];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    let n_sampled = ((params.colsample_bytree * p as f64).round() as usize).clamp(1, p);
    let mut col_rng = rng::rng(params.seed);
    let mut all_features: Vec<usize> = (0..p).collect();

    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        for i in 0..n {
            let prob = sigmoid(margins[i]);
            grad[i] = prob - labels[i] as f64;
            hess[i] = prob * (1.0 - prob);
        }
        let mut features: Vec<usize> = if n_sampled < p {
            all_features.partial_shuffle(&mut col_rng, n_sampled).0.to_vec()
        } else {
            all_features.clone()
        };
        features.sort_unstable();

        let t = tree::Builder {
            columns: &cols,
            sorted: &sorted,
            grad: &grad,
            hess: &hess,
            features: &features,
            params,
        }
        .build();
        for (i, m) in margins.iter_mut().enumerate() {
            *m += t.leaf_weight(|j| cols[j][i]);
        }
        losses.push(logistic_loss(labels, &margins));
        trees.push(t);
    }

    Ok((
        TreeEnsemble {
            trees,
            base_score,
            params: params.clone(),
            feature_names: d.column_names(),
        },
        losses,
    ))
}

/// Positive-class probability per row, strictly inside (0, 1).
pub fn predict_proba(m: &TreeEnsemble, d: &Dataset) -> Result<Vec<f64>> {
    let map = m.column_map(d)?;
    Ok((0..d.n_rows())
        .map(|i| {
            let row = d.row(i);
            sigmoid(m.margin_with(|j| row[map[j]])).clamp(PROB_EPS, 1.0 - PROB_EPS)
        })
        .collect())
}

pub fn importance(m: &TreeEnsemble) -> FeatureImportance {
    let mut gains = vec![0.0; m.n_features()];
    for t in &m.trees {
        for node in &t.nodes {
            if let Node::Split { feature, gain, .. } = node {
                gains[*feature] += gain;
            }
        }
    }
    FeatureImportance {
        feature_names: m.feature_names.clone(),
        gains,
    }
}

/// Indices of the `k` highest-gain features with nonzero gain, ties broken by
/// ascending index.
pub fn top_k_features(fi: &FeatureImportance, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fi.gains.len()).filter(|&j| fi.gains[j] > 0.0).collect();
    idx.sort_by(|&a, &b| fi.gains[b].total_cmp(&fi.gains[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}
