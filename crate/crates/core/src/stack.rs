//! Two-level stacking of gradient boosted base models.
//!
//! Every base model (parameter set × undersampling seed) produces out-of-fold
//! probabilities: a row's covariate comes from the model trained on the other
//! folds. A level-2 logistic model (LASSO at the cross-validated lambda, or
//! Bayesian posterior means) is fitted on those covariates. Base models are
//! then refitted on all rows for prediction.

use rayon::prelude::*;

use crate::bayes::{self, BayesLogisticFit, BayesLogisticSpec};
use crate::dataio::{undersample, Column, Dataset};
use crate::error::{Error, Result};
use crate::gbt::{self, GbtParams, TreeEnsemble};
use crate::lasso::{self, GlmModel, LassoOptions};
use crate::metrics;
use crate::rng;

pub const DEFAULT_OOF_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level2Kind {
    Glm,
    Bayes,
}

impl std::str::FromStr for Level2Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glm" => Ok(Level2Kind::Glm),
            "bayes" => Ok(Level2Kind::Bayes),
            other => Err(Error::Config(format!("unknown level-2 model `{other}` (expected glm or bayes)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackSpec {
    pub base_configs: Vec<GbtParams>,
    /// One base model per config and seed.
    pub base_sample_seeds: Vec<u64>,
    /// Negatives kept per positive in each base model's training rows;
    /// `None` trains on every row.
    pub undersample_ratio: Option<f64>,
    pub level2: Level2Kind,
    pub oof_folds: usize,
    /// Folds for choosing the level-2 lambda.
    pub cv_folds: usize,
    pub seed: u64,
    pub lasso: LassoOptions,
    pub bayes: BayesLogisticSpec,
}

impl Default for StackSpec {
    fn default() -> Self {
        StackSpec {
            base_configs: GbtParams::stacking_sets(),
            base_sample_seeds: vec![0, 1, 2],
            undersample_ratio: None,
            level2: Level2Kind::Glm,
            oof_folds: DEFAULT_OOF_FOLDS,
            cv_folds: 5,
            seed: 0,
            lasso: LassoOptions::default(),
            bayes: BayesLogisticSpec::default(),
        }
    }
}

impl StackSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_configs.is_empty() || self.base_sample_seeds.is_empty() {
            return Err(Error::Config("stacking needs at least one base config and sample seed".into()));
        }
        if self.oof_folds < 2 {
            return Err(Error::Config("oof_folds must be at least 2".into()));
        }
        for p in &self.base_configs {
            p.validate()?;
        }
        Ok(())
    }

    pub fn n_base_models(&self) -> usize {
        self.base_configs.len() * self.base_sample_seeds.len()
    }

    /// `(config, sample seed)` per base model, config-major.
    fn base_models(&self) -> Vec<(&GbtParams, u64)> {
        self.base_configs
            .iter()
            .flat_map(|p| self.base_sample_seeds.iter().map(move |&s| (p, s)))
            .collect()
    }
}

/// Covariate names of the level-2 model.
pub fn base_names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("base{k}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Level2Model {
    Glm(GlmModel),
    Bayes { point: GlmModel, fit: BayesLogisticFit },
}

impl Level2Model {
    /// The logistic model used for point predictions.
    pub fn point(&self) -> &GlmModel {
        match self {
            Level2Model::Glm(m) => m,
            Level2Model::Bayes { point, .. } => point,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackModel {
    pub base_models: Vec<TreeEnsemble>,
    pub level2: Level2Model,
    /// Out-of-fold covariates with labels, as used to fit level 2.
    pub oof: Dataset,
    pub folds: Vec<usize>,
}

impl StackModel {
    /// AUC of each base model's out-of-fold probabilities.
    pub fn oof_auc(&self) -> Result<Vec<f64>> {
        let labels = self.oof.require_labels()?;
        (0..self.oof.n_cols())
            .map(|j| {
                let p: Vec<f64> = self.oof.column_values(j).into_iter().map(|v| v.unwrap_or(0.5)).collect();
                metrics::auc(labels, &p)
            })
            .collect()
    }

    /// AUC of the level-2 model on its own out-of-fold covariates.
    pub fn level2_oof_auc(&self) -> Result<f64> {
        metrics::auc(self.oof.require_labels()?, &predict_level2(self, &self.oof)?)
    }
}

fn training_rows(d: &Dataset, ratio: Option<f64>, seed: u64) -> Result<Dataset> {
    match ratio {
        Some(r) => undersample(d, r, seed),
        None => Ok(d.clone()),
    }
}

/// Out-of-fold probability per base model (outer) and row (inner) for the
/// given fold assignment.
pub fn oof_covariates(d: &Dataset, spec: &StackSpec, folds: &[usize]) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let labels = d.require_labels()?;
    if folds.len() != d.n_rows() {
        return Err(Error::Data("fold assignment does not match the rows".into()));
    }
    let k = folds.iter().max().map_or(0, |m| m + 1);
    for f in 0..k {
        let (mut pos, mut neg) = (0, 0);
        for (i, &g) in folds.iter().enumerate() {
            if g != f {
                if labels[i] == 1 {
                    pos += 1;
                } else {
                    neg += 1;
                }
            }
        }
        if pos == 0 || neg == 0 {
            return Err(Error::Data(format!("training rows outside fold {f} miss a class")));
        }
    }
    let models = spec.base_models();
    let tasks: Vec<(usize, usize)> = (0..models.len()).flat_map(|b| (0..k).map(move |f| (b, f))).collect();
    let preds: Vec<(Vec<usize>, Vec<f64>)> = tasks
        .par_iter()
        .map(|&(b, f)| {
            let (params, sample_seed) = models[b];
            let train: Vec<usize> = (0..d.n_rows()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..d.n_rows()).filter(|&i| folds[i] == f).collect();
            let train_d = training_rows(&d.select_rows(&train), spec.undersample_ratio, rng::derive_seed(sample_seed, f as u64))?;
            let m = gbt::fit(&train_d, params)?;
            Ok((test.clone(), gbt::predict_proba(&m, &d.select_rows(&test))?))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![vec![0.0; d.n_rows()]; models.len()];
    for (&(b, _), (rows, p)) in tasks.iter().zip(preds) {
        for (i, v) in rows.into_iter().zip(p) {
            out[b][i] = v;
        }
    }
    Ok(out)
}

fn covariate_dataset(ids: &[i64], covariates: &[Vec<f64>], labels: Option<Vec<u8>>) -> Result<Dataset> {
    let names = base_names(covariates.len());
    let rows: Vec<Vec<Option<f64>>> = (0..ids.len())
        .map(|i| covariates.iter().map(|c| Some(c[i])).collect())
        .collect();
    Dataset::new(ids.to_vec(), names.into_iter().map(Column::numeric).collect(), rows, labels)
}

pub fn fit_stack(d: &Dataset, spec: &StackSpec) -> Result<StackModel> {
    spec.validate()?;
    let labels = d.require_labels()?;
    let folds = lasso::stratified_folds(labels, spec.oof_folds, spec.seed)?;
    let covariates = oof_covariates(d, spec, &folds)?;
    let oof = covariate_dataset(d.ids(), &covariates, Some(labels.to_vec()))?;

    let base_models = spec
        .base_models()
        .par_iter()
        .map(|&(params, sample_seed)| gbt::fit(&training_rows(d, spec.undersample_ratio, sample_seed)?, params))
        .collect::<Result<Vec<_>>>()?;

    let level2 = match spec.level2 {
        Level2Kind::Glm => {
            let path = lasso::fit_path(&oof, &spec.lasso)?;
            let cv = lasso::cross_validate(&oof, &path, spec.cv_folds, rng::derive_seed(spec.seed, 1), &spec.lasso)?;
            Level2Model::Glm(path.models[cv.best_index].clone())
        }
        Level2Kind::Bayes => {
            let fit = bayes::sample(&oof, &spec.bayes)?;
            Level2Model::Bayes {
                point: fit.posterior_mean_model(),
                fit,
            }
        }
    };
    Ok(StackModel {
        base_models,
        level2,
        oof,
        folds,
    })
}

/// Full-data base model probabilities as a covariate dataset with `d`'s ids
/// and labels.
pub fn base_probabilities(m: &StackModel, d: &Dataset) -> Result<Dataset> {
    let covariates = m
        .base_models
        .par_iter()
        .map(|b| gbt::predict_proba(b, d))
        .collect::<Result<Vec<_>>>()?;
    covariate_dataset(d.ids(), &covariates, d.labels().map(|l| l.to_vec()))
}

/// Level-2 probabilities from a covariate dataset.
pub fn predict_level2(m: &StackModel, covariates: &Dataset) -> Result<Vec<f64>> {
    lasso::predict_proba(m.level2.point(), covariates)
}

pub fn predict_stack(m: &StackModel, d: &Dataset) -> Result<Vec<f64>> {
    predict_level2(m, &base_probabilities(m, d)?)
}
