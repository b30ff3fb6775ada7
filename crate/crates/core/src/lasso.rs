//! L1-penalized logistic regression by cyclical coordinate descent.
//!
//! Features are standardized internally (mean 0, population sd 1). For each
//! lambda the solver alternates IRLS quadratic approximations of the mean
//! negative log-likelihood with coordinate soft-threshold sweeps, warm
//! starting along a log-spaced path from `lambda_max`. Coefficients are
//! reported on the original feature scale; the intercept is never penalized.
//!
//! Exactly duplicated standardized columns are aliased to their first
//! occurrence: only that copy can enter the model.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::math::{bernoulli_loglik, logit, sigmoid};
use crate::metrics;
use crate::rng;

/// Lower clamp for IRLS weights `p(1 - p)`.
const MIN_WEIGHT: f64 = 1e-5;
/// Relative slack on the soft-threshold comparison, so coefficients whose
/// correlation equals lambda up to rounding stay exactly zero.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoOptions {
    /// Convergence bound on the max absolute standardized-coefficient change.
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub n_lambdas: usize,
    pub lambda_min_ratio: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-7,
            max_outer: 100,
            max_inner: 1000,
            n_lambdas: 100,
            lambda_min_ratio: 1e-3,
        }
    }
}

/// Logistic model `logit p = intercept + coefficients · x` on the original
/// feature scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel {
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_means: Vec<f64>,
    /// Zero marks a constant feature that was dropped.
    pub feature_sds: Vec<f64>,
}

impl GlmModel {
    /// Model with the given coefficients and identity standardization.
    pub fn from_coefficients(feature_names: Vec<String>, intercept: f64, coefficients: Vec<f64>) -> Self {
        let p = coefficients.len();
        GlmModel {
            feature_names,
            intercept,
            coefficients,
            feature_means: vec![0.0; p],
            feature_sds: vec![1.0; p],
        }
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|&&b| b != 0.0).count()
    }

    pub fn nonzero_features(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, &b)| b != 0.0)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// `feature,coefficient` CSV with a leading `(Intercept)` row.
    pub fn coefficients_csv(&self) -> String {
        let mut out = String::from("feature,coefficient\n");
        out.push_str(&format!("(Intercept),{}\n", self.intercept));
        for (n, b) in self.feature_names.iter().zip(&self.coefficients) {
            out.push_str(&format!("{n},{b}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub models: Vec<GlmModel>,
    pub nonzero_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub mean_auc: Vec<f64>,
    pub se_auc: Vec<f64>,
    /// AUC per fold (outer) and lambda (inner).
    pub fold_auc: Vec<Vec<f64>>,
    pub best_index: usize,
    pub lambda_best: f64,
}

/// Standardized design shared by every lambda of a path.
struct Problem {
    n: usize,
    /// Column-major standardized features, one entry per original feature
    /// (empty for dropped columns).
    x: Vec<Vec<f64>>,
    /// Features allowed to enter: non-constant and not an exact duplicate.
    active: Vec<usize>,
    y: Vec<f64>,
    labels: Vec<u8>,
    means: Vec<f64>,
    sds: Vec<f64>,
    names: Vec<String>,
}

impl Problem {
    fn new(d: &Dataset) -> Result<Self> {
        let labels = d.require_labels()?.to_vec();
        let n = d.n_rows();
        let n_pos = labels.iter().filter(|&&y| y == 1).count();
        if n_pos == 0 || n_pos == n {
            return Err(Error::Data("lasso needs both classes in the labels".into()));
        }
        let rows = d.dense_rows()?;
        let p = d.n_cols();
        let mut x = Vec::with_capacity(p);
        let mut means = Vec::with_capacity(p);
        let mut sds = Vec::with_capacity(p);
        let mut active = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for j in 0..p {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
            means.push(mean);
            if !(sd > 0.0) || col.iter().all(|&v| v == col[0]) {
                log::warn!("dropping constant feature `{}`", d.columns()[j].name);
                sds.push(0.0);
                x.push(Vec::new());
                continue;
            }
            sds.push(sd);
            let std: Vec<f64> = col.iter().map(|v| (v - mean) / sd).collect();
            let key: Vec<u64> = std.iter().map(|v| v.to_bits()).collect();
            match seen.get(&key) {
                Some(&first) => log::debug!(
                    "feature `{}` duplicates `{}`; aliased",
                    d.columns()[j].name,
                    d.columns()[first].name
                ),
                None => {
                    seen.insert(key, j);
                    active.push(j);
                }
            }
            x.push(std);
        }
        Ok(Problem {
            n,
            x,
            active,
            y: labels.iter().map(|&v| v as f64).collect(),
            labels,
            means,
            sds,
            names: d.column_names(),
        })
    }

    fn lambda_max(&self) -> f64 {
        let ybar = self.y.iter().sum::<f64>() / self.n as f64;
        self.active
            .iter()
            .map(|&j| {
                (self.x[j]
                    .iter()
                    .zip(&self.y)
                    .map(|(x, y)| x * (y - ybar))
                    .sum::<f64>()
                    / self.n as f64)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    fn eta(&self, b0: f64, beta: &[f64]) -> Vec<f64> {
        let mut eta = vec![b0; self.n];
        for &j in &self.active {
            if beta[j] != 0.0 {
                for (e, x) in eta.iter_mut().zip(&self.x[j]) {
                    *e += beta[j] * x;
                }
            }
        }
        eta
    }

    /// Mean negative log-likelihood plus `lambda * ||beta||_1`, standardized scale.
    fn objective(&self, b0: f64, beta: &[f64], lambda: f64) -> f64 {
        let eta = self.eta(b0, beta);
        let nll = -self
            .labels
            .iter()
            .zip(&eta)
            .map(|(&y, &e)| bernoulli_loglik(y, e))
            .sum::<f64>()
            / self.n as f64;
        nll + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn to_model(&self, b0: f64, beta: &[f64]) -> GlmModel {
        let coefficients: Vec<f64> = (0..beta.len())
            .map(|j| if self.sds[j] > 0.0 { beta[j] / self.sds[j] } else { 0.0 })
            .collect();
        let intercept = b0
            - coefficients
                .iter()
                .zip(&self.means)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        GlmModel {
            feature_names: self.names.clone(),
            intercept,
            coefficients,
            feature_means: self.means.clone(),
            feature_sds: self.sds.clone(),
        }
    }

    /// Solve at one lambda from (b0, beta), in place. Returns the penalized
    /// objective after each outer iteration (index 0 is the starting point).
    fn solve(&self, lambda: f64, b0: &mut f64, beta: &mut [f64], opts: &LassoOptions) -> Result<Vec<f64>> {
        let n = self.n as f64;
        let mut history = vec![self.objective(*b0, beta, lambda)];
        for _ in 0..opts.max_outer {
            let eta = self.eta(*b0, beta);
            let mut w = Vec::with_capacity(self.n);
            let mut r = Vec::with_capacity(self.n);
            for (e, y) in eta.iter().zip(&self.y) {
                let p = sigmoid(*e);
                let wi = (p * (1.0 - p)).max(MIN_WEIGHT);
                w.push(wi);
                r.push((y - p) / wi);
            }
            let w_sum: f64 = w.iter().sum();
            let xv: Vec<f64> = (0..beta.len())
                .map(|j| {
                    if self.x[j].is_empty() {
                        0.0
                    } else {
                        self.x[j].iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>() / n
                    }
                })
                .collect();

            let (old_b0, old_beta) = (*b0, beta.to_vec());
            for _ in 0..opts.max_inner {
                let d0 = r.iter().zip(&w).map(|(r, w)| w * r).sum::<f64>() / w_sum;
                *b0 += d0;
                for ri in r.iter_mut() {
                    *ri -= d0;
                }
                let mut max_change = d0.abs();
                for &j in &self.active {
                    let xj = &self.x[j];
                    let u = xj
                        .iter()
                        .zip(&w)
                        .zip(&r)
                        .map(|((x, w), r)| w * x * r)
                        .sum::<f64>()
                        / n
                        + xv[j] * beta[j];
                    let new = soft_threshold(u, lambda) / xv[j];
                    let delta = new - beta[j];
                    if delta != 0.0 {
                        for (ri, x) in r.iter_mut().zip(xj) {
                            *ri -= delta * x;
                        }
                        beta[j] = new;
                        max_change = max_change.max(delta.abs());
                    }
                }
                if max_change < opts.tol {
                    break;
                }
            }

            // Step halving keeps the penalized objective from increasing.
            let prev = *history.last().unwrap();
            let mut obj = self.objective(*b0, beta, lambda);
            let mut halvings = 0;
            while obj > prev && halvings < 30 {
                *b0 = 0.5 * (*b0 + old_b0);
                for (b, o) in beta.iter_mut().zip(&old_beta) {
                    *b = 0.5 * (*b + o);
                }
                obj = self.objective(*b0, beta, lambda);
                halvings += 1;
            }
            if obj > prev {
                *b0 = old_b0;
                beta.copy_from_slice(&old_beta);
                obj = prev;
            }
            history.push(obj);

            let change = beta
                .iter()
                .zip(&old_beta)
                .map(|(a, b)| (a - b).abs())
                .fold((*b0 - old_b0).abs(), f64::max);
            if change < opts.tol {
                return Ok(history);
            }
        }
        Err(Error::NotConverged { lambda })
    }
}

fn soft_threshold(u: f64, lambda: f64) -> f64 {
    if u.abs() <= lambda * (1.0 + THRESHOLD_SLACK) {
        0.0
    } else {
        u - lambda * u.signum()
    }
}

/// Smallest lambda at which every coefficient is zero:
/// `max_j |<x_j, y - ybar>| / n` on standardized features.
pub fn lambda_max(d: &Dataset) -> Result<f64> {
    Ok(Problem::new(d)?.lambda_max())
}

/// Log-spaced grid from `lambda_max` down to `lambda_max * lambda_min_ratio`.
pub fn lambda_grid(lambda_max: f64, n_lambdas: usize, lambda_min_ratio: f64) -> Result<Vec<f64>> {
    if n_lambdas == 0 {
        return Err(Error::Config("n_lambdas must be positive".into()));
    }
    if !(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0) {
        return Err(Error::Config("lambda_min_ratio must lie in (0, 1)".into()));
    }
    if !(lambda_max > 0.0) {
        return Err(Error::Data("lambda_max is zero: no usable features".into()));
    }
    if n_lambdas == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = lambda_min_ratio.ln() / (n_lambdas - 1) as f64;
    Ok((0..n_lambdas)
        .map(|k| if k == 0 { lambda_max } else { lambda_max * (step * k as f64).exp() })
        .collect())
}

pub fn fit_path(d: &Dataset, opts: &LassoOptions) -> Result<LassoPath> {
    let problem = Problem::new(d)?;
    let lambdas = lambda_grid(problem.lambda_max(), opts.n_lambdas, opts.lambda_min_ratio)?;
    solve_path(&problem, &lambdas, opts)
}

/// Path over caller-supplied lambdas (must be strictly decreasing).
pub fn fit_path_with_lambdas(d: &Dataset, lambdas: &[f64], opts: &LassoOptions) -> Result<LassoPath> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] >= w[0]) || lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::Config("lambdas must be non-negative and strictly decreasing".into()));
    }
    solve_path(&Problem::new(d)?, lambdas, opts)
}

/// Cold-start fit at a single lambda.
pub fn fit_lambda(d: &Dataset, lambda: f64, opts: &LassoOptions) -> Result<GlmModel> {
    fit_lambda_with_trace(d, lambda, opts).map(|(m, _)| m)
}

/// Cold-start fit at a single lambda, with the penalized objective after each
/// outer IRLS iteration.
pub fn fit_lambda_with_trace(d: &Dataset, lambda: f64, opts: &LassoOptions) -> Result<(GlmModel, Vec<f64>)> {
    let problem = Problem::new(d)?;
    let (mut b0, mut beta) = null_start(&problem);
    let history = problem.solve(lambda, &mut b0, &mut beta, opts)?;
    Ok((problem.to_model(b0, &beta), history))
}

fn null_start(problem: &Problem) -> (f64, Vec<f64>) {
    let ybar = problem.y.iter().sum::<f64>() / problem.n as f64;
    (logit(ybar), vec![0.0; problem.x.len()])
}

fn solve_path(problem: &Problem, lambdas: &[f64], opts: &LassoOptions) -> Result<LassoPath> {
    let (mut b0, mut beta) = null_start(problem);
    let mut models = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        problem.solve(lambda, &mut b0, &mut beta, opts)?;
        models.push(problem.to_model(b0, &beta));
    }
    Ok(LassoPath {
        lambdas: lambdas.to_vec(),
        nonzero_counts: models.iter().map(GlmModel::nonzero_count).collect(),
        models,
    })
}

/// Stratified fold index per row; errors when a fold would miss a class.
pub fn stratified_folds(labels: &[u8], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.len() < n_folds || neg.len() < n_folds {
        return Err(Error::Config(format!(
            "{n_folds} folds leave a fold without both classes ({} positives, {} negatives); use fewer folds",
            pos.len(),
            neg.len()
        )));
    }
    let mut r = rng::rng(seed);
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);
    let mut folds = vec![0; labels.len()];
    for (k, &i) in pos.iter().enumerate() {
        folds[i] = k % n_folds;
    }
    for (k, &i) in neg.iter().enumerate() {
        folds[i] = k % n_folds;
    }
    Ok(folds)
}

/// K-fold cross-validated AUC along `path.lambdas`, refitting the path on each
/// fold's complement.
pub fn cross_validate(d: &Dataset, path: &LassoPath, n_folds: usize, seed: u64, opts: &LassoOptions) -> Result<CvResult> {
    let labels = d.require_labels()?;
    let folds = stratified_folds(labels, n_folds, seed)?;
    let fold_auc: Vec<Vec<f64>> = (0..n_folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..d.n_rows()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..d.n_rows()).filter(|&i| folds[i] == f).collect();
            let train_d = d.select_rows(&train);
            let test_d = d.select_rows(&test);
            let fold_path = fit_path_with_lambdas(&train_d, &path.lambdas, opts)?;
            let test_labels = test_d.require_labels()?;
            fold_path
                .models
                .iter()
                .map(|m| metrics::auc(test_labels, &predict_proba(m, &test_d)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let k = n_folds as f64;
    let n_l = path.lambdas.len();
    let mut mean_auc = Vec::with_capacity(n_l);
    let mut se_auc = Vec::with_capacity(n_l);
    for l in 0..n_l {
        let vals: Vec<f64> = fold_auc.iter().map(|f| f[l]).collect();
        let m = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1.0);
        mean_auc.push(m);
        se_auc.push((var / k).sqrt());
    }
    // Lambdas decrease, so `>=` keeps the smallest lambda among ties.
    let mut best_index = 0;
    for l in 1..n_l {
        if mean_auc[l] >= mean_auc[best_index] {
            best_index = l;
        }
    }
    Ok(CvResult {
        lambdas: path.lambdas.clone(),
        mean_auc,
        se_auc,
        fold_auc,
        best_index,
        lambda_best: path.lambdas[best_index],
    })
}

/// Positive-class probability per row; errors on NA in a model feature.
pub fn predict_proba(m: &GlmModel, d: &Dataset) -> Result<Vec<f64>> {
    let map = m
        .feature_names
        .iter()
        .map(|n| d.column_index(n))
        .collect::<Result<Vec<_>>>()?;
    (0..d.n_rows())
        .map(|i| {
            let row = d.row(i);
            let mut eta = m.intercept;
            for (k, &j) in map.iter().enumerate() {
                let v = row[j].ok_or_else(|| {
                    Error::Data(format!(
                        "NA in feature `{}` at row {i}; impute before predicting",
                        m.feature_names[k]
                    ))
                })?;
                eta += m.coefficients[k] * v;
            }
            Ok(sigmoid(eta))
        })
        .collect()
}
