//! Bayesian logistic regression by MCMC.
//!
//! `y ~ Bernoulli(p)`, `logit p = b0 + b1 x1 + ... + bn xn`, with independent
//! normal priors given as (mean, precision) and converted to a standard
//! deviation once.

mod export;
pub mod sampler;
mod summary;

pub use export::{read_draws_csv, trace_export, write_draws_csv};
pub use summary::{effective_sample_size, split_rhat, summarize, ParamSummary, PosteriorSummary, QUANTILES};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::lasso::GlmModel;
use crate::math::{log1p_exp, sigmoid};
use sampler::{run_chains, ChainSettings, Target};

/// Prior on the intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterceptPrior {
    /// Same normal prior as the coefficients.
    #[default]
    Normal,
    /// Standard logistic density on `b0`, i.e. uniform on `logistic(b0)`.
    UniformProbability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesLogisticSpec {
    pub prior_mean: f64,
    pub prior_precision: f64,
    pub intercept_prior: InterceptPrior,
    pub n_chains: usize,
    pub n_burnin: usize,
    pub n_samples: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for BayesLogisticSpec {
    fn default() -> Self {
        BayesLogisticSpec {
            prior_mean: 0.0,
            prior_precision: 1e-4,
            intercept_prior: InterceptPrior::Normal,
            n_chains: 4,
            n_burnin: 1000,
            n_samples: 5000,
            thin: 1,
            seed: 0,
        }
    }
}

impl BayesLogisticSpec {
    pub fn prior_sd(&self) -> f64 {
        1.0 / self.prior_precision.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_precision > 0.0 && self.prior_precision.is_finite()) {
            return Err(Error::Config("prior_precision must be positive".into()));
        }
        if !self.prior_mean.is_finite() {
            return Err(Error::Config("prior_mean must be finite".into()));
        }
        if self.n_chains == 0 || self.n_samples == 0 || self.thin == 0 {
            return Err(Error::Config("chains, samples and thin must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn chain_settings(&self) -> ChainSettings {
        ChainSettings {
            n_chains: self.n_chains,
            n_burnin: self.n_burnin,
            n_samples: self.n_samples,
            thin: self.thin,
            seed: self.seed,
            jitter: 0.1,
        }
    }
}

/// Kept draws of every chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub names: Vec<String>,
    /// `chains[c][k][j]`: chain `c`, kept draw `k`, parameter `j`.
    pub chains: Vec<Vec<Vec<f64>>>,
    /// Post burn-in acceptance rate per parameter, averaged over chains.
    pub acceptance_rates: Vec<f64>,
    pub thin: usize,
}

impl PosteriorSamples {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_draws(&self) -> usize {
        self.chains.first().map_or(0, |c| c.len())
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    /// Per-chain draws of parameter `j`.
    pub fn param_chains(&self, j: usize) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.iter().map(|d| d[j]).collect()).collect()
    }

    /// All draws of parameter `j`, chain after chain.
    pub fn pooled(&self, j: usize) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.iter().map(move |d| d[j])).collect()
    }

    /// Every draw as a parameter vector, chain after chain.
    pub fn draws(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.chains.iter().flatten()
    }

    pub fn means(&self) -> Vec<f64> {
        let n = (self.n_chains() * self.n_draws()) as f64;
        (0..self.names.len())
            .map(|j| {
                let mut v = self.pooled(j);
                v.sort_by(|a, b| a.total_cmp(b));
                v.iter().sum::<f64>() / n
            })
            .collect()
    }

    pub(crate) fn from_chains(names: Vec<String>, outputs: Vec<sampler::ChainOutput>, thin: usize) -> Self {
        let p = names.len();
        let m = outputs.len() as f64;
        let acceptance_rates = (0..p)
            .map(|j| outputs.iter().map(|o| o.acceptance[j]).sum::<f64>() / m)
            .collect();
        PosteriorSamples {
            names,
            chains: outputs.into_iter().map(|o| o.draws).collect(),
            acceptance_rates,
            thin,
        }
    }
}

/// Posterior draws with the covariate names they were fitted on. Parameters
/// are `b0` then `b1..bn` in covariate order.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesLogisticFit {
    pub feature_names: Vec<String>,
    pub samples: PosteriorSamples,
}

impl BayesLogisticFit {
    /// Point model from the posterior means.
    pub fn posterior_mean_model(&self) -> GlmModel {
        let m = self.samples.means();
        GlmModel::from_coefficients(self.feature_names.clone(), m[0], m[1..].to_vec())
    }

    /// Probability per row (outer) and pooled draw (inner).
    pub fn predictive_probabilities(&self, d: &Dataset) -> Result<Vec<Vec<f64>>> {
        let map = self
            .feature_names
            .iter()
            .map(|n| d.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        (0..d.n_rows())
            .map(|i| {
                let row = d.row(i);
                let x = map
                    .iter()
                    .map(|&j| row[j].ok_or_else(|| Error::Data(format!("NA in row {i}"))))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(self
                    .samples
                    .draws()
                    .map(|b| sigmoid(b[0] + b[1..].iter().zip(&x).map(|(b, x)| b * x).sum::<f64>()))
                    .collect())
            })
            .collect()
    }
}

pub fn parameter_names(n_features: usize) -> Vec<String> {
    (0..=n_features).map(|j| format!("b{j}")).collect()
}

struct LogisticTarget {
    /// Column-major covariates.
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    prior_mean: f64,
    prior_sd: f64,
    intercept_prior: InterceptPrior,
}

impl LogisticTarget {
    fn log_prior_term(&self, j: usize, v: f64) -> f64 {
        if j == 0 && self.intercept_prior == InterceptPrior::UniformProbability {
            return -v - 2.0 * log1p_exp(-v);
        }
        let z = (v - self.prior_mean) / self.prior_sd;
        -0.5 * z * z
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        theta.iter().enumerate().map(|(j, &v)| self.log_prior_term(j, v)).sum()
    }

    fn log_lik(&self, eta: impl Iterator<Item = f64>) -> f64 {
        eta.zip(&self.y).map(|(e, y)| y * e - log1p_exp(e)).sum()
    }
}

impl Target for LogisticTarget {
    type Cache = Vec<f64>;

    fn dim(&self) -> usize {
        self.x.len() + 1
    }

    fn cache(&self, theta: &[f64]) -> Vec<f64> {
        let mut eta = vec![theta[0]; self.y.len()];
        for (col, b) in self.x.iter().zip(&theta[1..]) {
            for (e, x) in eta.iter_mut().zip(col) {
                *e += b * x;
            }
        }
        eta
    }

    fn log_density(&self, theta: &[f64], eta: &Vec<f64>) -> f64 {
        self.log_lik(eta.iter().copied()) + self.log_prior(theta)
    }

    fn log_density_with(&self, theta: &[f64], eta: &Vec<f64>, j: usize, v: f64) -> Option<f64> {
        let delta = v - theta[j];
        let ll = if j == 0 {
            self.log_lik(eta.iter().map(|e| e + delta))
        } else {
            self.log_lik(eta.iter().zip(&self.x[j - 1]).map(|(e, x)| e + delta * x))
        };
        let prior = self.log_prior(theta) - self.log_prior_term(j, theta[j]) + self.log_prior_term(j, v);
        Some(ll + prior)
    }

    fn commit(&self, theta: &[f64], eta: &mut Vec<f64>, j: usize, v: f64) {
        let delta = v - theta[j];
        if j == 0 {
            eta.iter_mut().for_each(|e| *e += delta);
        } else {
            for (e, x) in eta.iter_mut().zip(&self.x[j - 1]) {
                *e += delta * x;
            }
        }
    }
}

/// Sample the posterior of a logistic regression of the labels on every
/// column of `d`. A dataset without rows samples the prior.
pub fn sample(d: &Dataset, spec: &BayesLogisticSpec) -> Result<BayesLogisticFit> {
    spec.validate()?;
    let labels = d.require_labels()?;
    let rows = d.dense_rows()?;
    let p = d.n_cols();
    let target = LogisticTarget {
        x: (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect(),
        y: labels.iter().map(|&y| y as f64).collect(),
        prior_mean: spec.prior_mean,
        prior_sd: spec.prior_sd(),
        intercept_prior: spec.intercept_prior,
    };
    let outputs = run_chains(&target, &vec![0.0; p + 1], &spec.chain_settings())?;
    Ok(BayesLogisticFit {
        feature_names: d.column_names(),
        samples: PosteriorSamples::from_chains(parameter_names(p), outputs, spec.thin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Column;

    fn quick() -> BayesLogisticSpec {
        BayesLogisticSpec {
            n_chains: 2,
            n_burnin: 500,
            n_samples: 2000,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn precision_converts_to_sd() {
        assert_eq!(BayesLogisticSpec::default().prior_sd(), 100.0);
        let bad = BayesLogisticSpec {
            prior_precision: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn shapes_and_rates() {
        let d = Dataset::new(
            (0..6).collect(),
            vec![Column::numeric("x")],
            (0..6).map(|i| vec![Some(i as f64)]).collect(),
            Some(vec![0, 0, 1, 0, 1, 1]),
        )
        .unwrap();
        let fit = sample(&d, &quick()).unwrap();
        let s = &fit.samples;
        assert_eq!(s.names, vec!["b0", "b1"]);
        assert_eq!(s.n_chains(), 2);
        assert_eq!(s.n_draws(), 2000);
        assert!(s.acceptance_rates.iter().all(|r| (0.0..=1.0).contains(r)));
        let pred = fit.predictive_probabilities(&d).unwrap();
        assert_eq!(pred.len(), 6);
        assert_eq!(pred[0].len(), 4000);
    }

    #[test]
    fn rejects_na() {
        let d = Dataset::new(vec![1], vec![Column::numeric("x")], vec![vec![None]], Some(vec![1])).unwrap();
        assert!(sample(&d, &quick()).is_err());
    }
}
