//! Component-wise adaptive random-walk Metropolis.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

/// Acceptance rate the proposal scales are tuned towards.
pub const TARGET_ACCEPTANCE: f64 = 0.44;
/// Burn-in iterations between proposal-scale updates.
pub const ADAPT_BATCH: usize = 50;

/// Unnormalized log density with a per-state cache that makes single
/// coordinate updates cheap.
pub trait Target: Sync {
    type Cache: Clone + Send;

    fn dim(&self) -> usize;

    fn cache(&self, theta: &[f64]) -> Self::Cache;

    fn log_density(&self, theta: &[f64], cache: &Self::Cache) -> f64;

    /// Log density with `theta[j]` replaced by `v`; `None` outside the support.
    fn log_density_with(&self, theta: &[f64], cache: &Self::Cache, j: usize, v: f64) -> Option<f64>;

    /// Update `cache` for `theta[j] -> v` (`theta` still holds the old value).
    fn commit(&self, theta: &[f64], cache: &mut Self::Cache, j: usize, v: f64);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSettings {
    pub n_chains: usize,
    pub n_burnin: usize,
    pub n_samples: usize,
    pub thin: usize,
    pub seed: u64,
    /// Standard deviation of the chain-indexed jitter added to the start point.
    pub jitter: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// `draws[k]` is the k-th kept state.
    pub draws: Vec<Vec<f64>>,
    /// Post burn-in acceptance rate per coordinate.
    pub acceptance: Vec<f64>,
    pub scales: Vec<f64>,
}

/// `2.4 / sqrt(curvature)` per coordinate from a central second difference,
/// falling back to 1 where the curvature is not positive and finite.
fn initial_scales<T: Target>(target: &T, theta: &[f64], cache: &T::Cache, f0: f64) -> Vec<f64> {
    (0..target.dim())
        .map(|j| {
            let h = 1e-3 * theta[j].abs().max(1.0);
            let up = target.log_density_with(theta, cache, j, theta[j] + h);
            let down = target.log_density_with(theta, cache, j, theta[j] - h);
            match (up, down) {
                (Some(u), Some(d)) => {
                    let curv = -(u - 2.0 * f0 + d) / (h * h);
                    if curv.is_finite() && curv > 0.0 {
                        2.4 / curv.sqrt()
                    } else {
                        1.0
                    }
                }
                _ => 1.0,
            }
        })
        .collect()
}

fn run_chain<T: Target>(target: &T, start: &[f64], settings: &ChainSettings, chain: usize) -> Result<ChainOutput> {
    let mut r = rng::rng(rng::derive_seed(settings.seed, chain as u64));
    let mut theta: Vec<f64> = start
        .iter()
        .map(|&s| s + settings.jitter * r.sample::<f64, _>(StandardNormal))
        .collect();
    let mut cache = target.cache(&theta);
    let mut current = target.log_density(&theta, &cache);
    if !current.is_finite() {
        return Err(Error::NonFiniteInit(format!("chain {chain} start {theta:?}")));
    }
    let dim = target.dim();
    let mut log_scales: Vec<f64> = initial_scales(target, &theta, &cache, current)
        .iter()
        .map(|s| s.ln())
        .collect();
    let mut batch_accepts = vec![0usize; dim];
    let mut batches = 0usize;
    let mut accepts = vec![0usize; dim];
    let thin = settings.thin.max(1);
    let total = settings.n_burnin + settings.n_samples * thin;
    let mut draws = Vec::with_capacity(settings.n_samples);

    for it in 0..total {
        let burnin = it < settings.n_burnin;
        for j in 0..dim {
            let v = theta[j] + log_scales[j].exp() * r.sample::<f64, _>(StandardNormal);
            let u: f64 = r.random();
            if let Some(prop) = target.log_density_with(&theta, &cache, j, v) {
                if prop.is_finite() && u.ln() < prop - current {
                    target.commit(&theta, &mut cache, j, v);
                    theta[j] = v;
                    current = prop;
                    if burnin {
                        batch_accepts[j] += 1;
                    } else {
                        accepts[j] += 1;
                    }
                }
            }
        }
        if burnin && (it + 1) % ADAPT_BATCH == 0 {
            batches += 1;
            let step = 1.0 / (batches as f64).sqrt();
            for j in 0..dim {
                let rate = batch_accepts[j] as f64 / ADAPT_BATCH as f64;
                log_scales[j] += (rate - TARGET_ACCEPTANCE) * step;
                batch_accepts[j] = 0;
            }
        }
        if !burnin && (it - settings.n_burnin + 1) % thin == 0 {
            draws.push(theta.clone());
        }
    }
    let kept_iters = (settings.n_samples * thin) as f64;
    Ok(ChainOutput {
        draws,
        acceptance: accepts.iter().map(|&a| a as f64 / kept_iters).collect(),
        scales: log_scales.iter().map(|s| s.exp()).collect(),
    })
}

/// Independent chains in parallel, returned in chain order.
pub fn run_chains<T: Target>(target: &T, start: &[f64], settings: &ChainSettings) -> Result<Vec<ChainOutput>> {
    if settings.n_chains == 0 || settings.n_samples == 0 {
        return Err(Error::Config("need at least one chain and one kept draw".into()));
    }
    if start.len() != target.dim() {
        return Err(Error::Config("start point has the wrong dimension".into()));
    }
    (0..settings.n_chains)
        .into_par_iter()
        .map(|c| run_chain(target, start, settings, c))
        .collect()
}
