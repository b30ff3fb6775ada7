//! Posterior summaries and convergence diagnostics.
//!
//! Chains are put into a canonical order before anything is accumulated, so
//! every statistic is independent of the order chains are supplied in.

use super::PosteriorSamples;
use crate::error::{Error, Result};
use crate::math::quantile_sorted;

pub const QUANTILES: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Values at [`QUANTILES`].
    pub quantiles: [f64; 5],
    /// Split-chain potential scale reduction.
    pub rhat: f64,
    pub ess: f64,
    /// Monte Carlo standard error of the mean, `sd / sqrt(ess)`.
    pub mc_se: f64,
}

impl ParamSummary {
    pub fn median(&self) -> f64 {
        self.quantiles[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Result<&ParamSummary> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn max_rhat(&self) -> f64 {
        self.params.iter().map(|p| p.rhat).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,mean,sd,q2.5,q25,q50,q75,q97.5,rhat,ess,mc_se\n");
        for p in &self.params {
            out.push_str(&format!("{},{},{}", p.name, p.mean, p.sd));
            for q in p.quantiles {
                out.push_str(&format!(",{q}"));
            }
            out.push_str(&format!(",{},{},{}\n", p.rhat, p.ess, p.mc_se));
        }
        out
    }
}

fn canonical(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut v: Vec<&[f64]> = chains.iter().map(|c| c.as_slice()).collect();
    v.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(a.len().cmp(&b.len()))
    });
    v
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = if x.len() > 1 {
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

/// Within-chain variance `W` and pooled estimate `var+` for equal-length chains.
fn variance_components(chains: &[&[f64]]) -> (f64, f64) {
    let n = chains[0].len() as f64;
    let m = chains.len() as f64;
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| mean_var(c)).collect();
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m;
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let b_over_n = if chains.len() > 1 { mean_var(&means).1 } else { 0.0 };
    (w, (n - 1.0) / n * w + b_over_n)
}

/// Split-chain R-hat. Constant chains give 1.0; fewer than two draws per half
/// give NaN.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let chains = canonical(chains);
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let half = n / 2;
    if half < 2 {
        return f64::NAN;
    }
    let mut halves: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in &chains {
        halves.push(&c[..half]);
        halves.push(&c[n - half..n]);
    }
    let (w, var_plus) = variance_components(&halves);
    if w == 0.0 {
        return if var_plus == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (var_plus / w).sqrt()
}

/// Effective sample size from the multi-chain autocorrelation estimate,
/// truncated by Geyer's initial monotone positive sequence.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let chains = canonical(chains);
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let m = chains.len();
    let total = (m * n) as f64;
    if n < 4 {
        return total;
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let (w, var_plus) = variance_components(&chains);
    if !(var_plus > 0.0) {
        return total;
    }
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let rho = |t: usize| -> f64 {
        let acov = chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| {
                (0..n - t).map(|i| (c[i] - mu) * (c[i + t] - mu)).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / m as f64;
        1.0 - (w - acov) / var_plus
    };
    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = if t == 0 { 1.0 + rho(1) } else { rho(t) + rho(t + 1) };
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum += pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / total.log10().max(1.0));
    total / tau
}

pub fn summarize(s: &PosteriorSamples) -> Result<PosteriorSummary> {
    if s.n_chains() == 0 || s.n_chains() * s.n_draws() < 2 {
        return Err(Error::Data("summaries need at least two draws".into()));
    }
    let params = (0..s.names.len())
        .map(|j| {
            let chains = s.param_chains(j);
            let mut pooled: Vec<f64> = chains.iter().flatten().copied().collect();
            pooled.sort_by(|a, b| a.total_cmp(b));
            let (mean, var) = mean_var(&pooled);
            let sd = var.sqrt();
            let mut quantiles = [0.0; 5];
            for (q, p) in quantiles.iter_mut().zip(QUANTILES) {
                *q = quantile_sorted(&pooled, p);
            }
            let ess = effective_sample_size(&chains);
            ParamSummary {
                name: s.names[j].clone(),
                mean,
                sd,
                quantiles,
                rhat: split_rhat(&chains),
                ess,
                mc_se: if sd > 0.0 { sd / ess.sqrt() } else { 0.0 },
            }
        })
        .collect();
    Ok(PosteriorSummary { params })
}
