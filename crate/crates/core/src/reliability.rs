//! Weibull lifetimes with a scale that is linear in line measurements.
//!
//! `f(t) = (k/a)(t/a)^(k-1) exp(-(t/a)^k)` with shape `k` and scale
//! `a(x) = b0 + b1 x1 + ... + bm xm`. The linear scale is only valid where it is
//! positive; simulation refuses such rows and the sampler rejects proposals
//! that would make any row's scale non-positive.

use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;

use crate::bayes::sampler::{run_chains, Target};
use crate::bayes::{BayesLogisticSpec, PosteriorSamples};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_COVARIATES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct WeibullModel {
    pub shape: f64,
    /// `b0, b1, ..., bm`.
    pub scale_coefficients: Vec<f64>,
}

impl WeibullModel {
    pub fn new(shape: f64, scale_coefficients: Vec<f64>) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::Config(format!("shape must be positive, got {shape}")));
        }
        if scale_coefficients.is_empty() || scale_coefficients.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("scale coefficients must be finite and include b0".into()));
        }
        Ok(WeibullModel {
            shape,
            scale_coefficients,
        })
    }

    pub fn n_covariates(&self) -> usize {
        self.scale_coefficients.len() - 1
    }

    pub fn scale(&self, x: &[f64]) -> f64 {
        scale_at(&self.scale_coefficients, x)
    }
}

fn scale_at(b: &[f64], x: &[f64]) -> f64 {
    b[0] + b[1..].iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
}

pub fn weibull_cdf(t: f64, shape: f64, scale: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-(t / scale).powf(shape)).exp_m1()
    }
}

pub fn weibull_quantile(q: f64, shape: f64, scale: f64) -> f64 {
    scale * (-(-q).ln_1p()).powf(1.0 / shape)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeData {
    /// One covariate vector per part.
    pub covariates: Vec<Vec<f64>>,
    pub lifetimes: Vec<f64>,
}

impl LifetimeData {
    pub fn new(covariates: Vec<Vec<f64>>, lifetimes: Vec<f64>) -> Result<Self> {
        if covariates.len() != lifetimes.len() {
            return Err(Error::Data(format!(
                "{} covariate rows for {} lifetimes",
                covariates.len(),
                lifetimes.len()
            )));
        }
        if let Some(m) = covariates.first().map(|r| r.len()) {
            if covariates.iter().any(|r| r.len() != m) {
                return Err(Error::Data("covariate rows differ in length".into()));
            }
        }
        if covariates.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("covariates must be finite".into()));
        }
        if let Some(i) = lifetimes.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Data(format!("lifetime at row {i} is not positive")));
        }
        Ok(LifetimeData {
            covariates,
            lifetimes,
        })
    }

    pub fn len(&self) -> usize {
        self.lifetimes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lifetimes.is_empty()
    }

    /// `x1,...,xm,lifetime` with a header row.
    pub fn to_csv(&self) -> String {
        let m = self.covariates.first().map_or(DEFAULT_COVARIATES, |r| r.len());
        let mut out: String = (1..=m).map(|j| format!("x{j},")).collect();
        out.push_str("lifetime\n");
        for (x, t) in self.covariates.iter().zip(&self.lifetimes) {
            for v in x {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{t}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().last() != Some("lifetime") {
            return Err(Error::Parse {
                line: 1,
                message: "last column must be `lifetime`".into(),
            });
        }
        let m = headers.len() - 1;
        let mut covariates = Vec::new();
        let mut lifetimes = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: i as u64 + 2,
                        message: format!("invalid number `{s}`"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            lifetimes.push(vals[m]);
            covariates.push(vals[..m].to_vec());
        }
        LifetimeData::new(covariates, lifetimes)
    }
}

/// Inverse-CDF draw `t = a(x) (-ln U)^(1/k)` per row, with a row-indexed
/// stream derived from `seed`.
pub fn simulate(m: &WeibullModel, covariates: &[Vec<f64>], seed: u64) -> Result<LifetimeData> {
    if let Some(bad) = covariates.iter().find(|x| x.len() != m.n_covariates()) {
        return Err(Error::Data(format!(
            "covariate row has {} values, model expects {}",
            bad.len(),
            m.n_covariates()
        )));
    }
    let bad: Vec<usize> = (0..covariates.len()).filter(|&i| !(m.scale(&covariates[i]) > 0.0)).collect();
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(20).map(|i| i.to_string()).collect();
        return Err(Error::Data(format!(
            "non-positive scale at {} rows: {}{}",
            bad.len(),
            shown.join(","),
            if bad.len() > 20 { ",..." } else { "" }
        )));
    }
    let lifetimes: Vec<f64> = covariates
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let u: f64 = rng::rng(rng::derive_seed(seed, i as u64)).sample(Open01);
            m.scale(x) * (-u.ln()).powf(1.0 / m.shape)
        })
        .collect();
    LifetimeData::new(covariates.to_vec(), lifetimes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilitySpec {
    /// Normal priors and chain settings for the scale coefficients.
    pub bayes: BayesLogisticSpec,
    pub log_shape_prior_mean: f64,
    pub log_shape_prior_sd: f64,
}

impl Default for ReliabilitySpec {
    fn default() -> Self {
        ReliabilitySpec {
            bayes: BayesLogisticSpec::default(),
            log_shape_prior_mean: 0.0,
            log_shape_prior_sd: 10.0,
        }
    }
}

struct WeibullTarget<'a> {
    x: &'a [Vec<f64>],
    log_t: Vec<f64>,
    prior_mean: f64,
    prior_sd: f64,
    log_shape_mean: f64,
    log_shape_sd: f64,
}

/// Cached per-row `(a(x), ln a(x))`.
type ScaleCache = Vec<(f64, f64)>;

impl WeibullTarget<'_> {
    fn log_prior(&self, theta: &[f64]) -> f64 {
        let z = (theta[0] - self.log_shape_mean) / self.log_shape_sd;
        let mut lp = -0.5 * z * z;
        for &b in &theta[1..] {
            let z = (b - self.prior_mean) / self.prior_sd;
            lp -= 0.5 * z * z;
        }
        lp
    }

    fn log_lik(&self, log_k: f64, scales: impl Iterator<Item = (f64, f64)>) -> f64 {
        let k = log_k.exp();
        scales
            .zip(&self.log_t)
            .map(|((_, ln_a), &ln_t)| {
                let r = ln_t - ln_a;
                log_k - ln_a + (k - 1.0) * r - (k * r).exp()
            })
            .sum()
    }

    fn covariate(&self, i: usize, j: usize) -> f64 {
        if j == 1 {
            1.0
        } else {
            self.x[i][j - 2]
        }
    }
}

impl Target for WeibullTarget<'_> {
    type Cache = ScaleCache;

    fn dim(&self) -> usize {
        self.x.first().map_or(DEFAULT_COVARIATES, |r| r.len()) + 2
    }

    fn cache(&self, theta: &[f64]) -> ScaleCache {
        self.x
            .iter()
            .map(|x| {
                let a = scale_at(&theta[1..], x);
                (a, a.ln())
            })
            .collect()
    }

    fn log_density(&self, theta: &[f64], cache: &ScaleCache) -> f64 {
        if cache.iter().any(|&(a, _)| !(a > 0.0)) {
            return f64::NEG_INFINITY;
        }
        self.log_lik(theta[0], cache.iter().copied()) + self.log_prior(theta)
    }

    fn log_density_with(&self, theta: &[f64], cache: &ScaleCache, j: usize, v: f64) -> Option<f64> {
        let mut t = theta.to_vec();
        t[j] = v;
        let prior = self.log_prior(&t);
        if j == 0 {
            return Some(self.log_lik(v, cache.iter().copied()) + prior);
        }
        let delta = v - theta[j];
        let mut scales = Vec::with_capacity(cache.len());
        for (i, &(a, _)) in cache.iter().enumerate() {
            let a2 = a + delta * self.covariate(i, j);
            if !(a2 > 0.0) {
                return None;
            }
            scales.push((a2, a2.ln()));
        }
        Some(self.log_lik(theta[0], scales.into_iter()) + prior)
    }

    fn commit(&self, theta: &[f64], cache: &mut ScaleCache, j: usize, v: f64) {
        if j == 0 {
            return;
        }
        let delta = v - theta[j];
        for (i, c) in cache.iter_mut().enumerate() {
            let a = c.0 + delta * self.covariate(i, j);
            *c = (a, a.ln());
        }
    }
}

pub fn parameter_names(n_covariates: usize) -> Vec<String> {
    std::iter::once("shape".to_string())
        .chain((0..=n_covariates).map(|j| format!("b{j}")))
        .collect()
}

/// Posterior draws of `(shape, b0, ..., bm)`. The sampler works on `ln shape`;
/// stored draws are on the shape scale.
pub fn fit_bayes(data: &LifetimeData, spec: &ReliabilitySpec) -> Result<PosteriorSamples> {
    spec.bayes.validate()?;
    if !(spec.log_shape_prior_sd > 0.0) {
        return Err(Error::Config("log_shape_prior_sd must be positive".into()));
    }
    let target = WeibullTarget {
        x: &data.covariates,
        log_t: data.lifetimes.iter().map(|t| t.ln()).collect(),
        prior_mean: spec.bayes.prior_mean,
        prior_sd: spec.bayes.prior_sd(),
        log_shape_mean: spec.log_shape_prior_mean,
        log_shape_sd: spec.log_shape_prior_sd,
    };
    let m = target.dim() - 2;
    let mut start = vec![0.0; m + 2];
    start[0] = spec.log_shape_prior_mean;
    let mean_t = data.lifetimes.iter().sum::<f64>() / data.len() as f64;
    start[1] = if data.is_empty() { spec.bayes.prior_mean } else { mean_t };
    let mut settings = spec.bayes.chain_settings();
    if !data.is_empty() {
        settings.jitter = 0.05 * mean_t.min(1.0);
    }
    let mut outputs = run_chains(&target, &start, &settings)?;
    for o in &mut outputs {
        for d in &mut o.draws {
            d[0] = d[0].exp();
        }
    }
    Ok(PosteriorSamples::from_chains(parameter_names(m), outputs, spec.bayes.thin))
}

pub fn posterior_mean_model(s: &PosteriorSamples) -> Result<WeibullModel> {
    let m = s.means();
    WeibullModel::new(m[0], m[1..].to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimePrediction {
    /// Mean over usable draws of the per-draw Weibull quantile.
    pub quantile: f64,
    pub n_used: usize,
    /// Draws whose scale at `x` is not positive.
    pub n_excluded: usize,
}

pub fn lifetime_predictive(s: &PosteriorSamples, x: &[f64], q: f64) -> Result<LifetimePrediction> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Config(format!("quantile level must lie in (0, 1), got {q}")));
    }
    if s.names.len() != x.len() + 2 || s.names.first().map(String::as_str) != Some("shape") {
        return Err(Error::Data(format!(
            "posterior has {} parameters, expected shape plus {} coefficients",
            s.names.len(),
            x.len() + 1
        )));
    }
    let mut sum = 0.0;
    let mut used = 0;
    let mut excluded = 0;
    for d in s.draws() {
        let a = scale_at(&d[1..], x);
        if a > 0.0 {
            sum += weibull_quantile(q, d[0], a);
            used += 1;
        } else {
            excluded += 1;
        }
    }
    if used == 0 {
        return Err(Error::Data("every draw gives a non-positive scale at x".into()));
    }
    Ok(LifetimePrediction {
        quantile: sum / used as f64,
        n_used: used,
        n_excluded: excluded,
    })
}

/// Two-sided Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Large-sample KS critical value `sqrt(-ln(level / 2) / 2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
