//! Synthetic stand-in for production-line measurement data.
//!
//! Features are standard normal. Labels follow a planted logistic model whose
//! intercept is calibrated so the expected positive rate equals
//! `positive_rate`. Parts belong to simulated types; each type measures its
//! own disjoint block of features and the others are NA.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Column, Dataset};
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessSpec {
    /// Number of part types. 0 or 1 disables missingness blocks.
    pub n_part_types: usize,
    /// Leading features measured on every part.
    pub shared_features: usize,
    /// Features each block extends into the next one (0 = disjoint blocks).
    pub overlap: usize,
    /// Independent per-cell probability of flipping the block pattern.
    pub flip_prob: f64,
}

impl Default for MissingnessSpec {
    fn default() -> Self {
        MissingnessSpec {
            n_part_types: 1,
            shared_features: 0,
            overlap: 0,
            flip_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_features: usize,
    pub positive_rate: f64,
    /// Planted coefficients for the leading features.
    pub coefficients: Vec<f64>,
    pub missingness: MissingnessSpec,
    pub seed: u64,
    /// Id of the first row; ids are consecutive.
    pub first_id: i64,
}

impl SyntheticSpec {
    pub fn new(n_rows: usize, n_features: usize, positive_rate: f64, seed: u64) -> Self {
        SyntheticSpec {
            n_rows,
            n_features,
            positive_rate,
            coefficients: Vec::new(),
            missingness: MissingnessSpec::default(),
            seed,
            first_id: 1,
        }
    }

    pub fn with_coefficients(mut self, coefficients: Vec<f64>) -> Self {
        self.coefficients = coefficients;
        self
    }

    pub fn with_missingness(mut self, missingness: MissingnessSpec) -> Self {
        self.missingness = missingness;
        self
    }

    pub fn with_first_id(mut self, first_id: i64) -> Self {
        self.first_id = first_id;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(Error::Config(format!(
                "positive rate {} must lie strictly between 0 and 1",
                self.positive_rate
            )));
        }
        if self.coefficients.len() > self.n_features {
            return Err(Error::Config(format!(
                "{} planted coefficients for {} features",
                self.coefficients.len(),
                self.n_features
            )));
        }
        let m = &self.missingness;
        if m.shared_features > self.n_features {
            return Err(Error::Config("more shared features than features".into()));
        }
        if m.n_part_types > 1 && m.n_part_types > self.n_features - m.shared_features {
            return Err(Error::Config(format!(
                "{} part types need at least as many non-shared features",
                m.n_part_types
            )));
        }
        if !(0.0..=1.0).contains(&m.flip_prob) {
            return Err(Error::Config("flip probability must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Observed-feature pattern for each part type.
    pub fn block_patterns(&self) -> Vec<Vec<bool>> {
        let m = &self.missingness;
        if m.n_part_types <= 1 {
            return vec![vec![true; self.n_features]];
        }
        let free = self.n_features - m.shared_features;
        (0..m.n_part_types)
            .map(|t| {
                let start = m.shared_features + t * free / m.n_part_types;
                let end = m.shared_features + (t + 1) * free / m.n_part_types;
                let end = (end + m.overlap).min(self.n_features);
                (0..self.n_features)
                    .map(|j| j < m.shared_features || (start..end).contains(&j))
                    .collect()
            })
            .collect()
    }
}

/// Generated data together with the generating truth.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub intercept: f64,
    pub part_types: Vec<usize>,
    /// Linear predictor of each row under the planted model.
    pub linear_predictor: Vec<f64>,
}

pub fn make_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    generate(spec).map(|s| s.dataset)
}

/// Like [`make_synthetic`], also returning the planted intercept, part types
/// and linear predictors.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut r = rng::rng(spec.seed);
    let (n, p) = (spec.n_rows, spec.n_features);

    let latent: Vec<f64> = (0..n * p).map(|_| r.sample(StandardNormal)).collect();
    let signal: Vec<f64> = (0..n)
        .map(|i| {
            spec.coefficients
                .iter()
                .enumerate()
                .map(|(j, b)| b * latent[i * p + j])
                .sum()
        })
        .collect();
    let intercept = calibrate_intercept(&signal, spec.positive_rate);
    let linear_predictor: Vec<f64> = signal.iter().map(|s| s + intercept).collect();
    let labels: Vec<u8> = linear_predictor
        .iter()
        .map(|&eta| (r.random::<f64>() < sigmoid(eta)) as u8)
        .collect();

    let patterns = spec.block_patterns();
    let flip = spec.missingness.flip_prob;
    let shared = spec.missingness.shared_features;
    let mut part_types = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * p);
    for i in 0..n {
        let t = if patterns.len() > 1 {
            r.random_range(0..patterns.len())
        } else {
            0
        };
        part_types.push(t);
        for j in 0..p {
            let mut observed = patterns[t][j];
            if flip > 0.0 && j >= shared && r.random::<f64>() < flip {
                observed = !observed;
            }
            values.push(observed.then_some(latent[i * p + j]));
        }
    }

    let width = p.saturating_sub(1).to_string().len();
    let columns = (0..p)
        .map(|j| Column::numeric(format!("f{j:0width$}")))
        .collect();
    let ids = (0..n as i64).map(|i| spec.first_id + i).collect();
    let dataset = Dataset::from_flat(ids, columns, values, Some(labels))?;
    Ok(SyntheticData {
        dataset,
        intercept,
        part_types,
        linear_predictor,
    })
}

/// Intercept `c` with `mean(sigmoid(signal + c)) == rate`, by bisection.
fn calibrate_intercept(signal: &[f64], rate: f64) -> f64 {
    let logit = (rate / (1.0 - rate)).ln();
    if signal.iter().all(|&s| s == 0.0) {
        return logit;
    }
    let mean_rate = |c: f64| signal.iter().map(|s| sigmoid(s + c)).sum::<f64>() / signal.len() as f64;
    let (mut lo, mut hi) = (logit - 50.0, logit + 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_rate(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_model_positive_rate() {
        let spec = SyntheticSpec::new(10_000, 4, 0.05, 11).with_coefficients(vec![0.0; 4]);
        let g = generate(&spec).unwrap();
        assert!((g.intercept - (0.05f64 / 0.95).ln()).abs() < 1e-15);
        let rate = g.dataset.labels().unwrap().iter().filter(|&&y| y == 1).count() as f64 / 1e4;
        let se = (0.05 * 0.95 / 1e4f64).sqrt();
        assert!((rate - 0.05).abs() < 3.0 * se, "rate {rate}");
    }

    #[test]
    fn calibrated_rate_with_signal() {
        let spec = SyntheticSpec::new(4000, 6, 0.1, 2).with_coefficients(vec![2.0, -1.5]);
        let g = generate(&spec).unwrap();
        let mean: f64 =
            g.linear_predictor.iter().map(|&e| sigmoid(e)).sum::<f64>() / 4000.0;
        assert!((mean - 0.1).abs() < 1e-9);
    }

    #[test]
    fn two_blocks_patterns() {
        let spec = SyntheticSpec::new(300, 10, 0.2, 5).with_missingness(MissingnessSpec {
            n_part_types: 2,
            shared_features: 2,
            ..Default::default()
        });
        let patterns = spec.block_patterns();
        assert_eq!(patterns.len(), 2);
        let d = make_synthetic(&spec).unwrap();
        let m = d.mask();
        for i in 0..d.n_rows() {
            let row: Vec<bool> = m.row(i).iter().map(|&b| b == 1).collect();
            assert_eq!(patterns.iter().filter(|p| **p == row).count(), 1);
        }
        // disjoint non-shared blocks
        for j in 2..10 {
            assert!(!(patterns[0][j] && patterns[1][j]));
        }
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::new(500, 8, 0.3, 77)
            .with_coefficients(vec![1.0, 0.5])
            .with_missingness(MissingnessSpec {
                n_part_types: 3,
                shared_features: 2,
                overlap: 0,
                flip_prob: 0.05,
            });
        assert_eq!(make_synthetic(&spec).unwrap(), make_synthetic(&spec).unwrap());
    }

    #[test]
    fn invalid_rate() {
        assert!(make_synthetic(&SyntheticSpec::new(10, 2, 1.0, 0)).is_err());
        assert!(make_synthetic(&SyntheticSpec::new(10, 2, 0.0, 0)).is_err());
        let too_many = SyntheticSpec::new(10, 2, 0.5, 0).with_coefficients(vec![1.0; 3]);
        assert!(make_synthetic(&too_many).is_err());
    }
}
