//! Sectioned key-value experiment configuration.
//!
//! ```ini
//! [experiment]
//! seed = 42
//! output_dir = out
//! stages = dataio, gbt, metrics
//!
//! [gbt]
//! n_trees = 100
//! ```
//!
//! Unknown sections, keys and stage names are rejected while parsing, before
//! anything runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::bayes::{BayesLogisticSpec, InterceptPrior};
use crate::cluster;
use crate::dataio::{MissingnessSpec, SplitSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::gbt::GbtParams;
use crate::lasso::LassoOptions;
use crate::metrics::DEFAULT_GRID_STEP;
use crate::stack::{Level2Kind, DEFAULT_OOF_FOLDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Dataio,
    Gbt,
    Metrics,
    Cluster,
    Lasso,
    Bayes,
    Stack,
    Reliability,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Dataio,
        Stage::Gbt,
        Stage::Metrics,
        Stage::Cluster,
        Stage::Lasso,
        Stage::Bayes,
        Stage::Stack,
        Stage::Reliability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Dataio => "dataio",
            Stage::Gbt => "gbt",
            Stage::Metrics => "metrics",
            Stage::Cluster => "cluster",
            Stage::Lasso => "lasso",
            Stage::Bayes => "bayes",
            Stage::Stack => "stack",
            Stage::Reliability => "reliability",
        }
    }

    /// Stages that must appear earlier in the stage list.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Dataio | Stage::Reliability => &[],
            Stage::Metrics => &[Stage::Gbt],
            _ => &[Stage::Dataio],
        }
    }

    /// Fixed per-stage counter for seed derivation.
    pub(crate) fn index(self) -> u64 {
        Stage::ALL.iter().position(|&s| s == self).unwrap() as u64
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Stage::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown stage `{s}` (known: {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Csv { path: PathBuf, schema: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    pub validation_fraction: f64,
    pub undersample_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtStageConfig {
    pub params: GbtParams,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// `None` uses the knee of the elbow curve.
    pub k: Option<usize>,
    /// `None` picks the largest cluster.
    pub cluster_id: Option<usize>,
    pub col_na_max: f64,
    pub row_na_max: f64,
    /// Random feature subset size before clustering; 0 keeps all.
    pub max_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoStageConfig {
    pub options: LassoOptions,
    pub cv_folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesStageConfig {
    pub spec: BayesLogisticSpec,
    pub max_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackStageConfig {
    pub level2: Level2Kind,
    pub oof_folds: usize,
    pub cv_folds: usize,
    pub sample_seeds: Vec<u64>,
    pub undersample_ratio: Option<f64>,
    pub n_trees: usize,
    pub learning_rate: f64,
    pub bayes: BayesLogisticSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityConfig {
    pub n: usize,
    pub shape: f64,
    pub coefficients: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub log_shape_prior_sd: f64,
    pub spec: BayesLogisticSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub stages: Vec<Stage>,
    pub data: DataConfig,
    pub gbt: GbtStageConfig,
    pub grid_step: f64,
    pub cluster: ClusterConfig,
    pub lasso: LassoStageConfig,
    pub bayes: BayesStageConfig,
    pub stack: StackStageConfig,
    pub reliability: ReliabilityConfig,
    /// Canonical `key=value` text per section, for manifest input hashes.
    pub(crate) section_text: BTreeMap<String, String>,
}

/// Keys of one section, consumed as they are read.
struct Keys {
    section: String,
    values: BTreeMap<String, String>,
}

impl Keys {
    fn err(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("[{}] {key}: {msg}", self.section))
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.values.remove(key) {
            None => Ok(default),
            Some(v) => v.trim().parse().map_err(|_| self.err(key, format!("invalid value `{v}`"))),
        }
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) if v.trim() == "none" || v.trim() == "auto" => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| self.err(key, format!("invalid value `{v}`"))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.values.remove(key) {
            None => Ok(default),
            Some(v) if v.trim().is_empty() => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| self.err(key, format!("invalid list item `{s}`"))))
                .collect(),
        }
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            Some(k) => Err(Error::Config(format!("[{}] unknown key `{k}`", self.section))),
            None => Ok(()),
        }
    }
}

fn chain_keys(k: &mut Keys, base: BayesLogisticSpec) -> Result<BayesLogisticSpec> {
    let intercept_prior = match k.get("intercept_prior", "normal".to_string())?.as_str() {
        "normal" => InterceptPrior::Normal,
        "uniform_probability" => InterceptPrior::UniformProbability,
        other => return Err(k.err("intercept_prior", format!("unknown prior `{other}`"))),
    };
    let spec = BayesLogisticSpec {
        prior_mean: k.get("prior_mean", base.prior_mean)?,
        prior_precision: k.get("prior_precision", base.prior_precision)?,
        intercept_prior,
        n_chains: k.get("chains", base.n_chains)?,
        n_burnin: k.get("burnin", base.n_burnin)?,
        n_samples: k.get("samples", base.n_samples)?,
        thin: k.get("thin", base.thin)?,
        seed: base.seed,
    };
    spec.validate()?;
    Ok(spec)
}

impl ExperimentConfig {
    /// Parse config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Parse {
            line: e.line as u64,
            message: e.msg.to_string(),
        })?;
        let mut sections: BTreeMap<String, Keys> = BTreeMap::new();
        let mut section_text = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key `{k}` outside any section")));
                }
                continue;
            };
            if name != "experiment" && name.parse::<Stage>().is_err() {
                return Err(Error::Config(format!("unknown section [{name}]")));
            }
            let values: BTreeMap<String, String> =
                props.iter().map(|(k, v)| (k.trim().to_string(), v.trim().to_string())).collect();
            let text: String = values.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
            section_text.insert(name.to_string(), text);
            sections.insert(
                name.to_string(),
                Keys {
                    section: name.to_string(),
                    values,
                },
            );
        }
        let mut take = |name: &str| {
            sections.remove(name).unwrap_or(Keys {
                section: name.to_string(),
                values: BTreeMap::new(),
            })
        };

        let mut k = take("experiment");
        let seed: u64 = k.get("seed", 0)?;
        let output_dir = base_dir.join(k.get("output_dir", "output".to_string())?);
        let stage_names: Vec<String> = k.list("stages", Vec::new())?;
        k.finish()?;
        let stages = stage_names.iter().map(|s| s.parse()).collect::<Result<Vec<Stage>>>()?;
        for (i, s) in stages.iter().enumerate() {
            if stages[..i].contains(s) {
                return Err(Error::Config(format!("stage `{}` listed twice", s.name())));
            }
            for r in s.requires() {
                if !stages[..i].contains(r) {
                    return Err(Error::Config(format!(
                        "stage `{}` needs `{}` earlier in the stage list",
                        s.name(),
                        r.name()
                    )));
                }
            }
        }

        let mut k = take("dataio");
        let source_name: String = k.get("source", "synthetic".to_string())?;
        let source = if source_name == "synthetic" {
            let mut spec = SyntheticSpec::new(
                k.get("n_rows", 4000)?,
                k.get("n_features", 60)?,
                k.get("positive_rate", 0.1)?,
                seed,
            )
            .with_coefficients(k.list("coefficients", vec![1.5, -1.5, 1.0, -1.0, 1.0])?);
            spec.missingness = MissingnessSpec {
                n_part_types: k.get("part_types", 8)?,
                shared_features: k.get("shared_features", 10)?,
                overlap: k.get("overlap", 0)?,
                flip_prob: k.get("flip_prob", 0.01)?,
            };
            DataSource::Synthetic(spec)
        } else {
            let path = base_dir.join(&source_name);
            if !path.is_file() {
                return Err(Error::Config(format!("data file {} does not exist", path.display())));
            }
            let schema = k.opt::<String>("schema")?.map(|s| base_dir.join(s));
            if let Some(s) = &schema {
                if !s.is_file() {
                    return Err(Error::Config(format!("schema file {} does not exist", s.display())));
                }
            }
            DataSource::Csv { path, schema }
        };
        let data = DataConfig {
            source,
            validation_fraction: k.get("validation_fraction", SplitSpec::default().validation_fraction)?,
            undersample_ratio: k.opt("undersample_ratio")?,
        };
        SplitSpec::new(data.validation_fraction, 0)?;
        k.finish()?;

        let mut k = take("gbt");
        let d = GbtParams::default();
        let gbt = GbtStageConfig {
            params: GbtParams {
                n_trees: k.get("n_trees", d.n_trees)?,
                max_depth: k.get("max_depth", d.max_depth)?,
                learning_rate: k.get("learning_rate", d.learning_rate)?,
                colsample_bytree: k.get("colsample_bytree", d.colsample_bytree)?,
                min_child_weight: k.get("min_child_weight", d.min_child_weight)?,
                l2_reg: k.get("l2_reg", d.l2_reg)?,
                seed: 0,
            },
            top_k: k.get("top_k", 20)?,
        };
        gbt.params.validate()?;
        k.finish()?;

        let mut k = take("metrics");
        let grid_step = k.get("grid_step", DEFAULT_GRID_STEP)?;
        crate::metrics::threshold_grid(grid_step)?;
        k.finish()?;

        let mut k = take("cluster");
        let cluster = ClusterConfig {
            k_min: k.get("k_min", 1)?,
            k_max: k.get("k_max", 40)?,
            restarts: k.get("restarts", cluster::DEFAULT_RESTARTS)?,
            max_iter: k.get("max_iter", cluster::DEFAULT_MAX_ITER)?,
            k: k.opt("k")?,
            cluster_id: k.opt("cluster_id")?,
            col_na_max: k.get("col_na_max", 0.1)?,
            row_na_max: k.get("row_na_max", 0.1)?,
            max_features: k.get("max_features", 0)?,
        };
        if cluster.k_min == 0 || cluster.k_max < cluster.k_min {
            return Err(Error::Config("[cluster] need 1 <= k_min <= k_max".into()));
        }
        k.finish()?;

        let mut k = take("lasso");
        let d = LassoOptions::default();
        let lasso = LassoStageConfig {
            options: LassoOptions {
                n_lambdas: k.get("n_lambdas", d.n_lambdas)?,
                lambda_min_ratio: k.get("lambda_min_ratio", d.lambda_min_ratio)?,
                tol: k.get("tol", d.tol)?,
                ..d
            },
            cv_folds: k.get("cv_folds", 10)?,
        };
        k.finish()?;

        let mut k = take("bayes");
        let bayes = BayesStageConfig {
            spec: chain_keys(&mut k, BayesLogisticSpec::default())?,
            max_features: k.get("max_features", 10)?,
        };
        k.finish()?;

        let mut k = take("stack");
        let stack = StackStageConfig {
            level2: k.get("level2", Level2Kind::Glm)?,
            oof_folds: k.get("folds", DEFAULT_OOF_FOLDS)?,
            cv_folds: k.get("cv_folds", 5)?,
            sample_seeds: k.list("sample_seeds", vec![0, 1, 2])?,
            undersample_ratio: k.opt("undersample_ratio")?,
            n_trees: k.get("n_trees", 100)?,
            learning_rate: k.get("learning_rate", 0.1)?,
            bayes: chain_keys(
                &mut k,
                BayesLogisticSpec {
                    n_burnin: 500,
                    n_samples: 1000,
                    ..Default::default()
                },
            )?,
        };
        k.finish()?;

        let mut k = take("reliability");
        let reliability = ReliabilityConfig {
            n: k.get("n", 2000)?,
            shape: k.get("shape", 2.0)?,
            coefficients: k.list("coefficients", vec![5.0, 1.0, -1.0, 0.5])?,
            quantiles: k.list("quantiles", vec![0.1, 0.5, 0.9])?,
            log_shape_prior_sd: k.get("log_shape_prior_sd", 10.0)?,
            spec: chain_keys(&mut k, BayesLogisticSpec::default())?,
        };
        if reliability.quantiles.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
            return Err(Error::Config("[reliability] quantiles must lie in (0, 1)".into()));
        }
        k.finish()?;

        Ok(ExperimentConfig {
            seed,
            output_dir,
            stages,
            data,
            gbt,
            grid_step,
            cluster,
            lasso,
            bayes,
            stack,
            reliability,
            section_text,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }
}
