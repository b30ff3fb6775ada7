use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use failfoundry::bayes::{self, BayesLogisticSpec, InterceptPrior};
use failfoundry::dataio::{self, Dataset, MissingnessSpec, Schema, SyntheticSpec};
use failfoundry::gbt::{self, GbtParams};
use failfoundry::lasso::{self, LassoOptions};
use failfoundry::plot::{self, PlotKind};
use failfoundry::reliability::{self, LifetimeData, ReliabilitySpec, WeibullModel};
use failfoundry::stack::{self, Level2Kind, StackSpec};
use failfoundry::{cluster, metrics, pipeline, rng, Error, Result};
use rand::Rng;

#[derive(Parser)]
#[command(name = "failfoundry", version, about = "Failure detection models for production-line data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stages of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a two- or three-column CSV as SVG.
    Plot {
        #[arg(long)]
        kind: PlotKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load, encode and optionally undersample a dataset.
    Data(DataArgs),
    /// Generate a synthetic dataset with block missingness.
    Synth(SynthArgs),
    /// ROC curve and MCC threshold sweep for a predictions file.
    Metrics(MetricsArgs),
    #[command(subcommand)]
    Gbt(GbtCommand),
    #[command(subcommand)]
    Lasso(LassoCommand),
    #[command(subcommand)]
    Cluster(ClusterCommand),
    #[command(subcommand)]
    Bayes(BayesCommand),
    #[command(subcommand)]
    Stack(StackCommand),
    #[command(subcommand)]
    Reliability(ReliabilityCommand),
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl Input {
    fn load(&self) -> Result<Dataset> {
        let schema = match &self.schema {
            Some(p) => Schema::load(p)?,
            None => Schema::new(),
        };
        dataio::prepare_features(&dataio::load_csv(&self.input, &schema)?)
    }
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    undersample_ratio: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4000)]
    n_rows: usize,
    #[arg(long, default_value_t = 60)]
    n_features: usize,
    #[arg(long, default_value_t = 0.1)]
    positive_rate: f64,
    #[arg(long, value_delimiter = ',', default_value = "1.5,-1.5,1,-1,1")]
    coefficients: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    part_types: usize,
    #[arg(long, default_value_t = 10)]
    shared_features: usize,
    #[arg(long, default_value_t = 0.01)]
    flip_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// CSV with a label column and a probability column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "Response")]
    label_column: String,
    #[arg(long, default_value = "probability")]
    prob_column: String,
    #[arg(long, default_value_t = metrics::DEFAULT_GRID_STEP)]
    grid_step: f64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write SVG plots next to the CSVs.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum GbtCommand {
    /// Fit a boosted tree ensemble and write it in the text model format.
    Fit {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = GbtParams::default().n_trees)]
        n_trees: usize,
        #[arg(long, default_value_t = GbtParams::default().max_depth)]
        max_depth: usize,
        #[arg(long, default_value_t = GbtParams::default().learning_rate)]
        learning_rate: f64,
        #[arg(long, default_value_t = GbtParams::default().colsample_bytree)]
        colsample_bytree: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Per-round training loss as CSV.
        #[arg(long)]
        loss_out: Option<PathBuf>,
    },
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LassoCommand {
    /// Fit the lambda path, choose lambda by cross-validated AUC and write
    /// the chosen coefficients.
    Fit {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = LassoOptions::default().n_lambdas)]
        n_lambdas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cross-validation curve as CSV.
        #[arg(long)]
        cv_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ClusterCommand {
    /// Cluster rows by their missingness pattern.
    Kmeans {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = cluster::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// WCSS for a range of k, as `lo:hi`.
    Elbow {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "1:40")]
        k_range: String,
        #[arg(long, default_value_t = cluster::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 1000)]
    burnin: usize,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ChainArgs {
    fn spec(&self) -> BayesLogisticSpec {
        BayesLogisticSpec {
            n_chains: self.chains,
            n_burnin: self.burnin,
            n_samples: self.samples,
            thin: self.thin,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum BayesCommand {
    /// Sample the posterior of a logistic regression.
    Fit {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        chains: ChainArgs,
        #[arg(long, default_value_t = 1e-4)]
        prior_precision: f64,
        /// Flat prior on the baseline probability instead of a normal prior
        /// on the intercept.
        #[arg(long)]
        uniform_intercept: bool,
        /// Posterior summary CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Long-format draws CSV.
        #[arg(long)]
        draws_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum StackCommand {
    /// Fit base tree models and a level-2 model on their out-of-fold
    /// probabilities.
    Fit {
        #[command(flatten)]
        input: Input,
        /// Held-out data to score.
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long, default_value = "glm")]
        level2: Level2Kind,
        #[arg(long, default_value_t = stack::DEFAULT_OOF_FOLDS)]
        folds: usize,
        #[arg(long)]
        n_trees: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        sample_seeds: Vec<u64>,
        #[arg(long)]
        undersample_ratio: Option<f64>,
        #[arg(long, default_value_t = metrics::DEFAULT_GRID_STEP)]
        grid_step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ReliabilityCommand {
    /// Draw Weibull lifetimes with a linear scale model on U(0,1) covariates.
    Simulate {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        shape: f64,
        #[arg(long, value_delimiter = ',', default_value = "5,1,-1,0.5")]
        coefficients: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the posterior of shape and scale coefficients.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        chains: ChainArgs,
        #[arg(long, default_value_t = 10.0)]
        log_shape_prior_sd: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        draws_out: Option<PathBuf>,
    },
    /// Posterior lifetime quantile at a covariate vector.
    Quantile {
        /// Draws CSV written by `reliability fit`.
        #[arg(long)]
        draws: PathBuf,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Data(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn probabilities_csv(d: &Dataset, probs: &[f64]) -> String {
    let rows: Vec<Vec<String>> = (0..d.n_rows())
        .map(|i| {
            let mut r = vec![d.ids()[i].to_string()];
            if let Some(l) = d.labels() {
                r.push(l[i].to_string());
            }
            r.push(probs[i].to_string());
            r
        })
        .collect();
    let header: &[&str] = if d.labels().is_some() { &["Id", "Response", "probability"] } else { &["Id", "probability"] };
    csv_text(header, &rows)
}

fn write_sweep(dir: &Path, labels: &[u8], probs: &[f64], grid_step: f64, svg: bool) -> Result<f64> {
    let roc = metrics::roc_auc(labels, probs)?;
    let roc_csv = csv_text(
        &["fpr", "tpr"],
        &roc.points.iter().map(|(f, t)| vec![f.to_string(), t.to_string()]).collect::<Vec<_>>(),
    );
    let sweep = metrics::mcc_sweep(labels, probs, grid_step)?;
    let sweep_csv = csv_text(
        &["threshold", "mcc"],
        &sweep
            .thresholds
            .iter()
            .zip(&sweep.mcc_values)
            .map(|(t, m)| vec![t.to_string(), m.to_string()])
            .collect::<Vec<_>>(),
    );
    emit(Some(&dir.join("roc.csv")), &roc_csv)?;
    emit(Some(&dir.join("mcc_sweep.csv")), &sweep_csv)?;
    if svg {
        emit(Some(&dir.join("roc.svg")), &plot::render_csv(&roc_csv, PlotKind::Roc)?)?;
        emit(Some(&dir.join("mcc_sweep.svg")), &plot::render_csv(&sweep_csv, PlotKind::Line)?)?;
    }
    println!("auc={} best_threshold={} best_mcc={}", roc.auc, sweep.best_threshold, sweep.best_mcc);
    Ok(roc.auc)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Data(format!("cannot create {}: {e}", dir.display())))
}

fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("k range `{s}` should look like 1:40"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = pipeline::ExperimentConfig::load(&config)?;
            let report = pipeline::run(&cfg)?;
            println!("wrote {} ({} stages)", report.output_dir.display(), report.manifest.entries.len());
        }
        Command::Plot { kind, input, out } => {
            let svg = plot::render_csv(&read(&input)?, kind)?;
            emit(Some(&out), &svg)?;
        }
        Command::Data(a) => {
            let d = a.input.load()?;
            let d = match a.undersample_ratio {
                Some(r) => dataio::undersample(&d, r, a.seed)?,
                None => d,
            };
            emit(a.out.as_deref(), &dataio::dataset_to_csv(&d)?)?;
        }
        Command::Synth(a) => {
            let spec = SyntheticSpec::new(a.n_rows, a.n_features, a.positive_rate, a.seed)
                .with_coefficients(a.coefficients)
                .with_missingness(MissingnessSpec {
                    n_part_types: a.part_types,
                    shared_features: a.shared_features,
                    overlap: 0,
                    flip_prob: a.flip_prob,
                });
            emit(a.out.as_deref(), &dataio::dataset_to_csv(&dataio::make_synthetic(&spec)?)?)?;
        }
        Command::Metrics(a) => {
            let schema = Schema::new()
                .with(a.label_column.clone(), dataio::ColumnRole::Label)
                .with(a.prob_column.clone(), dataio::ColumnRole::Feature(dataio::ColumnKind::Numeric));
            let d = dataio::load_csv(&a.input, &schema)?;
            let labels = d.require_labels()?;
            let j = d.column_index(&a.prob_column)?;
            let probs = d
                .column_values(j)
                .into_iter()
                .map(|v| v.ok_or_else(|| Error::Data(format!("missing value in `{}`", a.prob_column))))
                .collect::<Result<Vec<f64>>>()?;
            create_dir(&a.out_dir)?;
            write_sweep(&a.out_dir, labels, &probs, a.grid_step, a.svg)?;
        }
        Command::Gbt(c) => run_gbt(c)?,
        Command::Lasso(LassoCommand::Fit {
            input,
            folds,
            n_lambdas,
            seed,
            out,
            cv_out,
        }) => {
            let d = input.load()?;
            let opts = LassoOptions {
                n_lambdas,
                ..Default::default()
            };
            let path = lasso::fit_path(&d, &opts)?;
            let cv = lasso::cross_validate(&d, &path, folds, seed, &opts)?;
            let model = &path.models[cv.best_index];
            if let Some(p) = cv_out {
                let rows: Vec<Vec<String>> = (0..cv.lambdas.len())
                    .map(|l| {
                        vec![
                            cv.lambdas[l].to_string(),
                            cv.mean_auc[l].to_string(),
                            cv.se_auc[l].to_string(),
                            path.nonzero_counts[l].to_string(),
                        ]
                    })
                    .collect();
                emit(Some(&p), &csv_text(&["lambda", "mean_auc", "se_auc", "nonzero"], &rows))?;
            }
            eprintln!("lambda={} cv_auc={} nonzero={}", cv.lambda_best, cv.mean_auc[cv.best_index], model.nonzero_count());
            emit(out.as_deref(), &model.coefficients_csv())?;
        }
        Command::Cluster(c) => run_cluster(c)?,
        Command::Bayes(BayesCommand::Fit {
            input,
            chains,
            prior_precision,
            uniform_intercept,
            out,
            draws_out,
        }) => {
            let d = input.load()?;
            let spec = BayesLogisticSpec {
                prior_precision,
                intercept_prior: if uniform_intercept {
                    InterceptPrior::UniformProbability
                } else {
                    InterceptPrior::Normal
                },
                ..chains.spec()
            };
            let fit = bayes::sample(&d, &spec)?;
            if let Some(p) = draws_out {
                emit(Some(&p), &bayes::write_draws_csv(&fit.samples))?;
            }
            let summary = bayes::summarize(&fit.samples)?;
            eprintln!("max_rhat={}", summary.max_rhat());
            emit(out.as_deref(), &summary.to_csv())?;
        }
        Command::Stack(StackCommand::Fit {
            input,
            validation,
            level2,
            folds,
            n_trees,
            sample_seeds,
            undersample_ratio,
            grid_step,
            seed,
            out_dir,
        }) => {
            let schema = input.schema.clone();
            let d = input.load()?;
            let base_configs = GbtParams::stacking_sets()
                .into_iter()
                .enumerate()
                .map(|(k, p)| GbtParams {
                    n_trees: n_trees.unwrap_or(p.n_trees),
                    seed: rng::derive_seed(seed, k as u64),
                    ..p
                })
                .collect();
            let spec = StackSpec {
                base_configs,
                base_sample_seeds: sample_seeds,
                undersample_ratio,
                level2,
                oof_folds: folds,
                seed,
                bayes: BayesLogisticSpec {
                    n_burnin: 500,
                    n_samples: 1000,
                    seed,
                    ..Default::default()
                },
                ..Default::default()
            };
            let model = stack::fit_stack(&d, &spec)?;
            create_dir(&out_dir)?;
            let names = stack::base_names(model.base_models.len());
            let oof = model.oof_auc()?;
            let held_out = match &validation {
                Some(p) => Some(Input { input: p.clone(), schema }.load()?),
                None => None,
            };
            let mut rows = Vec::new();
            let mut scored: Vec<(String, Vec<f64>)> = Vec::new();
            let labels = held_out.as_ref().map(|v| v.require_labels()).transpose()?;
            if let (Some(v), Some(labels)) = (&held_out, labels) {
                let base = stack::base_probabilities(&model, v)?;
                for j in 0..names.len() {
                    let p: Vec<f64> = base.column_values(j).into_iter().map(|x| x.unwrap_or(0.5)).collect();
                    scored.push((names[j].clone(), p));
                }
                scored.push(("stack".to_string(), stack::predict_level2(&model, &base)?));
                for (name, p) in &scored {
                    let oof_auc = if name == "stack" {
                        model.level2_oof_auc()?
                    } else {
                        oof[names.iter().position(|n| n == name).unwrap_or(0)]
                    };
                    rows.push(vec![name.clone(), oof_auc.to_string(), metrics::auc(labels, p)?.to_string()]);
                    let sweep = metrics::mcc_sweep(labels, p, grid_step)?;
                    let sweep_rows: Vec<Vec<String>> = sweep
                        .thresholds
                        .iter()
                        .zip(&sweep.mcc_values)
                        .map(|(t, m)| vec![t.to_string(), m.to_string()])
                        .collect();
                    emit(Some(&out_dir.join(format!("mcc_sweep_{name}.csv"))), &csv_text(&["threshold", "mcc"], &sweep_rows))?;
                }
                emit(Some(&out_dir.join("auc.csv")), &csv_text(&["model", "oof_auc", "validation_auc"], &rows))?;
            } else {
                for (j, name) in names.iter().enumerate() {
                    rows.push(vec![name.clone(), oof[j].to_string()]);
                }
                rows.push(vec!["stack".to_string(), model.level2_oof_auc()?.to_string()]);
                emit(Some(&out_dir.join("auc.csv")), &csv_text(&["model", "oof_auc"], &rows))?;
            }
            emit(Some(&out_dir.join("level2.csv")), &model.level2.point().coefficients_csv())?;
            emit(Some(&out_dir.join("oof.csv")), &dataio::dataset_to_csv(&model.oof)?)?;
        }
        Command::Reliability(c) => run_reliability(c)?,
    }
    Ok(())
}

fn run_gbt(c: GbtCommand) -> Result<()> {
    match c {
        GbtCommand::Fit {
            input,
            n_trees,
            max_depth,
            learning_rate,
            colsample_bytree,
            seed,
            out,
            loss_out,
        } => {
            let d = input.load()?;
            let params = GbtParams {
                n_trees,
                max_depth,
                learning_rate,
                colsample_bytree,
                seed,
                ..Default::default()
            };
            let (model, losses) = gbt::fit_with_trace(&d, &params)?;
            if let Some(p) = loss_out {
                let rows: Vec<Vec<String>> =
                    losses.iter().enumerate().map(|(i, l)| vec![i.to_string(), l.to_string()]).collect();
                emit(Some(&p), &csv_text(&["round", "loss"], &rows))?;
            }
            emit(Some(&out), &gbt::write_model(&model))
        }
        GbtCommand::Predict { model, input, out } => {
            let m = gbt::read_model(&read(&model)?)?;
            let d = input.load()?;
            let probs = gbt::predict_proba(&m, &d)?;
            emit(out.as_deref(), &probabilities_csv(&d, &probs))
        }
        GbtCommand::Importance { model, top_k, out } => {
            let m = gbt::read_model(&read(&model)?)?;
            let fi = gbt::importance(&m);
            let order = gbt::top_k_features(&fi, top_k.unwrap_or(fi.gains.len()));
            let rows: Vec<Vec<String>> = order
                .iter()
                .map(|&j| vec![fi.feature_names[j].clone(), fi.gains[j].to_string()])
                .collect();
            emit(out.as_deref(), &csv_text(&["feature", "gain"], &rows))
        }
    }
}

fn run_cluster(c: ClusterCommand) -> Result<()> {
    match c {
        ClusterCommand::Kmeans {
            input,
            k,
            restarts,
            seed,
            out,
        } => {
            let d = input.load()?;
            let points = d.mask().to_points();
            let r = cluster::kmeans_best_of(&points, k, seed, restarts, cluster::DEFAULT_MAX_ITER)?;
            eprintln!("k={} wcss={} iterations={}", r.k(), r.wcss, r.iterations);
            let rows: Vec<Vec<String>> = d
                .ids()
                .iter()
                .zip(&r.assignments)
                .map(|(id, a)| vec![id.to_string(), a.to_string()])
                .collect();
            emit(out.as_deref(), &csv_text(&["Id", "cluster"], &rows))
        }
        ClusterCommand::Elbow {
            input,
            k_range,
            restarts,
            seed,
            out,
        } => {
            let d = input.load()?;
            let ks = parse_k_range(&k_range)?;
            let curve = cluster::elbow(&d.mask().to_points(), &ks, seed, restarts, cluster::DEFAULT_MAX_ITER)?;
            if let Some(k) = cluster::knee(&curve) {
                eprintln!("knee={k}");
            }
            let rows: Vec<Vec<String>> = curve.iter().map(|p| vec![p.k.to_string(), p.wcss.to_string()]).collect();
            emit(out.as_deref(), &csv_text(&["k", "wcss"], &rows))
        }
    }
}

fn run_reliability(c: ReliabilityCommand) -> Result<()> {
    match c {
        ReliabilityCommand::Simulate {
            n,
            shape,
            coefficients,
            seed,
            out,
        } => {
            let m = WeibullModel::new(shape, coefficients)?;
            let mut r = rng::rng(rng::derive_seed(seed, 0));
            let x: Vec<Vec<f64>> =
                (0..n).map(|_| (0..m.n_covariates()).map(|_| r.random::<f64>()).collect()).collect();
            let data = reliability::simulate(&m, &x, rng::derive_seed(seed, 1))?;
            emit(out.as_deref(), &data.to_csv())
        }
        ReliabilityCommand::Fit {
            input,
            chains,
            log_shape_prior_sd,
            out,
            draws_out,
        } => {
            let data = LifetimeData::from_csv(&read(&input)?)?;
            let spec = ReliabilitySpec {
                bayes: chains.spec(),
                log_shape_prior_sd,
                ..Default::default()
            };
            let s = reliability::fit_bayes(&data, &spec)?;
            if let Some(p) = draws_out {
                emit(Some(&p), &bayes::write_draws_csv(&s))?;
            }
            let summary = bayes::summarize(&s)?;
            eprintln!("max_rhat={}", summary.max_rhat());
            emit(out.as_deref(), &summary.to_csv())
        }
        ReliabilityCommand::Quantile { draws, x, q } => {
            let s = bayes::read_draws_csv(&read(&draws)?)?;
            let p = reliability::lifetime_predictive(&s, &x, q)?;
            println!("q,lifetime,draws_used,draws_excluded");
            println!("{},{},{},{}", q, p.quantile, p.n_used, p.n_excluded);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error: kind={} msg={msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
