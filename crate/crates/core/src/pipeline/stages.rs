use rand::Rng;

use super::config::{DataSource, ExperimentConfig, Stage};
use super::OutputDir;
use crate::bayes::{self, BayesLogisticSpec};
use crate::cluster::{self, ImputationReport};
use crate::dataio::{
    self, dataset_to_csv, load_csv, make_synthetic, train_validation_split, undersample, Dataset, Schema, SplitSpec,
    SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::gbt::{self, GbtParams};
use crate::lasso::{self, GlmModel};
use crate::metrics;
use crate::plot::{self, PlotKind};
use crate::reliability::{self, ReliabilitySpec, WeibullModel};
use crate::rng;
use crate::stack::{self, StackSpec};

/// NA-free rows for the GLM-type stages.
#[derive(Debug, Clone)]
struct GlmData {
    train: Dataset,
    validation: Dataset,
}

#[derive(Debug, Default)]
pub(crate) struct Context {
    train: Option<Dataset>,
    validation: Option<Dataset>,
    gbt_validation: Option<Vec<f64>>,
    glm: Option<GlmData>,
    lasso: Option<GlmModel>,
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("{what} is not available; check the stage order")))
}

fn table<R: IntoIterator<Item = String>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn svg(out: &mut OutputDir, name: &str, csv_text: &str, kind: PlotKind) -> Result<()> {
    out.write(name, plot::render_csv(csv_text, kind)?)
}

/// AUC, or NaN when the labels hold a single class.
fn auc_or_nan(labels: &[u8], probs: &[f64]) -> Result<f64> {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == labels.len() {
        return Ok(f64::NAN);
    }
    metrics::auc(labels, probs)
}

pub(crate) fn run_stage(stage: Stage, cfg: &ExperimentConfig, seed: u64, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    match stage {
        Stage::Dataio => run_dataio(cfg, seed, ctx, out),
        Stage::Gbt => run_gbt(cfg, seed, ctx, out),
        Stage::Metrics => run_metrics(cfg, ctx, out),
        Stage::Cluster => run_cluster(cfg, seed, ctx, out),
        Stage::Lasso => run_lasso(cfg, seed, ctx, out),
        Stage::Bayes => run_bayes(cfg, seed, ctx, out),
        Stage::Stack => run_stack(cfg, seed, ctx, out),
        Stage::Reliability => run_reliability(cfg, seed, out),
    }
}

fn run_dataio(cfg: &ExperimentConfig, seed: u64, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    let d = match &cfg.data.source {
        DataSource::Synthetic(spec) => make_synthetic(&SyntheticSpec { seed, ..spec.clone() })?,
        DataSource::Csv { path, schema } => {
            let schema = match schema {
                Some(p) => Schema::load(p)?,
                None => Schema::new(),
            };
            load_csv(path, &schema)?
        }
    };
    let d = dataio::prepare_features(&d)?;
    d.require_labels()?;
    let split = SplitSpec::new(cfg.data.validation_fraction, rng::derive_seed(seed, 0))?;
    let (train, validation) = train_validation_split(&d, &split)?;
    let train = match cfg.data.undersample_ratio {
        Some(r) => undersample(&train, r, rng::derive_seed(seed, 1))?,
        None => train,
    };
    out.write("train.csv", dataset_to_csv(&train)?)?;
    out.write("validation.csv", dataset_to_csv(&validation)?)?;
    let summary = table(
        &["split", "rows", "features", "positives", "na_cells"],
        [("train", &train), ("validation", &validation)].iter().map(|(name, s)| {
            let pos = s.labels().map_or(0, |l| l.iter().filter(|&&y| y == 1).count());
            vec![
                name.to_string(),
                s.n_rows().to_string(),
                s.n_cols().to_string(),
                pos.to_string(),
                s.na_count().to_string(),
            ]
        }),
    )?;
    out.write("data_summary.csv", summary)?;
    ctx.train = Some(train);
    ctx.validation = Some(validation);
    Ok(())
}

fn run_gbt(cfg: &ExperimentConfig, seed: u64, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    let train = need(&ctx.train, "training data")?;
    let validation = need(&ctx.validation, "validation data")?;
    let params = GbtParams {
        seed,
        ..cfg.gbt.params.clone()
    };
    let (model, losses) = gbt::fit_with_trace(train, &params)?;
    out.write("gbt_model.txt", gbt::write_model(&model))?;
    let loss_csv = table(
        &["round", "loss"],
        losses.iter().enumerate().map(|(i, l)| vec![i.to_string(), l.to_string()]),
    )?;
    svg(out, "gbt_loss.svg", &loss_csv, PlotKind::Line)?;
    out.write("gbt_loss.csv", loss_csv)?;

    let fi = gbt::importance(&model);
    let order = gbt::top_k_features(&fi, fi.gains.len());
    let top: Vec<usize> = order.iter().copied().take(cfg.gbt.top_k).collect();
    out.write(
        "gbt_importance.csv",
        table(
            &["rank", "feature", "gain"],
            order
                .iter()
                .enumerate()
                .map(|(r, &j)| vec![(r + 1).to_string(), fi.feature_names[j].clone(), fi.gains[j].to_string()]),
        )?,
    )?;
    let top_csv = table(
        &["rank", "gain"],
        top.iter().enumerate().map(|(r, &j)| vec![(r + 1).to_string(), fi.gains[j].to_string()]),
    )?;
    if !top.is_empty() {
        svg(out, "gbt_importance.svg", &top_csv, PlotKind::Line)?;
    }

    let probs = gbt::predict_proba(&model, validation)?;
    let labels = validation.require_labels()?;
    out.write(
        "gbt_validation_predictions.csv",
        table(
            &["Id", "Response", "probability"],
            (0..validation.n_rows()).map(|i| {
                vec![validation.ids()[i].to_string(), labels[i].to_string(), probs[i].to_string()]
            }),
        )?,
    )?;
    ctx.gbt_validation = Some(probs);
    Ok(())
}

fn run_metrics(cfg: &ExperimentConfig, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    let validation = need(&ctx.validation, "validation data")?;
    let probs = need(&ctx.gbt_validation, "gbt validation predictions")?;
    let labels = validation.require_labels()?;
    let roc = metrics::roc_auc(labels, probs)?;
    let roc_csv = table(
        &["fpr", "tpr"],
        roc.points.iter().map(|&(f, t)| vec![f.to_string(), t.to_string()]),
    )?;
    svg(out, "roc.svg", &roc_csv, PlotKind::Roc)?;
    out.write("roc.csv", roc_csv)?;
    let sweep = metrics::mcc_sweep(labels, probs, cfg.grid_step)?;
    let sweep_csv = table(
        &["threshold", "mcc"],
        sweep
            .thresholds
            .iter()
            .zip(&sweep.mcc_values)
            .map(|(t, m)| vec![t.to_string(), m.to_string()]),
    )?;
    svg(out, "mcc_sweep.svg", &sweep_csv, PlotKind::Line)?;
    out.write("mcc_sweep.csv", sweep_csv)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    out.write(
        "metrics_summary.csv",
        table(
            &["metric", "value"],
            [
                ("auc", roc.auc),
                ("best_threshold", sweep.best_threshold),
                ("best_mcc", sweep.best_mcc),
                ("n_validation", labels.len() as f64),
                ("n_positive", pos as f64),
            ]
            .iter()
            .map(|(k, v)| vec![k.to_string(), v.to_string()]),
        )?,
    )?;
    Ok(())
}

/// Keep the report's columns and fill NA with its medians.
fn impute_like(d: &Dataset, report: &ImputationReport) -> Result<Dataset> {
    let sel = d.select_columns_by_name(&report.retained_columns)?;
    let rows: Vec<Vec<Option<f64>>> = (0..sel.n_rows())
        .map(|i| {
            sel.row(i)
                .iter()
                .zip(&report.medians)
                .map(|(v, m)| Some(v.unwrap_or(*m)))
                .collect()
        })
        .collect();
    Dataset::new(sel.ids().to_vec(), sel.columns().to_vec(), rows, sel.labels().map(|l| l.to_vec()))
}

fn write_imputation(out: &mut OutputDir, report: &ImputationReport) -> Result<()> {
    out.write(
        "imputation.csv",
        table(
            &["column", "median", "imputed"],
            (0..report.retained_columns.len()).map(|j| {
                vec![
                    report.retained_columns[j].clone(),
                    report.medians[j].to_string(),
                    report.imputed_counts[j].to_string(),
                ]
            }),
        )?,
    )?;
    out.write(
        "dropped.csv",
        table(
            &["kind", "name"],
            report
                .dropped_columns
                .iter()
                .map(|c| vec!["column".to_string(), c.clone()])
                .chain(report.dropped_rows.iter().map(|r| vec!["row".to_string(), r.to_string()])),
        )?,
    )
}

fn run_cluster(cfg: &ExperimentConfig, seed: u64, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    let c = &cfg.cluster;
    let train = need(&ctx.train, "training data")?;
    let validation = need(&ctx.validation, "validation data")?;
    let train = if c.max_features > 0 {
        cluster::subsample_features(train, c.max_features, rng::derive_seed(seed, 0))
    } else {
        train.clone()
    };
    let points = train.mask().to_points();
    let k_max = c.k_max.min(points.len());
    let ks: Vec<usize> = (c.k_min..=k_max).collect();
    let curve = cluster::elbow(&points, &ks, rng::derive_seed(seed, 1), c.restarts, c.max_iter)?;
    let elbow_csv = table(
        &["k", "wcss"],
        curve.iter().map(|p| vec![p.k.to_string(), p.wcss.to_string()]),
    )?;
    svg(out, "elbow.svg", &elbow_csv, PlotKind::Line)?;
    out.write("elbow.csv", elbow_csv)?;

    let k = c.k.or_else(|| cluster::knee(&curve)).unwrap_or(k_max).min(points.len());
    let r = cluster::kmeans_best_of(&points, k, rng::derive_seed(seed, 2), c.restarts, c.max_iter)?;
    out.write(
        "cluster_assignments.csv",
        table(
            &["Id", "cluster"],
            train.ids().iter().zip(&r.assignments).map(|(id, a)| vec![id.to_string(), a.to_string()]),
        )?,
    )?;
    let sizes = r.cluster_sizes();
    out.write(
        "cluster_sizes.csv",
        table(
            &["cluster", "size"],
            sizes.iter().enumerate().map(|(j, s)| vec![j.to_string(), s.to_string()]),
        )?,
    )?;
    let cid = match c.cluster_id {
        Some(id) => id,
        None => (0..sizes.len()).fold(0, |b, j| if sizes[j] > sizes[b] { j } else { b }),
    };
    let members = cluster::select_cluster(&train, &r, cid)?;
    let (glm_train, report) = cluster::filter_and_impute(&members, c.col_na_max, c.row_na_max)?;
    write_imputation(out, &report)?;

    let val = validation.select_columns_by_name(&train.column_names())?;
    let val_assign = cluster::assign_nearest(&val.mask().to_points(), &r.centroids);
    let rows: Vec<usize> = (0..val.n_rows()).filter(|&i| val_assign[i] == cid).collect();
    let glm_validation = impute_like(&val.select_rows(&rows), &report)?;
    out.write(
        "cluster_summary.csv",
        table(
            &["metric", "value"],
            [
                ("k", k.to_string()),
                ("selected_cluster", cid.to_string()),
                ("train_rows", glm_train.n_rows().to_string()),
                ("validation_rows", glm_validation.n_rows().to_string()),
                ("features", glm_train.n_cols().to_string()),
            ]
            .into_iter()
            .map(|(a, b)| vec![a.to_string(), b]),
        )?,
    )?;
    ctx.glm = Some(GlmData {
        train: glm_train,
        validation: glm_validation,
    });
    Ok(())
}

/// The clustered GLM data, or the whole training set filtered and imputed.
fn glm_data(cfg: &ExperimentConfig, ctx: &mut Context, out: &mut OutputDir) -> Result<GlmData> {
    if let Some(g) = &ctx.glm {
        return Ok(g.clone());
    }
    let train = need(&ctx.train, "training data")?;
    let validation = need(&ctx.validation, "validation data")?;
    let (t, report) = cluster::filter_and_impute(train, cfg.cluster.col_na_max, cfg.cluster.row_na_max)?;
    write_imputation(out, &report)?;
    let g = GlmData {
        train: t,
        validation: impute_like(validation, &report)?,
    };
    ctx.glm = Some(g.clone());
    Ok(g)
}

fn run_lasso(cfg: &ExperimentConfig, seed: u64, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    let g = glm_data(cfg, ctx, out)?;
    let opts = &cfg.lasso.options;
    let path = lasso::fit_path(&g.train, opts)?;
    let cv = lasso::cross_validate(&g.train, &path, cfg.lasso.cv_folds, seed, opts)?;
    let path_csv = table(
        &["log_lambda", "nonzero"],
        path.lambdas
            .iter()
            .zip(&path.nonzero_counts)
            .map(|(l, n)| vec![l.ln().to_string(), n.to_string()]),
    )?;
    svg(out, "lasso_path.svg", &path_csv, PlotKind::Line)?;
    out.write("lasso_path.csv", path_csv)?;
    let cv_csv = table(
        &["log_lambda", "mean_auc", "se_auc"],
        (0..cv.lambdas.len()).map(|l| {
            vec![
                cv.lambdas[l].ln().to_string(),
                cv.mean_auc[l].to_string(),
                cv.se_auc[l].to_string(),
            ]
        }),
    )?;
    let cv_plot: String = cv_csv
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(a, _)| a).to_string() + "\n")
        .collect();
    svg(out, "lasso_cv.svg", &cv_plot, PlotKind::Line)?;
    out.write("lasso_cv.csv", cv_csv)?;

    let model = path.models[cv.best_index].clone();
    out.write("lasso_coefficients.csv", model.coefficients_csv())?;
    let val_auc = match g.validation.labels() {
        Some(l) if g.validation.n_rows() > 0 => auc_or_nan(l, &lasso::predict_proba(&model, &g.validation)?)?,
        _ => f64::NAN,
    };
    out.write(
        "lasso_summary.csv",
        table(
            &["metric", "value"],
            [
                ("lambda_best", cv.lambda_best),
                ("cv_auc", cv.mean_auc[cv.best_index]),
                ("nonzero", model.nonzero_count() as f64),
                ("validation_auc", val_auc),
            ]
            .iter()
            .map(|(k, v)| vec![k.to_string(), v.to_string()]),
        )?,
    )?;
    ctx.lasso = Some(model);
    Ok(())
}

fn run_bayes(cfg: &ExperimentConfig, seed: u64, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    let g = glm_data(cfg, ctx, out)?;
    let max = cfg.bayes.max_features;
    let features: Vec<String> = match &ctx.lasso {
        Some(m) => {
            let mut idx: Vec<usize> = (0..m.coefficients.len()).filter(|&j| m.coefficients[j] != 0.0).collect();
            let size = |j: usize| (m.coefficients[j] * m.feature_sds[j]).abs();
            idx.sort_by(|&a, &b| size(b).total_cmp(&size(a)).then(a.cmp(&b)));
            idx.truncate(max);
            idx.sort_unstable();
            idx.iter().map(|&j| m.feature_names[j].clone()).collect()
        }
        None => g.train.column_names().into_iter().take(max).collect(),
    };
    let d = g.train.select_columns_by_name(&features)?;
    let spec = BayesLogisticSpec {
        seed,
        ..cfg.bayes.spec.clone()
    };
    let fit = bayes::sample(&d, &spec)?;
    let summary = bayes::summarize(&fit.samples)?;
    out.write("bayes_summary.csv", summary.to_csv())?;
    out.write(
        "bayes_parameters.csv",
        table(
            &["parameter", "feature", "acceptance_rate"],
            fit.samples.names.iter().enumerate().map(|(j, n)| {
                let f = if j == 0 { "(Intercept)".to_string() } else { features[j - 1].clone() };
                vec![n.clone(), f, fit.samples.acceptance_rates[j].to_string()]
            }),
        )?,
    )?;
    out.write("bayes_draws.csv", bayes::write_draws_csv(&fit.samples))?;
    write_posterior_plots(out, "bayes", &fit.samples, "b0", 1)?;

    let val = g.validation.select_columns_by_name(&features)?;
    if val.n_rows() > 0 {
        let pred = fit.predictive_probabilities(&val)?;
        let mut rows = Vec::with_capacity(val.n_rows());
        let mut means = Vec::with_capacity(val.n_rows());
        for (i, p) in pred.iter().enumerate() {
            let mut s = p.clone();
            s.sort_by(|a, b| a.total_cmp(b));
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            means.push(mean);
            rows.push(vec![
                val.ids()[i].to_string(),
                mean.to_string(),
                crate::math::quantile_sorted(&s, 0.025).to_string(),
                crate::math::quantile_sorted(&s, 0.975).to_string(),
            ]);
        }
        out.write("bayes_predictive.csv", table(&["Id", "mean", "q2.5", "q97.5"], rows)?)?;
        let auc = auc_or_nan(val.require_labels()?, &means)?;
        out.write("bayes_validation.csv", table(&["metric", "value"], [vec!["auc".to_string(), auc.to_string()]])?)?;
    }
    Ok(())
}

/// Trace and density of `trace_param`, and boxplots of parameters from
/// index `box_from` on.
fn write_posterior_plots(
    out: &mut OutputDir,
    prefix: &str,
    s: &bayes::PosteriorSamples,
    trace_param: &str,
    box_from: usize,
) -> Result<()> {
    let trace = bayes::trace_export(s, trace_param)?;
    let trace_csv = table(
        &["chain", "iteration", trace_param],
        trace
            .iter()
            .enumerate()
            .flat_map(|(c, t)| t.iter().map(move |(i, v)| vec![(c + 1).to_string(), i.to_string(), v.to_string()])),
    )?;
    svg(out, &format!("{prefix}_trace_{trace_param}.svg"), &trace_csv, PlotKind::Trace)?;
    let j = s.param_index(trace_param)?;
    let density_csv = table(&[trace_param], s.pooled(j).iter().map(|v| vec![v.to_string()]))?;
    svg(out, &format!("{prefix}_density_{trace_param}.svg"), &density_csv, PlotKind::Density)?;
    if s.names.len() > box_from {
        let box_csv = table(
            &["parameter", "value"],
            (box_from..s.names.len()).flat_map(|j| s.pooled(j).into_iter().map(move |v| vec![s.names[j].clone(), v.to_string()])),
        )?;
        svg(out, &format!("{prefix}_boxplot.svg"), &box_csv, PlotKind::Boxplot)?;
    }
    Ok(())
}

fn run_stack(cfg: &ExperimentConfig, seed: u64, ctx: &mut Context, out: &mut OutputDir) -> Result<()> {
    let c = &cfg.stack;
    let train = need(&ctx.train, "training data")?;
    let validation = need(&ctx.validation, "validation data")?;
    let base_configs: Vec<GbtParams> = GbtParams::stacking_sets()
        .into_iter()
        .enumerate()
        .map(|(k, p)| GbtParams {
            n_trees: c.n_trees,
            learning_rate: c.learning_rate,
            seed: rng::derive_seed(seed, k as u64),
            ..p
        })
        .collect();
    let spec = StackSpec {
        base_configs,
        base_sample_seeds: c.sample_seeds.clone(),
        undersample_ratio: c.undersample_ratio,
        level2: c.level2,
        oof_folds: c.oof_folds,
        cv_folds: c.cv_folds,
        seed,
        lasso: cfg.lasso.options.clone(),
        bayes: BayesLogisticSpec {
            seed: rng::derive_seed(seed, 100),
            ..c.bayes.clone()
        },
    };
    let model = stack::fit_stack(train, &spec)?;
    let oof_auc = model.oof_auc()?;
    let val_base = stack::base_probabilities(&model, validation)?;
    let stacked = stack::predict_level2(&model, &val_base)?;
    let labels = validation.require_labels()?;
    let names = stack::base_names(model.base_models.len());
    let mut auc_rows = Vec::new();
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let p: Vec<f64> = val_base.column_values(j).into_iter().map(|v| v.unwrap_or(0.5)).collect();
        auc_rows.push(vec![name.clone(), oof_auc[j].to_string(), auc_or_nan(labels, &p)?.to_string()]);
        series.push((name.clone(), p));
    }
    auc_rows.push(vec![
        "stack".to_string(),
        model.level2_oof_auc()?.to_string(),
        auc_or_nan(labels, &stacked)?.to_string(),
    ]);
    series.push(("stack".to_string(), stacked.clone()));
    out.write("stack_auc.csv", table(&["model", "oof_auc", "validation_auc"], auc_rows)?)?;
    out.write("stack_level2.csv", model.level2.point().coefficients_csv())?;

    let mut sweep_rows = Vec::new();
    for (name, p) in &series {
        let s = metrics::mcc_sweep(labels, p, cfg.grid_step)?;
        for (t, m) in s.thresholds.iter().zip(&s.mcc_values) {
            sweep_rows.push(vec![name.clone(), t.to_string(), m.to_string()]);
        }
    }
    let sweep_csv = table(&["model", "threshold", "mcc"], sweep_rows)?;
    svg(out, "stack_mcc_sweep.svg", &sweep_csv, PlotKind::Line)?;
    out.write("stack_mcc_sweep.csv", sweep_csv)?;

    let mut header: Vec<&str> = vec!["Id", "Response"];
    header.extend(names.iter().map(String::as_str));
    header.push("stack");
    out.write(
        "stack_validation_predictions.csv",
        table(
            &header,
            (0..validation.n_rows()).map(|i| {
                let mut r = vec![validation.ids()[i].to_string(), labels[i].to_string()];
                r.extend(series.iter().map(|(_, p)| p[i].to_string()));
                r
            }),
        )?,
    )?;
    if let stack::Level2Model::Bayes { fit, .. } = &model.level2 {
        out.write("stack_level2_draws.csv", bayes::write_draws_csv(&fit.samples))?;
    }
    Ok(())
}

fn run_reliability(cfg: &ExperimentConfig, seed: u64, out: &mut OutputDir) -> Result<()> {
    let c = &cfg.reliability;
    let model = WeibullModel::new(c.shape, c.coefficients.clone())?;
    let m = model.n_covariates();
    let mut r = rng::rng(rng::derive_seed(seed, 0));
    let x: Vec<Vec<f64>> = (0..c.n).map(|_| (0..m).map(|_| r.random::<f64>()).collect()).collect();
    let data = reliability::simulate(&model, &x, rng::derive_seed(seed, 1))?;
    out.write("lifetimes.csv", data.to_csv())?;
    let spec = ReliabilitySpec {
        bayes: BayesLogisticSpec {
            seed: rng::derive_seed(seed, 2),
            ..c.spec.clone()
        },
        log_shape_prior_mean: 0.0,
        log_shape_prior_sd: c.log_shape_prior_sd,
    };
    let s = reliability::fit_bayes(&data, &spec)?;
    let summary = bayes::summarize(&s)?;
    out.write("reliability_summary.csv", summary.to_csv())?;
    out.write("reliability_draws.csv", bayes::write_draws_csv(&s))?;
    write_posterior_plots(out, "reliability", &s, "shape", 1)?;

    let x_mid = vec![0.5; m];
    let rows = c
        .quantiles
        .iter()
        .map(|&q| {
            let p = reliability::lifetime_predictive(&s, &x_mid, q)?;
            let truth = reliability::weibull_quantile(q, model.shape, model.scale(&x_mid));
            Ok(vec![q.to_string(), p.quantile.to_string(), truth.to_string(), p.n_excluded.to_string()])
        })
        .collect::<Result<Vec<_>>>()?;
    out.write(
        "reliability_quantiles.csv",
        table(&["q", "posterior_lifetime", "true_lifetime", "excluded_draws"], rows)?,
    )
}
