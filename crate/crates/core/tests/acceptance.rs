//! End-to-end acceptance checks. Runs as a plain binary so the PASS/FAIL
//! line of every criterion is always printed.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use failfoundry::bayes::{self, BayesLogisticSpec, InterceptPrior};
use failfoundry::cluster;
use failfoundry::dataio::{generate, make_synthetic, Dataset, MissingnessSpec, SyntheticSpec};
use failfoundry::gbt::{self, GbtParams};
use failfoundry::lasso::{self, LassoOptions};
use failfoundry::metrics::{self, ConfusionMatrix};
use failfoundry::pipeline::{self, ExperimentConfig};
use failfoundry::reliability::{self, ReliabilitySpec, WeibullModel};
use failfoundry::stack::{self, StackSpec};
use rand::Rng;

fn within(start: Instant, limit_s: u64) {
    let t = start.elapsed();
    assert!(t < Duration::from_secs(limit_s), "took {:.1}s, limit {limit_s}s", t.as_secs_f64());
}

fn metrics_exactness() {
    let start = Instant::now();
    let mut r = rng(1001);
    for case in 0..1000 {
        let n = r.random_range(2..=500);
        let (labels, probs) = random_scores(&mut r, n);
        let auc = metrics::auc(&labels, &probs).unwrap();
        let oracle = pairwise_auc(&labels, &probs);
        assert!((auc - oracle).abs() <= 1e-12, "case {case}: auc {auc} vs {oracle}");
        for _ in 0..3 {
            let t = if r.random_bool(0.5) { probs[r.random_range(0..n)] } else { r.random() };
            let cm = metrics::confusion(&labels, &probs, t).unwrap();
            let (tp, tn, fp, fn_) = count_confusion(&labels, &probs, t);
            assert_eq!(cm, ConfusionMatrix::new(tp, tn, fp, fn_), "case {case}, threshold {t}");
            let m = metrics::mcc(&cm);
            assert!((m - mcc_exact(tp, tn, fp, fn_)).abs() <= 1e-12, "case {case}: mcc {m}");
        }
    }
    within(start, 10);
}

fn lasso_lambda_max() {
    let mut beta = vec![0.0; 12];
    beta[..4].copy_from_slice(&[1.2, -0.8, 0.5, 1.0]);
    let (x, y) = logistic_data(600, -0.7, &beta, 1002);
    let d = dataset(&x, &y);
    let opts = LassoOptions::default();
    let path = lasso::fit_path(&d, &opts).unwrap();
    assert_eq!(path.lambdas[0], lasso::lambda_max(&d).unwrap());
    assert!(path.models[0].coefficients.iter().all(|&b| b == 0.0), "{:?}", path.models[0].coefficients);
    for (l, m) in path.lambdas.iter().zip(&path.models) {
        let g = standardized_gradient(&x, &y, m.intercept, &m.coefficients);
        for (j, gj) in g.iter().enumerate() {
            assert!(gj.abs() <= l + 1e-6, "lambda {l}, x{j}: |grad| {}", gj.abs());
        }
    }
}

fn lasso_mle_agreement() {
    let start = Instant::now();
    let (x, y) = logistic_data(200, 0.4, &[0.9, -1.1, 0.6, 0.0, -0.4], 1003);
    let d = dataset(&x, &y);
    let m = lasso::fit_lambda(&d, 1e-8, &LassoOptions { tol: 1e-12, ..Default::default() }).unwrap();
    let mle = newton_mle(&x, &y);
    assert!((m.intercept - mle[0]).abs() < 1e-4, "intercept {} vs {}", m.intercept, mle[0]);
    for j in 0..5 {
        assert!((m.coefficients[j] - mle[j + 1]).abs() < 1e-4, "b{}: {} vs {}", j + 1, m.coefficients[j], mle[j + 1]);
    }
    within(start, 5);
}

fn glm_recovery() {
    let planted = vec![1.5, -1.2, 1.0, -1.0];
    let spec = |n, seed| SyntheticSpec::new(n, 20, 0.3, seed).with_coefficients(planted.clone());
    let train = make_synthetic(&spec(5000, 1004)).unwrap();
    let test = make_synthetic(&spec(5000, 1005)).unwrap();
    let opts = LassoOptions::default();
    let path = lasso::fit_path(&train, &opts).unwrap();
    let cv = lasso::cross_validate(&train, &path, 10, 1006, &opts).unwrap();
    let m = &path.models[cv.best_index];
    for j in 0..planted.len() {
        assert!(m.coefficients[j] != 0.0, "planted feature {j} not selected");
    }
    let held_out = metrics::auc(test.labels().unwrap(), &lasso::predict_proba(m, &test).unwrap()).unwrap();
    // Bayes AUC: the generator's own linear predictor scored on a large fresh sample.
    let big = generate(&spec(200_000, 1007)).unwrap();
    let bayes_auc = metrics::auc(big.dataset.labels().unwrap(), &big.linear_predictor).unwrap();
    println!("    held-out auc {held_out:.4}, bayes auc {bayes_auc:.4}");
    assert!((held_out - bayes_auc).abs() <= 0.03, "held-out {held_out} vs bayes {bayes_auc}");
}

fn separable(n: usize, seed: u64) -> Dataset {
    make_synthetic(&SyntheticSpec::new(n, 10, 0.05, seed).with_coefficients(vec![4.0, -4.0, 3.0])).unwrap()
}

fn gbt_output() -> (Vec<u8>, Vec<f64>, Vec<f64>) {
    let train = separable(2000, 1008);
    let test = separable(2000, 1009);
    let (m, losses) = gbt::fit_with_trace(&train, &GbtParams { seed: 1010, ..Default::default() }).unwrap();
    let probs = gbt::predict_proba(&m, &test).unwrap();
    (test.labels().unwrap().to_vec(), probs, losses)
}

fn gbt_sanity() {
    let start = Instant::now();
    let (labels, probs, losses) = gbt_output();
    let held_out = metrics::auc(&labels, &probs).unwrap();
    println!("    held-out auc {held_out:.4}");
    assert!(held_out >= 0.95, "held-out auc {held_out}");
    for (i, w) in losses.windows(2).enumerate() {
        assert!(w[1] <= w[0], "round {}: loss {} -> {}", i + 1, w[0], w[1]);
    }
    within(start, 30);
}

fn mcc_sweep_vs_exhaustive() {
    let (labels, probs, _) = gbt_output();
    let sweep = metrics::mcc_sweep(&labels, &probs, 0.01).unwrap();
    let (best, t_star) = exhaustive_best_mcc(&labels, &probs);
    println!(
        "    grid threshold {:.2} (mcc {:.4}), exhaustive threshold {t_star:.4} (mcc {best:.4})",
        sweep.best_threshold, sweep.best_mcc
    );
    assert!(
        (sweep.best_threshold - t_star).abs() <= 0.01 + 1e-12,
        "grid {} vs exhaustive {t_star}",
        sweep.best_threshold
    );
}

fn bayes_correctness() {
    let start = Instant::now();
    let none = Dataset::new(vec![], vec![], vec![], Some(vec![])).unwrap();
    let fit = bayes::sample(&none, &BayesLogisticSpec { n_samples: 12_500, seed: 1011, ..Default::default() }).unwrap();
    let b0 = bayes::summarize(&fit.samples).unwrap().get("b0").unwrap().clone();
    assert!(b0.mean.abs() < 3.0 * b0.mc_se, "prior b0 mean {} (mc se {})", b0.mean, b0.mc_se);
    assert!((b0.sd - 100.0).abs() <= 5.0, "prior b0 sd {}", b0.sd);

    let y = vec![1, 1, 1, 1, 1, 1, 1, 0, 0, 0];
    let d = Dataset::new((0..10).collect(), vec![], vec![vec![]; 10], Some(y)).unwrap();
    let spec = BayesLogisticSpec {
        intercept_prior: InterceptPrior::UniformProbability,
        seed: 1012,
        ..Default::default()
    };
    let fit = bayes::sample(&d, &spec).unwrap();
    let chains: Vec<Vec<f64>> = fit.samples.param_chains(0).iter().map(|c| c.iter().map(|&b| sigmoid(b)).collect()).collect();
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let (mean, sd) = mean_sd(&pooled);
    let mc_se = sd / bayes::effective_sample_size(&chains).sqrt();
    assert!((mean - 8.0 / 12.0).abs() < 2.0 * mc_se, "Beta(8,4) mean: {mean} (mc se {mc_se})");
    let (second, _) = mean_sd(&chains.iter().flatten().map(|p| p * p).collect::<Vec<_>>());
    let second_moment = 8.0 * 9.0 / (12.0 * 13.0);
    assert!((second - second_moment).abs() < 0.01, "second moment {second} vs {second_moment}");

    let planted = make_synthetic(&SyntheticSpec::new(2000, 5, 0.3, 1013).with_coefficients(vec![1.5, -1.0, 1.0])).unwrap();
    let fit = bayes::sample(&planted, &BayesLogisticSpec { seed: 1014, ..Default::default() }).unwrap();
    assert_eq!((fit.samples.n_chains(), fit.samples.n_draws()), (4, 5000));
    let s = bayes::summarize(&fit.samples).unwrap();
    println!("    max split r-hat {:.4}", s.max_rhat());
    assert!(s.max_rhat() < 1.05, "max r-hat {}", s.max_rhat());
    within(start, 120);
}

fn planted_stack_data(n: usize, seed: u64) -> Dataset {
    let spec = SyntheticSpec::new(n, 30, 0.1, seed)
        .with_coefficients(vec![1.5, -1.5, 1.0, -1.0, 1.0])
        .with_missingness(MissingnessSpec {
            n_part_types: 4,
            shared_features: 8,
            overlap: 0,
            flip_prob: 0.01,
        });
    make_synthetic(&spec).unwrap()
}

fn stacking() {
    let train = planted_stack_data(4000, 1015);
    let test = planted_stack_data(2000, 1016);
    let spec = StackSpec {
        base_configs: GbtParams::stacking_sets(),
        undersample_ratio: Some(3.0),
        seed: 1017,
        ..Default::default()
    };
    let m = stack::fit_stack(&train, &spec).unwrap();
    let labels = test.labels().unwrap();
    let stacked = metrics::auc(labels, &stack::predict_stack(&m, &test).unwrap()).unwrap();
    let best_base = m
        .base_models
        .iter()
        .map(|b| metrics::auc(labels, &gbt::predict_proba(b, &test).unwrap()).unwrap())
        .fold(f64::MIN, f64::max);
    println!("    stacked auc {stacked:.4}, best base auc {best_base:.4}");
    assert!(stacked >= best_base - 0.01, "stacked {stacked} vs best base {best_base}");

    // A row's label must not influence the out-of-fold covariates of its own fold.
    let small = planted_stack_data(150, 1018);
    let labels = small.labels().unwrap().to_vec();
    let spec = StackSpec {
        base_configs: GbtParams::stacking_sets().into_iter().map(|p| GbtParams { n_trees: 20, ..p }).collect(),
        base_sample_seeds: vec![0, 1],
        undersample_ratio: Some(2.0),
        oof_folds: 5,
        ..Default::default()
    };
    let folds = lasso::stratified_folds(&labels, 5, 1019).unwrap();
    let base = stack::oof_covariates(&small, &spec, &folds).unwrap();
    for r in [0usize, 41, 99, 149] {
        let mut flipped = labels.clone();
        flipped[r] = 1 - flipped[r];
        let cov = stack::oof_covariates(&small.clone().with_labels(Some(flipped)).unwrap(), &spec, &folds).unwrap();
        for b in 0..base.len() {
            for i in (0..labels.len()).filter(|&i| folds[i] == folds[r]) {
                assert_eq!(cov[b][i], base[b][i], "flipping row {r} moved row {i} of its fold");
            }
        }
    }
}

fn clustering() {
    let clean = planted_masks(500, 25, 4, 0.0, 1020);
    let r = cluster::kmeans_best_of(&clean, 25, 1021, 5, 100).unwrap();
    assert_eq!(r.wcss, 0.0, "noise-free wcss at k=25");

    let noisy = planted_masks(1000, 25, 8, 0.02, 1022);
    let ks: Vec<usize> = (1..=40).collect();
    let curve = cluster::elbow(&noisy, &ks, 1023, 3, 100).unwrap();
    let k = cluster::knee(&curve).unwrap();
    println!("    knee at k={k}");
    assert!(k.abs_diff(25) <= 5, "knee at {k}");

    for (k, seed) in [(5, 1), (25, 2), (40, 3)] {
        let r = cluster::kmeans(&noisy, k, seed, 300).unwrap();
        for w in r.wcss_history.windows(2) {
            assert!(w[1] <= w[0], "k={k}: wcss {} -> {}", w[0], w[1]);
        }
    }
}

fn reliability_recovery() {
    let start = Instant::now();
    let truth = WeibullModel::new(2.0, vec![5.0, 1.0, -1.0, 0.5]).unwrap();
    let mut r = rng(1024);
    let x: Vec<Vec<f64>> = (0..2000).map(|_| (0..3).map(|_| r.random::<f64>()).collect()).collect();
    let data = reliability::simulate(&truth, &x, 1025).unwrap();
    let spec = ReliabilitySpec {
        bayes: BayesLogisticSpec { seed: 1026, ..Default::default() },
        ..Default::default()
    };
    let s = bayes::summarize(&reliability::fit_bayes(&data, &spec).unwrap()).unwrap();
    let shape = s.get("shape").unwrap();
    println!("    posterior shape mean {:.4}", shape.mean);
    assert!((shape.mean - 2.0).abs() <= 0.2, "shape {}", shape.mean);
    for (j, b) in truth.scale_coefficients.iter().enumerate() {
        let p = s.get(&format!("b{j}")).unwrap();
        assert!((p.mean - b).abs() <= 3.0 * p.sd, "b{j}: {} vs {b} (sd {})", p.mean, p.sd);
    }

    let x0 = [0.3, 0.6, 0.9];
    let fixed = reliability::simulate(&truth, &vec![x0.to_vec(); 10_000], 1027).unwrap();
    let scale = truth.scale(&x0);
    let mut t = fixed.lifetimes.clone();
    t.sort_by(|a, b| a.total_cmp(b));
    let n = t.len() as f64;
    let d = t
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = 1.0 - (-(v / scale).powi(2)).exp();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    assert!(d < 1.9495 / n.sqrt(), "KS distance {d}");
    within(start, 120);
}

fn determinism() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/synthetic.ini");
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::load(&path).unwrap();
        cfg.output_dir = dir.path().join("out");
        let report = pipeline::run(&cfg).unwrap();
        let mut csvs: Vec<(String, Vec<u8>)> = std::fs::read_dir(&cfg.output_dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        csvs.sort();
        let hashes: Vec<(String, u64)> = report.manifest.entries.iter().map(|e| (e.stage.clone(), e.outputs_hash)).collect();
        (hashes, csvs)
    };
    let (ha, ca) = run();
    let (hb, cb) = run();
    assert_eq!(ha, hb, "manifest output hashes differ");
    assert!(!ca.is_empty());
    assert_eq!(ca.len(), cb.len());
    for ((na, a), (nb, b)) in ca.iter().zip(&cb) {
        assert_eq!(na, nb);
        assert!(a == b, "{na} differs between runs");
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn()); 11] = [
        ("metrics exactness", metrics_exactness),
        ("lasso lambda_max and KKT", lasso_lambda_max),
        ("lasso agrees with Newton MLE", lasso_mle_agreement),
        ("glm support and Bayes AUC", glm_recovery),
        ("gbt sanity", gbt_sanity),
        ("mcc sweep vs exhaustive", mcc_sweep_vs_exhaustive),
        ("bayes correctness", bayes_correctness),
        ("stacking", stacking),
        ("clustering", clustering),
        ("reliability recovery", reliability_recovery),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {:>2} {name}: PASS ({secs:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {:>2} {name}: FAIL ({secs:.1}s) {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
