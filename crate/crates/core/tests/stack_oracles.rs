mod common;

use common::*;
use failfoundry::bayes::{self, BayesLogisticSpec};
use failfoundry::dataio::{dataset_to_csv, load_csv, make_synthetic, Column, Dataset, Schema, SyntheticSpec};
use failfoundry::gbt::{self, GbtParams};
use failfoundry::lasso;
use failfoundry::stack::{self, Level2Kind, StackSpec};
use proptest::prelude::*;
use rand::Rng;

fn data(n: usize, seed: u64) -> Dataset {
    make_synthetic(&SyntheticSpec::new(n, 8, 0.2, seed).with_coefficients(vec![1.5, -1.0, 1.0])).unwrap()
}

fn small_spec(configs: Vec<GbtParams>, seeds: Vec<u64>) -> StackSpec {
    StackSpec {
        base_configs: configs,
        base_sample_seeds: seeds,
        oof_folds: 4,
        cv_folds: 3,
        ..Default::default()
    }
}

fn quick(depth: usize, colsample: f64) -> GbtParams {
    GbtParams {
        n_trees: 20,
        ..GbtParams::with_depth_and_colsample(depth, colsample)
    }
}

#[test]
fn identical_bases_give_identical_columns_and_one_selection() {
    let d = data(400, 1);
    let spec = small_spec(vec![quick(3, 1.0), quick(3, 1.0)], vec![5]);
    let m = stack::fit_stack(&d, &spec).unwrap();
    assert_eq!(m.oof.column_values(0), m.oof.column_values(1));
    let coefs = &m.level2.point().coefficients;
    assert!(coefs.iter().filter(|&&b| b != 0.0).count() <= 1, "{coefs:?}");
}

#[test]
fn predictions_survive_covariate_csv_round_trip() {
    let d = data(300, 2);
    let spec = small_spec(vec![quick(3, 0.7), quick(2, 0.7)], vec![0, 1]);
    let m = stack::fit_stack(&d, &spec).unwrap();
    let test = data(100, 3);
    let base = stack::base_probabilities(&m, &test).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("base.csv");
    std::fs::write(&path, dataset_to_csv(&base).unwrap()).unwrap();
    let back = load_csv(&path, &Schema::for_dataset(&base)).unwrap();
    assert_eq!(stack::predict_level2(&m, &back).unwrap(), stack::predict_level2(&m, &base).unwrap());
}

#[test]
fn stack_prediction_is_manual_two_step_composition() {
    let d = data(300, 4);
    let spec = small_spec(vec![quick(3, 0.7), quick(2, 1.0)], vec![0, 1]);
    let m = stack::fit_stack(&d, &spec).unwrap();
    let test = data(80, 5);
    let got = stack::predict_stack(&m, &test).unwrap();
    let per_base: Vec<Vec<f64>> = m.base_models.iter().map(|b| gbt::predict_proba(b, &test).unwrap()).collect();
    let l2 = m.level2.point();
    for i in 0..test.n_rows() {
        let mut eta = l2.intercept;
        for (b, p) in per_base.iter().enumerate() {
            eta += l2.coefficients[b] * p[i];
        }
        assert!((got[i] - sigmoid(eta)).abs() < 1e-12, "row {i}");
    }
}

#[test]
fn bayes_level2_does_not_credit_a_noise_model() {
    let d = data(600, 6);
    let spec = StackSpec {
        level2: Level2Kind::Bayes,
        bayes: BayesLogisticSpec {
            n_burnin: 500,
            n_samples: 1500,
            seed: 2,
            ..Default::default()
        },
        ..small_spec(vec![quick(3, 0.7)], vec![0])
    };
    let m = stack::fit_stack(&d, &spec).unwrap();
    let mut r = rng(7);
    let mut oof = m.oof.clone();
    let noise: Vec<Option<f64>> = (0..oof.n_rows()).map(|_| Some(r.random_range(0.01..0.99))).collect();
    oof.push_column(Column::numeric("noise"), noise).unwrap();
    let fit = bayes::sample(&oof, &spec.bayes).unwrap();
    let s = bayes::summarize(&fit.samples).unwrap();
    let real = s.get("b1").unwrap();
    let noise = s.get("b2").unwrap();
    assert!(noise.mean.abs() < 2.0 * noise.sd, "noise {} sd {}", noise.mean, noise.sd);
    assert!(real.mean > 2.0 * real.sd, "real base model {} sd {}", real.mean, real.sd);
    assert!(matches!(m.level2, stack::Level2Model::Bayes { .. }));
}

#[test]
fn single_row_cannot_leak_into_its_own_fold() {
    let d = data(120, 8);
    let labels = d.labels().unwrap().to_vec();
    let spec = StackSpec {
        undersample_ratio: Some(2.0),
        ..small_spec(vec![quick(3, 0.7), quick(2, 0.5)], vec![0, 9])
    };
    let folds = lasso::stratified_folds(&labels, 4, 1).unwrap();
    let base = stack::oof_covariates(&d, &spec, &folds).unwrap();
    for r in [0usize, 17, 63, 119] {
        // Flip row r's label: covariates of its fold, including its own,
        // must not move.
        let mut flipped = labels.clone();
        flipped[r] = 1 - flipped[r];
        let changed = d.clone().with_labels(Some(flipped)).unwrap();
        let cov = stack::oof_covariates(&changed, &spec, &folds).unwrap();
        // Delete row r: the rest of its fold keeps its covariates.
        let keep: Vec<usize> = (0..d.n_rows()).filter(|&i| i != r).collect();
        let kept_folds: Vec<usize> = keep.iter().map(|&i| folds[i]).collect();
        let dropped = stack::oof_covariates(&d.select_rows(&keep), &spec, &kept_folds).unwrap();
        for b in 0..base.len() {
            for i in 0..d.n_rows() {
                if folds[i] == folds[r] {
                    assert_eq!(cov[b][i], base[b][i], "label flip of row {r} moved row {i}");
                }
            }
            for (k, &i) in keep.iter().enumerate() {
                if folds[i] == folds[r] {
                    assert_eq!(dropped[b][k], base[b][i], "deleting row {r} moved row {i}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn covariates_are_probabilities(seed in 0u64..10_000, ratio in prop::option::of(1.0f64..4.0)) {
        let d = data(120, seed);
        let spec = StackSpec { undersample_ratio: ratio, ..small_spec(vec![quick(2, 0.7)], vec![seed, seed + 1]) };
        let folds = lasso::stratified_folds(d.labels().unwrap(), 3, seed).unwrap();
        for col in stack::oof_covariates(&d, &spec, &folds).unwrap() {
            prop_assert!(col.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }
}
