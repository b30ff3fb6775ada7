mod common;

use common::*;
use failfoundry::cluster;
use failfoundry::dataio::{Column, Dataset};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let truth: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let points = truth
        .iter()
        .map(|&t| {
            (0..3)
                .map(|d| r.sample::<f64, _>(StandardNormal) + if d == 0 { sep * t as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    (points, truth)
}

#[test]
fn separated_blobs_recovered_exactly() {
    let (points, truth) = blobs(200, 12.0, 1);
    let r = cluster::kmeans_best_of(&points, 2, 3, 5, 100).unwrap();
    let flip = r.assignments[0] != truth[0];
    for (a, t) in r.assignments.iter().zip(&truth) {
        assert_eq!(*a, if flip { 1 - t } else { *t });
    }
}

#[test]
fn noise_free_blocks_have_zero_wcss_at_true_k() {
    let points = planted_masks(500, 25, 4, 0.0, 2);
    let r = cluster::kmeans_best_of(&points, 25, 7, 5, 100).unwrap();
    assert_eq!(r.wcss, 0.0);
    assert_eq!(r.cluster_sizes(), vec![20; 25]);
}

#[test]
fn knee_near_planted_block_count() {
    let points = planted_masks(1000, 25, 8, 0.02, 3);
    let ks: Vec<usize> = (1..=40).collect();
    let curve = cluster::elbow(&points, &ks, 11, 3, 100).unwrap();
    let k = cluster::knee(&curve).unwrap();
    assert!((20..=30).contains(&k), "knee at {k}");
}

#[test]
fn imputed_medians_match_sort_oracle() {
    let mut r = rng(4);
    let rows: Vec<Vec<Option<f64>>> = (0..500)
        .map(|_| (0..30).map(|_| if r.random_bool(0.05) { None } else { Some(r.random_range(-5.0..5.0)) }).collect())
        .collect();
    let d = Dataset::new(
        (0..500).collect(),
        (0..30).map(|j| Column::numeric(format!("c{j}"))).collect(),
        rows.clone(),
        None,
    )
    .unwrap();
    let (out, report) = cluster::filter_and_impute(&d, 1.0, 1.0).unwrap();
    assert_eq!(out.na_count(), 0);
    assert!(report.dropped_columns.is_empty() && report.dropped_rows.is_empty());
    for j in 0..30 {
        let observed: Vec<f64> = rows.iter().filter_map(|row| row[j]).collect();
        assert_eq!(report.medians[j], sorted_median(&observed), "column {j}");
        assert_eq!(report.imputed_counts[j], 500 - observed.len());
        for i in 0..500 {
            assert_eq!(out.value(i, j), Some(rows[i][j].unwrap_or(report.medians[j])));
        }
    }
}

#[test]
fn column_filter_runs_before_row_filter() {
    // Column c2 is mostly NA. Dropping it first leaves every row complete;
    // filtering rows first would have removed rows 0..3.
    let rows = vec![
        vec![Some(1.0), Some(2.0), None],
        vec![Some(2.0), Some(3.0), None],
        vec![Some(3.0), Some(4.0), None],
        vec![Some(4.0), Some(5.0), Some(1.0)],
    ];
    let d = Dataset::new(
        (0..4).collect(),
        (0..3).map(|j| Column::numeric(format!("c{j}"))).collect(),
        rows,
        None,
    )
    .unwrap();
    let (out, report) = cluster::filter_and_impute(&d, 0.5, 0.0).unwrap();
    assert_eq!(report.dropped_columns, vec!["c2".to_string()]);
    assert!(report.dropped_rows.is_empty());
    assert_eq!(out.n_rows(), 4);
}

#[test]
fn even_count_median_is_midpoint() {
    let d = Dataset::new(
        (0..4).collect(),
        vec![Column::numeric("a")],
        vec![vec![Some(1.0)], vec![Some(4.0)], vec![Some(2.0)], vec![Some(10.0)]],
        None,
    )
    .unwrap();
    let (_, report) = cluster::filter_and_impute(&d, 1.0, 1.0).unwrap();
    assert_eq!(report.medians, vec![3.0]);
}

#[test]
fn select_cluster_equals_assignment_scan() {
    let (points, _) = blobs(120, 8.0, 5);
    let d = Dataset::new(
        (100..220).collect(),
        (0..3).map(|j| Column::numeric(format!("x{j}"))).collect(),
        points.iter().map(|p| p.iter().map(|&v| Some(v)).collect()).collect(),
        None,
    )
    .unwrap();
    let r = cluster::kmeans(&points, 3, 9, 100).unwrap();
    for c in 0..3 {
        let sub = cluster::select_cluster(&d, &r, c).unwrap();
        let expected: Vec<i64> = (0..120).filter(|&i| r.assignments[i] == c).map(|i| 100 + i as i64).collect();
        assert_eq!(sub.ids(), expected.as_slice());
    }
}

fn point_sets() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..5).prop_flat_map(|dim| {
        prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), -3.0f64..3.0], dim), 5..200)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wcss_non_increasing_per_iteration(points in point_sets(), k in 1usize..6, seed in any::<u64>()) {
        prop_assume!(k <= points.len());
        let r = cluster::kmeans(&points, k, seed, 100).unwrap();
        for w in r.wcss_history.windows(2) {
            prop_assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
        prop_assert_eq!(r.wcss, *r.wcss_history.last().unwrap());
    }

    #[test]
    fn no_single_reassignment_improves(points in point_sets(), k in 1usize..6, seed in any::<u64>()) {
        prop_assume!(k <= points.len());
        let r = cluster::kmeans(&points, k, seed, 500).unwrap();
        let base = cluster::wcss(&points, &r.centroids, &r.assignments);
        for i in 0..points.len() {
            for c in 0..k {
                let mut moved = r.assignments.clone();
                moved[i] = c;
                prop_assert!(cluster::wcss(&points, &r.centroids, &moved) >= base - 1e-9);
            }
        }
    }

    #[test]
    fn elbow_is_monotone(points in point_sets(), seed in any::<u64>()) {
        let k_max = points.len().min(8);
        let ks: Vec<usize> = (1..=k_max).collect();
        let curve = cluster::elbow(&points, &ks, seed, 3, 100).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].wcss <= w[0].wcss, "k={} {} > {}", w[1].k, w[1].wcss, w[0].wcss);
        }
    }

    #[test]
    fn imputation_leaves_no_na(
        rows in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.7, -5.0f64..5.0), 4), 3..60),
        col_max in 0.3f64..1.0,
        row_max in 0.3f64..1.0,
    ) {
        let n = rows.len();
        let d = Dataset::new(
            (0..n as i64).collect(),
            (0..4).map(|j| Column::numeric(format!("c{j}"))).collect(),
            rows,
            None,
        ).unwrap();
        if let Ok((out, report)) = cluster::filter_and_impute(&d, col_max, row_max) {
            prop_assert_eq!(out.na_count(), 0);
            prop_assert_eq!(out.n_cols() + report.dropped_columns.len(), 4);
            prop_assert_eq!(out.n_rows() + report.dropped_rows.len(), n);
        }
    }
}
