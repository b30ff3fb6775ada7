//! K-means on missingness masks, elbow analysis, and NA filtering with
//! median imputation.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::math::median;
use crate::rng;

pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    pub iterations: usize,
    /// WCSS after seeding, then after every Lloyd iteration.
    pub wcss_history: Vec<f64>,
}

impl KmeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, sq_dist(p, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Index of the nearest centroid for each point (ties to the lowest index).
pub fn assign_nearest(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.par_iter().map(|p| nearest(p, centroids).0).collect()
}

/// Sum of squared distances to assigned centroids, accumulated in row order.
pub fn wcss(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    let d: Vec<f64> = points
        .par_iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .collect();
    d.iter().sum()
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Config(format!("k = {k} exceeds the {} rows", points.len())));
    }
    let p = points[0].len();
    if points.iter().any(|r| r.len() != p) {
        return Err(Error::Data("points have unequal dimensions".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("points contain non-finite values".into()));
    }
    Ok(())
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::rng(seed);
    let n = points.len();
    let mut centroids = vec![points[r.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = r.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            r.random_range(0..n)
        };
        let c = points[next].clone();
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KmeansResult> {
    validate(points, k)?;
    let centroids = plus_plus_seeds(points, k, seed);
    Ok(lloyd(points, centroids, max_iter))
}

/// Lloyd iterations from the given centroids. A point moves only to a strictly
/// closer centroid.
fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KmeansResult {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignments: Vec<usize> = points.par_iter().map(|p| nearest(p, &centroids).0).collect();
    let mut current = wcss(points, &centroids, &assignments);
    let mut history = vec![current];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let prev = (centroids.clone(), assignments.clone());

        let mut sizes = vec![0usize; k];
        for &a in &assignments {
            sizes[a] += 1;
        }
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            // Re-seed an empty cluster at the point farthest from its centroid.
            let far = (0..points.len())
                .filter(|&i| sizes[assignments[i]] > 1)
                .map(|i| (i, sq_dist(&points[i], &centroids[assignments[i]])))
                .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                    Some((_, bd)) if bd >= d => best,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = far {
                sizes[assignments[i]] -= 1;
                assignments[i] = j;
                sizes[j] = 1;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assignments) {
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if sizes[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / sizes[j] as f64).collect();
            }
        }

        let moved: Vec<Option<usize>> = points
            .par_iter()
            .zip(&assignments)
            .map(|(p, &a)| {
                let (j, d) = nearest(p, &centroids);
                (j != a && d < sq_dist(p, &centroids[a])).then_some(j)
            })
            .collect();
        let mut changed = false;
        for (a, m) in assignments.iter_mut().zip(moved) {
            if let Some(j) = m {
                *a = j;
                changed = true;
            }
        }

        let next = wcss(points, &centroids, &assignments);
        if next > current {
            // Rounding in the mean update; the previous state is already optimal
            // to machine precision.
            (centroids, assignments) = prev;
            break;
        }
        current = next;
        history.push(current);
        if !changed {
            break;
        }
    }
    KmeansResult {
        centroids,
        assignments,
        wcss: current,
        iterations,
        wcss_history: history,
    }
}

/// Best of `restarts` runs with seeds derived from `seed` by restart index.
pub fn kmeans_best_of(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize, max_iter: usize) -> Result<KmeansResult> {
    validate(points, k)?;
    let runs: Vec<KmeansResult> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| lloyd(points, plus_plus_seeds(points, k, rng::derive_seed(seed, r)), max_iter))
        .collect();
    Ok(pick_best(runs))
}

fn pick_best(runs: Vec<KmeansResult>) -> KmeansResult {
    let mut best: Option<KmeansResult> = None;
    for r in runs {
        if best.as_ref().map_or(true, |b| r.wcss < b.wcss) {
            best = Some(r);
        }
    }
    best.unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElbowPoint {
    pub k: usize,
    pub wcss: f64,
}

/// Best-of-`restarts` WCSS per k. Every k after the first also tries the
/// previous k's best centroids extended by farthest points, so the curve is
/// non-increasing.
pub fn elbow(points: &[Vec<f64>], k_values: &[usize], seed: u64, restarts: usize, max_iter: usize) -> Result<Vec<ElbowPoint>> {
    if k_values.is_empty() || k_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("k values must be non-empty and strictly ascending".into()));
    }
    let mut out = Vec::with_capacity(k_values.len());
    let mut previous: Option<KmeansResult> = None;
    for &k in k_values {
        let mut best = kmeans_best_of(points, k, seed, restarts, max_iter)?;
        if let Some(prev) = &previous {
            let warm = lloyd(points, extend_centroids(points, prev, k), max_iter);
            if warm.wcss < best.wcss {
                best = warm;
            }
        }
        out.push(ElbowPoint { k, wcss: best.wcss });
        previous = Some(best);
    }
    Ok(out)
}

fn extend_centroids(points: &[Vec<f64>], prev: &KmeansResult, k: usize) -> Vec<Vec<f64>> {
    let mut centroids = prev.centroids.clone();
    let mut d2: Vec<f64> = points
        .iter()
        .zip(&prev.assignments)
        .map(|(p, &a)| sq_dist(p, &prev.centroids[a]))
        .collect();
    while centroids.len() < k {
        let (far, _) = d2
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &d)| if d > b.1 { (i, d) } else { b });
        let c = points[far].clone();
        for (p, d) in points.iter().zip(d2.iter_mut()) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// k at the largest second difference of the WCSS curve; needs at least three
/// points.
pub fn knee(curve: &[ElbowPoint]) -> Option<usize> {
    if curve.len() < 3 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 1..curve.len() - 1 {
        let d2 = curve[i - 1].wcss - 2.0 * curve[i].wcss + curve[i + 1].wcss;
        if best.map_or(true, |(_, b)| d2 > b) {
            best = Some((curve[i].k, d2));
        }
    }
    best.map(|(k, _)| k)
}

/// Rows of `d` assigned to `cluster_id`.
pub fn select_cluster(d: &Dataset, r: &KmeansResult, cluster_id: usize) -> Result<Dataset> {
    if r.assignments.len() != d.n_rows() {
        return Err(Error::Data("clustering does not match the dataset rows".into()));
    }
    if cluster_id >= r.k() {
        return Err(Error::Config(format!("cluster {cluster_id} out of range for k = {}", r.k())));
    }
    let rows: Vec<usize> = (0..d.n_rows()).filter(|&i| r.assignments[i] == cluster_id).collect();
    if rows.is_empty() {
        return Err(Error::Data(format!("cluster {cluster_id} is empty")));
    }
    Ok(d.select_rows(&rows))
}

/// Random subset of `n` columns in original order, or all columns when `n`
/// is at least the column count.
pub fn subsample_features(d: &Dataset, n: usize, seed: u64) -> Dataset {
    if n >= d.n_cols() {
        return d.clone();
    }
    let mut idx: Vec<usize> = (0..d.n_cols()).collect();
    let mut r = rng::splitmix(seed);
    idx.partial_shuffle(&mut r, n);
    let mut keep = idx[..n].to_vec();
    keep.sort_unstable();
    d.select_columns(&keep)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImputationReport {
    pub dropped_columns: Vec<String>,
    pub dropped_rows: Vec<i64>,
    pub retained_columns: Vec<String>,
    pub imputed_counts: Vec<usize>,
    pub medians: Vec<f64>,
}

/// Drop columns whose NA fraction exceeds `col_na_max`, then rows whose NA
/// fraction over the kept columns exceeds `row_na_max`, then fill the
/// remaining NA with column medians.
pub fn filter_and_impute(d: &Dataset, col_na_max: f64, row_na_max: f64) -> Result<(Dataset, ImputationReport)> {
    for (name, v) in [("col_na_max", col_na_max), ("row_na_max", row_na_max)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let n = d.n_rows();
    if n == 0 {
        return Err(Error::Data("cannot impute an empty dataset".into()));
    }
    let mut report = ImputationReport::default();
    let mut keep_cols = Vec::new();
    for (j, c) in d.columns().iter().enumerate() {
        let na = (0..n).filter(|&i| d.value(i, j).is_none()).count();
        if na as f64 / n as f64 > col_na_max {
            report.dropped_columns.push(c.name.clone());
        } else {
            keep_cols.push(j);
        }
    }
    if keep_cols.is_empty() {
        return Err(Error::Data("every column exceeds the NA threshold".into()));
    }
    let cols = d.select_columns(&keep_cols);
    let p = cols.n_cols();
    let mut keep_rows = Vec::new();
    for i in 0..n {
        let na = cols.row(i).iter().filter(|v| v.is_none()).count();
        if na as f64 / p as f64 > row_na_max {
            report.dropped_rows.push(cols.ids()[i]);
        } else {
            keep_rows.push(i);
        }
    }
    if keep_rows.is_empty() {
        return Err(Error::Data("every row exceeds the NA threshold".into()));
    }
    let kept = cols.select_rows(&keep_rows);
    let mut rows: Vec<Vec<Option<f64>>> = (0..kept.n_rows()).map(|i| kept.row(i).to_vec()).collect();
    for j in 0..p {
        let mut observed: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
        let name = &kept.columns()[j].name;
        if observed.is_empty() {
            return Err(Error::Data(format!("column `{name}` has no observed values after row filtering")));
        }
        let m = median(&mut observed);
        let mut count = 0;
        for r in rows.iter_mut() {
            if r[j].is_none() {
                r[j] = Some(m);
                count += 1;
            }
        }
        report.retained_columns.push(name.clone());
        report.imputed_counts.push(count);
        report.medians.push(m);
    }
    let out = Dataset::new(
        kept.ids().to_vec(),
        kept.columns().to_vec(),
        rows,
        kept.labels().map(|l| l.to_vec()),
    )?;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Column;

    fn grid_points() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 10.0],
            vec![11.0, 10.0],
            vec![10.0, 11.0],
        ]
    }

    #[test]
    fn k1_is_column_means() {
        let pts = grid_points();
        let r = kmeans(&pts, 1, 3, 50).unwrap();
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / 6.0;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / 6.0;
        assert!((r.centroids[0][0] - mx).abs() < 1e-12 && (r.centroids[0][1] - my).abs() < 1e-12);
        let scatter: f64 = pts.iter().map(|p| (p[0] - mx).powi(2) + (p[1] - my).powi(2)).sum();
        assert!((r.wcss - scatter).abs() < 1e-9);
    }

    #[test]
    fn k_equals_n_is_zero() {
        let pts = grid_points();
        assert_eq!(kmeans(&pts, 6, 9, 50).unwrap().wcss, 0.0);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kmeans(&grid_points(), 7, 0, 10).is_err());
        assert!(kmeans(&grid_points(), 0, 0, 10).is_err());
    }

    #[test]
    fn history_non_increasing() {
        let pts: Vec<Vec<f64>> = (0..200).map(|i| vec![(i * 37 % 101) as f64, (i * 13 % 29) as f64]).collect();
        let r = kmeans(&pts, 7, 1, 100).unwrap();
        assert!(r.wcss_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.wcss_history.last().unwrap(), r.wcss);
    }

    #[test]
    fn elbow_monotone_and_knee() {
        // Four mutually equidistant groups, like disjoint missingness blocks.
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|i| (0..4).map(|j| if i % 4 == j { 1.0 } else { 0.0 } + (i % 7) as f64 * 0.01).collect())
            .collect();
        let curve = elbow(&pts, &[1, 2, 3, 4, 5, 6], 2, 3, 100).unwrap();
        assert!(curve.windows(2).all(|w| w[1].wcss <= w[0].wcss));
        assert_eq!(knee(&curve), Some(4));
    }

    #[test]
    fn impute_drops_columns_then_rows() {
        let rows = vec![
            vec![Some(1.0), None, Some(5.0)],
            vec![Some(2.0), None, None],
            vec![Some(3.0), Some(1.0), Some(7.0)],
            vec![Some(4.0), None, Some(9.0)],
        ];
        let cols = vec![Column::numeric("a"), Column::numeric("b"), Column::numeric("c")];
        let d = Dataset::new(vec![1, 2, 3, 4], cols, rows, None).unwrap();
        let (out, rep) = filter_and_impute(&d, 0.5, 0.4).unwrap();
        assert_eq!(rep.dropped_columns, vec!["b".to_string()]);
        assert_eq!(rep.dropped_rows, vec![2]);
        assert_eq!(out.na_count(), 0);
        assert_eq!(out.n_rows(), 3);

        let (out, rep) = filter_and_impute(&d, 0.8, 1.0).unwrap();
        assert!(rep.dropped_columns.is_empty());
        assert_eq!(rep.medians, vec![2.5, 1.0, 7.0]);
        assert_eq!(rep.imputed_counts, vec![0, 3, 1]);
        assert_eq!(out.na_count(), 0);
    }

    #[test]
    fn select_cluster_checks_range() {
        let cols = vec![Column::numeric("x")];
        let d = Dataset::new(vec![1, 2, 3], cols, vec![vec![Some(0.0)], vec![Some(0.1)], vec![Some(9.0)]], None).unwrap();
        let pts = d.dense_rows().unwrap();
        let r = kmeans(&pts, 2, 0, 20).unwrap();
        let far = r.assignments[2];
        assert_eq!(select_cluster(&d, &r, far).unwrap().ids(), &[3]);
        assert!(select_cluster(&d, &r, 2).is_err());
    }
}
