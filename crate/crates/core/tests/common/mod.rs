//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerical code; each oracle is the
//! slowest obvious way to compute the quantity.

#![allow(dead_code)]

use failfoundry::dataio::{Column, Dataset};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `(tp, tn, fp, fn)` by looking at each sample once.
pub fn count_confusion(labels: &[u8], probs: &[f64], threshold: f64) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for i in 0..labels.len() {
        let predicted = probs[i] > threshold;
        match (labels[i] == 1, predicted) {
            (true, true) => c.0 += 1,
            (false, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (true, false) => c.3 += 1,
        }
    }
    c
}

/// MCC with the numerator in exact integer arithmetic and a single rounding
/// in the square root.
pub fn mcc_exact(tp: u64, tn: u64, fp: u64, fn_: u64) -> f64 {
    let num = tp as i128 * tn as i128 - fp as i128 * fn_ as i128;
    let den = (tp + fp) as u128 * (tp + fn_) as u128 * (tn + fp) as u128 * (tn + fn_) as u128;
    if den == 0 {
        return 0.0;
    }
    num as f64 / (den as f64).sqrt()
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
pub fn pairwise_auc(labels: &[u8], probs: &[f64]) -> f64 {
    let (mut good, mut pairs) = (0.0, 0.0);
    for i in 0..labels.len() {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..labels.len() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if probs[i] > probs[j] {
                good += 1.0;
            } else if probs[i] == probs[j] {
                good += 0.5;
            }
        }
    }
    if pairs == 0.0 {
        0.5
    } else {
        good / pairs
    }
}

/// Best MCC over every threshold that changes a prediction: below the
/// smallest score and at each distinct score.
pub fn exhaustive_best_mcc(labels: &[u8], probs: &[f64]) -> (f64, f64) {
    let mut scores = probs.to_vec();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scores.dedup();
    let mut candidates = vec![f64::NEG_INFINITY];
    candidates.extend(scores);
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for t in candidates {
        let (tp, tn, fp, fn_) = count_confusion(labels, probs, t);
        let m = mcc_exact(tp, tn, fp, fn_);
        if m > best.0 {
            best = (m, t);
        }
    }
    best
}

/// Unpenalized logistic MLE by Newton–Raphson with Gaussian elimination.
/// Returns `[b0, b1, ..., bp]`.
pub fn newton_mle(x: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let mut beta = vec![0.0; p];
    for _ in 0..100 {
        let mut grad = vec![0.0; p];
        let mut hess = vec![vec![0.0; p]; p];
        for (row, &yi) in x.iter().zip(y) {
            let z: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
            let eta: f64 = z.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = sigmoid(eta);
            let w = mu * (1.0 - mu);
            for a in 0..p {
                grad[a] += (yi as f64 - mu) * z[a];
                for b in 0..p {
                    hess[a][b] += w * z[a] * z[b];
                }
            }
        }
        let step = solve(hess, grad);
        let size = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if size < 1e-13 {
            break;
        }
    }
    beta
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Median by full sort; the mean of the middle pair for even counts.
pub fn sorted_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// A tree node as read from the text model format.
#[derive(Debug, Clone)]
pub enum TextNode {
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

/// Base score and trees parsed straight from the model text, without the
/// library's reader.
pub fn parse_model_text(text: &str) -> (f64, Vec<Vec<TextNode>>) {
    let mut base = f64::NAN;
    let mut trees: Vec<Vec<TextNode>> = Vec::new();
    for line in text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.first().copied() {
            Some("base_score") => base = f[1].parse().unwrap(),
            Some("tree") => trees.push(Vec::new()),
            Some(id) if id.chars().all(|c| c.is_ascii_digit()) => {
                let node = match f[1] {
                    "split" => TextNode::Split {
                        feature: f[2].parse().unwrap(),
                        threshold: f[3].parse().unwrap(),
                        default_left: f[4] == "left",
                        left: f[5].parse().unwrap(),
                        right: f[6].parse().unwrap(),
                    },
                    "leaf" => TextNode::Leaf(f[7].parse().unwrap()),
                    other => panic!("unexpected node kind {other}"),
                };
                trees.last_mut().unwrap().push(node);
            }
            _ => {}
        }
    }
    (base, trees)
}

/// Walk one tree from the root for a single row.
pub fn walk_tree(nodes: &[TextNode], row: &[Option<f64>]) -> f64 {
    let mut k = 0;
    loop {
        match &nodes[k] {
            TextNode::Leaf(w) => return *w,
            TextNode::Split {
                feature,
                threshold,
                default_left,
                left,
                right,
            } => {
                let go_left = match row[*feature] {
                    Some(v) => v < *threshold,
                    None => *default_left,
                };
                k = if go_left { *left } else { *right };
            }
        }
    }
}

/// Probability of a row under a text-format model: logit(base) plus the
/// sum of the leaves reached.
pub fn walk_model(base: f64, trees: &[Vec<TextNode>], row: &[Option<f64>]) -> f64 {
    let mut margin = (base / (1.0 - base)).ln();
    for t in trees {
        margin += walk_tree(t, row);
    }
    sigmoid(margin)
}

/// Dense standard-normal design with a logistic response.
pub fn logistic_data(n: usize, beta0: f64, beta: &[f64], seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut r = rng(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..beta.len()).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let y = x
        .iter()
        .map(|row| {
            let eta = beta0 + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            (r.random::<f64>() < sigmoid(eta)) as u8
        })
        .collect();
    (x, y)
}

pub fn dataset(x: &[Vec<f64>], y: &[u8]) -> Dataset {
    let p = x.first().map_or(0, |r| r.len());
    Dataset::new(
        (0..x.len() as i64).collect(),
        (0..p).map(|j| Column::numeric(format!("x{j}"))).collect(),
        x.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(),
        Some(y.to_vec()),
    )
    .unwrap()
}

/// Random labels containing both classes and probabilities on a coarse grid
/// so that ties occur.
pub fn random_scores(r: &mut impl Rng, n: usize) -> (Vec<u8>, Vec<f64>) {
    loop {
        let labels: Vec<u8> = (0..n).map(|_| r.random_bool(0.3) as u8).collect();
        let coarse = r.random_bool(0.5);
        let probs: Vec<f64> = (0..n)
            .map(|_| {
                let p: f64 = r.random();
                if coarse {
                    (p * 20.0).floor() / 20.0
                } else {
                    p
                }
            })
            .collect();
        if labels.contains(&0) && labels.contains(&1) {
            return (labels, probs);
        }
    }
}

/// Monte Carlo mean and its standard error, with draws treated as
/// independent after dividing by the effective sample size factor.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Gradient of the mean negative log-likelihood with respect to each
/// standardized coefficient (population sd), at the model's fitted values.
pub fn standardized_gradient(x: &[Vec<f64>], y: &[u8], intercept: f64, coefficients: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let p = coefficients.len();
    let mut grad = vec![0.0; p];
    let means: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let sds: Vec<f64> = (0..p)
        .map(|j| (x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    for (row, &yi) in x.iter().zip(y) {
        let eta = intercept + row.iter().zip(coefficients).map(|(a, b)| a * b).sum::<f64>();
        let resid = sigmoid(eta) - yi as f64;
        for j in 0..p {
            grad[j] += resid * (row[j] - means[j]) / sds[j] / n;
        }
    }
    grad
}

/// 0/1 missingness masks: row `i` belongs to block `i % blocks`, which
/// observes its own `width` consecutive features; each bit then flips with
/// probability `noise`.
pub fn planted_masks(n: usize, blocks: usize, width: usize, noise: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let b = i % blocks;
            (0..blocks * width)
                .map(|j| {
                    let on = j / width == b;
                    let flipped = noise > 0.0 && r.random::<f64>() < noise;
                    if on != flipped {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}
