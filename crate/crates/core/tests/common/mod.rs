//! Brute-force reference implementations shared by the integration tests.
//!
//! Nothing here uses the library's selection, ranking or moment code. The
//! scalar dissimilarity functions are reused so that oracle and engine see
//! bit-identical values and can be compared exactly.
#![allow(dead_code)]

use hubkit::dissim::{euclidean, logits, normalized_euclidean, probability_dissim, softmax_rows};
use hubkit::rng::CounterRng;
use hubkit::{DenseMatrix, Measure};

/// Seeded random matrix; `levels > 0` quantizes entries to that many
/// integer levels so that exact ties occur.
pub fn random_matrix(seed: u64, n: usize, d: usize, levels: u64) -> DenseMatrix {
    let rng = CounterRng::new(seed);
    let values: Vec<f64> = (0..n * d)
        .map(|i| {
            if levels > 0 {
                rng.below(i as u64, levels) as f64 - (levels / 2) as f64
            } else {
                rng.normal(i as u64)
            }
        })
        .collect();
    DenseMatrix::from_rows(&values.chunks(d.max(1)).take(n).collect::<Vec<_>>()).unwrap()
}

/// Every dissimilarity from query `i`, via the scalar API.
pub fn oracle_row(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    measure: Measure,
    i: usize,
) -> Vec<f64> {
    let c = candidates.unwrap_or(queries);
    match measure {
        Measure::Euclidean => c
            .row_iter()
            .map(|r| euclidean(queries.row(i), r).unwrap())
            .collect(),
        Measure::NormalizedEuclidean => c
            .row_iter()
            .map(|r| normalized_euclidean(queries.row(i), r).unwrap())
            .collect(),
        Measure::SoftmaxDot => {
            let q = DenseMatrix::from_rows(&[queries.row(i)]).unwrap();
            let p = softmax_rows(&logits(&q, c).unwrap());
            (0..c.rows())
                .map(|j| probability_dissim(p.row(0), j).unwrap())
                .collect()
        }
        Measure::Probability => (0..queries.cols())
            .map(|j| probability_dissim(queries.row(i), j).unwrap())
            .collect(),
    }
}

/// Full sort of every eligible candidate, first `k` kept.
pub fn oracle_topk(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    measure: Measure,
    k: usize,
    exclude_self: bool,
) -> Vec<Vec<(usize, f64)>> {
    (0..queries.rows())
        .map(|i| {
            let row = oracle_row(queries, candidates, measure, i);
            let mut all: Vec<(usize, f64)> = row
                .into_iter()
                .enumerate()
                .filter(|&(j, _)| !(exclude_self && j == i))
                .collect();
            all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            all.truncate(k);
            all
        })
        .collect()
}

pub fn oracle_counts(lists: &[Vec<(usize, f64)>], num_candidates: usize) -> Vec<u64> {
    let mut counts = vec![0u64; num_candidates];
    for list in lists {
        for &(j, _) in list {
            counts[j] += 1;
        }
    }
    counts
}

/// `(id, N_k)` with `N_k ≥ threshold`, by `N_k` descending then id.
pub fn oracle_hubs(counts: &[u64], threshold: u64) -> Vec<(usize, u64)> {
    let mut hubs: Vec<(usize, u64)> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c >= threshold)
        .map(|(i, &c)| (i, c))
        .collect();
    hubs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    hubs
}

/// O(n²) average ranks: 1 + #smaller + (#equal − 1)/2.
pub fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let smaller = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn brute_skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    x.iter().map(|v| ((v - mean) / sd).powi(3)).sum::<f64>() / n
}

pub fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    brute_pearson(&brute_ranks(x), &brute_ranks(y))
}

/// Random vector for statistics oracles: continuous or drawn from a few
/// levels (ties).
pub fn random_values(rng: &CounterRng, base: u64, n: usize, levels: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let c = base + i as u64;
            if levels > 0 {
                rng.below(c, levels) as f64
            } else {
                rng.normal(c) * 3.0 + 1.0
            }
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
