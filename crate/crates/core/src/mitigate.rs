//! Secondary dissimilarities that reduce hubness: empirical Mutual
//! Proximity and Globally Corrected Rank.
//!
//! Both need the full `n × n` primary matrix and are meant for small `n`
//! (tens of thousands at most). They depend only on the order of the input
//! distances.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissim::{neighbor_order, topk_precomputed, TopkResult};
use crate::error::{HubError, Result};
use crate::matrixio::{DenseMatrix, Dtype};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondaryKind {
    MutualProximity,
    GlobalRank,
}

impl SecondaryKind {
    pub fn name(self) -> &'static str {
        match self {
            SecondaryKind::MutualProximity => "mp",
            SecondaryKind::GlobalRank => "gcr",
        }
    }
}

impl fmt::Display for SecondaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SecondaryKind {
    type Err = HubError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mp" | "mutual-proximity" => Ok(SecondaryKind::MutualProximity),
            "gcr" | "global-rank" => Ok(SecondaryKind::GlobalRank),
            _ => Err(HubError::Param(format!("unknown mitigation {s:?}"))),
        }
    }
}

/// `values[x * n + y]` is the secondary dissimilarity from query `x` to
/// candidate `y`. The diagonal is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryDissim {
    pub n: usize,
    pub values: Vec<f64>,
    pub kind: SecondaryKind,
}

impl SecondaryDissim {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.n + y]
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::new(self.n, self.n, Dtype::F64, self.values.clone())
            .expect("secondary values are finite")
    }

    /// Top-k under the secondary dissimilarity, self excluded.
    pub fn topk(&self, k: usize) -> Result<TopkResult> {
        topk_precomputed(&self.to_matrix(), k, true)
    }
}

fn check_square(dist: &DenseMatrix, min_n: usize) -> Result<usize> {
    let n = dist.rows();
    if dist.cols() != n {
        return Err(HubError::Shape(format!(
            "expected a square dissimilarity matrix, got {} x {}",
            n,
            dist.cols()
        )));
    }
    if n < min_n {
        return Err(HubError::Param(format!(
            "need at least {min_n} points, got {n}"
        )));
    }
    Ok(n)
}

/// Empirical Mutual Proximity, returned as the dissimilarity `1 − MP`.
///
/// For `x ≠ y`, `MP(x, y)` is the product of the fraction of other points
/// `j ∉ {x, y}` with `d(x, j) > d(x, y)` and the fraction with
/// `d(y, j) > d(y, x)`, each over `n − 2`. Ties count as not farther.
pub fn mutual_proximity(dist: &DenseMatrix) -> Result<SecondaryDissim> {
    let n = check_square(dist, 3)?;
    if let Some(i) = (0..n).find(|&i| dist.get(i, i) != 0.0) {
        return Err(HubError::Data(format!(
            "dissimilarity matrix has nonzero diagonal at {i}"
        )));
    }
    let others = (n - 2) as f64;

    // farther[x * n + y] = fraction of j ∉ {x, y} with d(x, j) > d(x, y).
    let mut farther = vec![0.0; n * n];
    farther.par_chunks_mut(n).enumerate().for_each(|(x, out)| {
        let row = dist.row(x);
        let mut sorted = row.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (y, o) in out.iter_mut().enumerate() {
            if y == x {
                continue;
            }
            let t = row[y];
            let greater = n - sorted.partition_point(|&v| v <= t);
            let self_greater = (row[x] > t) as usize;
            *o = (greater - self_greater) as f64 / others;
        }
    });

    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(x, out)| {
        for (y, o) in out.iter_mut().enumerate() {
            if y != x {
                *o = 1.0 - farther[x * n + y] * farther[y * n + x];
            }
        }
    });
    Ok(SecondaryDissim {
        n,
        values,
        kind: SecondaryKind::MutualProximity,
    })
}

/// Globally Corrected Rank: the dissimilarity from `x` to candidate `y` is
/// the rank of `x` among all points ordered by `d(y, ·)` ascending, self
/// excluded, ties by id. Values run from 1 to `n − 1`.
pub fn global_rank(dist: &DenseMatrix) -> Result<SecondaryDissim> {
    let n = check_square(dist, 2)?;
    // rank_of[y * n + x] = rank of x in y's ordering.
    let mut rank_of = vec![0.0; n * n];
    rank_of.par_chunks_mut(n).enumerate().for_each(|(y, out)| {
        let row = dist.row(y);
        let mut order: Vec<usize> = (0..n).filter(|&x| x != y).collect();
        order.sort_by(|&a, &b| neighbor_order((row[a], a), (row[b], b)));
        for (r, &x) in order.iter().enumerate() {
            out[x] = (r + 1) as f64;
        }
    });
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(x, out)| {
        for (y, o) in out.iter_mut().enumerate() {
            *o = rank_of[y * n + x];
        }
    });
    Ok(SecondaryDissim {
        n,
        values,
        kind: SecondaryKind::GlobalRank,
    })
}

pub fn secondary(dist: &DenseMatrix, kind: SecondaryKind) -> Result<SecondaryDissim> {
    match kind {
        SecondaryKind::MutualProximity => mutual_proximity(dist),
        SecondaryKind::GlobalRank => global_rank(dist),
    }
}
