//! Seeded synthetic data and dimension sweeps.
//!
//! All generators draw from [`CounterRng`], so a `(parameters, seed)` pair
//! reproduces the same bits on every platform and thread count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissim::{softmax_in_place, topk_stream, Measure, TopkOptions};
use crate::error::{HubError, Result};
use crate::hubstats::{distance_histogram, HistogramOptions, DEFAULT_K, DEFAULT_SAMPLE_PAIRS};
use crate::matrixio::{DenseMatrix, Dtype};
use crate::rng::{split_seed, CounterRng};

const GAUSSIAN_STREAM: u64 = 1;
const PEAKED_STREAM: u64 = 2;
const SAMPLING_STREAM: u64 = 3;

/// `n × d` standard normal entries; element `(i, j)` is normal number
/// `i·d + j` of the stream.
pub fn gaussian_matrix(n: usize, d: usize, seed: u64) -> DenseMatrix {
    let rng = CounterRng::new(seed).substream(GAUSSIAN_STREAM);
    let values: Vec<f64> = (0..n * d)
        .into_par_iter()
        .map(|e| rng.normal(e as u64))
        .collect();
    DenseMatrix::new(n, d, Dtype::F64, values).expect("normal samples are finite")
}

/// Rows `softmax(sharpness · z)` with standard normal `z`. Sharpness 0
/// gives exactly uniform rows; larger sharpness moves rows toward one-hot.
pub fn peaked_softmax_matrix(n: usize, v: usize, sharpness: f64, seed: u64) -> Result<DenseMatrix> {
    if v < 2 {
        return Err(HubError::Param(format!("vocabulary size must be at least 2, got {v}")));
    }
    if !(sharpness >= 0.0 && sharpness.is_finite()) {
        return Err(HubError::Param(format!(
            "sharpness must be finite and nonnegative, got {sharpness}"
        )));
    }
    let rng = CounterRng::new(seed).substream(PEAKED_STREAM);
    let mut values = vec![0.0; n * v];
    values.par_chunks_mut(v).enumerate().for_each(|(i, row)| {
        for (j, x) in row.iter_mut().enumerate() {
            *x = sharpness * rng.normal((i * v + j) as u64);
        }
        softmax_in_place(row);
    });
    DenseMatrix::new(n, v, Dtype::F64, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SweepMode {
    /// `d` is the representation dimension of standard Gaussian points.
    EuclideanGaussian,
    /// `d` is the vocabulary size of peaked softmax rows.
    ProbabilityPeaked { sharpness: f64 },
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepMode::EuclideanGaussian => f.write_str("euclidean-gaussian"),
            SweepMode::ProbabilityPeaked { .. } => f.write_str("probability-peaked"),
        }
    }
}

impl FromStr for SweepMode {
    type Err = HubError;

    /// Parses the mode name; the sharpness is set separately.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean-gaussian" => Ok(SweepMode::EuclideanGaussian),
            "probability-peaked" => Ok(SweepMode::ProbabilityPeaked { sharpness: 1.0 }),
            _ => Err(HubError::Param(format!("unknown sweep mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub k: usize,
    pub sample_pairs: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            sample_pairs: DEFAULT_SAMPLE_PAIRS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub dims: Vec<usize>,
    pub rv: Vec<f64>,
    /// `None` where every candidate has the same `N_k` (e.g. `k ≥ v`).
    pub kskew: Vec<Option<f64>>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,rv,kskew\n");
        for ((d, rv), ks) in self.dims.iter().zip(&self.rv).zip(&self.kskew) {
            let ks = ks.map(|v| format!("{v:.16e}")).unwrap_or_default();
            out.push_str(&format!("{d},{rv:.16e},{ks}\n"));
        }
        out
    }
}

/// Data set a sweep evaluates at dimension `d`.
pub fn sweep_matrix(mode: SweepMode, n: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    let dim_seed = split_seed(seed, d as u64);
    match mode {
        SweepMode::EuclideanGaussian => Ok(gaussian_matrix(n, d, dim_seed)),
        SweepMode::ProbabilityPeaked { sharpness } => {
            peaked_softmax_matrix(n, d, sharpness, dim_seed)
        }
    }
}

/// Relative variance of sampled dissimilarities and k-skew at each dimension.
pub fn rv_scan(
    dims: &[usize],
    n: usize,
    mode: SweepMode,
    seed: u64,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if dims.is_empty() {
        return Err(HubError::Param("no dimensions to scan".into()));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HubError::Param("dimensions must be strictly ascending".into()));
    }
    let min_dim = match mode {
        SweepMode::EuclideanGaussian => 1,
        SweepMode::ProbabilityPeaked { .. } => 2,
    };
    if dims[0] < min_dim {
        return Err(HubError::Param(format!("dimension {} is too small", dims[0])));
    }
    if n < 2 {
        return Err(HubError::Param(format!("need at least 2 points, got {n}")));
    }

    let mut rv = Vec::with_capacity(dims.len());
    let mut kskew = Vec::with_capacity(dims.len());
    for &d in dims {
        let data = sweep_matrix(mode, n, d, seed)?;
        let (measure, exclude_self) = match mode {
            SweepMode::EuclideanGaussian => (Measure::Euclidean, true),
            SweepMode::ProbabilityPeaked { .. } => (Measure::Probability, false),
        };
        let hist = distance_histogram(
            &data,
            None,
            &HistogramOptions {
                measure,
                bins: 1,
                sample_pairs: opts.sample_pairs,
                seed: split_seed(split_seed(seed, d as u64), SAMPLING_STREAM),
                exclude_self,
            },
        )?;
        rv.push(hist.relative_variance.ok_or_else(|| {
            HubError::Undefined(format!("relative variance undefined at dimension {d}"))
        })?);
        let skew = match topk_stream(&data, None, &TopkOptions::new(measure, opts.k, exclude_self)) {
            Ok(r) => match r.occurrence.k_skew() {
                Ok(s) => Some(s),
                Err(HubError::Undefined(_)) => None,
                Err(e) => return Err(e),
            },
            Err(HubError::Param(_)) => None,
            Err(e) => return Err(e),
        };
        kskew.push(skew);
    }
    Ok(SweepResult {
        dims: dims.to_vec(),
        rv,
        kskew,
    })
}
