//! Dissimilarity measures and the exact streaming top-k engine.
//!
//! Every pairwise comparison in the toolkit goes through this module. The
//! engine scans queries in blocks, fills one dissimilarity row per query,
//! and keeps the `k` smallest entries under the total order
//! `(dissimilarity, candidate id)`. No approximation is involved, and the
//! full query × candidate matrix is never held: peak memory per worker is
//! `block_size × candidates × 8` bytes.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HubError, Result};
use crate::hubstats::{k_occurrence, KOccurrence};
use crate::matrixio::{DenseMatrix, Dtype};
use crate::numeric::{dot, squared_distance, CompensatedSum};

pub const DEFAULT_BLOCK_SIZE: usize = 256;

/// Row-sum tolerance for a row to count as a probability distribution.
pub const PROBABILITY_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Euclidean,
    NormalizedEuclidean,
    /// `1 − softmax(q · Cᵀ)[j]`, softmax over all candidates.
    SoftmaxDot,
    /// `1 − p[j]` on rows that already are distributions.
    Probability,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Euclidean,
        Measure::NormalizedEuclidean,
        Measure::SoftmaxDot,
        Measure::Probability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Euclidean => "euclidean",
            Measure::NormalizedEuclidean => "normalized-euclidean",
            Measure::SoftmaxDot => "softmax-dot",
            Measure::Probability => "probability",
        }
    }

    /// Whether a query is dropped from its own neighbor list by default.
    /// Geometric measures skip the trivial zero self-distance; softmax-based
    /// ones keep it so self-probability stays visible.
    pub fn default_exclude_self(self) -> bool {
        matches!(self, Measure::Euclidean | Measure::NormalizedEuclidean)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = HubError;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HubError::Param(format!("unknown measure {s:?}")))
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(HubError::Shape(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(squared_distance(a, b).sqrt())
}

/// `a / ‖a‖`.
pub fn unit(a: &[f64]) -> Result<Vec<f64>> {
    let norm = dot(a, a).sqrt();
    if norm == 0.0 {
        return Err(HubError::Data("zero-norm vector has no direction".into()));
    }
    Ok(a.iter().map(|x| x / norm).collect())
}

/// Euclidean distance between the unit vectors of `a` and `b`, i.e.
/// `sqrt(2 − 2 cos(a, b))`.
pub fn normalized_euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(squared_distance(&unit(a)?, &unit(b)?).sqrt())
}

/// In-place softmax with the row maximum subtracted first.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if row.is_empty() {
        return;
    }
    let mut total = CompensatedSum::default();
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total.add(*x);
    }
    let total = total.value();
    for x in row.iter_mut() {
        *x /= total;
    }
}

pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut values = logits.as_slice().to_vec();
    if logits.cols() > 0 {
        values
            .par_chunks_mut(logits.cols())
            .for_each(softmax_in_place);
    }
    DenseMatrix::new(logits.rows(), logits.cols(), Dtype::F64, values)
        .expect("softmax of finite logits is finite")
}

/// `queries · candidatesᵀ` with the toolkit's fixed-order dot product.
pub fn logits(queries: &DenseMatrix, candidates: &DenseMatrix) -> Result<DenseMatrix> {
    if queries.cols() != candidates.cols() {
        return Err(HubError::Shape(format!(
            "queries have {} columns, candidates {}",
            queries.cols(),
            candidates.cols()
        )));
    }
    let nc = candidates.rows();
    let mut values = vec![0.0; queries.rows() * nc];
    if nc > 0 {
        values.par_chunks_mut(nc).enumerate().for_each(|(i, out)| {
            let q = queries.row(i);
            for (j, o) in out.iter_mut().enumerate() {
                *o = dot(q, candidates.row(j));
            }
        });
    }
    DenseMatrix::new(queries.rows(), nc, Dtype::F64, values)
}

pub fn probability_dissim(prob_row: &[f64], j: usize) -> Result<f64> {
    prob_row.get(j).map(|p| 1.0 - p).ok_or_else(|| {
        HubError::Param(format!(
            "index {j} out of range for a row of length {}",
            prob_row.len()
        ))
    })
}

/// Checks nonnegativity and that the row sums to 1 within [`PROBABILITY_TOLERANCE`].
pub fn check_probability_row(row: &[f64], index: usize) -> Result<()> {
    if row.iter().any(|&p| p < 0.0) {
        return Err(HubError::Data(format!(
            "row {index} has a negative probability"
        )));
    }
    let sum = row.iter().copied().collect::<CompensatedSum>().value();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(HubError::Data(format!(
            "row {index} sums to {sum}, not 1"
        )));
    }
    Ok(())
}

pub fn check_probability_matrix(prob: &DenseMatrix) -> Result<()> {
    prob.row_iter()
        .enumerate()
        .try_for_each(|(i, row)| check_probability_row(row, i))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    pub dissim: f64,
}

/// Top-k of one query, ascending by dissimilarity, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList {
    pub query: usize,
    pub entries: Vec<Neighbor>,
}

impl NeighborList {
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.id)
    }
}

/// Total order used for every neighbor ranking in the toolkit.
#[inline]
pub fn neighbor_order(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopkOptions {
    pub measure: Measure,
    pub k: usize,
    pub exclude_self: bool,
    pub block_size: usize,
}

impl TopkOptions {
    pub fn new(measure: Measure, k: usize, exclude_self: bool) -> Self {
        Self {
            measure,
            k,
            exclude_self,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }

    pub fn block_size(mut self, block_size: usize) -> Self {
        self.block_size = block_size;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopkResult {
    pub neighbors: Vec<NeighborList>,
    pub occurrence: KOccurrence,
}

/// Produces full dissimilarity rows for one query at a time.
enum RowSource<'a> {
    Euclidean {
        queries: &'a [f64],
        candidates: &'a [f64],
        dim: usize,
    },
    SoftmaxDot {
        queries: &'a DenseMatrix,
        candidates: &'a DenseMatrix,
    },
    Probability {
        prob: &'a DenseMatrix,
    },
    Precomputed {
        dist: &'a DenseMatrix,
    },
}

impl RowSource<'_> {
    fn fill(&self, query: usize, out: &mut [f64]) {
        match self {
            RowSource::Euclidean {
                queries,
                candidates,
                dim,
            } => {
                let q = &queries[query * dim..(query + 1) * dim];
                for (j, o) in out.iter_mut().enumerate() {
                    *o = squared_distance(q, &candidates[j * dim..(j + 1) * dim]).sqrt();
                }
            }
            RowSource::SoftmaxDot {
                queries,
                candidates,
            } => {
                let q = queries.row(query);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = dot(q, candidates.row(j));
                }
                softmax_in_place(out);
                for o in out.iter_mut() {
                    *o = 1.0 - *o;
                }
            }
            RowSource::Probability { prob } => {
                for (o, p) in out.iter_mut().zip(prob.row(query)) {
                    *o = 1.0 - p;
                }
            }
            RowSource::Precomputed { dist } => out.copy_from_slice(dist.row(query)),
        }
    }
}

fn unit_rows(m: &DenseMatrix) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(m.as_slice().len());
    for (i, row) in m.row_iter().enumerate() {
        let u = unit(row)
            .map_err(|_| HubError::Data(format!("row {i} has zero norm")))?;
        out.extend_from_slice(&u);
    }
    Ok(out)
}

/// Owned storage for measures that need preprocessed rows.
struct Prepared {
    queries: Option<Vec<f64>>,
    candidates: Option<Vec<f64>>,
}

fn validate(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    measure: Measure,
    exclude_self: bool,
) -> Result<usize> {
    if exclude_self && candidates.is_some() {
        return Err(HubError::Param(
            "exclude_self requires queries and candidates to be the same matrix".into(),
        ));
    }
    match measure {
        Measure::Probability => {
            if candidates.is_some() {
                return Err(HubError::Param(
                    "probability measure takes its candidates from the columns of the query rows"
                        .into(),
                ));
            }
            if exclude_self && queries.rows() != queries.cols() {
                return Err(HubError::Shape(format!(
                    "self-exclusion on probability rows needs a square matrix, got {} x {}",
                    queries.rows(),
                    queries.cols()
                )));
            }
            check_probability_matrix(queries)?;
            Ok(queries.cols())
        }
        _ => {
            let c = candidates.unwrap_or(queries);
            if c.cols() != queries.cols() {
                return Err(HubError::Shape(format!(
                    "queries have {} columns, candidates {}",
                    queries.cols(),
                    c.cols()
                )));
            }
            Ok(c.rows())
        }
    }
}

fn prepare(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    measure: Measure,
) -> Result<Prepared> {
    if measure != Measure::NormalizedEuclidean {
        return Ok(Prepared {
            queries: None,
            candidates: None,
        });
    }
    let q = unit_rows(queries)?;
    let c = candidates.map(unit_rows).transpose()?;
    Ok(Prepared {
        queries: Some(q),
        candidates: c,
    })
}

fn source<'a>(
    queries: &'a DenseMatrix,
    candidates: Option<&'a DenseMatrix>,
    measure: Measure,
    prepared: &'a Prepared,
) -> RowSource<'a> {
    match measure {
        Measure::Euclidean => RowSource::Euclidean {
            queries: queries.as_slice(),
            candidates: candidates.unwrap_or(queries).as_slice(),
            dim: queries.cols(),
        },
        Measure::NormalizedEuclidean => {
            let q = prepared.queries.as_deref().unwrap();
            RowSource::Euclidean {
                queries: q,
                candidates: prepared.candidates.as_deref().unwrap_or(q),
                dim: queries.cols(),
            }
        }
        Measure::SoftmaxDot => RowSource::SoftmaxDot {
            queries,
            candidates: candidates.unwrap_or(queries),
        },
        Measure::Probability => RowSource::Probability { prob: queries },
    }
}

/// Keeps the `k` smallest `(dissim, id)` pairs of `row`, skipping `skip`.
fn select_topk(
    row: &[f64],
    k: usize,
    skip: Option<usize>,
    scratch: &mut Vec<(f64, usize)>,
) -> Vec<Neighbor> {
    scratch.clear();
    scratch.extend(
        row.iter()
            .enumerate()
            .filter(|&(j, _)| Some(j) != skip)
            .map(|(j, &d)| (d, j)),
    );
    let cmp = |a: &(f64, usize), b: &(f64, usize)| neighbor_order(*a, *b);
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k, cmp);
        scratch.truncate(k);
    }
    scratch.sort_unstable_by(cmp);
    scratch
        .iter()
        .map(|&(dissim, id)| Neighbor { id, dissim })
        .collect()
}

fn scan(
    source: &RowSource<'_>,
    num_queries: usize,
    num_candidates: usize,
    k: usize,
    exclude_self: bool,
    block_size: usize,
) -> Vec<NeighborList> {
    let starts: Vec<usize> = (0..num_queries).step_by(block_size.max(1)).collect();
    starts
        .into_par_iter()
        .flat_map_iter(|start| {
            let end = (start + block_size).min(num_queries);
            let mut block = vec![0.0; (end - start) * num_candidates];
            let mut scratch = Vec::with_capacity(num_candidates);
            let mut lists = Vec::with_capacity(end - start);
            for (offset, row) in block.chunks_mut(num_candidates.max(1)).enumerate() {
                let query = start + offset;
                if num_candidates > 0 {
                    source.fill(query, row);
                }
                let skip = exclude_self.then_some(query);
                lists.push(NeighborList {
                    query,
                    entries: select_topk(&row[..num_candidates], k, skip, &mut scratch),
                });
            }
            lists
        })
        .collect()
}

fn check_k(k: usize, num_candidates: usize, exclude_self: bool) -> Result<()> {
    let eligible = num_candidates.saturating_sub(exclude_self as usize);
    if k == 0 {
        return Err(HubError::Param("k must be at least 1".into()));
    }
    if k > eligible {
        return Err(HubError::Param(format!(
            "k = {k} exceeds the {eligible} eligible candidates"
        )));
    }
    Ok(())
}

/// Exact top-k neighbors of every query plus the k-occurrence counts.
///
/// `candidates = None` compares the queries against themselves; for the
/// probability measure the candidates are always the column indices of the
/// query rows and `candidates` must be `None`. `exclude_self` is only valid
/// with `None`.
pub fn topk_stream(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    opts: &TopkOptions,
) -> Result<TopkResult> {
    let num_candidates = validate(queries, candidates, opts.measure, opts.exclude_self)?;
    check_k(opts.k, num_candidates, opts.exclude_self)?;
    if opts.block_size == 0 {
        return Err(HubError::Param("block size must be at least 1".into()));
    }
    let prepared = prepare(queries, candidates, opts.measure)?;
    let src = source(queries, candidates, opts.measure, &prepared);
    let neighbors = scan(
        &src,
        queries.rows(),
        num_candidates,
        opts.k,
        opts.exclude_self,
        opts.block_size,
    );
    let occurrence = k_occurrence(&neighbors, num_candidates)?;
    Ok(TopkResult {
        neighbors,
        occurrence,
    })
}

/// Top-k over an explicit query × candidate dissimilarity matrix, e.g. the
/// output of a secondary-distance transform.
pub fn topk_precomputed(dist: &DenseMatrix, k: usize, exclude_self: bool) -> Result<TopkResult> {
    if exclude_self && dist.rows() != dist.cols() {
        return Err(HubError::Shape(format!(
            "self-exclusion needs a square matrix, got {} x {}",
            dist.rows(),
            dist.cols()
        )));
    }
    check_k(k, dist.cols(), exclude_self)?;
    let src = RowSource::Precomputed { dist };
    let neighbors = scan(
        &src,
        dist.rows(),
        dist.cols(),
        k,
        exclude_self,
        DEFAULT_BLOCK_SIZE,
    );
    let occurrence = k_occurrence(&neighbors, dist.cols())?;
    Ok(TopkResult {
        neighbors,
        occurrence,
    })
}

/// Full query × candidate dissimilarity matrix. Only for small inputs: the
/// result holds `queries × candidates` values.
pub fn pairwise_matrix(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    measure: Measure,
) -> Result<DenseMatrix> {
    let num_candidates = validate(queries, candidates, measure, false)?;
    let prepared = prepare(queries, candidates, measure)?;
    let src = source(queries, candidates, measure, &prepared);
    let mut values = vec![0.0; queries.rows() * num_candidates];
    if num_candidates > 0 {
        values
            .par_chunks_mut(num_candidates)
            .enumerate()
            .for_each(|(i, row)| src.fill(i, row));
    }
    DenseMatrix::new(queries.rows(), num_candidates, Dtype::F64, values)
}

/// Dissimilarities of selected `(query, candidate)` pairs, in input order.
/// Rows needed by softmax-based measures are computed once per distinct
/// query.
pub(crate) fn pair_dissims(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    measure: Measure,
    pairs: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let num_candidates = validate(queries, candidates, measure, false)?;
    let prepared = prepare(queries, candidates, measure)?;
    let src = source(queries, candidates, measure, &prepared);
    match &src {
        RowSource::Euclidean {
            queries: q,
            candidates: c,
            dim,
        } => Ok(pairs
            .par_iter()
            .map(|&(i, j)| {
                squared_distance(&q[i * dim..(i + 1) * dim], &c[j * dim..(j + 1) * dim]).sqrt()
            })
            .collect()),
        RowSource::Probability { prob } => Ok(pairs.iter().map(|&(i, j)| 1.0 - prob.get(i, j)).collect()),
        _ => {
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.sort_by_key(|&p| pairs[p].0);
            let groups: Vec<&[usize]> = order
                .chunk_by(|&a, &b| pairs[a].0 == pairs[b].0)
                .collect();
            let computed: Vec<Vec<(usize, f64)>> = groups
                .par_iter()
                .map(|group| {
                    let mut row = vec![0.0; num_candidates];
                    src.fill(pairs[group[0]].0, &mut row);
                    group.iter().map(|&p| (p, row[pairs[p].1])).collect()
                })
                .collect();
            let mut out = vec![0.0; pairs.len()];
            for (p, d) in computed.into_iter().flatten() {
                out[p] = d;
            }
            Ok(out)
        }
    }
}

/// Streams `softmax(queries · candidatesᵀ)` in row blocks of at most
/// `block_size` rows; `candidates = None` compares the queries with
/// themselves. Rows match the ones the top-k engine ranks bit for bit.
pub fn for_each_softmax_block(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    block_size: usize,
    mut f: impl FnMut(&DenseMatrix) -> Result<()>,
) -> Result<()> {
    let c = candidates.unwrap_or(queries);
    if block_size == 0 {
        return Err(HubError::Param("block size must be at least 1".into()));
    }
    for start in (0..queries.rows()).step_by(block_size) {
        let end = (start + block_size).min(queries.rows());
        let block = DenseMatrix::new(
            end - start,
            queries.cols(),
            Dtype::F64,
            queries.as_slice()[start * queries.cols()..end * queries.cols()].to_vec(),
        )?;
        f(&softmax_rows(&logits(&block, c)?))?;
    }
    Ok(())
}

/// Mean probability distance and its relative variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbDistanceStats {
    pub mean: f64,
    pub variance: f64,
    pub relative_variance: f64,
}

/// Mean of `1 − p` over all (row, column) pairs, and `Var / mean²` where
/// `Var` is the row average of `(1/v) Σ_j (p_j − 1/v)²`. For valid rows
/// the mean is `1 − 1/v` whatever the content.
pub fn prob_distance_stats(prob: &DenseMatrix) -> Result<ProbDistanceStats> {
    check_probability_matrix(prob)?;
    let v = prob.cols();
    if prob.rows() == 0 || v < 2 {
        return Err(HubError::Undefined(format!(
            "probability distance statistics need at least one row and two columns, got {} x {v}",
            prob.rows()
        )));
    }
    let uniform = 1.0 / v as f64;
    let mut dist_sum = CompensatedSum::default();
    let mut var_sum = CompensatedSum::default();
    for row in prob.row_iter() {
        let mut sq = CompensatedSum::default();
        for &p in row {
            dist_sum.add(1.0 - p);
            let d = p - uniform;
            sq.add(d * d);
        }
        var_sum.add(sq.value() / v as f64);
    }
    let n = prob.rows() as f64;
    let mean = dist_sum.value() / (n * v as f64);
    let variance = var_sum.value() / n;
    Ok(ProbDistanceStats {
        mean,
        variance,
        relative_variance: variance / (mean * mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(HubError::Shape(_))
        ));
    }

    #[test]
    fn normalized_euclidean_examples() {
        assert_relative_eq!(
            normalized_euclidean(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-15
        );
        assert_eq!(normalized_euclidean(&[2.0, 0.0], &[5.0, 0.0]).unwrap(), 0.0);
        let expected = (2.0 - 2.0 / 2f64.sqrt()).sqrt();
        assert_relative_eq!(
            normalized_euclidean(&[1.0, 1.0], &[1.0, 0.0]).unwrap(),
            expected,
            max_relative = 1e-12
        );
        assert!((expected - 0.7654).abs() < 1e-4);
        assert!(matches!(
            normalized_euclidean(&[0.0, 0.0], &[1.0, 0.0]),
            Err(HubError::Data(_))
        ));
    }

    #[test]
    fn softmax_examples() {
        let s = softmax_rows(&m(&[&[0.0, 0.0], &[1f64.ln(), 3f64.ln()]]));
        assert_eq!(s.row(0), &[0.5, 0.5]);
        assert_relative_eq!(s.get(1, 0), 0.25, max_relative = 1e-15);
        assert_relative_eq!(s.get(1, 1), 0.75, max_relative = 1e-15);

        let big = softmax_rows(&m(&[&[1000.0, 1000.0, 999.0]]));
        assert!(big.as_slice().iter().all(|p| p.is_finite() && *p >= 0.0));
        assert!((big.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn softmax_shift_invariant() {
        let a = softmax_rows(&m(&[&[0.3, -1.2, 2.5, 0.0]]));
        let b = softmax_rows(&m(&[&[100.3, 98.8, 102.5, 100.0]]));
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn probability_dissim_examples() {
        assert_relative_eq!(probability_dissim(&[0.7, 0.2, 0.1], 0).unwrap(), 0.3, max_relative = 1e-15);
        assert_eq!(probability_dissim(&[0.25; 4], 2).unwrap(), 0.75);
        assert_eq!(probability_dissim(&[0.0, 1.0, 0.0], 1).unwrap(), 0.0);
        assert!(probability_dissim(&[1.0], 1).is_err());
    }

    #[test]
    fn topk_hand_examples() {
        let pts = m(&[&[0.0, 0.0], &[3.0, 4.0], &[6.0, 8.0]]);
        let query = m(&[&[0.0, 0.0]]);
        let r = topk_stream(&query, Some(&pts), &TopkOptions::new(Measure::Euclidean, 2, false))
            .unwrap();
        assert_eq!(
            r.neighbors[0].entries,
            vec![
                Neighbor { id: 0, dissim: 0.0 },
                Neighbor { id: 1, dissim: 5.0 }
            ]
        );

        let r = topk_stream(&pts, None, &TopkOptions::new(Measure::Euclidean, 1, true)).unwrap();
        let firsts: Vec<(usize, f64)> = r
            .neighbors
            .iter()
            .map(|l| (l.entries[0].id, l.entries[0].dissim))
            .collect();
        assert_eq!(firsts, vec![(1, 5.0), (0, 5.0), (1, 5.0)]);
        assert_eq!(r.occurrence.counts(), &[1, 2, 0]);
    }

    #[test]
    fn topk_errors() {
        let pts = m(&[&[0.0], &[1.0], &[2.0]]);
        let other = pts.clone();
        let err = |opts: TopkOptions, c: Option<&DenseMatrix>| topk_stream(&pts, c, &opts).unwrap_err();
        assert!(matches!(err(TopkOptions::new(Measure::Euclidean, 3, true), None), HubError::Param(_)));
        assert!(matches!(err(TopkOptions::new(Measure::Euclidean, 4, false), None), HubError::Param(_)));
        assert!(matches!(err(TopkOptions::new(Measure::Euclidean, 0, false), None), HubError::Param(_)));
        assert!(matches!(
            err(TopkOptions::new(Measure::Euclidean, 1, true), Some(&other)),
            HubError::Param(_)
        ));
        let wide = m(&[&[0.0, 1.0]]);
        assert!(matches!(
            err(TopkOptions::new(Measure::Euclidean, 1, false), Some(&wide)),
            HubError::Shape(_)
        ));
        // Rows are not distributions.
        assert!(matches!(err(TopkOptions::new(Measure::Probability, 1, false), None), HubError::Data(_)));
    }

    #[test]
    fn probability_self_exclusion_needs_square() {
        let p = m(&[&[0.5, 0.25, 0.25], &[0.1, 0.1, 0.8]]);
        assert!(topk_stream(&p, None, &TopkOptions::new(Measure::Probability, 1, true)).is_err());
        let r = topk_stream(&p, None, &TopkOptions::new(Measure::Probability, 2, false)).unwrap();
        assert_eq!(r.neighbors[0].ids().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(r.neighbors[1].ids().collect::<Vec<_>>(), vec![2, 0]);
    }

    #[test]
    fn block_size_does_not_matter() {
        let rows: Vec<Vec<f64>> = (0..37)
            .map(|i| (0..5).map(|j| ((i * 7 + j * 3) % 11) as f64).collect())
            .collect();
        let pts = DenseMatrix::from_rows(&rows).unwrap();
        for measure in [Measure::Euclidean, Measure::SoftmaxDot] {
            let base = topk_stream(&pts, None, &TopkOptions::new(measure, 4, false).block_size(1000))
                .unwrap();
            for bs in [1, 3, 8, 36] {
                let r = topk_stream(&pts, None, &TopkOptions::new(measure, 4, false).block_size(bs))
                    .unwrap();
                assert_eq!(r, base);
            }
        }
    }

    #[test]
    fn precomputed_matches_streaming() {
        let pts = m(&[&[0.0, 1.0], &[2.0, 0.5], &[1.0, 1.0], &[-1.0, 3.0]]);
        let full = pairwise_matrix(&pts, None, Measure::Euclidean).unwrap();
        let a = topk_precomputed(&full, 2, true).unwrap();
        let b = topk_stream(&pts, None, &TopkOptions::new(Measure::Euclidean, 2, true)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_dissims_match_matrix() {
        let pts = m(&[&[0.0, 1.0], &[2.0, 0.5], &[1.0, 1.0]]);
        for measure in [Measure::Euclidean, Measure::NormalizedEuclidean, Measure::SoftmaxDot] {
            let full = pairwise_matrix(&pts, None, measure).unwrap();
            let pairs = [(2, 0), (0, 1), (2, 2), (0, 0), (1, 2)];
            let d = pair_dissims(&pts, None, measure, &pairs).unwrap();
            for (&(i, j), v) in pairs.iter().zip(d) {
                assert_eq!(v, full.get(i, j));
            }
        }
    }

    #[test]
    fn prob_stats_examples() {
        let uniform = DenseMatrix::new(3, 10, Dtype::F64, vec![0.1; 30]).unwrap();
        let s = prob_distance_stats(&uniform).unwrap();
        assert_relative_eq!(s.mean, 0.9, max_relative = 1e-12);
        assert_eq!(s.relative_variance, 0.0);

        let one_hot = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let s = prob_distance_stats(&one_hot).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.variance, 0.25);
        assert_eq!(s.relative_variance, 1.0);

        let bad = m(&[&[0.5, 0.4]]);
        assert!(matches!(prob_distance_stats(&bad), Err(HubError::Data(_))));
    }
}
