//! k-occurrence, skewness, hubs and concentration diagnostics.

use serde::{Deserialize, Serialize};

use crate::dissim::{check_probability_matrix, pair_dissims, Measure, NeighborList};
use crate::error::{HubError, Result};
use crate::matrixio::DenseMatrix;
use crate::numeric::{CompensatedSum, Moments};
use crate::rng::CounterRng;

/// Hub threshold used with k = 10.
pub const DEFAULT_HUB_THRESHOLD: u64 = 100;
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_BINS: usize = 100;
pub const DEFAULT_SAMPLE_PAIRS: u64 = 1_000_000;

/// `N_k(c)`: how many queries list candidate `c` among their k nearest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KOccurrence {
    counts: Vec<u64>,
    k: usize,
    num_queries: usize,
}

impl KOccurrence {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_queries(&self) -> usize {
        self.num_queries
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Skewness of the counts, the usual hubness score.
    pub fn k_skew(&self) -> Result<f64> {
        skewness(&self.as_f64())
    }

    /// `(value, how many candidates have it)` for every observed `N_k`.
    pub fn distribution(&self) -> Vec<(u64, usize)> {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut hist = vec![0usize; max as usize + 1];
        for &c in &self.counts {
            hist[c as usize] += 1;
        }
        hist.into_iter()
            .enumerate()
            .filter(|&(_, n)| n > 0)
            .map(|(v, n)| (v as u64, n))
            .collect()
    }
}

/// Counts neighbor-list memberships. All lists must have the same length.
pub fn k_occurrence(neighbors: &[NeighborList], num_candidates: usize) -> Result<KOccurrence> {
    let k = neighbors.first().map_or(0, |l| l.entries.len());
    let mut counts = vec![0u64; num_candidates];
    for list in neighbors {
        if list.entries.len() != k {
            return Err(HubError::Data(format!(
                "neighbor list of query {} has {} entries, expected {k}",
                list.query,
                list.entries.len()
            )));
        }
        for id in list.ids() {
            let slot = counts.get_mut(id).ok_or_else(|| {
                HubError::Data(format!(
                    "candidate id {id} out of range for {num_candidates} candidates"
                ))
            })?;
            *slot += 1;
        }
    }
    Ok(KOccurrence {
        counts,
        k,
        num_queries: neighbors.len(),
    })
}

/// `(1/n) Σ ((x − μ)/σ)³` with the divisor-n standard deviation.
///
/// A zero-variance input is an error: for k-occurrence vectors it means
/// every candidate appears equally often, which usually points at a
/// misconfigured run rather than a symmetric neighbor relation.
pub fn skewness(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(HubError::Undefined(format!(
            "skewness needs at least 2 values, got {}",
            values.len()
        )));
    }
    let m = Moments::of(values).unwrap();
    if m.variance <= 0.0 {
        return Err(HubError::Undefined(
            "skewness of constant values (zero variance)".into(),
        ));
    }
    Ok(m.third / m.variance.powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hub {
    pub id: usize,
    pub n_k: u64,
}

/// Candidates with `N_k ≥ threshold`, by `N_k` descending then id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubSet {
    pub threshold: u64,
    pub members: Vec<Hub>,
}

impl HubSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.members.iter().any(|h| h.id == id)
    }

    /// Membership mask over `n` candidates.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for h in &self.members {
            if h.id < n {
                mask[h.id] = true;
            }
        }
        mask
    }
}

pub fn detect_hubs(occ: &KOccurrence, threshold: u64) -> HubSet {
    HubSet::from_counts(&occ.counts, threshold)
}

impl HubSet {
    /// Candidates with `N_k ≥ threshold`, by `N_k` descending then id.
    pub fn from_counts(counts: &[u64], threshold: u64) -> HubSet {
        let mut members: Vec<Hub> = counts
            .iter()
        .enumerate()
            .filter(|&(_, &c)| c >= threshold)
            .map(|(id, &n_k)| Hub { id, n_k })
            .collect();
        members.sort_by(|a, b| b.n_k.cmp(&a.n_k).then(a.id.cmp(&b.id)));
        HubSet { threshold, members }
    }
}

/// Hub-table statistics over member `N_k` values. Absent for an empty set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubSummary {
    pub num_hubs: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub max: Option<u64>,
    pub variance: Option<f64>,
}

pub fn hub_summary(hubs: &HubSet) -> HubSummary {
    let mut values: Vec<u64> = hubs.members.iter().map(|h| h.n_k).collect();
    if values.is_empty() {
        return HubSummary {
            num_hubs: 0,
            median: None,
            mean: None,
            max: None,
            variance: None,
        };
    }
    values.sort_unstable();
    let n = values.len();
    let median = if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0
    };
    let as_f64: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    let m = Moments::of(&as_f64).unwrap();
    HubSummary {
        num_hubs: n,
        median: Some(median),
        mean: Some(m.mean),
        max: values.last().copied(),
        variance: Some(m.variance),
    }
}

/// Population variance over squared mean. Near zero means the distances
/// concentrate.
pub fn relative_variance(distances: &[f64]) -> Result<f64> {
    if distances.len() < 2 {
        return Err(HubError::Undefined(format!(
            "relative variance needs at least 2 distances, got {}",
            distances.len()
        )));
    }
    let m = Moments::of(distances).unwrap();
    if m.mean <= 0.0 {
        return Err(HubError::Undefined(format!(
            "relative variance needs a positive mean, got {}",
            m.mean
        )));
    }
    Ok(m.variance / (m.mean * m.mean))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges, equal width over `[0, max]`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins over `[0, max(values)]`; the maximum lands in the
    /// last bin. Negative values (possible with precomputed inputs) clamp
    /// to the first bin.
    pub fn equal_width(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(HubError::Param("bins must be at least 1".into()));
        }
        let max = values.iter().copied().fold(0.0f64, f64::max);
        let width = max / bins as f64;
        let edges = (0..=bins)
            .map(|i| if i == bins { max } else { width * i as f64 })
            .collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = if width > 0.0 {
                ((v / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Ok(Self { edges, counts })
    }

    /// Left edge of the most populated bin, lowest on ties.
    pub fn mode_bin(&self) -> Option<(f64, f64)> {
        let (i, _) = self
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
        Some((self.edges[i], self.edges[i + 1]))
    }

    /// `bin-left,bin-right,count` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin-left,bin-right,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationDiag {
    pub histogram: Histogram,
    pub min_dist: f64,
    pub max_dist: f64,
    pub mean_dist: f64,
    pub relative_variance: Option<f64>,
    pub sampled_pairs: u64,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramOptions {
    pub measure: Measure,
    pub bins: usize,
    pub sample_pairs: u64,
    pub seed: u64,
    pub exclude_self: bool,
}

/// Query–candidate pairs to evaluate: all of them when they fit in the
/// budget, otherwise `sample_pairs` draws with replacement.
fn choose_pairs(
    num_queries: usize,
    num_candidates: usize,
    exclude_self: bool,
    sample_pairs: u64,
    seed: u64,
) -> (Vec<(usize, usize)>, bool) {
    let per_query = num_candidates - exclude_self as usize;
    let total = num_queries as u64 * per_query as u64;
    let map = |q: usize, c: usize| {
        if exclude_self && c >= q {
            (q, c + 1)
        } else {
            (q, c)
        }
    };
    if total <= sample_pairs {
        let pairs = (0..num_queries)
            .flat_map(|q| (0..per_query).map(move |c| map(q, c)))
            .collect();
        return (pairs, true);
    }
    let rng = CounterRng::new(seed);
    let pairs = (0..sample_pairs)
        .map(|i| {
            let idx = rng.below(i, total);
            map(
                (idx / per_query as u64) as usize,
                (idx % per_query as u64) as usize,
            )
        })
        .collect();
    (pairs, false)
}

/// Samples query–candidate dissimilarities and summarizes their spread.
pub fn distance_histogram(
    queries: &DenseMatrix,
    candidates: Option<&DenseMatrix>,
    opts: &HistogramOptions,
) -> Result<ConcentrationDiag> {
    if opts.sample_pairs == 0 {
        return Err(HubError::Param("sample-pairs must be at least 1".into()));
    }
    if opts.bins == 0 {
        return Err(HubError::Param("bins must be at least 1".into()));
    }
    if opts.exclude_self && candidates.is_some() {
        return Err(HubError::Param(
            "exclude_self requires queries and candidates to be the same matrix".into(),
        ));
    }
    let num_candidates = match (opts.measure, candidates) {
        (Measure::Probability, _) => queries.cols(),
        (_, Some(c)) => c.rows(),
        (_, None) => queries.rows(),
    };
    if opts.exclude_self && opts.measure == Measure::Probability && queries.rows() != queries.cols()
    {
        return Err(HubError::Shape(
            "self-exclusion on probability rows needs a square matrix".into(),
        ));
    }
    let per_query = num_candidates.saturating_sub(opts.exclude_self as usize);
    if queries.rows() == 0 || per_query == 0 {
        return Err(HubError::Data("no eligible query–candidate pairs".into()));
    }
    let (pairs, exhaustive) = choose_pairs(
        queries.rows(),
        num_candidates,
        opts.exclude_self,
        opts.sample_pairs,
        opts.seed,
    );
    let dists = pair_dissims(queries, candidates, opts.measure, &pairs)?;
    let min_dist = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let max_dist = dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_dist = dists.iter().copied().collect::<CompensatedSum>().value() / dists.len() as f64;
    Ok(ConcentrationDiag {
        histogram: Histogram::equal_width(&dists, opts.bins)?,
        min_dist,
        max_dist,
        mean_dist,
        relative_variance: relative_variance(&dists).ok(),
        sampled_pairs: dists.len() as u64,
        exhaustive,
    })
}

/// Euclidean distance from one distribution to the uniform one.
pub fn l2_to_uniform(row: &[f64]) -> f64 {
    let u = 1.0 / row.len() as f64;
    row.iter()
        .map(|p| (p - u) * (p - u))
        .collect::<CompensatedSum>()
        .value()
        .sqrt()
}

/// Row average of [`l2_to_uniform`].
pub fn mean_l2_to_uniform(prob: &DenseMatrix) -> Result<f64> {
    check_probability_matrix(prob)?;
    if prob.rows() == 0 || prob.cols() == 0 {
        return Err(HubError::Data("empty probability matrix".into()));
    }
    let total: CompensatedSum = prob.row_iter().map(l2_to_uniform).collect();
    Ok(total.value() / prob.rows() as f64)
}
