//! Spearman correlation between hub k-occurrence and corpus frequency.

use serde::{Deserialize, Serialize};

use crate::error::{HubError, Result};
use crate::hubstats::{HubSet, KOccurrence};
use crate::matrixio::FrequencyTable;
use crate::numeric::CompensatedSum;

/// Constant added to frequencies on log-scale scatter plots so that
/// zero-count tokens stay visible. Never used in the correlation itself.
pub const LOG_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rho: f64,
    pub n: usize,
    pub frequency_source: String,
    pub epsilon_for_log: f64,
}

/// 1-based ranks, ties sharing the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1 ..= end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().copied().collect::<CompensatedSum>().value() / n;
    let my = y.iter().copied().collect::<CompensatedSum>().value() / n;
    let mut sxy = CompensatedSum::default();
    let mut sxx = CompensatedSum::default();
    let mut syy = CompensatedSum::default();
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let denom = (sxx.value() * syy.value()).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some((sxy.value() / denom).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
///
/// Undefined, and an error, when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(HubError::Shape(format!(
            "spearman inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(HubError::Undefined(
            "spearman correlation needs at least 2 pairs".into(),
        ));
    }
    pearson(&average_ranks(x), &average_ranks(y)).ok_or_else(|| {
        HubError::Undefined("spearman correlation of a constant input".into())
    })
}

/// Correlates each hub's `N_k` with its raw corpus count. Tokens absent
/// from the corpus count as zero and stay in.
pub fn hub_frequency_correlation(
    hubs: &HubSet,
    freq: &FrequencyTable,
    frequency_source: &str,
) -> Result<CorrelationReport> {
    if hubs.is_empty() {
        return Err(HubError::Undefined(
            "no hubs to correlate with frequencies".into(),
        ));
    }
    let n_k: Vec<f64> = hubs.members.iter().map(|h| h.n_k as f64).collect();
    let counts: Vec<f64> = hubs.members.iter().map(|h| freq.count(h.id) as f64).collect();
    let rho = spearman(&n_k, &counts)?;
    Ok(CorrelationReport {
        rho,
        n: hubs.len(),
        frequency_source: frequency_source.to_string(),
        epsilon_for_log: LOG_EPSILON,
    })
}

/// Same correlation over every candidate rather than hubs only.
pub fn all_token_frequency_correlation(
    occ: &KOccurrence,
    freq: &FrequencyTable,
    frequency_source: &str,
) -> Result<CorrelationReport> {
    let n_k = occ.as_f64();
    let counts: Vec<f64> = (0..n_k.len()).map(|id| freq.count(id) as f64).collect();
    Ok(CorrelationReport {
        rho: spearman(&n_k, &counts)?,
        n: n_k.len(),
        frequency_source: frequency_source.to_string(),
        epsilon_for_log: LOG_EPSILON,
    })
}
