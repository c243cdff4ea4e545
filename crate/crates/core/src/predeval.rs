//! Top-1 accuracy split by whether the predicted token is a hub.

use serde::{Deserialize, Serialize};

use crate::error::{HubError, Result};
use crate::hubstats::HubSet;
use crate::matrixio::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub total: usize,
    pub hub_predicted: usize,
    pub non_hub_predicted: usize,
    pub hub_correct: usize,
    pub non_hub_correct: usize,
}

/// Accuracy over all predictions and within each partition. A partition
/// with no predictions reports `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPartition {
    pub all: f64,
    pub hub: Option<f64>,
    pub non_hub: Option<f64>,
    pub counts: PartitionCounts,
}

/// Column of the largest entry per row, lowest column on ties.
pub fn top1_predict(rows: &DenseMatrix) -> Result<Vec<usize>> {
    if rows.rows() == 0 || rows.cols() == 0 {
        return Err(HubError::Data("cannot predict from an empty matrix".into()));
    }
    Ok(rows
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect())
}

/// Partitions by the predicted token's hub membership.
pub fn accuracy_partition(
    predicted: &[usize],
    gold: &[usize],
    hubs: &HubSet,
) -> Result<AccuracyPartition> {
    if predicted.len() != gold.len() {
        return Err(HubError::Shape(format!(
            "{} predictions but {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    if predicted.is_empty() {
        return Err(HubError::Data("no predictions to score".into()));
    }
    let mut c = PartitionCounts {
        total: predicted.len(),
        hub_predicted: 0,
        non_hub_predicted: 0,
        hub_correct: 0,
        non_hub_correct: 0,
    };
    let hub_ids: std::collections::HashSet<usize> = hubs.members.iter().map(|h| h.id).collect();
    for (&p, &g) in predicted.iter().zip(gold) {
        let correct = (p == g) as usize;
        if hub_ids.contains(&p) {
            c.hub_predicted += 1;
            c.hub_correct += correct;
        } else {
            c.non_hub_predicted += 1;
            c.non_hub_correct += correct;
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(AccuracyPartition {
        all: (c.hub_correct + c.non_hub_correct) as f64 / c.total as f64,
        hub: ratio(c.hub_correct, c.hub_predicted),
        non_hub: ratio(c.non_hub_correct, c.non_hub_predicted),
        counts: c,
    })
}
