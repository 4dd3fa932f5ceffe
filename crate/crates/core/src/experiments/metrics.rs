//! Partition and center-recovery quality metrics.

use std::collections::HashMap;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::space::{Metric, Point};

fn comb2(count: usize) -> f64 {
    if count < 2 {
        0.0
    } else {
        (count as f64) * (count as f64 - 1.0) / 2.0
    }
}

/// Adjusted Rand Index between two labelings of the same items: 1 for equal
/// partitions, around 0 for chance-level agreement, symmetric and invariant
/// to label permutations.
pub fn adjusted_rand_index(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::LengthMismatch {
            left: labels_a.len(),
            right: labels_b.len(),
        });
    }
    if labels_a.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: labels_a.len(),
        });
    }
    let mut counts_a: HashMap<usize, usize> = HashMap::new();
    let mut counts_b: HashMap<usize, usize> = HashMap::new();
    let mut contingency: HashMap<(usize, usize), usize> = HashMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        *counts_a.entry(a).or_insert(0) += 1;
        *counts_b.entry(b).or_insert(0) += 1;
        *contingency.entry((a, b)).or_insert(0) += 1;
    }
    let sum_cells: f64 = contingency.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = counts_a.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = counts_b.values().map(|&c| comb2(c)).sum();
    let total = comb2(labels_a.len());
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if max_index == expected {
        // both partitions trivial in the same way
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}

/// Minimum over bijections of the mean L2 distance between matched centers.
/// Exhaustive over the k! matchings, so k is capped at 8.
pub fn average_center_error(estimated: &[Point], truth: &[Point]) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimated.len(),
            right: truth.len(),
        });
    }
    let k = estimated.len();
    if k == 0 {
        return Err(Error::EmptySet("centers"));
    }
    if k > 8 {
        return Err(Error::InvalidConfig(format!(
            "center error matching is exhaustive and limited to k <= 8, got {k}"
        )));
    }
    let dim = truth[0].dim();
    for p in estimated.iter().chain(truth) {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.dim(),
            });
        }
    }
    let mut best = f64::INFINITY;
    for perm in (0..k).permutations(k) {
        let total: f64 = perm
            .iter()
            .enumerate()
            .map(|(e, &t)| Metric::L2.eval(estimated[e].coords(), truth[t].coords()))
            .sum();
        best = best.min(total / k as f64);
    }
    Ok(best)
}
