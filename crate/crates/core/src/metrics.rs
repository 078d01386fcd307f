//! Run metrics: label-permutation accuracy and consensus error.

use crate::centers::{dist2, Centers};
use crate::error::{Error, Result};

/// Clustering accuracy, maximized over relabelings of the `k` predicted
/// clusters: `max_pi (1/n) |{r : pi(predicted_r) = truth_r}|`.
///
/// Up to `k = 10` the maximum is found by exhaustive permutation search over
/// the k-by-k confusion matrix; beyond that an exact subset-DP assignment
/// solver takes over.
pub fn clustering_accuracy(predicted: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Input(format!(
            "predicted has {} entries, truth has {}",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Input("empty label vectors".into()));
    }
    if k == 0 {
        return Err(Error::Input("k must be >= 1".into()));
    }
    if let Some(&bad) = predicted.iter().find(|&&p| p >= k) {
        return Err(Error::Input(format!("predicted label {bad} out of range for k={k}")));
    }

    // Confusion counts; truth ids >= k can never be matched by a permutation
    // of [k] and only contribute to the denominator.
    let mut confusion = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        if t < k {
            confusion[p][t] += 1;
        }
    }
    let best = if k <= 10 {
        best_permutation_score(&confusion)
    } else {
        assignment_dp(&confusion)
    };
    Ok(best as f64 / predicted.len() as f64)
}

/// Max over permutations pi of sum_p confusion[p][pi(p)], by Heap's algorithm.
fn best_permutation_score(confusion: &[Vec<usize>]) -> usize {
    let k = confusion.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut counters = vec![0usize; k];
    let score =
        |perm: &[usize]| -> usize { perm.iter().enumerate().map(|(p, &t)| confusion[p][t]).sum() };

    let mut best = score(&perm);
    let mut i = 0;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.max(score(&perm));
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    best
}

/// Exact max-weight assignment over column subsets: O(2^k * k).
fn assignment_dp(confusion: &[Vec<usize>]) -> usize {
    let k = confusion.len();
    let full = 1usize << k;
    let mut dp = vec![0usize; full];
    for mask in 1..full {
        let row = (mask as u32).count_ones() as usize - 1;
        let mut best = 0;
        for col in 0..k {
            if mask & (1 << col) != 0 {
                best = best.max(dp[mask ^ (1 << col)] + confusion[row][col]);
            }
        }
        dp[mask] = best;
    }
    dp[full - 1]
}

/// Max over centers k and user pairs (i, j) of `||x_i(k) - x_j(k)||`.
pub fn consensus_error(all_centers: &[Centers]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in all_centers.iter().enumerate() {
        for b in &all_centers[i + 1..] {
            for (ra, rb) in a.rows().zip(b.rows()) {
                worst = worst.max(dist2(ra, rb).sqrt());
            }
        }
    }
    worst
}
