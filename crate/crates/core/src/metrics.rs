//! Evaluation metrics: AUC, kickout at an acceptance rate, and the area
//! under the kickout curve (AUK).
//!
//! Kickout compares the acceptance set of a reject-inference model against
//! a benchmark trained on accepts only. Scores are P(default), so a model
//! accepts its lowest-scoring clients: the benchmark takes the
//! floor(alpha * N) lowest-scoring accepted-test rows, while the RI model
//! ranks accepted and rejected test rows together and the comparison then
//! restricts to the accepted-test rows. Ties break by ascending row id so
//! acceptance-set sizes are exact.

use std::collections::BTreeSet;

use crate::data::RowId;
use crate::error::{Error, Result};

/// Probability a random positive outranks a random negative, ties counted
/// half. Computed from midranks; agrees exactly with the pairwise
/// definition.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::dim("auc: scores and labels differ in length"));
    }
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("auc: both classes required".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("auc: NaN score".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Midranks over tie groups; rank sums stay exact in f64 (multiples of
    // 0.5 well below 2^53).
    let mut rank = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            rank[idx] = mid;
        }
        i = j + 1;
    }
    let rank_sum_pos: f64 = rank
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum_pos - (n_pos as f64) * (n_pos as f64 + 1.0) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Everything the kickout computation needs, aligned by position: the
/// benchmark and RI scores on the labeled accepted-test rows, plus the RI
/// scores on the unlabeled rejected-test rows.
#[derive(Clone, Debug)]
pub struct KickoutInputs<'a> {
    pub accepted_ids: &'a [RowId],
    pub accepted_labels: &'a [u8],
    pub bm_scores_accepted: &'a [f64],
    pub ri_scores_accepted: &'a [f64],
    pub reject_ids: &'a [RowId],
    pub ri_scores_rejects: &'a [f64],
}

impl KickoutInputs<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.accepted_ids.len();
        if self.accepted_labels.len() != n
            || self.bm_scores_accepted.len() != n
            || self.ri_scores_accepted.len() != n
        {
            return Err(Error::dim("kickout: accepted-side lengths differ"));
        }
        if self.reject_ids.len() != self.ri_scores_rejects.len() {
            return Err(Error::dim("kickout: reject-side lengths differ"));
        }
        let mut seen = BTreeSet::new();
        for id in self.accepted_ids.iter().chain(self.reject_ids) {
            if !seen.insert(*id) {
                return Err(Error::invalid(format!("kickout: duplicate row id {id}")));
            }
        }
        Ok(())
    }
}

/// Accept the `count` lowest-scoring rows; ties break by ascending row id.
fn lowest_score_ids(ids: &[RowId], scores: &[f64], count: usize) -> BTreeSet<RowId> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(ids[a].cmp(&ids[b])));
    order.iter().take(count).map(|&i| ids[i]).collect()
}

/// Acceptance sets at rate `alpha`: the benchmark set over accepted-test
/// rows and the RI set over the pooled accepted plus rejected test rows.
pub fn accept_sets(
    inputs: &KickoutInputs<'_>,
    alpha: f64,
) -> Result<(BTreeSet<RowId>, BTreeSet<RowId>)> {
    inputs.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("accept_sets: alpha must be in (0, 1]"));
    }
    let n_acc = inputs.accepted_ids.len();
    let bm_count = (alpha * n_acc as f64).floor() as usize;
    if bm_count == 0 {
        return Err(Error::invalid(format!(
            "accept_sets: alpha {alpha} accepts nobody out of {n_acc}"
        )));
    }
    let bm = lowest_score_ids(inputs.accepted_ids, inputs.bm_scores_accepted, bm_count);

    let mut pool_ids: Vec<RowId> = inputs.accepted_ids.to_vec();
    pool_ids.extend_from_slice(inputs.reject_ids);
    let mut pool_scores: Vec<f64> = inputs.ri_scores_accepted.to_vec();
    pool_scores.extend_from_slice(inputs.ri_scores_rejects);
    let ri_count = (alpha * pool_ids.len() as f64).floor() as usize;
    let ri = lowest_score_ids(&pool_ids, &pool_scores, ri_count);
    Ok((bm, ri))
}

/// The counts entering the kickout formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KickoutParts {
    /// Bad payers in the benchmark acceptance set.
    pub s_b: usize,
    /// Benchmark-accepted bads that the RI model rejects.
    pub k_b: usize,
    /// Benchmark-accepted goods that the RI model rejects.
    pub k_g: usize,
    /// Benchmark acceptance-set size.
    pub n_acc_bm: usize,
}

impl KickoutParts {
    pub fn p_bad(&self) -> f64 {
        self.s_b as f64 / self.n_acc_bm as f64
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KickoutResult {
    pub value: f64,
    pub parts: KickoutParts,
    /// True when the formula was undefined (no bads, or only bads, among
    /// the benchmark accepts) and the neutral value 0 was used.
    pub degenerate: bool,
}

/// Kickout from pre-tallied counts:
/// (K_B / p(B) - K_G / (1 - p(B))) / (S_B / p(B)).
pub fn kickout_from_parts(parts: KickoutParts) -> KickoutResult {
    let p_b = parts.p_bad();
    if parts.s_b == 0 || p_b >= 1.0 {
        return KickoutResult {
            value: 0.0,
            parts,
            degenerate: true,
        };
    }
    let value = (parts.k_b as f64 / p_b - parts.k_g as f64 / (1.0 - p_b))
        / (parts.s_b as f64 / p_b);
    KickoutResult {
        value,
        parts,
        degenerate: false,
    }
}

/// Kickout at acceptance rate `alpha`. Higher is better: the RI model is
/// rewarded for rejecting bads the benchmark accepted and penalized for
/// rejecting goods.
pub fn kickout(inputs: &KickoutInputs<'_>, alpha: f64) -> Result<KickoutResult> {
    let (bm, ri) = accept_sets(inputs, alpha)?;
    let mut parts = KickoutParts {
        s_b: 0,
        k_b: 0,
        k_g: 0,
        n_acc_bm: bm.len(),
    };
    for (i, id) in inputs.accepted_ids.iter().enumerate() {
        if !bm.contains(id) {
            continue;
        }
        let bad = inputs.accepted_labels[i] == 1;
        if bad {
            parts.s_b += 1;
        }
        if !ri.contains(id) {
            if bad {
                parts.k_b += 1;
            } else {
                parts.k_g += 1;
            }
        }
    }
    Ok(kickout_from_parts(parts))
}

/// The production AUK grid: acceptance rates 1%..100% in 1% steps.
pub fn auk_grid() -> Vec<f64> {
    (1..=100).map(|p| p as f64 / 100.0).collect()
}

#[derive(Clone, Debug)]
pub struct AukResult {
    pub value: f64,
    /// Grid points where the kickout denominator was degenerate.
    pub degenerate_points: usize,
    /// Grid points where alpha accepted nobody; these contribute 0.
    pub empty_points: usize,
}

/// Mean kickout over an acceptance-rate grid. Grid points whose acceptance
/// set would be empty contribute the neutral value 0 and are counted.
pub fn auk(inputs: &KickoutInputs<'_>, grid: &[f64]) -> Result<AukResult> {
    if grid.is_empty() {
        return Err(Error::invalid("auk: empty grid"));
    }
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut degenerate_points = 0;
    let mut empty_points = 0;
    for &alpha in &sorted {
        match kickout(inputs, alpha) {
            Ok(r) => {
                sum += r.value;
                if r.degenerate {
                    degenerate_points += 1;
                }
            }
            Err(Error::InvalidArgument(msg)) if msg.contains("accepts nobody") => {
                empty_points += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(AukResult {
        value: sum / sorted.len() as f64,
        degenerate_points,
        empty_points,
    })
}
