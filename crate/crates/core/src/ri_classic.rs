//! Classical reject-inference baselines.
//!
//! Weight-adjusting family: upward/downward augmentation, soft cut-off
//! banding, and fuzzy augmentation, all driven by an approval/rejection
//! model fitted on accept-vs-reject status. Data-inflating family:
//! extrapolation (full, bad-only, confident), parceling, and the label
//! spreading wrapper. Every merged reject carries `Provenance::Inferred`;
//! ground-truth labels are never relabeled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{self, ClassifierSpec};
use crate::data::{Dataset, Provenance, RowId};
use crate::error::{Error, Result};
use crate::label_spreading::{spread, SpreadSpec};
use crate::state::TrainState;

/// Probability floor for the upward-augmentation division and the matching
/// downward weight floor.
pub const PROB_CLIP_FLOOR: f64 = 1e-6;

/// Approval/rejection model: P(accept) fitted on accept-vs-reject status
/// over the pooled features.
pub struct ArModel {
    model: classifier::FittedClassifier,
}

impl ArModel {
    /// Fit on accepts (status 1) and rejects (status 0) with the balanced
    /// reference classifier.
    pub fn fit(accepts: &Dataset, rejects: &Dataset, spec: &ClassifierSpec) -> Result<ArModel> {
        if accepts.rows() == 0 || rejects.rows() == 0 {
            return Err(Error::invalid("ar model: both pools must be nonempty"));
        }
        let pooled = accepts
            .clone()
            .without_labels()
            .concat(&rejects.clone().without_labels())?;
        let x = pooled.to_matrix()?;
        let mut status = vec![1u8; accepts.rows()];
        status.extend(vec![0u8; rejects.rows()]);
        let model = classifier::fit(spec, x.view(), &status, None)?;
        Ok(ArModel { model })
    }

    /// P(accept) per row of `ds`.
    pub fn p_accept(&self, ds: &Dataset) -> Result<Vec<f64>> {
        classifier::predict_proba(&self.model, ds.to_matrix()?.view())
    }
}

/// Reweighting outcome: the adjusted accepted pool plus clip/merge flags.
#[derive(Debug)]
pub struct Reweighted {
    pub train: Dataset,
    /// Rows whose probability hit the clip floor.
    pub clipped: usize,
}

/// Upward-augmentation weights: w / p(A), with p(A) clipped into
/// [PROB_CLIP_FLOOR, 1]. Exposed separately so the rule is testable on raw
/// probabilities.
pub fn upward_weights(weights: &[f64], p_accept: &[f64]) -> (Vec<f64>, usize) {
    let mut clipped = 0;
    let out = weights
        .iter()
        .zip(p_accept)
        .map(|(&w, &p)| {
            let p = if p < PROB_CLIP_FLOOR {
                clipped += 1;
                PROB_CLIP_FLOOR
            } else {
                p.min(1.0)
            };
            w / p
        })
        .collect();
    (out, clipped)
}

/// Downward-augmentation weights: w * (1 - p(A)), floored at
/// PROB_CLIP_FLOOR so weights stay positive.
pub fn downward_weights(weights: &[f64], p_accept: &[f64]) -> (Vec<f64>, usize) {
    let mut clipped = 0;
    let out = weights
        .iter()
        .zip(p_accept)
        .map(|(&w, &p)| {
            let v = w * (1.0 - p.clamp(0.0, 1.0));
            if v < PROB_CLIP_FLOOR {
                clipped += 1;
                PROB_CLIP_FLOOR
            } else {
                v
            }
        })
        .collect();
    (out, clipped)
}

/// Upward augmentation: accepted rows are reweighted by 1 / p(A); rejects
/// are not added.
pub fn augment_upward(
    train: &Dataset,
    rejects: &Dataset,
    spec: &ClassifierSpec,
) -> Result<Reweighted> {
    let ar = ArModel::fit(train, rejects, spec)?;
    let p = ar.p_accept(train)?;
    let (weights, clipped) = upward_weights(&train.weights_or_ones(), &p);
    Ok(Reweighted {
        train: train.clone().with_weights(weights)?,
        clipped,
    })
}

/// Downward augmentation: accepted rows are reweighted by (1 - p(A)).
pub fn augment_downward(
    train: &Dataset,
    rejects: &Dataset,
    spec: &ClassifierSpec,
) -> Result<Reweighted> {
    let ar = ArModel::fit(train, rejects, spec)?;
    let p = ar.p_accept(train)?;
    let (weights, clipped) = downward_weights(&train.weights_or_ones(), &p);
    Ok(Reweighted {
        train: train.clone().with_weights(weights)?,
        clipped,
    })
}

/// Equal-frequency bands over a sorted score vector. Returns per-row band
/// indices aligned with the input order.
fn equal_frequency_bands(scores: &[f64], ids: &[RowId], n_bands: usize) -> Vec<usize> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(ids[a].cmp(&ids[b])));
    let mut band = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        band[row] = pos * n_bands / n;
    }
    band
}

#[derive(Debug)]
pub struct SoftCutoffOutcome {
    pub train: Dataset,
    /// Bands without accepted rows, merged into their nearest neighbor.
    pub merged_bands: usize,
}

/// Augmentation with soft cut-off: sort accepts and rejects by p(A), band
/// into `n_bands` equal-frequency score bands, and reweight each accepted
/// row by (nA + nR) / nA of its band. A band with no accepts is merged
/// with the nearest band that has some.
pub fn augment_soft_cutoff(
    train: &Dataset,
    rejects: &Dataset,
    n_bands: usize,
    spec: &ClassifierSpec,
) -> Result<SoftCutoffOutcome> {
    if n_bands < 2 {
        return Err(Error::invalid("soft cut-off: n_bands must be >= 2"));
    }
    let ar = ArModel::fit(train, rejects, spec)?;
    let mut scores = ar.p_accept(train)?;
    let rej_scores = ar.p_accept(rejects)?;
    scores.extend_from_slice(&rej_scores);
    let mut ids: Vec<RowId> = train.row_ids().to_vec();
    ids.extend_from_slice(rejects.row_ids());

    let band = equal_frequency_bands(&scores, &ids, n_bands);
    let n_acc = train.rows();
    let mut acc_count = vec![0usize; n_bands];
    let mut rej_count = vec![0usize; n_bands];
    for (row, &b) in band.iter().enumerate() {
        if row < n_acc {
            acc_count[b] += 1;
        } else {
            rej_count[b] += 1;
        }
    }

    // Band factor (nA + nR) / nA; empty-accept bands borrow the nearest
    // populated band's factor (lower index on ties).
    let mut factor = vec![1.0f64; n_bands];
    let mut merged_bands = 0;
    for b in 0..n_bands {
        if acc_count[b] > 0 {
            factor[b] = (acc_count[b] + rej_count[b]) as f64 / acc_count[b] as f64;
        } else {
            merged_bands += 1;
            let mut found = None;
            for step in 1..n_bands {
                if b >= step && acc_count[b - step] > 0 {
                    found = Some(b - step);
                    break;
                }
                if b + step < n_bands && acc_count[b + step] > 0 {
                    found = Some(b + step);
                    break;
                }
            }
            let donor = found
                .ok_or_else(|| Error::invalid("soft cut-off: no band contains accepts"))?;
            factor[b] = (acc_count[donor] + rej_count[donor] + rej_count[b]) as f64
                / acc_count[donor] as f64;
        }
    }

    let base = train.weights_or_ones();
    let weights: Vec<f64> = (0..n_acc).map(|row| base[row] * factor[band[row]]).collect();
    Ok(SoftCutoffOutcome {
        train: train.clone().with_weights(weights)?,
        merged_bands,
    })
}

/// Fuzzy augmentation: accepts keep weight 1; every reject joins the pool
/// twice, once as a good payer weighted p(A) and once as a bad payer
/// weighted 1 - p(A). The duplicate copies receive fresh row ids above the
/// current maximum so id uniqueness holds.
pub fn augment_fuzzy(
    train: &Dataset,
    rejects: &Dataset,
    spec: &ClassifierSpec,
) -> Result<TrainState> {
    let ar = ArModel::fit(train, rejects, spec)?;
    let p = ar.p_accept(rejects)?;
    let n = rejects.rows();

    let floor = PROB_CLIP_FLOOR;
    let w_good: Vec<f64> = p.iter().map(|&pi| pi.max(floor)).collect();
    let w_bad: Vec<f64> = p.iter().map(|&pi| (1.0 - pi).max(floor)).collect();

    let accepted = train.clone().with_weights(vec![1.0; train.rows()])?;

    let good_copy = rejects
        .clone()
        .with_labels(vec![0; n])?
        .with_weights(w_good)?
        .with_provenance(vec![Provenance::Inferred; n])?;
    let max_id = train
        .max_row_id()
        .unwrap_or(0)
        .max(rejects.max_row_id().unwrap_or(0));
    let fresh_ids: Vec<RowId> = (1..=n as u64).map(|i| max_id + i).collect();
    let bad_copy = rejects
        .clone()
        .with_row_ids(fresh_ids)?
        .with_labels(vec![1; n])?
        .with_weights(w_bad)?
        .with_provenance(vec![Provenance::Inferred; n])?;

    let labeled = accepted.concat(&good_copy)?.concat(&bad_copy)?;
    let empty_rejects = rejects.take_rows(&[]);
    TrainState::new(labeled, empty_rejects)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtrapolateMode {
    /// Merge every reject with its inferred label.
    Full,
    /// Merge only rejects inferred as bad payers.
    BadOnly,
    /// Merge the given fraction of rejects farthest from the 0.5 threshold.
    Confident(f64),
}

/// Extrapolation: score rejects with a classifier fitted on the accepts,
/// label by thresholding at 0.5, and merge per the mode.
pub fn extrapolate(
    train: &Dataset,
    rejects: &Dataset,
    mode: ExtrapolateMode,
    spec: &ClassifierSpec,
) -> Result<TrainState> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::invalid("extrapolate: train must be labeled"))?;
    let x = train.to_matrix()?;
    let model = classifier::fit(spec, x.view(), labels, train.weights())?;
    let scores = classifier::predict_proba(&model, rejects.to_matrix()?.view())?;
    let inferred: Vec<u8> = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();

    let selected_rows: Vec<usize> = match mode {
        ExtrapolateMode::Full => (0..rejects.rows()).collect(),
        ExtrapolateMode::BadOnly => (0..rejects.rows()).filter(|&i| inferred[i] == 1).collect(),
        ExtrapolateMode::Confident(q) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::invalid("extrapolate: confident fraction in [0,1]"));
            }
            let mut order: Vec<usize> = (0..rejects.rows()).collect();
            order.sort_by(|&a, &b| {
                (scores[b] - 0.5)
                    .abs()
                    .total_cmp(&(scores[a] - 0.5).abs())
                    .then(rejects.row_ids()[a].cmp(&rejects.row_ids()[b]))
            });
            let count = (q * rejects.rows() as f64).round() as usize;
            order.truncate(count);
            order
        }
    };

    let mut selection = rejects.take_rows(&selected_rows);
    let sel_labels: Vec<u8> = selected_rows.iter().map(|&i| inferred[i]).collect();
    let n_sel = selection.rows();
    selection = selection
        .with_labels(sel_labels)?
        .with_provenance(vec![Provenance::Inferred; n_sel])?;

    let state = TrainState::new(train.clone(), rejects.clone())?;
    state.absorb(&selection)
}

#[derive(Debug)]
pub struct ParcelingOutcome {
    pub state: TrainState,
    /// Bands that had no accepted rows and borrowed a neighbor's bad rate.
    pub borrowed_bands: usize,
}

/// Parceling: band accepts and rejects by P(default) from a train-fitted
/// classifier; within each band draw reject labels Bernoulli(min(1,
/// prejudice * accepted bad rate)) from the seeded stream, then merge all
/// rejects.
pub fn parceling(
    train: &Dataset,
    rejects: &Dataset,
    n_bands: usize,
    prejudice: f64,
    seed: u64,
    spec: &ClassifierSpec,
) -> Result<ParcelingOutcome> {
    if n_bands < 2 {
        return Err(Error::invalid("parceling: n_bands must be >= 2"));
    }
    if prejudice < 1.0 {
        return Err(Error::invalid("parceling: prejudice factor must be >= 1"));
    }
    let labels = train
        .labels()
        .ok_or_else(|| Error::invalid("parceling: train must be labeled"))?;
    let x = train.to_matrix()?;
    let model = classifier::fit(spec, x.view(), labels, train.weights())?;
    let mut scores = classifier::predict_proba(&model, x.view())?;
    let rej_scores = classifier::predict_proba(&model, rejects.to_matrix()?.view())?;
    scores.extend_from_slice(&rej_scores);
    let mut ids: Vec<RowId> = train.row_ids().to_vec();
    ids.extend_from_slice(rejects.row_ids());

    let band = equal_frequency_bands(&scores, &ids, n_bands);
    let n_acc = train.rows();
    let mut acc_count = vec![0usize; n_bands];
    let mut bad_count = vec![0usize; n_bands];
    for row in 0..n_acc {
        acc_count[band[row]] += 1;
        if labels[row] == 1 {
            bad_count[band[row]] += 1;
        }
    }

    let mut bad_rate = vec![0.0f64; n_bands];
    let mut borrowed_bands = 0;
    for b in 0..n_bands {
        if acc_count[b] > 0 {
            bad_rate[b] = bad_count[b] as f64 / acc_count[b] as f64;
        } else {
            borrowed_bands += 1;
            let mut found = None;
            for step in 1..n_bands {
                if b >= step && acc_count[b - step] > 0 {
                    found = Some(b - step);
                    break;
                }
                if b + step < n_bands && acc_count[b + step] > 0 {
                    found = Some(b + step);
                    break;
                }
            }
            let donor =
                found.ok_or_else(|| Error::invalid("parceling: no band contains accepts"))?;
            bad_rate[b] = bad_count[donor] as f64 / acc_count[donor] as f64;
        }
    }

    // Labels drawn band by band in score order from one seeded stream.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reject_rows_by_band: Vec<Vec<usize>> = vec![Vec::new(); n_bands];
    let mut order: Vec<usize> = (0..rejects.rows()).collect();
    order.sort_by(|&a, &b| {
        rej_scores[a]
            .total_cmp(&rej_scores[b])
            .then(rejects.row_ids()[a].cmp(&rejects.row_ids()[b]))
    });
    for &r in &order {
        reject_rows_by_band[band[n_acc + r]].push(r);
    }
    let mut inferred = vec![0u8; rejects.rows()];
    for b in 0..n_bands {
        let beta_hat = (prejudice * bad_rate[b]).min(1.0);
        for &r in &reject_rows_by_band[b] {
            inferred[r] = u8::from(rng.random::<f64>() < beta_hat);
        }
    }

    let n = rejects.rows();
    let selection = rejects
        .clone()
        .with_labels(inferred)?
        .with_provenance(vec![Provenance::Inferred; n])?;
    let state = TrainState::new(train.clone(), rejects.clone())?.absorb(&selection)?;
    Ok(ParcelingOutcome {
        state,
        borrowed_bands,
    })
}

/// Label-spreading reject inference: propagate labels from the accepts onto
/// the rejects over the similarity graph and merge all rejects.
pub fn lsp_ri(train: &Dataset, rejects: &Dataset, spec: &SpreadSpec) -> Result<TrainState> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::invalid("lsp: train must be labeled"))?;
    let out = spread(
        spec,
        train.to_matrix()?.view(),
        labels,
        rejects.to_matrix()?.view(),
    )?;
    let n = rejects.rows();
    let selection = rejects
        .clone()
        .with_labels(out.labels)?
        .with_provenance(vec![Provenance::Inferred; n])?;
    TrainState::new(train.clone(), rejects.clone())?.absorb(&selection)
}
