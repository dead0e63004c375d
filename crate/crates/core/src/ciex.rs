//! Confident-inlier extrapolation (CI-EX).
//!
//! Each iteration runs a two-step retrieval per class: an isolation forest
//! fitted on the labeled rows of that class filters the reject pool down to
//! inliers, and a class-balanced classifier fitted on the whole labeled
//! pool ranks the rejects by class probability. Walking that ranking, the
//! first `c` inliers are labeled by thresholding the default score at 0.5
//! and absorbed into the labeled pool; everything else returns to the
//! reject pool for the next iteration. The driver repeats this until the
//! pool empties, the iteration budget runs out, or an iteration adds
//! nothing, recording validation metrics against the iteration-0 benchmark
//! after every step.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifier::{self, ClassifierSpec};
use crate::data::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::isolation_forest::{self, IsoForestSpec};
use crate::metrics::{auc, auk, kickout, KickoutInputs};
use crate::state::TrainState;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CiexSpec {
    /// Samples to add per iteration.
    pub eta: usize,
    /// Bad-payer proportion of the additions, in (0, 1). The paper's sweep
    /// tables call this pi, the expansion algorithm calls it rho.
    pub bad_fraction: f64,
    /// Isolation forest contamination used by every retrieval.
    pub contamination: f64,
    pub max_iterations: usize,
    pub classifier: ClassifierSpec,
    /// Forest shape (tree count, subsample size); contamination and seed
    /// are overridden per retrieval.
    pub forest: IsoForestSpec,
    pub seed: u64,
}

impl Default for CiexSpec {
    fn default() -> Self {
        CiexSpec {
            eta: 1000,
            bad_fraction: 0.07,
            contamination: 0.12,
            max_iterations: 25,
            classifier: ClassifierSpec::default(),
            forest: IsoForestSpec::default(),
            seed: 0,
        }
    }
}

impl CiexSpec {
    fn validate(&self) -> Result<()> {
        if self.eta == 0 {
            return Err(Error::invalid("ciex: eta must be >= 1"));
        }
        if !(self.bad_fraction > 0.0 && self.bad_fraction < 1.0) {
            return Err(Error::invalid("ciex: bad_fraction must be in (0, 1)"));
        }
        if !(self.contamination > 0.0 && self.contamination <= 0.5) {
            return Err(Error::invalid("ciex: contamination must be in (0, 0.5]"));
        }
        Ok(())
    }
}

/// Per-class addition counts: c1 = round(eta * rho) half away from zero,
/// c0 = eta - c1, so the two always sum to eta.
pub fn class_counts(eta: usize, bad_fraction: f64) -> (usize, usize) {
    let c1 = ((eta as f64 * bad_fraction).round() as usize).min(eta);
    (eta - c1, c1)
}

/// Snapshot taken after each iteration. Iteration 0 carries the benchmark
/// model's metrics; kickout and AUK of the benchmark against itself are 0
/// by construction (identical acceptance sets).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub added_good: usize,
    pub added_bad: usize,
    /// Rows retrieved for one class but threshold-labeled as the other; the
    /// retrieval surfaces rather than hides them.
    pub cross_labeled: usize,
    pub labeled_size: usize,
    pub reject_size: usize,
    pub val_auc: f64,
    pub val_kickout: f64,
    pub val_auk: f64,
    pub seed: u64,
}

/// One retrieval pass for a class.
#[derive(Clone, Debug)]
pub struct RetrieveSpec<'a> {
    /// Class to retrieve (0 good, 1 bad).
    pub class: u8,
    /// Desired number of samples.
    pub count: usize,
    pub forest: &'a IsoForestSpec,
    pub classifier: &'a ClassifierSpec,
}

#[derive(Clone, Debug)]
pub struct Retrieved {
    /// Selected rows, labeled and marked inferred; at most `count` rows.
    pub selected: Dataset,
    /// Reject pool minus the selected rows: outliers and low-confidence
    /// inliers that were examined go back for the next iteration.
    pub remaining: Dataset,
    /// Selected rows whose thresholded label differs from the retrieval
    /// class.
    pub cross_labeled: usize,
    /// Rows the confidence walk visited before filling the quota.
    pub examined: usize,
}

/// Retrieve up to `spec.count` confident samples of `spec.class` from the
/// reject pool.
///
/// The forest is fitted on the labeled rows of the class only; the
/// classifier on the whole labeled pool with class-balanced weights. The
/// selection walks rejects by descending P(class) — ties by ascending row
/// id — and keeps the inliers, which is behaviorally identical to the
/// argmax-and-remove loop it replaces.
pub fn retrieve_confident(state: &TrainState, spec: &RetrieveSpec<'_>) -> Result<Retrieved> {
    let labeled = state.labeled();
    let labels = labeled.labels().expect("train state is labeled");
    let class_rows: Vec<usize> = (0..labeled.rows())
        .filter(|&i| labels[i] == spec.class)
        .collect();
    if class_rows.len() < 2 {
        return Err(Error::invalid(format!(
            "retrieve_confident: fewer than 2 labeled rows of class {}",
            spec.class
        )));
    }

    let class_features = labeled.take_rows(&class_rows).to_matrix()?;
    let forest = isolation_forest::fit(spec.forest, class_features.view())?;

    let x = labeled.to_matrix()?;
    let balance = classifier::class_balance_weights(labels)?;
    let weights: Vec<f64> = labeled
        .weights_or_ones()
        .iter()
        .zip(&balance)
        .map(|(w, b)| w * b)
        .collect();
    let mut cls_spec = spec.classifier.clone();
    cls_spec.balanced = false; // balance already folded into the weights
    let model = classifier::fit(&cls_spec, x.view(), labels, Some(&weights))?;

    let rejects = state.rejects();
    let rej_x = rejects.to_matrix()?;
    let scores = classifier::predict_proba(&model, rej_x.view())?;
    let inlier = forest.is_inlier(rej_x.view())?;

    let confidence = |i: usize| -> f64 {
        if spec.class == 1 {
            scores[i]
        } else {
            1.0 - scores[i]
        }
    };
    let mut order: Vec<usize> = (0..rejects.rows()).collect();
    order.sort_by(|&a, &b| {
        confidence(b)
            .total_cmp(&confidence(a))
            .then(rejects.row_ids()[a].cmp(&rejects.row_ids()[b]))
    });

    let mut picked: Vec<usize> = Vec::with_capacity(spec.count);
    let mut picked_labels: Vec<u8> = Vec::with_capacity(spec.count);
    let mut cross_labeled = 0;
    let mut examined = 0;
    for &i in &order {
        if picked.len() >= spec.count {
            break;
        }
        examined += 1;
        if inlier[i] {
            let y = u8::from(scores[i] >= 0.5);
            if y != spec.class {
                cross_labeled += 1;
            }
            picked.push(i);
            picked_labels.push(y);
        }
    }

    let selected = rejects
        .take_rows(&picked)
        .with_labels(picked_labels)?
        .with_provenance(vec![Provenance::Inferred; picked.len()])?;
    let remaining = rejects.remove_by_ids(&selected.row_ids().iter().copied().collect());
    Ok(Retrieved {
        selected,
        remaining,
        cross_labeled,
        examined,
    })
}

/// Counts produced by one expansion step.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpandStats {
    pub added_good: usize,
    pub added_bad: usize,
    pub cross_labeled: usize,
}

impl ExpandStats {
    pub fn stalled(&self) -> bool {
        self.added_good == 0 && self.added_bad == 0
    }
}

fn derive_seed(base: u64, iteration: usize, class: u8) -> u64 {
    let mut v = base
        ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ u64::from(class).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    v ^= v >> 30;
    v = v.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    v ^= v >> 27;
    v
}

/// One framework iteration: retrieve c0 good and c1 bad candidates — both
/// retrievals train on the pre-iteration labeled pool, the second sees the
/// reject pool minus the first's selections — then absorb both selections.
pub fn expand_dataset(state: &TrainState, spec: &CiexSpec) -> Result<(TrainState, ExpandStats)> {
    spec.validate()?;
    if state.rejects().rows() == 0 {
        return Err(Error::invalid("expand_dataset: reject pool is empty"));
    }
    let (c0, c1) = class_counts(spec.eta, spec.bad_fraction);
    let iteration = state.iteration();

    let mut stats = ExpandStats::default();
    let forest_good = IsoForestSpec {
        contamination: spec.contamination,
        seed: derive_seed(spec.seed, iteration, 0),
        ..spec.forest.clone()
    };
    let good = retrieve_confident(
        state,
        &RetrieveSpec {
            class: 0,
            count: c0,
            forest: &forest_good,
            classifier: &spec.classifier,
        },
    )?;
    stats.added_good = good.selected.rows();
    stats.cross_labeled += good.cross_labeled;

    let forest_bad = IsoForestSpec {
        contamination: spec.contamination,
        seed: derive_seed(spec.seed, iteration, 1),
        ..spec.forest.clone()
    };
    let mid_state = state.with_rejects(good.remaining.clone());
    let bad = if mid_state.rejects().rows() > 0 {
        Some(retrieve_confident(
            &mid_state,
            &RetrieveSpec {
                class: 1,
                count: c1,
                forest: &forest_bad,
                classifier: &spec.classifier,
            },
        )?)
    } else {
        None
    };
    if let Some(bad) = &bad {
        stats.added_bad = bad.selected.rows();
        stats.cross_labeled += bad.cross_labeled;
    }

    let combined = match &bad {
        Some(bad) => good.selected.concat(&bad.selected)?,
        None => good.selected,
    };
    let next = state.absorb(&combined)?;
    debug_assert_eq!(next.total_rows(), state.total_rows());
    Ok((next, stats))
}

#[derive(Clone, Debug)]
pub struct CiexRunConfig {
    /// Acceptance rate for the per-iteration validation kickout.
    pub kick_alpha: f64,
    /// Grid for the per-iteration validation AUK.
    pub auk_grid: Vec<f64>,
}

impl Default for CiexRunConfig {
    fn default() -> Self {
        CiexRunConfig {
            kick_alpha: 0.5,
            auk_grid: crate::metrics::auk_grid(),
        }
    }
}

/// A finished run: one record per iteration (including the benchmark
/// record 0) and the archived training states, aligned by index, so any
/// iteration's model can be refitted later.
#[derive(Debug)]
pub struct CiexRun {
    pub records: Vec<IterationRecord>,
    pub states: Vec<TrainState>,
    pub stalled: bool,
}

/// Drive CI-EX until the reject pool empties, `max_iterations` is reached,
/// or an iteration adds nothing. After each iteration a fresh classifier is
/// fitted on the labeled pool and validated against the iteration-0
/// benchmark. Records stream to `log` as JSON lines when given.
pub fn run_ciex(
    initial: TrainState,
    spec: &CiexSpec,
    val_accepts: &Dataset,
    val_rejects: &Dataset,
    cfg: &CiexRunConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<CiexRun> {
    spec.validate()?;
    if val_accepts.labels().is_none() {
        return Err(Error::invalid("run_ciex: validation accepts must be labeled"));
    }

    let fit_pool = |pool: &Dataset| -> Result<classifier::FittedClassifier> {
        let labels = pool.labels().expect("labeled pool");
        let x = pool.to_matrix()?;
        classifier::fit(&spec.classifier, x.view(), labels, pool.weights())
    };
    let val_x = val_accepts.to_matrix()?;
    let val_rej_x = val_rejects.to_matrix()?;
    let val_labels = val_accepts.labels().unwrap();

    let benchmark = fit_pool(initial.labeled())?;
    let bm_scores = classifier::predict_proba(&benchmark, val_x.view())?;
    let bm_auc = auc(&bm_scores, val_labels)?;

    let mut emit = |record: &IterationRecord| -> Result<()> {
        if let Some(w) = log.as_deref_mut() {
            serde_json::to_writer(&mut *w, record)?;
            writeln!(w)?;
        }
        Ok(())
    };

    let mut records = vec![IterationRecord {
        iteration: 0,
        added_good: 0,
        added_bad: 0,
        cross_labeled: 0,
        labeled_size: initial.labeled().rows(),
        reject_size: initial.rejects().rows(),
        val_auc: bm_auc,
        val_kickout: 0.0,
        val_auk: 0.0,
        seed: spec.seed,
    }];
    emit(&records[0])?;
    let mut states = vec![initial];
    let mut stalled = false;

    for _ in 0..spec.max_iterations {
        let state = states.last().unwrap();
        if state.rejects().rows() == 0 {
            break;
        }
        let (next, stats) = expand_dataset(state, spec)?;
        if stats.stalled() {
            stalled = true;
            if states.len() == 1 {
                return Err(Error::Numeric(
                    "run_ciex: stalled before the first successful iteration".into(),
                ));
            }
            break;
        }

        let model = fit_pool(next.labeled())?;
        let ri_scores = classifier::predict_proba(&model, val_x.view())?;
        let ri_rej_scores = classifier::predict_proba(&model, val_rej_x.view())?;
        let inputs = KickoutInputs {
            accepted_ids: val_accepts.row_ids(),
            accepted_labels: val_labels,
            bm_scores_accepted: &bm_scores,
            ri_scores_accepted: &ri_scores,
            reject_ids: val_rejects.row_ids(),
            ri_scores_rejects: &ri_rej_scores,
        };
        let record = IterationRecord {
            iteration: next.iteration(),
            added_good: stats.added_good,
            added_bad: stats.added_bad,
            cross_labeled: stats.cross_labeled,
            labeled_size: next.labeled().rows(),
            reject_size: next.rejects().rows(),
            val_auc: auc(&ri_scores, val_labels)?,
            val_kickout: kickout(&inputs, cfg.kick_alpha)?.value,
            val_auk: auk(&inputs, &cfg.auk_grid)?.value,
            seed: spec.seed,
        };
        emit(&record)?;
        records.push(record);
        states.push(next);
    }

    Ok(CiexRun {
        records,
        states,
        stalled,
    })
}
