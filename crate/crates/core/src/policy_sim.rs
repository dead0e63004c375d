//! Simulated accept/reject policy (the policy-sweep experiment).
//!
//! A 20% policy set is carved off and used only to fit an L1 logistic
//! accept/reject policy over a configured feature list. The remainder is
//! split into train/validation/test, and the policy threshold epsilon
//! partitions each subset into accepts and rejects: a row with predicted
//! default probability strictly greater than epsilon is rejected, and its
//! label moves into a sealed truth store readable only by evaluation code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{self, ClassifierSpec, FittedClassifier, Penalty};
use crate::data::{split, Dataset, RowId, SplitSpec};
use crate::error::{Error, Result};
use crate::preprocess::{fit_pipeline_with, PipelineModel};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicySpec {
    /// Rejection threshold on the policy's predicted default probability.
    pub epsilon: f64,
    /// Fraction of the input carved off to fit the policy.
    pub policy_fraction: f64,
    /// Feature names the policy may see.
    pub features: Vec<String>,
    /// L1 strength of the policy model.
    pub l1_strength: f64,
    pub seed: u64,
}

impl PolicySpec {
    pub fn new(epsilon: f64, features: Vec<String>, seed: u64) -> Self {
        PolicySpec {
            epsilon,
            policy_fraction: 0.20,
            features,
            l1_strength: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.policy_fraction > 0.0 && self.policy_fraction < 1.0) {
            return Err(Error::invalid("policy: policy_fraction must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("policy: epsilon must be in [0, 1]"));
        }
        if self.features.is_empty() {
            return Err(Error::invalid("policy: feature list is empty"));
        }
        Ok(())
    }

    fn classifier_spec(&self) -> ClassifierSpec {
        ClassifierSpec {
            penalty: Penalty::L1,
            penalty_strength: self.l1_strength,
            seed: self.seed,
            ..ClassifierSpec::default()
        }
    }
}

/// Labels of rejected rows, readable only through evaluation accessors.
#[derive(Clone, Debug, Default)]
pub struct SealedTruth {
    labels: BTreeMap<RowId, u8>,
}

impl SealedTruth {
    pub fn insert_from(&mut self, ds: &Dataset) {
        if let Some(labels) = ds.labels() {
            for (id, &y) in ds.row_ids().iter().zip(labels) {
                self.labels.insert(*id, y);
            }
        }
    }

    /// Evaluation-only access to a hidden label.
    pub fn label_of(&self, id: RowId) -> Option<u8> {
        self.labels.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Stable digest over (id, label) pairs for the split manifest.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for (id, y) in &self.labels {
            hasher.update(id.to_le_bytes());
            hasher.update([*y]);
        }
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The fitted policy: its feature list, the preprocessing fitted on the
/// policy set, and the L1 logistic model.
#[derive(Clone, Debug)]
pub struct FittedPolicy {
    pub features: Vec<String>,
    pub pipeline: PipelineModel,
    pub model: FittedClassifier,
}

impl FittedPolicy {
    /// Predicted default probability for every row of `ds`.
    pub fn scores(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let names: Vec<&str> = self.features.iter().map(String::as_str).collect();
        let restricted = ds.select_columns(&names)?;
        let transformed = self.pipeline.transform(&restricted)?;
        classifier::predict_proba(&self.model, transformed.to_matrix()?.view())
    }
}

/// Fit the accept/reject policy on the policy set: preprocessing and an L1
/// logistic model over the configured features only.
pub fn fit_policy(policy_set: &Dataset, spec: &PolicySpec) -> Result<FittedPolicy> {
    spec.validate()?;
    if policy_set.labels().is_none() {
        return Err(Error::invalid("fit_policy: policy set must be labeled"));
    }
    let names: Vec<&str> = spec.features.iter().map(String::as_str).collect();
    let restricted = policy_set.select_columns(&names)?;
    let pipeline = fit_pipeline_with(&restricted, crate::preprocess::DEFAULT_SMOOTHING)?;
    let transformed = pipeline.transform(&restricted)?;
    let model = classifier::fit(
        &spec.classifier_spec(),
        transformed.to_matrix()?.view(),
        policy_set.labels().unwrap(),
        None,
    )?;
    Ok(FittedPolicy {
        features: spec.features.clone(),
        pipeline,
        model,
    })
}

/// Partition `ds` by the policy at threshold `epsilon`: rows with predicted
/// default probability strictly greater than epsilon are rejected. A row
/// scoring exactly epsilon is accepted. Rejected rows lose their labels;
/// the hidden truth is returned alongside.
pub fn apply_policy(
    policy: &FittedPolicy,
    ds: &Dataset,
    epsilon: f64,
) -> Result<(Dataset, Dataset, SealedTruth)> {
    let scores = policy.scores(ds)?;
    let accept_mask: Vec<bool> = scores.iter().map(|&p| p <= epsilon).collect();
    let reject_mask: Vec<bool> = accept_mask.iter().map(|a| !a).collect();
    let accepted = ds.filter_rows(&accept_mask)?;
    let rejected_labeled = ds.filter_rows(&reject_mask)?;
    let mut hidden = SealedTruth::default();
    hidden.insert_from(&rejected_labeled);
    Ok((accepted, rejected_labeled.without_labels(), hidden))
}

/// The seven subsets of the policy-sweep protocol.
#[derive(Debug)]
pub struct SevenWaySplit {
    pub policy_set: Dataset,
    pub train_accepts: Dataset,
    pub train_rejects: Dataset,
    pub val_accepts: Dataset,
    pub val_rejects: Dataset,
    pub test_accepts: Dataset,
    pub test_rejects: Dataset,
    pub hidden: SealedTruth,
    pub policy: FittedPolicy,
    pub manifest: SplitManifest,
}

/// Audit record emitted per split.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitManifest {
    pub epsilon: f64,
    pub seed: u64,
    pub policy_rows: usize,
    pub subset_sizes: BTreeMap<String, usize>,
    pub hidden_truth_checksum: String,
    /// Subsets emptied by an extreme epsilon; runs over them are skipped.
    pub empty_subsets: Vec<String>,
}

impl SplitManifest {
    pub fn has_empty_subset(&self) -> bool {
        !self.empty_subsets.is_empty()
    }
}

/// Carve the policy set, fit the policy, split the remainder into
/// train/validation/test, and partition each by the policy.
pub fn make_seven_way(
    ds: &Dataset,
    spec: &PolicySpec,
    fractions: (f64, f64, f64),
) -> Result<SevenWaySplit> {
    spec.validate()?;
    let (ft, fv, fs) = fractions;
    if (ft + fv + fs - 1.0).abs() > 1e-9 || ft <= 0.0 || fv <= 0.0 || fs <= 0.0 {
        return Err(Error::invalid("make_seven_way: fractions must sum to 1"));
    }

    let carve = split(
        ds,
        &SplitSpec::Fractions {
            fractions: vec![spec.policy_fraction, 1.0 - spec.policy_fraction],
            seed: spec.seed,
        },
    )?;
    let policy_set = carve.parts[0].clone();
    let remainder = &carve.parts[1];
    let policy = fit_policy(&policy_set, spec)?;

    let tvt = split(
        remainder,
        &SplitSpec::Fractions {
            fractions: vec![ft, fv, fs],
            seed: spec.seed.wrapping_add(1),
        },
    )?;

    let mut hidden = SealedTruth::default();
    let mut parts: Vec<(Dataset, Dataset)> = Vec::with_capacity(3);
    for part in &tvt.parts {
        let (acc, rej, h) = apply_policy(&policy, part, spec.epsilon)?;
        for (id, _) in h.labels.iter() {
            hidden.labels.insert(*id, h.labels[id]);
        }
        parts.push((acc, rej));
    }
    let (train_accepts, train_rejects) = parts.remove(0);
    let (val_accepts, val_rejects) = parts.remove(0);
    let (test_accepts, test_rejects) = parts.remove(0);

    let mut subset_sizes = BTreeMap::new();
    let mut empty_subsets = Vec::new();
    for (name, part) in [
        ("policy_set", &policy_set),
        ("train_accepts", &train_accepts),
        ("train_rejects", &train_rejects),
        ("val_accepts", &val_accepts),
        ("val_rejects", &val_rejects),
        ("test_accepts", &test_accepts),
        ("test_rejects", &test_rejects),
    ] {
        subset_sizes.insert(name.to_string(), part.rows());
        if part.rows() == 0 {
            empty_subsets.push(name.to_string());
        }
    }
    let manifest = SplitManifest {
        epsilon: spec.epsilon,
        seed: spec.seed,
        policy_rows: policy_set.rows(),
        subset_sizes,
        hidden_truth_checksum: hidden.checksum(),
        empty_subsets,
    };

    Ok(SevenWaySplit {
        policy_set,
        train_accepts,
        train_rejects,
        val_accepts,
        val_rejects,
        test_accepts,
        test_rejects,
        hidden,
        policy,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Population whose labels follow a known logistic law on one feature.
    fn logistic_population(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x = Array2::from_shape_fn((n, 2), |(_, j)| {
            if j == 0 {
                normal.sample(&mut rng)
            } else {
                normal.sample(&mut rng) * 0.1
            }
        });
        let labels: Vec<u8> = (0..n)
            .map(|i| {
                let z: f64 = 1.2 * x[(i, 0)] - 0.1;
                u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-z).exp()))
            })
            .collect();
        Dataset::from_matrix(&["score_like", "noise"], &x)
            .unwrap()
            .with_labels(labels)
            .unwrap()
    }

    fn spec(epsilon: f64) -> PolicySpec {
        PolicySpec {
            l1_strength: 1e-3,
            ..PolicySpec::new(
                epsilon,
                vec!["score_like".to_string(), "noise".to_string()],
                7,
            )
        }
    }

    #[test]
    fn refit_with_same_seed_is_identical() {
        let ds = logistic_population(2000, 3);
        let policy_a = fit_policy(&ds, &spec(0.5)).unwrap();
        let policy_b = fit_policy(&ds, &spec(0.5)).unwrap();
        assert_eq!(policy_a.model.coefficients, policy_b.model.coefficients);
        assert_eq!(policy_a.model.intercept, policy_b.model.intercept);
    }

    #[test]
    fn strong_l1_zeroes_policy_coefficients() {
        let ds = logistic_population(2000, 5);
        let strong = PolicySpec {
            l1_strength: 0.2,
            ..spec(0.5)
        };
        let policy = fit_policy(&ds, &strong).unwrap();
        assert!(
            policy.model.coefficients.iter().any(|c| *c == 0.0),
            "{:?}",
            policy.model.coefficients
        );
    }

    #[test]
    fn policy_probabilities_in_unit_interval() {
        let ds = logistic_population(500, 9);
        let policy = fit_policy(&ds, &spec(0.5)).unwrap();
        let p = policy.scores(&ds).unwrap();
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn boundary_score_is_accepted() {
        // A hand-built policy and rows landing exactly on epsilon.
        let ds = logistic_population(200, 11);
        let policy = fit_policy(&ds, &spec(0.5)).unwrap();
        let scores = policy.scores(&ds).unwrap();
        let eps = scores[0]; // force an exact boundary case
        let (accepted, rejected, hidden) = apply_policy(&policy, &ds, eps).unwrap();
        assert!(accepted.row_ids().contains(&ds.row_ids()[0]));
        assert_eq!(accepted.rows() + rejected.rows(), ds.rows());
        assert_eq!(hidden.len(), rejected.rows());
        assert!(rejected.labels().is_none());
    }

    #[test]
    fn epsilon_above_max_score_rejects_nobody() {
        let ds = logistic_population(300, 13);
        let policy = fit_policy(&ds, &spec(0.5)).unwrap();
        let (accepted, rejected, hidden) = apply_policy(&policy, &ds, 1.0).unwrap();
        assert_eq!(accepted.rows(), 300);
        assert_eq!(rejected.rows(), 0);
        assert!(hidden.is_empty());
    }

    #[test]
    fn acceptance_monotone_in_epsilon() {
        let ds = logistic_population(1000, 17);
        let policy = fit_policy(&ds, &spec(0.5)).unwrap();
        let mut prev = 0usize;
        for eps in [0.3, 0.4, 0.5, 0.6, 0.7] {
            let (accepted, _, _) = apply_policy(&policy, &ds, eps).unwrap();
            assert!(accepted.rows() >= prev, "eps {eps}");
            prev = accepted.rows();
        }
    }

    #[test]
    fn seven_way_partitions_by_row_id() {
        let ds = logistic_population(2000, 19);
        let out = make_seven_way(&ds, &spec(0.5), (0.6, 0.19, 0.21)).unwrap();
        let mut ids: Vec<RowId> = Vec::new();
        for part in [
            &out.policy_set,
            &out.train_accepts,
            &out.train_rejects,
            &out.val_accepts,
            &out.val_rejects,
            &out.test_accepts,
            &out.test_rejects,
        ] {
            ids.extend_from_slice(part.row_ids());
        }
        ids.sort_unstable();
        let expect: Vec<RowId> = (0..2000).collect();
        assert_eq!(ids, expect);
        // Policy set is 20%.
        assert_eq!(out.policy_set.rows(), 400);
        // Rejects carry no labels; hidden truth covers them exactly.
        assert!(out.train_rejects.labels().is_none());
        assert_eq!(
            out.hidden.len(),
            out.train_rejects.rows() + out.val_rejects.rows() + out.test_rejects.rows()
        );
        assert_eq!(
            out.manifest.hidden_truth_checksum.len(),
            64 // sha256 hex
        );
    }

    #[test]
    fn extreme_epsilon_flags_empty_subsets() {
        let ds = logistic_population(400, 23);
        let out = make_seven_way(&ds, &spec(0.0), (0.6, 0.2, 0.2)).unwrap();
        // Epsilon 0 rejects everyone scoring above 0: accepts are empty.
        assert!(out.manifest.has_empty_subset());
        assert!(out
            .manifest
            .empty_subsets
            .iter()
            .any(|s| s.contains("accepts")));
    }

    #[test]
    fn hidden_truth_checksum_is_stable() {
        let ds = logistic_population(500, 29);
        let a = make_seven_way(&ds, &spec(0.45), (0.6, 0.2, 0.2)).unwrap();
        let b = make_seven_way(&ds, &spec(0.45), (0.6, 0.2, 0.2)).unwrap();
        assert_eq!(
            a.manifest.hidden_truth_checksum,
            b.manifest.hidden_truth_checksum
        );
    }
}
