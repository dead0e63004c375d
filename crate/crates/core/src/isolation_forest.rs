//! Isolation forest outlier detection.
//!
//! Random isolation trees grown on seeded subsamples: each internal node
//! picks a feature uniformly among those with positive range in the node's
//! data and a split value uniformly inside that range. Depth is capped at
//! ceil(log2(subsample size)). A point's anomaly score is
//! 2^(-E[path] / c(n)) where c(n) is the average unsuccessful-search path
//! length of a binary search tree; scores above the fitted
//! (1 - contamination)-quantile of training scores mark outliers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoForestSpec {
    pub n_trees: usize,
    /// Rows drawn (without replacement) per tree; clamped to the data size.
    pub subsample_size: usize,
    /// Assumed outlier fraction in (0, 0.5]; fixes the score threshold.
    pub contamination: f64,
    pub seed: u64,
}

impl Default for IsoForestSpec {
    fn default() -> Self {
        IsoForestSpec {
            n_trees: 100,
            subsample_size: 256,
            contamination: 0.12,
            seed: 0,
        }
    }
}

impl IsoForestSpec {
    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("isolation forest: n_trees must be >= 1"));
        }
        if self.subsample_size < 2 {
            return Err(Error::invalid("isolation forest: subsample_size must be >= 2"));
        }
        if !(self.contamination > 0.0 && self.contamination <= 0.5) {
            return Err(Error::invalid(
                "isolation forest: contamination must be in (0, 0.5]",
            ));
        }
        Ok(())
    }
}

/// Euler-Mascheroni constant.
const GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average path length of an unsuccessful binary-search-tree lookup over n
/// points: c(n) = 2 H(n-1) - 2 (n-1) / n. Harmonic numbers are summed
/// exactly up to 4096 terms and continued with the asymptotic series, so the
/// result tracks the true harmonic sum to well below 1e-6 everywhere.
pub fn c_factor(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("c_factor: n must be >= 2"));
    }
    let m = (n - 1) as f64;
    let h = if n - 1 <= 4096 {
        (1..=n - 1).map(|i| 1.0 / i as f64).sum::<f64>()
    } else {
        // H(m) = ln m + gamma + 1/(2m) - 1/(12 m^2) + 1/(120 m^4) - ...
        m.ln() + GAMMA + 1.0 / (2.0 * m) - 1.0 / (12.0 * m * m)
            + 1.0 / (120.0 * m.powi(4))
    };
    Ok(2.0 * h - 2.0 * m / n as f64)
}

#[derive(Clone, Debug)]
enum Node {
    Split {
        feature: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        size: usize,
    },
}

impl Node {
    fn path_length(&self, row: ArrayView1<'_, f64>, depth: f64) -> f64 {
        match self {
            Node::Leaf { size } => {
                // Size-1 leaves add nothing; larger leaves stand in for the
                // subtree that was not grown.
                let adjust = if *size >= 2 {
                    c_factor(*size).expect("leaf size >= 2")
                } else {
                    0.0
                };
                depth + adjust
            }
            Node::Split {
                feature,
                value,
                left,
                right,
            } => {
                if row[*feature] < *value {
                    left.path_length(row, depth + 1.0)
                } else {
                    right.path_length(row, depth + 1.0)
                }
            }
        }
    }
}

/// Fitted isolation forest: trees, the normalization constant from the
/// fitted subsample size, and the contamination-derived score threshold.
#[derive(Clone, Debug)]
pub struct IsoForest {
    trees: Vec<Node>,
    n_features: usize,
    subsample_size: usize,
    threshold: f64,
    /// True when every training row scored identically, making outliers
    /// indistinguishable.
    degenerate: bool,
}

fn build_tree(
    x: ArrayView2<'_, f64>,
    rows: &mut [usize],
    depth: usize,
    depth_limit: usize,
    rng: &mut ChaCha8Rng,
) -> Node {
    if depth >= depth_limit || rows.len() <= 1 {
        return Node::Leaf { size: rows.len() };
    }
    // Features with positive range in this node's data.
    let mut eligible: Vec<(usize, f64, f64)> = Vec::new();
    for j in 0..x.ncols() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in rows.iter() {
            let v = x[(i, j)];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi > lo {
            eligible.push((j, lo, hi));
        }
    }
    let Some(&(feature, lo, hi)) = eligible
        .get(rng.random_range(0..eligible.len().max(1)))
        .filter(|_| !eligible.is_empty())
    else {
        // All remaining rows identical.
        return Node::Leaf { size: rows.len() };
    };
    let value = rng.random_range(lo..hi);
    let split_at = itertools_partition(rows, |&i| x[(i, feature)] < value);
    let (left_rows, right_rows) = rows.split_at_mut(split_at);
    Node::Split {
        feature,
        value,
        left: Box::new(build_tree(x, left_rows, depth + 1, depth_limit, rng)),
        right: Box::new(build_tree(x, right_rows, depth + 1, depth_limit, rng)),
    }
}

// In-place stable-enough partition; returns the split index.
fn itertools_partition<F: Fn(&usize) -> bool>(rows: &mut [usize], pred: F) -> usize {
    rows.sort_by_key(|i| !pred(i));
    rows.iter().take_while(|i| pred(i)).count()
}

/// Fit an isolation forest. Trees are built concurrently from per-tree
/// seeds derived from the spec seed, so the result is independent of the
/// thread count.
pub fn fit(spec: &IsoForestSpec, x: ArrayView2<'_, f64>) -> Result<IsoForest> {
    spec.validate()?;
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("isolation forest: need at least 2 rows"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("isolation forest: non-finite feature".into()));
    }
    let subsample = spec.subsample_size.min(n);
    let depth_limit = (subsample as f64).log2().ceil() as usize;

    let trees: Vec<Node> = (0..spec.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            // Seeded subsample without replacement via partial Fisher-Yates.
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..subsample {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            idx.truncate(subsample);
            build_tree(x, &mut idx, 0, depth_limit, &mut rng)
        })
        .collect();

    let mut forest = IsoForest {
        trees,
        n_features: x.ncols(),
        subsample_size: subsample,
        threshold: f64::INFINITY,
        degenerate: false,
    };

    // Threshold: the (1 - contamination)-quantile of training scores, placed
    // so that ceil(contamination * n) rows score strictly above it (fewer
    // only under ties, which resolve as inliers).
    let mut scores = forest.scores(x)?;
    scores.sort_by(f64::total_cmp);
    let k = (spec.contamination * n as f64).ceil() as usize;
    let k = k.clamp(1, n - 1);
    forest.threshold = scores[n - k - 1];
    forest.degenerate = scores[0] == scores[n - 1];
    Ok(forest)
}

impl IsoForest {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn subsample_size(&self) -> usize {
        self.subsample_size
    }

    fn check_dims(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_features {
            return Err(Error::dim(format!(
                "isolation forest: {} features, fitted on {}",
                x.ncols(),
                self.n_features
            )));
        }
        Ok(())
    }

    /// Anomaly score in (0, 1) for one row.
    pub fn anomaly_score(&self, row: ArrayView1<'_, f64>) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::dim("isolation forest: feature count mismatch"));
        }
        let mean_path = self
            .trees
            .iter()
            .map(|t| t.path_length(row, 0.0))
            .sum::<f64>()
            / self.trees.len() as f64;
        let c = c_factor(self.subsample_size)?;
        Ok(2f64.powf(-mean_path / c))
    }

    /// Anomaly scores for every row.
    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check_dims(x)?;
        (0..x.nrows()).map(|i| self.anomaly_score(x.row(i))).collect()
    }

    /// True where the score is at or below the fitted threshold. Ties at
    /// the threshold count as inliers, keeping the filter conservative.
    pub fn is_inlier(&self, x: ArrayView2<'_, f64>) -> Result<Vec<bool>> {
        Ok(self.scores(x)?.iter().map(|&s| s <= self.threshold).collect())
    }
}
