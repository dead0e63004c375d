//! Graph-based semi-supervised label spreading.
//!
//! Builds a similarity graph over labeled and unlabeled points (symmetrized
//! kNN with unit affinities, or a dense RBF kernel), symmetric-normalizes
//! it, and iterates F <- alpha * S * F + (1 - alpha) * Y until the largest
//! entry change drops below tolerance. Unlabeled rows start at zero and
//! take the argmax class on exit.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Graph {
    /// Unit affinities to the k nearest neighbors, symmetrized.
    Knn { k: usize },
    /// Dense Gaussian affinities exp(-d^2 / (2 bandwidth^2)).
    Rbf { bandwidth: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadSpec {
    pub graph: Graph,
    /// Weight of the propagated term; (1 - alpha) retains the seed labels.
    pub clamp_alpha: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for SpreadSpec {
    fn default() -> Self {
        SpreadSpec {
            graph: Graph::Knn { k: 7 },
            clamp_alpha: 0.2,
            max_iters: 1000,
            tolerance: 1e-9,
        }
    }
}

/// Result of a spreading run. `labels` and `scores` align with the
/// unlabeled input rows; `scores` holds the per-class soft values.
/// `prior_fallbacks` counts unlabeled rows that no label mass ever reached
/// (isolated in the graph) and that were assigned the global prior label.
#[derive(Clone, Debug)]
pub struct SpreadOutcome {
    pub labels: Vec<u8>,
    pub scores: Vec<[f64; 2]>,
    pub iterations: usize,
    pub converged: bool,
    pub prior_fallbacks: usize,
}

struct SparseGraph {
    // Row-compressed adjacency over all nodes (labeled first, unlabeled after).
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    values: Vec<f64>,
}

impl SparseGraph {
    fn matvec_class(&self, f: &[[f64; 2]], out: &mut [[f64; 2]]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = [0.0f64; 2];
            for e in self.offsets[i]..self.offsets[i + 1] {
                let j = self.neighbors[e];
                let v = self.values[e];
                acc[0] += v * f[j][0];
                acc[1] += v * f[j][1];
            }
            *o = acc;
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn build_graph(points: &[Vec<f64>], graph: &Graph) -> Result<SparseGraph> {
    let n = points.len();
    let mut adjacency: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    match graph {
        Graph::Knn { k } => {
            if *k == 0 {
                return Err(Error::invalid("label spreading: k must be >= 1"));
            }
            let k = (*k).min(n.saturating_sub(1));
            for i in 0..n {
                let mut dist: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (squared_distance(&points[i], &points[j]), j))
                    .collect();
                dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(_, j) in dist.iter().take(k) {
                    adjacency[i].insert(j, 1.0);
                    adjacency[j].insert(i, 1.0);
                }
            }
        }
        Graph::Rbf { bandwidth } => {
            if !(*bandwidth > 0.0) {
                return Err(Error::invalid("label spreading: bandwidth must be > 0"));
            }
            let denom = 2.0 * bandwidth * bandwidth;
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = (-squared_distance(&points[i], &points[j]) / denom).exp();
                    if w > 0.0 {
                        adjacency[i].insert(j, w);
                        adjacency[j].insert(i, w);
                    }
                }
            }
        }
    }

    // Symmetric normalization: S = D^(-1/2) W D^(-1/2). Degree-zero nodes
    // keep empty rows and are flagged by the caller.
    let degrees: Vec<f64> = adjacency.iter().map(|row| row.values().sum()).collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::new();
    let mut values = Vec::new();
    offsets.push(0);
    for (i, row) in adjacency.iter().enumerate() {
        for (&j, &w) in row {
            if degrees[i] > 0.0 && degrees[j] > 0.0 {
                neighbors.push(j);
                values.push(w / (degrees[i].sqrt() * degrees[j].sqrt()));
            }
        }
        offsets.push(neighbors.len());
    }
    Ok(SparseGraph {
        offsets,
        neighbors,
        values,
    })
}

/// Propagate labels from `x_labeled` onto `x_unlabeled`. Pure function:
/// identical inputs give identical outputs.
pub fn spread(
    spec: &SpreadSpec,
    x_labeled: ArrayView2<'_, f64>,
    y: &[u8],
    x_unlabeled: ArrayView2<'_, f64>,
) -> Result<SpreadOutcome> {
    if x_labeled.ncols() != x_unlabeled.ncols() {
        return Err(Error::dim("spread: feature dimensions differ"));
    }
    if x_labeled.nrows() != y.len() {
        return Err(Error::dim("spread: labels do not match labeled rows"));
    }
    if !(spec.clamp_alpha > 0.0 && spec.clamp_alpha < 1.0) {
        return Err(Error::invalid("spread: clamp_alpha must be in (0, 1)"));
    }
    if spec.tolerance <= 0.0 || spec.max_iters == 0 {
        return Err(Error::invalid("spread: bad tolerance or max_iters"));
    }
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::SingleClass("spread: both classes required".into()));
    }

    let nl = x_labeled.nrows();
    let nu = x_unlabeled.nrows();
    let n = nl + nu;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..nl {
        points.push(x_labeled.row(i).to_vec());
    }
    for i in 0..nu {
        points.push(x_unlabeled.row(i).to_vec());
    }
    let graph = build_graph(&points, &spec.graph)?;

    // Seed matrix Y: one-hot for labeled rows, zero for unlabeled.
    let mut seed = vec![[0.0f64; 2]; n];
    for (i, &yi) in y.iter().enumerate() {
        seed[i][yi as usize] = 1.0;
    }
    let alpha = spec.clamp_alpha;
    let mut f = seed.clone();
    let mut buf = vec![[0.0f64; 2]; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < spec.max_iters {
        iterations += 1;
        graph.matvec_class(&f, &mut buf);
        let mut max_change = 0.0f64;
        for i in 0..n {
            for c in 0..2 {
                let next = alpha * buf[i][c] + (1.0 - alpha) * seed[i][c];
                max_change = max_change.max((next - f[i][c]).abs());
                f[i][c] = next;
            }
        }
        if max_change < spec.tolerance {
            converged = true;
            break;
        }
    }

    // Unlabeled rows with zero mass never saw a labeled point; they take
    // the global prior label.
    let prior_label = u8::from(2 * n_pos > y.len());
    let mut labels = Vec::with_capacity(nu);
    let mut scores = Vec::with_capacity(nu);
    let mut prior_fallbacks = 0;
    for i in nl..n {
        let row = f[i];
        if row[0] <= 0.0 && row[1] <= 0.0 {
            prior_fallbacks += 1;
            labels.push(prior_label);
        } else {
            labels.push(u8::from(row[1] > row[0]));
        }
        scores.push(row);
    }
    Ok(SpreadOutcome {
        labels,
        scores,
        iterations,
        converged,
        prior_fallbacks,
    })
}
