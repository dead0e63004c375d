//! TOPSIS multi-criteria selection.
//!
//! Each criterion column is vector-normalized (divided by its Euclidean
//! norm), weighted by the normalized weights, and compared against the
//! ideal and anti-ideal points formed per criterion direction. The winner
//! maximizes closeness d- / (d+ + d-); ties break by the lowest
//! alternative id.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Higher is better.
    Benefit,
    /// Lower is better.
    Cost,
}

#[derive(Clone, Debug)]
pub struct TopsisProblem {
    /// (id, criterion values); ids are typically iteration indices.
    pub alternatives: Vec<(u64, Vec<f64>)>,
    pub weights: Vec<f64>,
    pub directions: Vec<Direction>,
}

#[derive(Clone, Debug)]
pub struct TopsisOutcome {
    pub winner: u64,
    /// Closeness per alternative, aligned with the problem's order.
    pub closeness: Vec<f64>,
}

/// Rank the alternatives and pick the one closest to the ideal point.
pub fn topsis_select(problem: &TopsisProblem) -> Result<TopsisOutcome> {
    let m = problem.alternatives.len();
    if m < 2 {
        return Err(Error::invalid("topsis: need at least 2 alternatives"));
    }
    let k = problem.weights.len();
    if k == 0 || problem.directions.len() != k {
        return Err(Error::invalid("topsis: weights/directions mismatch"));
    }
    if problem.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("topsis: weights must be positive"));
    }
    for (id, values) in &problem.alternatives {
        if values.len() != k {
            return Err(Error::dim(format!(
                "topsis: alternative {id} has {} criteria, expected {k}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "topsis: non-finite criterion for alternative {id}"
            )));
        }
    }
    let all_identical = problem
        .alternatives
        .iter()
        .all(|(_, v)| v == &problem.alternatives[0].1);
    if all_identical {
        return Err(Error::invalid(
            "topsis: all alternatives identical, nothing to discriminate",
        ));
    }

    let weight_sum: f64 = problem.weights.iter().sum();
    let weights: Vec<f64> = problem.weights.iter().map(|w| w / weight_sum).collect();

    // Vector normalization per criterion; an all-zero column stays zero.
    let mut matrix: Vec<Vec<f64>> = problem
        .alternatives
        .iter()
        .map(|(_, v)| v.clone())
        .collect();
    for j in 0..k {
        let norm = matrix.iter().map(|row| row[j] * row[j]).sum::<f64>().sqrt();
        if norm > 0.0 {
            for row in &mut matrix {
                row[j] = row[j] / norm * weights[j];
            }
        }
    }

    let mut ideal = vec![0.0f64; k];
    let mut anti = vec![0.0f64; k];
    for j in 0..k {
        let col: Vec<f64> = matrix.iter().map(|row| row[j]).collect();
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        (ideal[j], anti[j]) = match problem.directions[j] {
            Direction::Benefit => (max, min),
            Direction::Cost => (min, max),
        };
    }

    let closeness: Vec<f64> = matrix
        .iter()
        .map(|row| {
            let d_plus: f64 = row
                .iter()
                .zip(&ideal)
                .map(|(v, i)| (v - i) * (v - i))
                .sum::<f64>()
                .sqrt();
            let d_minus: f64 = row
                .iter()
                .zip(&anti)
                .map(|(v, a)| (v - a) * (v - a))
                .sum::<f64>()
                .sqrt();
            if d_plus + d_minus == 0.0 {
                0.0
            } else {
                d_minus / (d_plus + d_minus)
            }
        })
        .collect();

    let mut winner = 0usize;
    for i in 1..m {
        let better = closeness[i] > closeness[winner]
            || (closeness[i] == closeness[winner]
                && problem.alternatives[i].0 < problem.alternatives[winner].0);
        if better {
            winner = i;
        }
    }
    Ok(TopsisOutcome {
        winner: problem.alternatives[winner].0,
        closeness,
    })
}
