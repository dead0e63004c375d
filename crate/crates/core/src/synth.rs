//! Synthetic credit data for desk-scale experiments.
//!
//! Features are Gaussian per pool and labels follow one shared law: the
//! default log-odds are linear along a class direction plus a hinge "risk
//! cliff" along an orthogonal direction — risk grows only beyond a knee, so
//! bad payers have a genuinely fatter right tail there while the accepted
//! region holds only a thin sliver of cliff evidence. The reject pool draws
//! the same features with means shifted by `bias * offset`: a risk-style
//! fraction moves up the cliff direction and the rest moves along a second,
//! risk-free novelty direction (applicants turned away for reasons
//! unrelated to repayment). Bias 0 reproduces the accepted distribution
//! exactly; bias 1 applies the full configured offset.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub n_accept: usize,
    pub n_reject: usize,
    /// Distribution shift of the reject pool, in [0, 1].
    pub bias: f64,
    pub seed: u64,
    pub n_features: usize,
    /// Log-odds intercept of the label law.
    pub intercept: f64,
    /// Log-odds slope along the class direction.
    pub linear_weight: f64,
    /// Knee of the risk cliff along the orthogonal direction.
    pub cliff_start: f64,
    /// Extra log-odds per unit beyond the knee.
    pub cliff_weight: f64,
    /// Full-bias reject shift along the class direction.
    pub shift_along: f64,
    /// Full-bias reject shift up the cliff direction (risk-style rejects).
    pub shift_ortho: f64,
    /// Full-bias shift along the risk-free novelty direction (the rest).
    pub shift_novel: f64,
    /// Fraction of rejects shifted along the novel direction.
    pub novel_fraction: f64,
    pub noise: f64,
}

impl SynthSpec {
    pub fn new(n_accept: usize, n_reject: usize, bias: f64, seed: u64) -> Self {
        SynthSpec {
            n_accept,
            n_reject,
            bias,
            seed,
            n_features: 6,
            intercept: -1.35,
            linear_weight: 1.7,
            cliff_start: 1.2,
            cliff_weight: 1.5,
            shift_along: 0.8,
            shift_ortho: 5.0,
            shift_novel: 7.0,
            novel_fraction: 0.5,
            noise: 1.0,
        }
    }

    /// Unit class direction (all-ones, normalized).
    pub fn class_direction(&self) -> Vec<f64> {
        let d = self.n_features as f64;
        vec![1.0 / d.sqrt(); self.n_features]
    }

    /// Cliff direction, concentrated on the first two features so
    /// axis-aligned outlier detectors can see displacements along it.
    pub fn ortho_direction(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_features];
        if self.n_features >= 2 {
            v[0] = 1.0 / 2f64.sqrt();
            v[1] = -1.0 / 2f64.sqrt();
        } else {
            v[0] = 1.0;
        }
        v
    }

    /// Second orthogonal unit direction (features 3 and 4) for the
    /// risk-free novelty shift.
    pub fn novel_direction(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_features];
        if self.n_features >= 4 {
            v[2] = 1.0 / 2f64.sqrt();
            v[3] = -1.0 / 2f64.sqrt();
        }
        v
    }

    /// Expected reject mean offset at full bias: the class-direction shift
    /// plus the mixture of the risk-style and novel-style shifts. The
    /// realized shift is `bias` times this vector, which the generator
    /// tests compare sample means against.
    pub fn full_offset(&self) -> Vec<f64> {
        let u = self.class_direction();
        let v = self.ortho_direction();
        let w = self.novel_direction();
        (0..self.n_features)
            .map(|j| {
                self.shift_along * u[j]
                    + (1.0 - self.novel_fraction) * self.shift_ortho * v[j]
                    + self.novel_fraction * self.shift_novel * w[j]
            })
            .collect()
    }

    /// True default log-odds of a feature row.
    pub fn label_logodds(&self, row: &[f64]) -> f64 {
        let u = self.class_direction();
        let v = self.ortho_direction();
        let s: f64 = row.iter().zip(&u).map(|(x, d)| x * d).sum();
        let t: f64 = row.iter().zip(&v).map(|(x, d)| x * d).sum();
        self.intercept + self.linear_weight * s + self.cliff_weight * (t - self.cliff_start).max(0.0)
    }
}

/// Output of the generator. `hidden_truth` has the same rows and ids as
/// `rejects` but keeps the true labels; it exists only for evaluation.
#[derive(Debug)]
pub struct SynthData {
    pub accepted: Dataset,
    pub rejects: Dataset,
    pub hidden_truth: Dataset,
}

/// Draw a seeded synthetic credit population. Accepted rows get ids
/// 0..n_accept, rejects follow. Bit-identical for equal specs.
pub fn synth_credit(spec: &SynthSpec) -> Result<SynthData> {
    if spec.n_accept == 0 || spec.n_reject == 0 {
        return Err(Error::invalid("synth_credit: counts must be positive"));
    }
    if !(0.0..=1.0).contains(&spec.bias) {
        return Err(Error::invalid("synth_credit: bias must be in [0,1]"));
    }
    if !(0.0..=1.0).contains(&spec.novel_fraction) {
        return Err(Error::invalid("synth_credit: novel_fraction must be in [0,1]"));
    }
    if spec.n_features == 0 {
        return Err(Error::invalid("synth_credit: need at least one feature"));
    }
    let d = spec.n_features;
    let u = spec.class_direction();
    let v = spec.ortho_direction();
    let w = spec.novel_direction();
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Numeric(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut draw_pool = |n: usize, shifted: bool| -> (Array2<f64>, Vec<u8>) {
        let mut x = Array2::zeros((n, d));
        let mut y = Vec::with_capacity(n);
        let mut row = vec![0.0; d];
        for i in 0..n {
            // Rejects split into risk-style rows (up the cliff direction)
            // and novel-style rows (along the risk-free direction).
            let (ortho, novel) = if shifted && rng.random::<f64>() < spec.novel_fraction {
                (0.0, spec.shift_novel)
            } else {
                (spec.shift_ortho, 0.0)
            };
            for j in 0..d {
                let mut mean = 0.0;
                if shifted {
                    mean = spec.bias * (spec.shift_along * u[j] + ortho * v[j] + novel * w[j]);
                }
                row[j] = mean + noise.sample(&mut rng);
                x[(i, j)] = row[j];
            }
            let p = 1.0 / (1.0 + (-spec.label_logodds(&row)).exp());
            y.push(u8::from(rng.random::<f64>() < p));
        }
        (x, y)
    };

    let (acc_x, acc_y) = draw_pool(spec.n_accept, false);
    let (rej_x, rej_y) = draw_pool(spec.n_reject, true);

    let names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();

    let accepted = Dataset::from_matrix(&name_refs, &acc_x)?.with_labels(acc_y)?;
    let rejects = Dataset::from_matrix(&name_refs, &rej_x)?.with_id_offset(spec.n_accept as u64);
    let hidden_truth = rejects.clone().with_labels(rej_y)?;

    Ok(SynthData {
        accepted,
        rejects,
        hidden_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_means(x: &Array2<f64>) -> Vec<f64> {
        (0..x.ncols())
            .map(|j| x.column(j).sum() / x.nrows() as f64)
            .collect()
    }

    #[test]
    fn zero_bias_means_match() {
        let spec = SynthSpec::new(5000, 5000, 0.0, 11);
        let data = synth_credit(&spec).unwrap();
        let acc = data.accepted.to_matrix().unwrap();
        let rej = data.rejects.to_matrix().unwrap();
        let (ma, mr) = (column_means(&acc), column_means(&rej));
        // Features are unit-variance Gaussians; 3 * SE of a mean difference
        // at n = 5000.
        let se = (2.0f64 / 5000.0).sqrt();
        for j in 0..spec.n_features {
            assert!(
                (ma[j] - mr[j]).abs() < 3.0 * se,
                "feature {j}: |{} - {}| >= {}",
                ma[j],
                mr[j],
                3.0 * se
            );
        }
    }

    #[test]
    fn full_bias_shift_matches_configured_offset() {
        let spec = SynthSpec::new(5000, 5000, 1.0, 13);
        let data = synth_credit(&spec).unwrap();
        let acc = data.accepted.to_matrix().unwrap();
        let rej = data.rejects.to_matrix().unwrap();
        let (ma, mr) = (column_means(&acc), column_means(&rej));
        let offset = spec.full_offset();
        // The branch mixture inflates reject variance along the shifted
        // features; bound the per-feature sigma by the branch spread.
        let branch_sd = (spec.shift_ortho.max(spec.shift_novel) / 2f64.sqrt()) / 2.0 + 1.0;
        let se = branch_sd * (2.0f64 / 5000.0).sqrt();
        for j in 0..spec.n_features {
            let shift = mr[j] - ma[j];
            assert!(
                (shift - offset[j]).abs() < 3.0 * se,
                "feature {j}: shift {shift} vs offset {}",
                offset[j]
            );
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = SynthSpec::new(50, 80, 0.5, 99);
        let a = synth_credit(&spec).unwrap();
        let b = synth_credit(&spec).unwrap();
        assert_eq!(
            a.accepted.to_matrix().unwrap(),
            b.accepted.to_matrix().unwrap()
        );
        assert_eq!(a.rejects.to_matrix().unwrap(), b.rejects.to_matrix().unwrap());
        assert_eq!(a.accepted.labels(), b.accepted.labels());
        assert_eq!(a.hidden_truth.labels(), b.hidden_truth.labels());
    }

    #[test]
    fn ids_are_disjoint_and_hidden_truth_aligned() {
        let spec = SynthSpec::new(10, 7, 0.3, 5);
        let data = synth_credit(&spec).unwrap();
        assert_eq!(data.accepted.row_ids(), (0..10).collect::<Vec<_>>().as_slice());
        assert_eq!(
            data.rejects.row_ids(),
            (10..17).collect::<Vec<_>>().as_slice()
        );
        assert_eq!(data.rejects.row_ids(), data.hidden_truth.row_ids());
        assert!(data.rejects.labels().is_none());
        assert!(data.hidden_truth.labels().is_some());
    }

    #[test]
    fn cliff_raises_risk_beyond_knee() {
        let spec = SynthSpec::new(10, 10, 0.0, 1);
        let v = spec.ortho_direction();
        let base: Vec<f64> = vec![0.0; spec.n_features];
        let mut high = base.clone();
        for j in 0..spec.n_features {
            high[j] += 3.0 * v[j];
        }
        assert!(
            spec.label_logodds(&high)
                > spec.label_logodds(&base) + spec.cliff_weight
        );
        // Below the knee the cliff contributes nothing.
        let mut low = base.clone();
        for j in 0..spec.n_features {
            low[j] -= 3.0 * v[j];
        }
        assert_eq!(spec.label_logodds(&low), spec.label_logodds(&base));
    }
}
