//! Probabilistic binary classifier contract and the reference
//! implementation: a class-weight-balanced regularized logistic model
//! trained by deterministic proximal gradient descent.
//!
//! Features are standardized internally with training statistics and the
//! coefficients mapped back, so reported coefficients live in the original
//! feature space. The L1 penalty is handled by soft-threshold steps, L2 by
//! its smooth gradient; the intercept is never penalized.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1,
    L2,
}

/// Step-size rule for the proximal gradient loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Fixed step size.
    Constant(f64),
    /// Backtracking line search from the given initial step, halving until
    /// the quadratic upper bound holds.
    Backtracking(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub penalty: Penalty,
    pub penalty_strength: f64,
    /// Reweight samples so both classes carry equal total mass.
    pub balanced: bool,
    pub max_iters: usize,
    pub tolerance: f64,
    pub step_rule: StepRule,
    pub seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            penalty: Penalty::L2,
            penalty_strength: 1e-3,
            balanced: true,
            max_iters: 500,
            tolerance: 1e-8,
            step_rule: StepRule::Backtracking(4.0),
            seed: 0,
        }
    }
}

impl ClassifierSpec {
    pub fn l1(strength: f64) -> Self {
        ClassifierSpec {
            penalty: Penalty::L1,
            penalty_strength: strength,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tolerance <= 0.0 {
            return Err(Error::invalid("classifier: tolerance must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("classifier: max_iters must be >= 1"));
        }
        if self.penalty_strength < 0.0 {
            return Err(Error::invalid("classifier: penalty strength must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fitted logistic model in original feature space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedClassifier {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub spec: ClassifierSpec,
    pub diagnostics: FitDiagnostics,
}

/// Abstract probabilistic binary classifier: fit with optional per-sample
/// weights, predict P(y = 1) per row. The reference implementation is the
/// logistic model; tree ensembles can plug in behind the same contract.
pub trait ProbClassifier {
    fn fit_weighted(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: Option<&[f64]>,
    ) -> Result<Box<dyn ProbModel>>;
}

/// A fitted probabilistic model, immutable and safe for concurrent scoring.
pub trait ProbModel: Send + Sync {
    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>>;
}

impl ProbClassifier for ClassifierSpec {
    fn fit_weighted(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: Option<&[f64]>,
    ) -> Result<Box<dyn ProbModel>> {
        Ok(Box::new(fit(self, x, y, weights)?))
    }
}

impl ProbModel for FittedClassifier {
    fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        predict_proba(self, x)
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const PROB_FLOOR: f64 = 1e-15;

/// Class-balancing weights: a sample of class c gets n / (2 * n_c), so both
/// classes carry equal total mass. Errors when only one class is present.
pub fn class_balance_weights(labels: &[u8]) -> Result<Vec<f64>> {
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let n0 = labels.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass(
            "class_balance_weights: both classes must be present".into(),
        ));
    }
    let n = labels.len() as f64;
    let w0 = n / (2.0 * n0 as f64);
    let w1 = n / (2.0 * n1 as f64);
    Ok(labels
        .iter()
        .map(|&y| if y == 1 { w1 } else { w0 })
        .collect())
}

/// Mass-based balancing factors for weighted fits: class c is scaled by
/// W / (2 * W_c) where W_c is the class weight mass. Reduces to
/// `class_balance_weights` on unit weights, and makes the optimum invariant
/// to splitting a sample into fractional-weight copies.
fn balance_factors(labels: &[u8], weights: &[f64]) -> Result<(f64, f64)> {
    let mut mass = [0.0f64; 2];
    for (&y, &w) in labels.iter().zip(weights) {
        mass[y as usize] += w;
    }
    if mass[0] <= 0.0 || mass[1] <= 0.0 {
        return Err(Error::SingleClass(
            "fit: balancing requires both classes".into(),
        ));
    }
    let total = mass[0] + mass[1];
    Ok((total / (2.0 * mass[0]), total / (2.0 * mass[1])))
}

/// Weighted negative log-likelihood, normalized by total weight, without
/// the penalty term. Exposed for gradient verification.
pub fn weighted_nll(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    w: &[f64],
    coefficients: &[f64],
    intercept: f64,
) -> f64 {
    let total: f64 = w.iter().sum();
    let beta = Array1::from_vec(coefficients.to_vec());
    let z = x.dot(&beta) + intercept;
    let mut loss = 0.0;
    for ((&zi, &yi), &wi) in z.iter().zip(y).zip(w) {
        let p = sigmoid(zi).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        loss -= wi * (f64::from(yi) * p.ln() + (1.0 - f64::from(yi)) * (1.0 - p).ln());
    }
    loss / total
}

/// Analytic gradient of [`weighted_nll`] with respect to (coefficients,
/// intercept).
pub fn weighted_nll_grad(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    w: &[f64],
    coefficients: &[f64],
    intercept: f64,
) -> (Vec<f64>, f64) {
    let total: f64 = w.iter().sum();
    let beta = Array1::from_vec(coefficients.to_vec());
    let z = x.dot(&beta) + intercept;
    let resid: Array1<f64> = z
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&zi, &yi), &wi)| wi * (sigmoid(zi) - f64::from(yi)))
        .collect();
    let grad = x.t().dot(&resid) / total;
    let grad_b = resid.sum() / total;
    (grad.to_vec(), grad_b)
}

struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    /// Weighted feature statistics, so the standardized problem (and with it
    /// the penalized optimum) depends only on the weighted point mass, not
    /// on how that mass is split across duplicate rows.
    fn fit(x: ArrayView2<'_, f64>, w: &[f64]) -> Self {
        let total: f64 = w.iter().sum();
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let col = x.column(j);
            let mean = col.iter().zip(w).map(|(v, wi)| v * wi).sum::<f64>() / total;
            let var = col
                .iter()
                .zip(w)
                .map(|(v, wi)| wi * (v - mean).powi(2))
                .sum::<f64>()
                / total;
            means.push(mean);
            // Constant columns pass through centered; the unit std keeps the
            // optimizer away from divide-by-zero.
            stds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardizer { means, stds }
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for j in 0..out.ncols() {
            let (m, s) = (self.means[j], self.stds[j]);
            out.column_mut(j).mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Fit the regularized logistic model by proximal gradient descent.
/// Deterministic given the spec and inputs. Effective sample weights are
/// `w * balance` when the spec asks for balancing.
pub fn fit(
    spec: &ClassifierSpec,
    x: ArrayView2<'_, f64>,
    y: &[u8],
    weights: Option<&[f64]>,
) -> Result<FittedClassifier> {
    spec.validate()?;
    let (n, d) = (x.nrows(), x.ncols());
    if n == 0 || d == 0 {
        return Err(Error::invalid("fit: empty design matrix"));
    }
    if y.len() != n {
        return Err(Error::dim(format!("fit: {n} rows but {} labels", y.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("fit: non-finite feature value".into()));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::invalid("fit: labels must be 0 or 1"));
    }
    let mut w = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::dim("fit: weights length mismatch"));
            }
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::invalid("fit: weights must be positive"));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    if spec.balanced {
        let (f0, f1) = balance_factors(y, &w)?;
        for (wi, &yi) in w.iter_mut().zip(y) {
            *wi *= if yi == 1 { f1 } else { f0 };
        }
    } else if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::SingleClass("fit: both classes must be present".into()));
    }

    let scaler = Standardizer::fit(x, &w);
    let xs = scaler.apply(x);

    let mut beta = vec![0.0f64; d];
    let mut intercept = 0.0f64;
    let lambda = spec.penalty_strength;

    // Both penalties go through the proximal step so the data term stays the
    // only smooth part; a huge penalty then shrinks coefficients without
    // forcing a vanishing step on the unpenalized intercept.
    let objective = |coef: &[f64], b: f64| -> (f64, f64) {
        let smooth = weighted_nll(xs.view(), y, &w, coef, b);
        let nonsmooth = match spec.penalty {
            Penalty::L1 => lambda * coef.iter().map(|c| c.abs()).sum::<f64>(),
            Penalty::L2 => 0.5 * lambda * coef.iter().map(|c| c * c).sum::<f64>(),
        };
        (smooth, smooth + nonsmooth)
    };

    let grad_smooth =
        |coef: &[f64], b: f64| -> (Vec<f64>, f64) { weighted_nll_grad(xs.view(), y, &w, coef, b) };

    let (mut f_smooth, mut f_total) = objective(&beta, intercept);
    let mut iterations = 0;
    let mut converged = false;
    let mut bad_steps = 0usize;
    let initial_step = match spec.step_rule {
        StepRule::Constant(t) | StepRule::Backtracking(t) => {
            if t <= 0.0 {
                return Err(Error::invalid("fit: step size must be > 0"));
            }
            t
        }
    };

    for _ in 0..spec.max_iters {
        iterations += 1;
        let (g, gb) = grad_smooth(&beta, intercept);
        let mut step = initial_step;
        let (next_beta, next_intercept, next_smooth, next_total) = loop {
            let cand: Vec<f64> = beta
                .iter()
                .zip(&g)
                .map(|(bj, gj)| {
                    let v = bj - step * gj;
                    match spec.penalty {
                        Penalty::L1 => soft_threshold(v, step * lambda),
                        Penalty::L2 => v / (1.0 + step * lambda),
                    }
                })
                .collect();
            let cand_b = intercept - step * gb;
            let (cand_smooth, cand_total) = objective(&cand, cand_b);
            match spec.step_rule {
                StepRule::Constant(_) => break (cand, cand_b, cand_smooth, cand_total),
                StepRule::Backtracking(_) => {
                    // Quadratic upper bound check for the smooth part.
                    let mut lin = 0.0;
                    let mut sq = 0.0;
                    for ((cj, bj), gj) in cand.iter().zip(&beta).zip(&g) {
                        let diff = cj - bj;
                        lin += gj * diff;
                        sq += diff * diff;
                    }
                    let diff_b = cand_b - intercept;
                    lin += gb * diff_b;
                    sq += diff_b * diff_b;
                    if cand_smooth <= f_smooth + lin + sq / (2.0 * step) + 1e-12 {
                        break (cand, cand_b, cand_smooth, cand_total);
                    }
                    step *= 0.5;
                    if step < 1e-18 {
                        break (cand, cand_b, cand_smooth, cand_total);
                    }
                }
            }
        };

        if next_total > f_total + 1e-10 {
            bad_steps += 1;
            if bad_steps >= 5 {
                return Err(Error::Numeric(format!(
                    "fit: diverging, loss rose for {bad_steps} consecutive steps \
                     (loss {next_total:.6e} after {iterations} iterations)"
                )));
            }
        } else {
            bad_steps = 0;
        }

        let max_change = next_beta
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold((next_intercept - intercept).abs(), f64::max);
        beta = next_beta;
        intercept = next_intercept;
        f_smooth = next_smooth;
        f_total = next_total;
        if max_change < spec.tolerance {
            converged = true;
            break;
        }
    }

    // Map standardized-space parameters back to the original features.
    let mut coefficients = vec![0.0f64; d];
    let mut b0 = intercept;
    for j in 0..d {
        coefficients[j] = beta[j] / scaler.stds[j];
        b0 -= beta[j] * scaler.means[j] / scaler.stds[j];
    }

    Ok(FittedClassifier {
        coefficients,
        intercept: b0,
        spec: spec.clone(),
        diagnostics: FitDiagnostics {
            final_loss: f_total,
            iterations,
            converged,
        },
    })
}

/// Predicted P(y = 1) per row, strictly inside (0, 1).
pub fn predict_proba(model: &FittedClassifier, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.coefficients.len() {
        return Err(Error::dim(format!(
            "predict_proba: {} features, model has {}",
            x.ncols(),
            model.coefficients.len()
        )));
    }
    let beta = Array1::from_vec(model.coefficients.clone());
    Ok(x.dot(&beta)
        .iter()
        .map(|z| sigmoid(z + model.intercept).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
        .collect())
}

/// Linear scores (log-odds) per row.
pub fn decision_values(model: &FittedClassifier, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.coefficients.len() {
        return Err(Error::dim("decision_values: feature count mismatch"));
    }
    let beta = Array1::from_vec(model.coefficients.clone());
    Ok(x.dot(&beta).iter().map(|z| z + model.intercept).collect())
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    version: u32,
    model: FittedClassifier,
}

impl FittedClassifier {
    /// Versioned JSON form for experiment resumption.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelEnvelope {
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<FittedClassifier> {
        let envelope: ModelEnvelope = serde_json::from_str(text)?;
        if envelope.version != MODEL_FORMAT_VERSION {
            return Err(Error::schema(format!(
                "unsupported model format version {}",
                envelope.version
            )));
        }
        Ok(envelope.model)
    }
}

#[allow(dead_code)]
fn unused_view(_: ArrayView1<'_, f64>) {}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn balance_weights_worked_example() {
        let mut labels = vec![0u8; 80];
        labels.extend(vec![1u8; 20]);
        let w = class_balance_weights(&labels).unwrap();
        assert!((w[0] - 0.625).abs() < 1e-12);
        assert!((w[99] - 2.5).abs() < 1e-12);
        let mass0: f64 = w[..80].iter().sum();
        let mass1: f64 = w[80..].iter().sum();
        assert!((mass0 - mass1).abs() < 1e-9);
    }

    #[test]
    fn balance_weights_even_split_is_unit() {
        let labels = [0u8, 1, 0, 1];
        let w = class_balance_weights(&labels).unwrap();
        assert!(w.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn balance_weights_single_class_errors() {
        assert!(matches!(
            class_balance_weights(&[1, 1, 1]),
            Err(Error::SingleClass(_))
        ));
    }

    fn random_instance(
        rng: &mut ChaCha8Rng,
        n: usize,
        d: usize,
    ) -> (Array2<f64>, Vec<u8>, Vec<f64>) {
        let x = Array2::from_shape_fn((n, d), |_| rng.random::<f64>() * 4.0 - 2.0);
        let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 + 0.1).collect();
        (x, y, w)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let n = 5 + rng.random_range(0..40);
            let d = 1 + rng.random_range(0..6);
            let (x, y, w) = random_instance(&mut rng, n, d);
            let beta: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let b0 = rng.random::<f64>() - 0.5;
            let (g, gb) = weighted_nll_grad(x.view(), &y, &w, &beta, b0);
            let h = 1e-6;
            for j in 0..d {
                let mut plus = beta.clone();
                let mut minus = beta.clone();
                plus[j] += h;
                minus[j] -= h;
                let fd = (weighted_nll(x.view(), &y, &w, &plus, b0)
                    - weighted_nll(x.view(), &y, &w, &minus, b0))
                    / (2.0 * h);
                let denom = fd.abs().max(1e-8);
                assert!(
                    ((g[j] - fd) / denom).abs() < 1e-5,
                    "coef {j}: analytic {} vs fd {fd}",
                    g[j]
                );
            }
            let fd_b = (weighted_nll(x.view(), &y, &w, &beta, b0 + h)
                - weighted_nll(x.view(), &y, &w, &beta, b0 - h))
                / (2.0 * h);
            assert!(((gb - fd_b) / fd_b.abs().max(1e-8)).abs() < 1e-5);
        }
    }

    #[test]
    fn separable_toy_set_reaches_full_accuracy() {
        let x = array![
            [0.0, 0.0],
            [0.2, 0.1],
            [0.1, 0.3],
            [0.3, 0.2],
            [2.0, 2.0],
            [2.2, 1.9],
            [1.9, 2.1],
            [2.1, 2.3]
        ];
        let y = vec![0u8, 0, 0, 0, 1, 1, 1, 1];
        let spec = ClassifierSpec {
            penalty: Penalty::L2,
            penalty_strength: 1.0 / 100.0,
            max_iters: 2000,
            ..Default::default()
        };
        let model = fit(&spec, x.view(), &y, None).unwrap();
        let p = predict_proba(&model, x.view()).unwrap();
        for (pi, &yi) in p.iter().zip(&y) {
            assert_eq!(u8::from(*pi >= 0.5), yi, "p = {pi}");
        }
    }

    #[test]
    fn huge_penalty_collapses_to_base_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((200, 3), |_| rng.random::<f64>());
        let y: Vec<u8> = (0..200).map(|i| u8::from(i % 4 == 0)).collect();
        let spec = ClassifierSpec {
            penalty: Penalty::L2,
            penalty_strength: 1e9,
            balanced: false,
            max_iters: 3000,
            ..Default::default()
        };
        let model = fit(&spec, x.view(), &y, None).unwrap();
        assert!(model.coefficients.iter().all(|c| c.abs() < 1e-6));
        let p = predict_proba(&model, x.view()).unwrap();
        let base = 0.25;
        for pi in p {
            assert!((pi - base).abs() < 0.02, "p = {pi} vs base {base}");
        }
    }

    #[test]
    fn l1_zeroes_redundant_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 300;
        let mut x = Array2::zeros((n, 3));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let signal = rng.random::<f64>() * 2.0 - 1.0;
            x[(i, 0)] = signal;
            x[(i, 1)] = rng.random::<f64>() * 0.01; // noise column
            x[(i, 2)] = rng.random::<f64>() * 0.01; // noise column
            y.push(u8::from(signal + 0.2 * (rng.random::<f64>() - 0.5) > 0.0));
        }
        let spec = ClassifierSpec {
            penalty: Penalty::L1,
            penalty_strength: 0.05,
            max_iters: 2000,
            ..Default::default()
        };
        let model = fit(&spec, x.view(), &y, None).unwrap();
        assert!(
            model.coefficients.iter().filter(|c| **c == 0.0).count() >= 1,
            "coefficients: {:?}",
            model.coefficients
        );
        assert!(model.coefficients[0] != 0.0);
    }

    #[test]
    fn deterministic_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (x, y, w) = random_instance(&mut rng, 60, 4);
        let spec = ClassifierSpec::default();
        let a = fit(&spec, x.view(), &y, Some(&w)).unwrap();
        let b = fit(&spec, x.view(), &y, Some(&w)).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.intercept, b.intercept);
    }

    #[test]
    fn weight_mass_invariance_under_duplication() {
        // Duplicating every minority row with half weight must leave the
        // optimum unchanged when balancing is on.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 80;
        let mut x_rows: Vec<[f64; 2]> = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = u8::from(i % 5 == 0);
            let base = f64::from(label) * 1.5;
            x_rows.push([
                base + rng.random::<f64>() - 0.5,
                base + rng.random::<f64>() - 0.5,
            ]);
            y.push(label);
        }
        let x = Array2::from_shape_fn((n, 2), |(i, j)| x_rows[i][j]);
        let spec = ClassifierSpec {
            penalty: Penalty::L2,
            penalty_strength: 1e-2,
            balanced: true,
            max_iters: 5000,
            tolerance: 1e-12,
            ..Default::default()
        };
        let base_model = fit(&spec, x.view(), &y, None).unwrap();

        let minority: Vec<usize> = (0..n).filter(|&i| y[i] == 1).collect();
        let mut rows = x_rows.clone();
        let mut y2 = y.clone();
        let mut w2 = vec![1.0; n];
        for &i in &minority {
            w2[i] = 0.5;
            rows.push(x_rows[i]);
            y2.push(1);
            w2.push(0.5);
        }
        let x2 = Array2::from_shape_fn((rows.len(), 2), |(i, j)| rows[i][j]);
        let dup_model = fit(&spec, x2.view(), &y2, Some(&w2)).unwrap();

        for (a, b) in base_model
            .coefficients
            .iter()
            .zip(&dup_model.coefficients)
        {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!((base_model.intercept - dup_model.intercept).abs() < 1e-6);
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = FittedClassifier {
            coefficients: vec![0.0, 0.0],
            intercept: 0.0,
            spec: ClassifierSpec::default(),
            diagnostics: FitDiagnostics {
                final_loss: 0.0,
                iterations: 0,
                converged: true,
            },
        };
        let x = array![[1.0, -3.0], [100.0, 5.0]];
        let p = predict_proba(&model, x.view()).unwrap();
        assert!(p.iter().all(|&pi| pi == 0.5));
    }

    #[test]
    fn probabilities_monotone_in_score_and_bounded() {
        let model = FittedClassifier {
            coefficients: vec![2.0],
            intercept: -1.0,
            spec: ClassifierSpec::default(),
            diagnostics: FitDiagnostics {
                final_loss: 0.0,
                iterations: 0,
                converged: true,
            },
        };
        let x = Array2::from_shape_fn((50, 1), |(i, _)| i as f64 * 0.4 - 10.0);
        let p = predict_proba(&model, x.view()).unwrap();
        for pair in p.windows(2) {
            assert!(pair[1] > pair[0]);
        }
        assert!(p.iter().all(|&pi| pi > 0.0 && pi < 1.0));
    }

    #[test]
    fn duplicate_rows_get_identical_probabilities() {
        let x = array![[1.0, 2.0], [1.0, 2.0], [3.0, 1.0]];
        let y = vec![0u8, 0, 1];
        let model = fit(&ClassifierSpec::default(), x.view(), &y, None).unwrap();
        let p = predict_proba(&model, x.view()).unwrap();
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn non_finite_feature_errors() {
        let x = array![[1.0], [f64::NAN]];
        assert!(fit(&ClassifierSpec::default(), x.view(), &[0, 1], None).is_err());
    }

    #[test]
    fn dimension_mismatch_errors() {
        let x = array![[1.0, 2.0]];
        let model = FittedClassifier {
            coefficients: vec![1.0],
            intercept: 0.0,
            spec: ClassifierSpec::default(),
            diagnostics: FitDiagnostics {
                final_loss: 0.0,
                iterations: 0,
                converged: true,
            },
        };
        assert!(predict_proba(&model, x.view()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = vec![0u8, 0, 1, 1];
        let model = fit(&ClassifierSpec::default(), x.view(), &y, None).unwrap();
        let text = model.to_json().unwrap();
        let back = FittedClassifier::from_json(&text).unwrap();
        assert_eq!(model.coefficients, back.coefficients);
        assert_eq!(model.intercept, back.intercept);
    }
}
