//! Python bindings for the reject-inference library.
//!
//! Exposes the synthetic generator, the logistic reference classifier, the
//! isolation forest, the evaluation metrics (AUC, kickout, AUK), TOPSIS
//! selection, and a CI-EX driver over plain Python lists. Matrices are
//! lists of equal-length float rows.

use ndarray::Array2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ciex_core::ciex::{run_ciex, CiexRunConfig, CiexSpec};
use ciex_core::classifier::{self, ClassifierSpec, Penalty};
use ciex_core::data::Dataset;
use ciex_core::error::Error;
use ciex_core::isolation_forest::{self, IsoForestSpec};
use ciex_core::metrics;
use ciex_core::selection::{self, Direction, TopsisProblem};
use ciex_core::state::TrainState;
use ciex_core::synth::{synth_credit, SynthSpec};

fn value_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("empty matrix"));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(Array2::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j]))
}

fn matrix_to_rows(x: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..x.nrows()).map(|i| x.row(i).to_vec()).collect()
}

/// Draw a synthetic credit population. Returns a dict with accepted
/// features and labels, the unlabeled reject features, and the hidden true
/// reject labels (evaluation only).
#[pyfunction]
#[pyo3(signature = (n_accept, n_reject, bias, seed=0))]
fn synth_credit_py(
    py: Python<'_>,
    n_accept: usize,
    n_reject: usize,
    bias: f64,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let data = synth_credit(&SynthSpec::new(n_accept, n_reject, bias, seed)).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item(
        "accepted_x",
        matrix_to_rows(&data.accepted.to_matrix().map_err(value_err)?),
    )?;
    out.set_item("accepted_y", data.accepted.labels().unwrap().to_vec())?;
    out.set_item(
        "reject_x",
        matrix_to_rows(&data.rejects.to_matrix().map_err(value_err)?),
    )?;
    out.set_item("hidden_y", data.hidden_truth.labels().unwrap().to_vec())?;
    Ok(out.into())
}

/// Probability a random positive outranks a random negative (ties half).
#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    metrics::auc(&scores, &labels).map_err(value_err)
}

/// Kickout at acceptance rate `alpha`. Accepted-test rows get ids 0..n and
/// reject rows follow, so callers pass aligned score vectors only.
#[pyfunction]
fn kickout(
    bm_scores_accepted: Vec<f64>,
    ri_scores_accepted: Vec<f64>,
    ri_scores_rejects: Vec<f64>,
    accepted_labels: Vec<u8>,
    alpha: f64,
) -> PyResult<f64> {
    let n = bm_scores_accepted.len() as u64;
    let accepted_ids: Vec<u64> = (0..n).collect();
    let reject_ids: Vec<u64> = (n..n + ri_scores_rejects.len() as u64).collect();
    let inputs = metrics::KickoutInputs {
        accepted_ids: &accepted_ids,
        accepted_labels: &accepted_labels,
        bm_scores_accepted: &bm_scores_accepted,
        ri_scores_accepted: &ri_scores_accepted,
        reject_ids: &reject_ids,
        ri_scores_rejects: &ri_scores_rejects,
    };
    Ok(metrics::kickout(&inputs, alpha).map_err(value_err)?.value)
}

/// Mean kickout over the 1%..100% acceptance-rate grid.
#[pyfunction]
fn auk(
    bm_scores_accepted: Vec<f64>,
    ri_scores_accepted: Vec<f64>,
    ri_scores_rejects: Vec<f64>,
    accepted_labels: Vec<u8>,
) -> PyResult<f64> {
    let n = bm_scores_accepted.len() as u64;
    let accepted_ids: Vec<u64> = (0..n).collect();
    let reject_ids: Vec<u64> = (n..n + ri_scores_rejects.len() as u64).collect();
    let inputs = metrics::KickoutInputs {
        accepted_ids: &accepted_ids,
        accepted_labels: &accepted_labels,
        bm_scores_accepted: &bm_scores_accepted,
        ri_scores_accepted: &ri_scores_accepted,
        reject_ids: &reject_ids,
        ri_scores_rejects: &ri_scores_rejects,
    };
    Ok(metrics::auk(&inputs, &metrics::auk_grid())
        .map_err(value_err)?
        .value)
}

/// TOPSIS over a criteria matrix (rows = alternatives, all benefit
/// direction). Returns (winner_index, closeness_list).
#[pyfunction]
fn topsis_select(matrix: Vec<Vec<f64>>, weights: Vec<f64>) -> PyResult<(usize, Vec<f64>)> {
    let problem = TopsisProblem {
        alternatives: matrix
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i as u64, v))
            .collect(),
        directions: vec![Direction::Benefit; weights.len()],
        weights,
    };
    let out = selection::topsis_select(&problem).map_err(value_err)?;
    Ok((out.winner as usize, out.closeness))
}

/// Class-weight-balanced logistic model.
#[pyclass]
struct LogisticModel {
    inner: classifier::FittedClassifier,
}

#[pymethods]
impl LogisticModel {
    #[staticmethod]
    #[pyo3(signature = (x, y, weights=None, penalty="l2", strength=1e-3, balanced=true))]
    fn fit(
        x: Vec<Vec<f64>>,
        y: Vec<u8>,
        weights: Option<Vec<f64>>,
        penalty: &str,
        strength: f64,
        balanced: bool,
    ) -> PyResult<Self> {
        let penalty = match penalty {
            "l1" => Penalty::L1,
            "l2" => Penalty::L2,
            other => return Err(PyValueError::new_err(format!("unknown penalty '{other}'"))),
        };
        let spec = ClassifierSpec {
            penalty,
            penalty_strength: strength,
            balanced,
            ..Default::default()
        };
        let x = to_matrix(x)?;
        let inner =
            classifier::fit(&spec, x.view(), &y, weights.as_deref()).map_err(value_err)?;
        Ok(LogisticModel { inner })
    }

    fn predict_proba(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = to_matrix(x)?;
        classifier::predict_proba(&self.inner, x.view()).map_err(value_err)
    }

    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients.clone()
    }

    fn intercept(&self) -> f64 {
        self.inner.intercept
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(LogisticModel {
            inner: classifier::FittedClassifier::from_json(text).map_err(value_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "LogisticModel(features={}, converged={})",
            self.inner.coefficients.len(),
            self.inner.diagnostics.converged
        )
    }
}

/// Isolation forest outlier detector.
#[pyclass]
struct IsolationForest {
    inner: isolation_forest::IsoForest,
}

#[pymethods]
impl IsolationForest {
    #[staticmethod]
    #[pyo3(signature = (x, n_trees=100, subsample_size=256, contamination=0.12, seed=0))]
    fn fit(
        x: Vec<Vec<f64>>,
        n_trees: usize,
        subsample_size: usize,
        contamination: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let spec = IsoForestSpec {
            n_trees,
            subsample_size,
            contamination,
            seed,
        };
        let x = to_matrix(x)?;
        Ok(IsolationForest {
            inner: isolation_forest::fit(&spec, x.view()).map_err(value_err)?,
        })
    }

    fn scores(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        let x = to_matrix(x)?;
        self.inner.scores(x.view()).map_err(value_err)
    }

    fn is_inlier(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<bool>> {
        let x = to_matrix(x)?;
        self.inner.is_inlier(x.view()).map_err(value_err)
    }

    fn threshold(&self) -> f64 {
        self.inner.threshold()
    }
}

/// Run CI-EX and return one dict per iteration (iteration 0 is the
/// benchmark record).
#[pyfunction]
#[pyo3(signature = (train_x, train_y, reject_x, val_x, val_y, val_reject_x,
                    eta=1000, bad_fraction=0.07, contamination=0.12,
                    max_iterations=25, seed=0))]
#[allow(clippy::too_many_arguments)]
fn run_ciex_py(
    py: Python<'_>,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<u8>,
    reject_x: Vec<Vec<f64>>,
    val_x: Vec<Vec<f64>>,
    val_y: Vec<u8>,
    val_reject_x: Vec<Vec<f64>>,
    eta: usize,
    bad_fraction: f64,
    contamination: f64,
    max_iterations: usize,
    seed: u64,
) -> PyResult<Vec<Py<PyDict>>> {
    let names: Vec<String> = (0..train_x[0].len()).map(|j| format!("f{j}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let build = |rows: Vec<Vec<f64>>, offset: u64| -> PyResult<Dataset> {
        let m = to_matrix(rows)?;
        Ok(Dataset::from_matrix(&name_refs, &m)
            .map_err(value_err)?
            .with_id_offset(offset))
    };
    let n_train = train_x.len() as u64;
    let n_rej = reject_x.len() as u64;
    let n_val = val_x.len() as u64;
    let labeled = build(train_x, 0)?.with_labels(train_y).map_err(value_err)?;
    let rejects = build(reject_x, n_train)?;
    let val_acc = build(val_x, n_train + n_rej)?
        .with_labels(val_y)
        .map_err(value_err)?;
    let val_rej = build(val_reject_x, n_train + n_rej + n_val)?;

    let spec = CiexSpec {
        eta,
        bad_fraction,
        contamination,
        max_iterations,
        seed,
        ..Default::default()
    };
    let initial = TrainState::new(labeled, rejects).map_err(value_err)?;
    let run = run_ciex(
        initial,
        &spec,
        &val_acc,
        &val_rej,
        &CiexRunConfig::default(),
        None,
    )
    .map_err(value_err)?;

    run.records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("iteration", r.iteration)?;
            d.set_item("added_good", r.added_good)?;
            d.set_item("added_bad", r.added_bad)?;
            d.set_item("cross_labeled", r.cross_labeled)?;
            d.set_item("labeled_size", r.labeled_size)?;
            d.set_item("reject_size", r.reject_size)?;
            d.set_item("val_auc", r.val_auc)?;
            d.set_item("val_kickout", r.val_kickout)?;
            d.set_item("val_auk", r.val_auk)?;
            Ok(d.into())
        })
        .collect()
}

#[pymodule]
fn ciex_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(synth_credit_py, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(kickout, m)?)?;
    m.add_function(wrap_pyfunction!(auk, m)?)?;
    m.add_function(wrap_pyfunction!(topsis_select, m)?)?;
    m.add_function(wrap_pyfunction!(run_ciex_py, m)?)?;
    m.add_class::<LogisticModel>()?;
    m.add_class::<IsolationForest>()?;
    Ok(())
}
