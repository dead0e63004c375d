//! Leakage-safe preprocessing fitted on training data only.
//!
//! Numeric columns: missing values filled with the fitted mean. Categorical
//! columns: missing values filled with the fitted mode, then group A
//! (cardinality < 3) is one-hot encoded against the fitted vocabulary and
//! group B is target encoded with empirical-Bayes shrinkage toward the
//! global positive rate. Unseen categories map to the all-zeros one-hot row
//! (group A) or the global prior (group B).

use std::collections::BTreeMap;

use crate::data::{is_missing, ColumnData, ColumnKind, ColumnMeta, Dataset};
use crate::error::{Error, Result};

/// Default shrinkage weight for target encoding: enc(c) =
/// (n_c * rate_c + m * prior) / (n_c + m).
pub const DEFAULT_SMOOTHING: f64 = 20.0;

#[derive(Clone, Debug)]
struct NumericEnc {
    name: String,
    mean: f64,
}

#[derive(Clone, Debug)]
struct OneHotEnc {
    name: String,
    mode: String,
    vocab: Vec<String>,
}

#[derive(Clone, Debug)]
struct TargetEnc {
    name: String,
    mode: String,
    map: BTreeMap<String, f64>,
    prior: f64,
}

#[derive(Clone, Debug)]
enum ColumnEnc {
    Numeric(NumericEnc),
    OneHot(OneHotEnc),
    Target(TargetEnc),
}

/// Fitted preprocessing pipeline. Immutable; transform uses only statistics
/// computed from the fitting data.
#[derive(Clone, Debug)]
pub struct PipelineModel {
    encoders: Vec<ColumnEnc>,
    smoothing: f64,
}

/// Fit the pipeline on a labeled training set with the default smoothing.
pub fn fit_pipeline(train: &Dataset) -> Result<PipelineModel> {
    fit_pipeline_with(train, DEFAULT_SMOOTHING)
}

/// Fit with an explicit target-encoding smoothing weight. Weight 0 encodes
/// each category by its raw positive rate.
pub fn fit_pipeline_with(train: &Dataset, smoothing: f64) -> Result<PipelineModel> {
    let labels = train
        .labels()
        .ok_or_else(|| Error::invalid("fit_pipeline: training set must be labeled"))?;
    if smoothing < 0.0 {
        return Err(Error::invalid("fit_pipeline: smoothing must be >= 0"));
    }
    let prior = labels.iter().map(|&y| f64::from(y)).sum::<f64>() / labels.len().max(1) as f64;

    let mut encoders = Vec::with_capacity(train.columns().len());
    for (j, meta) in train.columns().iter().enumerate() {
        match (meta.kind, train.column_data(j)) {
            (ColumnKind::Numeric, ColumnData::Numeric(values)) => {
                let present: Vec<f64> =
                    values.iter().copied().filter(|x| !is_missing(*x)).collect();
                if present.is_empty() {
                    return Err(Error::schema(format!(
                        "column '{}' is entirely missing",
                        meta.name
                    )));
                }
                let mean = present.iter().sum::<f64>() / present.len() as f64;
                encoders.push(ColumnEnc::Numeric(NumericEnc {
                    name: meta.name.clone(),
                    mean,
                }));
            }
            (_, ColumnData::Categorical(values)) => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for v in values.iter().flatten() {
                    *counts.entry(v.as_str()).or_insert(0) += 1;
                }
                if counts.is_empty() {
                    return Err(Error::schema(format!(
                        "column '{}' is entirely missing",
                        meta.name
                    )));
                }
                // Mode; ties resolve to the lexicographically smallest value
                // via the BTreeMap iteration order.
                let mode = counts
                    .iter()
                    .max_by_key(|&(_, &c)| c)
                    .map(|(v, _)| (*v).to_string())
                    .unwrap();
                if meta.kind == ColumnKind::CategoricalA {
                    encoders.push(ColumnEnc::OneHot(OneHotEnc {
                        name: meta.name.clone(),
                        mode,
                        vocab: counts.keys().map(|v| (*v).to_string()).collect(),
                    }));
                } else {
                    let mut pos: BTreeMap<&str, f64> = BTreeMap::new();
                    for (v, &y) in values.iter().zip(labels) {
                        if let Some(v) = v {
                            *pos.entry(v.as_str()).or_insert(0.0) += f64::from(y);
                        }
                    }
                    let map = counts
                        .iter()
                        .map(|(v, &n_c)| {
                            let rate = pos.get(v).copied().unwrap_or(0.0) / n_c as f64;
                            let enc =
                                (n_c as f64 * rate + smoothing * prior) / (n_c as f64 + smoothing);
                            ((*v).to_string(), enc)
                        })
                        .collect();
                    encoders.push(ColumnEnc::Target(TargetEnc {
                        name: meta.name.clone(),
                        mode,
                        map,
                        prior,
                    }));
                }
            }
            _ => unreachable!("Dataset guarantees kind/storage agreement"),
        }
    }
    Ok(PipelineModel { encoders, smoothing })
}

impl PipelineModel {
    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Fitted mean of a numeric column, if present in the model.
    pub fn fitted_mean(&self, name: &str) -> Option<f64> {
        self.encoders.iter().find_map(|e| match e {
            ColumnEnc::Numeric(n) if n.name == name => Some(n.mean),
            _ => None,
        })
    }

    /// Fitted mode of a categorical column, if present in the model.
    pub fn fitted_mode(&self, name: &str) -> Option<&str> {
        self.encoders.iter().find_map(|e| match e {
            ColumnEnc::OneHot(o) if o.name == name => Some(o.mode.as_str()),
            ColumnEnc::Target(t) if t.name == name => Some(t.mode.as_str()),
            _ => None,
        })
    }

    /// Target-encoded value for a category of a group-B column; unseen
    /// categories fall back to the global prior.
    pub fn encoded_value(&self, column: &str, category: &str) -> Option<f64> {
        self.encoders.iter().find_map(|e| match e {
            ColumnEnc::Target(t) if t.name == column => {
                Some(t.map.get(category).copied().unwrap_or(t.prior))
            }
            _ => None,
        })
    }

    /// Output column names after encoding, in transform order.
    pub fn output_columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        for enc in &self.encoders {
            match enc {
                ColumnEnc::Numeric(n) => out.push(n.name.clone()),
                ColumnEnc::OneHot(o) => {
                    for v in &o.vocab {
                        out.push(format!("{}={v}", o.name));
                    }
                }
                ColumnEnc::Target(t) => out.push(t.name.clone()),
            }
        }
        out
    }

    /// Transform a dataset into fully-numeric form with no missing values.
    /// Column names and kinds must match the fitting data; row order, ids,
    /// labels, weights and dates pass through unchanged.
    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.columns().len() != self.encoders.len() {
            return Err(Error::schema(format!(
                "transform: dataset has {} columns, model was fitted on {}",
                ds.columns().len(),
                self.encoders.len()
            )));
        }
        let mut out_meta = Vec::new();
        let mut out_data = Vec::new();
        for (j, enc) in self.encoders.iter().enumerate() {
            let meta = &ds.columns()[j];
            match enc {
                ColumnEnc::Numeric(n) => {
                    if meta.name != n.name || meta.kind != ColumnKind::Numeric {
                        return Err(Error::schema(format!(
                            "transform: column {j} is '{}', model expects numeric '{}'",
                            meta.name, n.name
                        )));
                    }
                    let ColumnData::Numeric(values) = ds.column_data(j) else {
                        unreachable!()
                    };
                    let filled = values
                        .iter()
                        .map(|&x| if is_missing(x) { n.mean } else { x })
                        .collect();
                    out_meta.push(ColumnMeta::numeric(n.name.clone()));
                    out_data.push(ColumnData::Numeric(filled));
                }
                ColumnEnc::OneHot(o) => {
                    if meta.name != o.name {
                        return Err(Error::schema(format!(
                            "transform: column {j} is '{}', model expects '{}'",
                            meta.name, o.name
                        )));
                    }
                    let ColumnData::Categorical(values) = ds.column_data(j) else {
                        return Err(Error::schema(format!(
                            "transform: column '{}' must be categorical",
                            meta.name
                        )));
                    };
                    // One column per fitted vocabulary entry; an unseen
                    // category leaves the whole block at zero.
                    for v in &o.vocab {
                        let col = values
                            .iter()
                            .map(|cell| {
                                let cell = cell.as_deref().unwrap_or(o.mode.as_str());
                                f64::from(cell == v.as_str())
                            })
                            .collect();
                        out_meta.push(ColumnMeta::numeric(format!("{}={v}", o.name)));
                        out_data.push(ColumnData::Numeric(col));
                    }
                }
                ColumnEnc::Target(t) => {
                    if meta.name != t.name {
                        return Err(Error::schema(format!(
                            "transform: column {j} is '{}', model expects '{}'",
                            meta.name, t.name
                        )));
                    }
                    let ColumnData::Categorical(values) = ds.column_data(j) else {
                        return Err(Error::schema(format!(
                            "transform: column '{}' must be categorical",
                            meta.name
                        )));
                    };
                    let col = values
                        .iter()
                        .map(|cell| {
                            let cell = cell.as_deref().unwrap_or(t.mode.as_str());
                            t.map.get(cell).copied().unwrap_or(t.prior)
                        })
                        .collect();
                    out_meta.push(ColumnMeta::numeric(t.name.clone()));
                    out_data.push(ColumnData::Numeric(col));
                }
            }
        }
        debug_assert!(out_data.iter().all(|c| match c {
            ColumnData::Numeric(v) => v.iter().all(|x| !is_missing(*x)),
            ColumnData::Categorical(_) => false,
        }));
        let mut out = Dataset::new(out_meta, out_data)?.with_row_ids(ds.row_ids().to_vec())?;
        if let Some(labels) = ds.labels() {
            out = out.with_labels(labels.to_vec())?;
        }
        if let Some(weights) = ds.weights() {
            out = out.with_weights(weights.to_vec())?;
        }
        if let Some(prov) = ds.provenance() {
            out = out.with_provenance(prov.to_vec())?;
        }
        if let Some(dates) = ds.dates() {
            out = out.with_dates(dates.clone())?;
        }
        Ok(out)
    }
}

/// Fill missing features of `target` rows from the `k` nearest `reference`
/// rows. Distance is Euclidean over the standardized shared columns
/// (present and complete in both datasets); zero-variance shared columns are
/// dropped from the distance. Columns of `reference` absent from `target`
/// are appended, imputed for every row. Ties at the k-th neighbor break by
/// reference row order.
pub fn knn_impute(reference: &Dataset, target: &Dataset, k: usize) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::invalid("knn_impute: k must be >= 1"));
    }
    if k > reference.rows() {
        return Err(Error::invalid(format!(
            "knn_impute: k = {k} exceeds reference rows {}",
            reference.rows()
        )));
    }
    for ds in [reference, target] {
        if ds.columns().iter().any(|c| c.kind != ColumnKind::Numeric) {
            return Err(Error::schema(
                "knn_impute: all columns must be numeric; encode categoricals first",
            ));
        }
    }

    fn numeric(ds: &Dataset, j: usize) -> &[f64] {
        match ds.column_data(j) {
            ColumnData::Numeric(v) => v,
            ColumnData::Categorical(_) => unreachable!(),
        }
    }

    // Shared columns: same name on both sides, fully observed on both sides.
    let mut shared: Vec<(usize, usize)> = Vec::new();
    for (jt, meta) in target.columns().iter().enumerate() {
        if let Some(jr) = reference.column_index(&meta.name) {
            let t_complete = numeric(target, jt).iter().all(|x| !is_missing(*x));
            let r_complete = numeric(reference, jr).iter().all(|x| !is_missing(*x));
            if t_complete && r_complete {
                shared.push((jr, jt));
            }
        }
    }
    if shared.is_empty() {
        return Err(Error::schema("knn_impute: no shared complete columns"));
    }

    // Standardize by reference statistics; drop zero-variance columns.
    let mut dims: Vec<(usize, usize, f64, f64)> = Vec::new();
    for &(jr, jt) in &shared {
        let col = numeric(reference, jr);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        if var > 0.0 {
            dims.push((jr, jt, mean, var.sqrt()));
        }
    }
    if dims.is_empty() {
        return Err(Error::schema(
            "knn_impute: all shared columns have zero variance",
        ));
    }

    let ref_std: Vec<Vec<f64>> = dims
        .iter()
        .map(|&(jr, _, mean, std)| {
            numeric(reference, jr)
                .iter()
                .map(|x| (x - mean) / std)
                .collect()
        })
        .collect();
    let tgt_std: Vec<Vec<f64>> = dims
        .iter()
        .map(|&(_, jt, mean, std)| {
            numeric(target, jt)
                .iter()
                .map(|x| (x - mean) / std)
                .collect()
        })
        .collect();

    let neighbors: Vec<Vec<usize>> = (0..target.rows())
        .map(|i| {
            let mut dist: Vec<(f64, usize)> = (0..reference.rows())
                .map(|r| {
                    let d2: f64 = (0..dims.len())
                        .map(|d| {
                            let diff = tgt_std[d][i] - ref_std[d][r];
                            diff * diff
                        })
                        .sum();
                    (d2, r)
                })
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dist.truncate(k);
            dist.into_iter().map(|(_, r)| r).collect()
        })
        .collect();

    let knn_mean = |ref_col: &[f64], neigh: &[usize]| -> f64 {
        neigh.iter().map(|&r| ref_col[r]).sum::<f64>() / neigh.len() as f64
    };

    // Assemble output: target columns with gaps filled, then reference-only
    // columns imputed for every row.
    let mut out_meta: Vec<ColumnMeta> = target.columns().to_vec();
    let mut out_data: Vec<ColumnData> = (0..target.columns().len())
        .map(|jt| ColumnData::Numeric(numeric(target, jt).to_vec()))
        .collect();

    for (jt, col) in out_data.iter_mut().enumerate() {
        let ColumnData::Numeric(values) = col else {
            unreachable!()
        };
        if values.iter().any(|x| is_missing(*x)) {
            let name = &target.columns()[jt].name;
            let jr = reference.column_index(name).ok_or_else(|| {
                Error::schema(format!(
                    "knn_impute: column '{name}' has missing values and no reference column"
                ))
            })?;
            let ref_col = numeric(reference, jr);
            if ref_col.iter().any(|x| is_missing(*x)) {
                return Err(Error::schema(format!(
                    "knn_impute: reference column '{name}' is not complete"
                )));
            }
            for (i, v) in values.iter_mut().enumerate() {
                if is_missing(*v) {
                    *v = knn_mean(ref_col, &neighbors[i]);
                }
            }
        }
    }

    for (jr, meta) in reference.columns().iter().enumerate() {
        if target.column_index(&meta.name).is_none() {
            let ref_col = numeric(reference, jr);
            if ref_col.iter().any(|x| is_missing(*x)) {
                return Err(Error::schema(format!(
                    "knn_impute: reference column '{}' is not complete",
                    meta.name
                )));
            }
            let col: Vec<f64> = (0..target.rows())
                .map(|i| knn_mean(ref_col, &neighbors[i]))
                .collect();
            out_meta.push(ColumnMeta::numeric(meta.name.clone()));
            out_data.push(ColumnData::Numeric(col));
        }
    }

    let mut out = Dataset::new(out_meta, out_data)?.with_row_ids(target.row_ids().to_vec())?;
    if let Some(labels) = target.labels() {
        out = out.with_labels(labels.to_vec())?;
    }
    if let Some(weights) = target.weights() {
        out = out.with_weights(weights.to_vec())?;
    }
    if let Some(dates) = target.dates() {
        out = out.with_dates(dates.clone())?;
    }
    Ok(out)
}
