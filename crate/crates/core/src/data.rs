//! Tabular dataset container, CSV ingestion, and seeded splitting.
//!
//! A [`Dataset`] is immutable after construction: every transform in this
//! crate produces a new `Dataset`. Missing numeric values are represented by
//! `f64::NAN`, which no legitimate cell can hold; see [`is_missing`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stable row identifier, assigned at load/generation time and never reused
/// for a different row. Kickout evaluation matches the same clients across
/// models by these ids.
pub type RowId = u64;

/// Missing-value sentinel for numeric cells.
pub const MISSING: f64 = f64::NAN;

/// True when a numeric cell holds the missing-value marker.
#[inline]
pub fn is_missing(x: f64) -> bool {
    x.is_nan()
}

/// Whether a label is observed ground truth or was inferred by a reject
/// inference method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    GroundTruth,
    Inferred,
}

/// Column kind. Categorical columns are grouped by cardinality: group A has
/// fewer than 3 unique values (one-hot encoded), group B has 3 or more
/// (target encoded).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    CategoricalA,
    CategoricalB,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// Unique non-missing values observed at load time (categoricals only).
    pub cardinality: Option<usize>,
}

impl ColumnMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnMeta {
            name: name.into(),
            kind: ColumnKind::Numeric,
            cardinality: None,
        }
    }

    pub fn categorical(name: impl Into<String>, cardinality: usize) -> Self {
        ColumnMeta {
            name: name.into(),
            kind: kind_for_cardinality(cardinality),
            cardinality: Some(cardinality),
        }
    }
}

/// Group A iff fewer than 3 unique values.
pub fn kind_for_cardinality(cardinality: usize) -> ColumnKind {
    if cardinality < 3 {
        ColumnKind::CategoricalA
    } else {
        ColumnKind::CategoricalB
    }
}

/// Column storage. Categorical cells use `None` as the missing marker.
#[derive(Clone, Debug)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn take(&self, idx: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(idx.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(idx.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

/// Side column of dates used only for temporal splitting, never as a model
/// feature.
#[derive(Clone, Debug)]
pub struct DateColumn {
    pub name: String,
    pub dates: Vec<NaiveDate>,
}

/// Immutable tabular dataset: feature columns, optional labels (1 = default,
/// "bad payer"), optional positive per-sample weights, optional label
/// provenance, and stable unique row ids.
#[derive(Clone, Debug)]
pub struct Dataset {
    columns: Vec<ColumnMeta>,
    data: Vec<ColumnData>,
    row_ids: Vec<RowId>,
    labels: Option<Vec<u8>>,
    weights: Option<Vec<f64>>,
    provenance: Option<Vec<Provenance>>,
    dates: Option<DateColumn>,
}

impl Dataset {
    /// Build a dataset from column metadata and column-major data. Row ids
    /// are assigned 0..n.
    pub fn new(columns: Vec<ColumnMeta>, data: Vec<ColumnData>) -> Result<Self> {
        if columns.len() != data.len() {
            return Err(Error::dim(format!(
                "{} column metas but {} data columns",
                columns.len(),
                data.len()
            )));
        }
        let rows = data.first().map_or(0, ColumnData::len);
        for (meta, col) in columns.iter().zip(&data) {
            if col.len() != rows {
                return Err(Error::dim(format!(
                    "column '{}' has {} rows, expected {}",
                    meta.name,
                    col.len(),
                    rows
                )));
            }
            let kind_matches = matches!(
                (meta.kind, col),
                (ColumnKind::Numeric, ColumnData::Numeric(_))
                    | (ColumnKind::CategoricalA, ColumnData::Categorical(_))
                    | (ColumnKind::CategoricalB, ColumnData::Categorical(_))
            );
            if !kind_matches {
                return Err(Error::schema(format!(
                    "column '{}' kind does not match its storage",
                    meta.name
                )));
            }
        }
        let mut names = BTreeSet::new();
        for meta in &columns {
            if !names.insert(meta.name.clone()) {
                return Err(Error::schema(format!("duplicate column name '{}'", meta.name)));
            }
        }
        Ok(Dataset {
            columns,
            data,
            row_ids: (0..rows as u64).collect(),
            labels: None,
            weights: None,
            provenance: None,
            dates: None,
        })
    }

    /// Build an all-numeric dataset from a dense matrix (rows x features).
    pub fn from_matrix(names: &[&str], values: &Array2<f64>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::dim(format!(
                "{} names for {} matrix columns",
                names.len(),
                values.ncols()
            )));
        }
        let columns = names.iter().map(|n| ColumnMeta::numeric(*n)).collect();
        let data = (0..values.ncols())
            .map(|j| ColumnData::Numeric(values.column(j).to_vec()))
            .collect();
        Dataset::new(columns, data)
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.rows() {
            return Err(Error::dim("labels length != rows"));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::invalid(format!("label {bad} outside {{0,1}}")));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self.provenance = None;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.rows() {
            return Err(Error::dim("weights length != rows"));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Vec<Provenance>) -> Result<Self> {
        if provenance.len() != self.rows() {
            return Err(Error::dim("provenance length != rows"));
        }
        self.provenance = Some(provenance);
        Ok(self)
    }

    pub fn with_dates(mut self, dates: DateColumn) -> Result<Self> {
        if dates.dates.len() != self.rows() {
            return Err(Error::dim("date column length != rows"));
        }
        self.dates = Some(dates);
        Ok(self)
    }

    /// Replace row ids. Ids must be unique.
    pub fn with_row_ids(mut self, row_ids: Vec<RowId>) -> Result<Self> {
        if row_ids.len() != self.rows() {
            return Err(Error::dim("row_ids length != rows"));
        }
        let unique: BTreeSet<_> = row_ids.iter().collect();
        if unique.len() != row_ids.len() {
            return Err(Error::invalid("row ids must be unique"));
        }
        self.row_ids = row_ids;
        Ok(self)
    }

    /// Shift every row id by `offset`. Used when several files are loaded
    /// into one experiment so ids stay globally unique.
    pub fn with_id_offset(mut self, offset: u64) -> Self {
        for id in &mut self.row_ids {
            *id += offset;
        }
        self
    }

    pub fn rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_data(&self, idx: usize) -> &ColumnData {
        &self.data[idx]
    }

    pub fn row_ids(&self) -> &[RowId] {
        &self.row_ids
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Per-sample weights, defaulting to 1.0 when unset.
    pub fn weights_or_ones(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.rows()])
    }

    pub fn provenance(&self) -> Option<&[Provenance]> {
        self.provenance.as_deref()
    }

    pub fn dates(&self) -> Option<&DateColumn> {
        self.dates.as_ref()
    }

    /// Dense numeric matrix of all feature columns. Errors if any column is
    /// still categorical. Missing markers pass through as NaN.
    pub fn to_matrix(&self) -> Result<Array2<f64>> {
        let rows = self.rows();
        let cols = self.columns.len();
        let mut out = Array2::zeros((rows, cols));
        for (j, (meta, col)) in self.columns.iter().zip(&self.data).enumerate() {
            match col {
                ColumnData::Numeric(v) => {
                    for (i, &x) in v.iter().enumerate() {
                        out[(i, j)] = x;
                    }
                }
                ColumnData::Categorical(_) => {
                    return Err(Error::schema(format!(
                        "column '{}' is categorical; encode before to_matrix",
                        meta.name
                    )));
                }
            }
        }
        Ok(out)
    }

    /// New dataset containing the rows at `idx`, in that order.
    pub fn take_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            data: self.data.iter().map(|c| c.take(idx)).collect(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            weights: self
                .weights
                .as_ref()
                .map(|w| idx.iter().map(|&i| w[i]).collect()),
            provenance: self
                .provenance
                .as_ref()
                .map(|p| idx.iter().map(|&i| p[i]).collect()),
            dates: self.dates.as_ref().map(|d| DateColumn {
                name: d.name.clone(),
                dates: idx.iter().map(|&i| d.dates[i]).collect(),
            }),
        }
    }

    pub fn filter_rows(&self, mask: &[bool]) -> Result<Dataset> {
        if mask.len() != self.rows() {
            return Err(Error::dim("mask length != rows"));
        }
        let idx: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &keep)| keep.then_some(i))
            .collect();
        Ok(self.take_rows(&idx))
    }

    /// Remove rows whose id is in `ids`.
    pub fn remove_by_ids(&self, ids: &BTreeSet<RowId>) -> Dataset {
        let idx: Vec<usize> = (0..self.rows())
            .filter(|&i| !ids.contains(&self.row_ids[i]))
            .collect();
        self.take_rows(&idx)
    }

    /// Keep only the named columns, in the given order. Labels, weights,
    /// row ids and dates are preserved.
    pub fn select_columns(&self, names: &[&str]) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(names.len());
        let mut data = Vec::with_capacity(names.len());
        for name in names {
            let j = self
                .column_index(name)
                .ok_or_else(|| Error::schema(format!("unknown column '{name}'")))?;
            columns.push(self.columns[j].clone());
            data.push(self.data[j].clone());
        }
        Ok(Dataset {
            columns,
            data,
            row_ids: self.row_ids.clone(),
            labels: self.labels.clone(),
            weights: self.weights.clone(),
            provenance: self.provenance.clone(),
            dates: self.dates.clone(),
        })
    }

    /// Concatenate two datasets with identical schemas. Row ids must stay
    /// unique. Labels must be present on both sides or on neither. Weights
    /// and provenance are materialized (1.0 / GroundTruth) when only one
    /// side carries them.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.columns != other.columns {
            return Err(Error::schema("concat: column schemas differ"));
        }
        if self.labels.is_some() != other.labels.is_some() {
            return Err(Error::schema(
                "concat: one side is labeled, the other is not",
            ));
        }
        let mut ids = self.row_ids.clone();
        ids.extend_from_slice(&other.row_ids);
        let unique: BTreeSet<_> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(Error::invalid("concat: duplicate row ids"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| match (a, b) {
                (ColumnData::Numeric(x), ColumnData::Numeric(y)) => {
                    let mut v = x.clone();
                    v.extend_from_slice(y);
                    ColumnData::Numeric(v)
                }
                (ColumnData::Categorical(x), ColumnData::Categorical(y)) => {
                    let mut v = x.clone();
                    v.extend_from_slice(y);
                    ColumnData::Categorical(v)
                }
                _ => unreachable!("schemas already checked"),
            })
            .collect();
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => {
                let mut v = a.clone();
                v.extend_from_slice(b);
                Some(v)
            }
            _ => None,
        };
        let weights = if self.weights.is_some() || other.weights.is_some() {
            let mut v = self.weights_or_ones();
            v.extend(other.weights_or_ones());
            Some(v)
        } else {
            None
        };
        let provenance = if self.provenance.is_some() || other.provenance.is_some() {
            let mut v = self
                .provenance
                .clone()
                .unwrap_or_else(|| vec![Provenance::GroundTruth; self.rows()]);
            v.extend(
                other
                    .provenance
                    .clone()
                    .unwrap_or_else(|| vec![Provenance::GroundTruth; other.rows()]),
            );
            Some(v)
        } else {
            None
        };
        let dates = match (&self.dates, &other.dates) {
            (Some(a), Some(b)) if a.name == b.name => {
                let mut dates = a.dates.clone();
                dates.extend_from_slice(&b.dates);
                Some(DateColumn {
                    name: a.name.clone(),
                    dates,
                })
            }
            _ => None,
        };
        Ok(Dataset {
            columns: self.columns.clone(),
            data,
            row_ids: ids,
            labels,
            weights,
            provenance,
            dates,
        })
    }

    /// Largest row id present, or None for an empty dataset.
    pub fn max_row_id(&self) -> Option<RowId> {
        self.row_ids.iter().copied().max()
    }
}

/// How to split a dataset: seeded random fractions or a temporal cut.
#[derive(Clone, Debug)]
pub enum SplitSpec {
    /// Fractions must sum to 1 (within 1e-9). Deterministic given the seed.
    Fractions { fractions: Vec<f64>, seed: u64 },
    /// Two parts: rows dated strictly before `cut`, then the rest. A row
    /// dated exactly at the boundary goes to the second part.
    Temporal { cut: NaiveDate },
}

/// Split result. `empty_parts` flags partitions that came out empty, which
/// is a warning rather than a failure (harsh policies can empty a split).
#[derive(Debug)]
pub struct SplitOutcome {
    pub parts: Vec<Dataset>,
    pub empty_parts: Vec<usize>,
}

/// Partition a dataset. The parts are disjoint and their row ids cover the
/// input exactly.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<SplitOutcome> {
    let parts = match spec {
        SplitSpec::Fractions { fractions, seed } => {
            if fractions.is_empty() {
                return Err(Error::invalid("no fractions given"));
            }
            if fractions.iter().any(|&f| f < 0.0) {
                return Err(Error::invalid("negative fraction"));
            }
            let total: f64 = fractions.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("fractions sum to {total}, expected 1")));
            }
            let n = ds.rows();
            let mut idx: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            idx.shuffle(&mut rng);
            // Cumulative-floor sizing partitions exactly and hits the exact
            // counts whenever frac * n is integral.
            let mut parts = Vec::with_capacity(fractions.len());
            let mut cum = 0.0;
            let mut start = 0usize;
            for (k, f) in fractions.iter().enumerate() {
                cum += f;
                let end = if k + 1 == fractions.len() {
                    n
                } else {
                    ((cum * n as f64) + 1e-9).floor() as usize
                };
                parts.push(ds.take_rows(&idx[start..end.min(n)]));
                start = end.min(n);
            }
            parts
        }
        SplitSpec::Temporal { cut } => {
            let dates = ds
                .dates()
                .ok_or_else(|| Error::schema("temporal split requires a date column"))?;
            let before: Vec<usize> = (0..ds.rows()).filter(|&i| dates.dates[i] < *cut).collect();
            let after: Vec<usize> = (0..ds.rows()).filter(|&i| dates.dates[i] >= *cut).collect();
            vec![ds.take_rows(&before), ds.take_rows(&after)]
        }
    };
    let empty_parts = parts
        .iter()
        .enumerate()
        .filter_map(|(i, p)| (p.rows() == 0).then_some(i))
        .collect();
    Ok(SplitOutcome { parts, empty_parts })
}

/// Column declaration as read from a schema file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemaKind {
    Numeric,
    Categorical,
    Date,
}

#[derive(Clone, Debug)]
pub struct SchemaColumn {
    pub name: String,
    pub kind: SchemaKind,
}

/// Schema file: one `name,kind` pair per line with kind in
/// {numeric, categorical, date}; `#` starts a comment.
#[derive(Clone, Debug, Default)]
pub struct Schema {
    pub columns: Vec<SchemaColumn>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Schema> {
        let mut columns = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, kind) = line.split_once(',').ok_or_else(|| {
                Error::schema(format!("schema line {}: expected 'name,kind'", lineno + 1))
            })?;
            let kind = match kind.trim() {
                "numeric" => SchemaKind::Numeric,
                "categorical" => SchemaKind::Categorical,
                "date" => SchemaKind::Date,
                other => {
                    return Err(Error::schema(format!(
                        "schema line {}: unknown kind '{other}'",
                        lineno + 1
                    )))
                }
            };
            columns.push(SchemaColumn {
                name: name.trim().to_string(),
                kind,
            });
        }
        if columns.is_empty() {
            return Err(Error::schema("schema file declares no columns"));
        }
        Ok(Schema { columns })
    }

    pub fn from_file(path: &Path) -> Result<Schema> {
        Schema::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_date(cell: &str) -> Option<NaiveDate> {
    let cell = cell.trim();
    if let Ok(d) = NaiveDate::parse_from_str(cell, "%Y-%m-%d") {
        return Some(d);
    }
    // YYYY-MM maps to the first of the month.
    if let Ok(d) = NaiveDate::parse_from_str(&format!("{cell}-01"), "%Y-%m-%d") {
        return Some(d);
    }
    None
}

fn parse_label(cell: &str) -> Option<u8> {
    match cell.trim() {
        "0" => Some(0),
        "1" => Some(1),
        other => match other.parse::<f64>() {
            Ok(x) if x == 0.0 => Some(0),
            Ok(x) if x == 1.0 => Some(1),
            _ => None,
        },
    }
}

/// Load a comma-delimited UTF-8 CSV with a header row. Columns are selected
/// and typed by the schema; extra CSV columns are ignored. Unparseable
/// numeric cells become missing markers. Row ids are assigned 0..n.
pub fn load_csv(path: &Path, schema: &Schema, label_column: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let header_pos: BTreeMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();

    let mut feature_cols: Vec<(usize, &SchemaColumn)> = Vec::new();
    let mut date_col: Option<(usize, &str)> = None;
    for sc in &schema.columns {
        let pos = *header_pos.get(sc.name.as_str()).ok_or_else(|| {
            Error::schema(format!("schema column '{}' not found in CSV header", sc.name))
        })?;
        if sc.kind == SchemaKind::Date {
            if date_col.is_some() {
                return Err(Error::schema("schema declares more than one date column"));
            }
            date_col = Some((pos, sc.name.as_str()));
        } else {
            feature_cols.push((pos, sc));
        }
    }
    let label_pos = match label_column {
        Some(name) => {
            if schema.columns.iter().any(|c| c.name == name) {
                return Err(Error::schema(format!(
                    "label column '{name}' must not also appear in the feature schema"
                )));
            }
            Some((
                *header_pos.get(name).ok_or_else(|| {
                    Error::schema(format!("label column '{name}' not found in CSV header"))
                })?,
                name,
            ))
        }
        None => None,
    };

    let mut numeric: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut categorical: BTreeMap<usize, Vec<Option<String>>> = BTreeMap::new();
    for (slot, sc) in feature_cols.iter().enumerate() {
        match sc.1.kind {
            SchemaKind::Numeric => {
                numeric.insert(slot, Vec::new());
            }
            SchemaKind::Categorical => {
                categorical.insert(slot, Vec::new());
            }
            SchemaKind::Date => unreachable!(),
        }
    }
    let mut labels: Vec<u8> = Vec::new();
    let mut dates: Vec<NaiveDate> = Vec::new();

    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        for (slot, (pos, sc)) in feature_cols.iter().enumerate() {
            let cell = record.get(*pos).unwrap_or("");
            match sc.kind {
                SchemaKind::Numeric => {
                    let parsed = cell.trim().parse::<f64>().ok().filter(|x| x.is_finite());
                    numeric
                        .get_mut(&slot)
                        .unwrap()
                        .push(parsed.unwrap_or(MISSING));
                }
                SchemaKind::Categorical => {
                    let cell = cell.trim();
                    categorical
                        .get_mut(&slot)
                        .unwrap()
                        .push((!cell.is_empty()).then(|| cell.to_string()));
                }
                SchemaKind::Date => unreachable!(),
            }
        }
        if let Some((pos, name)) = date_col {
            let cell = record.get(pos).unwrap_or("");
            let d = parse_date(cell).ok_or_else(|| {
                Error::schema(format!(
                    "date column '{name}', row {}: cannot parse '{cell}'",
                    row_no + 1
                ))
            })?;
            dates.push(d);
        }
        if let Some((pos, name)) = label_pos {
            let cell = record.get(pos).unwrap_or("");
            let y = parse_label(cell).ok_or_else(|| {
                Error::schema(format!(
                    "label column '{name}', row {}: value '{cell}' not mappable to {{0,1}}",
                    row_no + 1
                ))
            })?;
            labels.push(y);
        }
    }

    let mut columns = Vec::with_capacity(feature_cols.len());
    let mut data = Vec::with_capacity(feature_cols.len());
    for (slot, (_, sc)) in feature_cols.iter().enumerate() {
        match sc.kind {
            SchemaKind::Numeric => {
                columns.push(ColumnMeta::numeric(sc.name.clone()));
                data.push(ColumnData::Numeric(numeric.remove(&slot).unwrap()));
            }
            SchemaKind::Categorical => {
                let cells = categorical.remove(&slot).unwrap();
                let uniques: BTreeSet<&String> = cells.iter().flatten().collect();
                columns.push(ColumnMeta::categorical(sc.name.clone(), uniques.len()));
                data.push(ColumnData::Categorical(cells));
            }
            SchemaKind::Date => unreachable!(),
        }
    }

    let mut ds = Dataset::new(columns, data)?;
    if let Some((_, name)) = date_col {
        ds = ds.with_dates(DateColumn {
            name: name.to_string(),
            dates,
        })?;
    }
    if label_pos.is_some() {
        ds = ds.with_labels(labels)?;
    }
    Ok(ds)
}
