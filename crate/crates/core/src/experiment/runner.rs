//! Experiment orchestration: enumerate (method, condition, seed) cells,
//! run them in parallel, and persist one JSON record per cell plus a run
//! manifest. A crash in one cell becomes a failure record instead of
//! aborting the others.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ciex::{self, CiexRunConfig, CiexSpec, IterationRecord};
use crate::classifier::{self, ClassifierSpec, FittedClassifier};
use crate::data::{self, load_csv, ColumnKind, Dataset, Schema, SplitSpec};
use crate::error::{Error, Result};
use crate::experiment::config::{
    ExperimentConfig, ExperimentKind, ExtrapolationMode, MethodConfig, SelectionCriteria,
};
use crate::isolation_forest::IsoForestSpec;
use crate::label_spreading::{Graph, SpreadSpec};
use crate::metrics::{auc, auk, auk_grid, kickout, KickoutInputs};
use crate::policy_sim::{make_seven_way, PolicySpec};
use crate::preprocess::{fit_pipeline, knn_impute, PipelineModel};
use crate::ri_classic::{self, ExtrapolateMode};
use crate::selection::{topsis_select, Direction, TopsisProblem};
use crate::state::TrainState;
use crate::synth::{synth_credit, SynthSpec};

/// One completed experiment cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultCell {
    pub method: String,
    pub condition: String,
    /// Replicate seed from the config seed list.
    pub seed: u64,
    /// Derived seed actually driving this cell's method randomness.
    pub cell_seed: u64,
    pub auc: f64,
    pub auk: f64,
    /// Kickout at each configured acceptance rate, keyed by the rate.
    pub kickout: BTreeMap<String, f64>,
    pub degenerate_auk_points: usize,
    /// TOPSIS-chosen iteration (CI-EX cells only).
    pub chosen_iteration: Option<usize>,
    /// Per-iteration validation records (CI-EX cells only).
    pub ciex_records: Option<Vec<IterationRecord>>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailedCell {
    pub method: String,
    pub condition: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub created_unix: u64,
    /// Cell id -> derived cell seed.
    pub seed_table: BTreeMap<String, u64>,
}

/// Derived seed: method-independent when `method` is None (drives data
/// generation and splits, shared across methods of a replicate), and
/// method-specific otherwise (drives the method's own randomness). Adding a
/// method to a config therefore never perturbs the others.
fn derive_seed(master: u64, method: Option<&str>, condition: &str, replicate: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0u8]);
    if let Some(m) = method {
        hasher.update(m.as_bytes());
    }
    hasher.update([0u8]);
    hasher.update(condition.as_bytes());
    hasher.update([0u8]);
    hasher.update(replicate.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write-then-rename so concurrent cells never interleave partial output.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// The six per-cell datasets, already preprocessed where noted.
struct SplitBundle {
    train_acc: Dataset,
    train_rej: Dataset,
    val_acc: Dataset,
    val_rej: Dataset,
    test_acc: Dataset,
    test_rej: Dataset,
}

/// Raw inputs loaded once per run and shared across cells.
enum SharedData {
    Synthetic,
    Policy { accepts: Dataset },
    Temporal { accepts: Dataset, rejects: Dataset },
}

fn load_shared(config: &ExperimentConfig) -> Result<SharedData> {
    match config.kind {
        ExperimentKind::Synthetic => Ok(SharedData::Synthetic),
        ExperimentKind::PolicySweep => {
            let p = config.policy.as_ref().expect("validated");
            let schema = Schema::from_file(&p.schema)?;
            let accepts = load_csv(&p.accepts_csv, &schema, Some(&p.label_column))?;
            Ok(SharedData::Policy { accepts })
        }
        ExperimentKind::Temporal => {
            let t = config.temporal.as_ref().expect("validated");
            let acc_schema = Schema::from_file(&t.accepts_schema)?;
            let rej_schema = Schema::from_file(&t.rejects_schema)?;
            let accepts = load_csv(&t.accepts_csv, &acc_schema, Some(&t.label_column))?;
            let rejects = load_csv(&t.rejects_csv, &rej_schema, None)?
                .with_id_offset(accepts.rows() as u64);
            Ok(SharedData::Temporal { accepts, rejects })
        }
    }
}

fn three_way(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<Vec<Dataset>> {
    let out = data::split(
        ds,
        &SplitSpec::Fractions {
            fractions: vec![fractions.0, fractions.1, fractions.2],
            seed,
        },
    )?;
    Ok(out.parts)
}

/// Bring a reject dataset onto the accepts schema: shared columns pass
/// through, missing numeric columns are kNN-imputed from the (mean-filled)
/// train-accepts reference, missing categorical columns are an error.
fn align_rejects(train_acc: &Dataset, rejects: &Dataset, k: usize) -> Result<Dataset> {
    let mut missing_cats = Vec::new();
    for meta in train_acc.columns() {
        if rejects.column_index(&meta.name).is_none() && meta.kind != ColumnKind::Numeric {
            missing_cats.push(meta.name.clone());
        }
    }
    if !missing_cats.is_empty() {
        return Err(Error::schema(format!(
            "rejects lack categorical columns {missing_cats:?}; only numeric gaps can be imputed"
        )));
    }

    let numeric_names: Vec<&str> = train_acc
        .columns()
        .iter()
        .filter(|c| c.kind == ColumnKind::Numeric)
        .map(|c| c.name.as_str())
        .collect();
    let shared_cat_names: Vec<&str> = train_acc
        .columns()
        .iter()
        .filter(|c| c.kind != ColumnKind::Numeric)
        .map(|c| c.name.as_str())
        .collect();

    // Complete reference: fill any missing numerics with the column mean.
    let reference_raw = train_acc.select_columns(&numeric_names)?;
    let reference = mean_fill(&reference_raw)?;

    let rej_numeric_present: Vec<&str> = numeric_names
        .iter()
        .copied()
        .filter(|n| rejects.column_index(n).is_some())
        .collect();
    let target = rejects.select_columns(&rej_numeric_present)?;
    let imputed = knn_impute(&reference, &target, k)?;

    // Reassemble in the accepts column order.
    let mut names_in_order: Vec<&str> = Vec::new();
    for meta in train_acc.columns() {
        names_in_order.push(meta.name.as_str());
    }
    let mut merged = imputed;
    for cat in &shared_cat_names {
        let col = rejects.select_columns(&[cat])?;
        merged = merge_columns(&merged, &col)?;
    }
    merged.select_columns(&names_in_order)
}

fn mean_fill(ds: &Dataset) -> Result<Dataset> {
    use crate::data::{is_missing, ColumnData, ColumnMeta};
    let mut metas: Vec<ColumnMeta> = Vec::new();
    let mut cols: Vec<ColumnData> = Vec::new();
    for (j, meta) in ds.columns().iter().enumerate() {
        let ColumnData::Numeric(values) = ds.column_data(j) else {
            return Err(Error::schema("mean_fill: numeric columns only"));
        };
        let present: Vec<f64> = values.iter().copied().filter(|v| !is_missing(*v)).collect();
        if present.is_empty() {
            return Err(Error::schema(format!(
                "column '{}' is entirely missing",
                meta.name
            )));
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        cols.push(ColumnData::Numeric(
            values
                .iter()
                .map(|&v| if is_missing(v) { mean } else { v })
                .collect(),
        ));
        metas.push(meta.clone());
    }
    let mut out = Dataset::new(metas, cols)?.with_row_ids(ds.row_ids().to_vec())?;
    if let Some(labels) = ds.labels() {
        out = out.with_labels(labels.to_vec())?;
    }
    Ok(out)
}

/// Column-wise join of two datasets over identical rows.
fn merge_columns(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    use crate::data::{ColumnData, ColumnMeta};
    if a.row_ids() != b.row_ids() {
        return Err(Error::invalid("merge_columns: row ids differ"));
    }
    let mut metas: Vec<ColumnMeta> = a.columns().to_vec();
    let mut cols: Vec<ColumnData> = (0..a.columns().len())
        .map(|j| a.column_data(j).clone())
        .collect();
    for (j, meta) in b.columns().iter().enumerate() {
        metas.push(meta.clone());
        cols.push(b.column_data(j).clone());
    }
    let mut out = Dataset::new(metas, cols)?.with_row_ids(a.row_ids().to_vec())?;
    if let Some(labels) = a.labels() {
        out = out.with_labels(labels.to_vec())?;
    }
    Ok(out)
}

/// Build the raw (pre-pipeline) bundle for one (condition, replicate).
fn build_bundle(
    config: &ExperimentConfig,
    shared: &SharedData,
    condition: &str,
    data_seed: u64,
) -> Result<SplitBundle> {
    match (&config.kind, shared) {
        (ExperimentKind::Synthetic, SharedData::Synthetic) => {
            let s = config.synthetic.as_ref().expect("validated");
            let mut spec = SynthSpec::new(s.n_accept, s.n_reject, s.bias, data_seed);
            if let Some(v) = s.linear_weight {
                spec.linear_weight = v;
            }
            if let Some(v) = s.cliff_start {
                spec.cliff_start = v;
            }
            if let Some(v) = s.cliff_weight {
                spec.cliff_weight = v;
            }
            if let Some(v) = s.intercept {
                spec.intercept = v;
            }
            if let Some(v) = s.shift_along {
                spec.shift_along = v;
            }
            if let Some(v) = s.shift_ortho {
                spec.shift_ortho = v;
            }
            if let Some(v) = s.shift_novel {
                spec.shift_novel = v;
            }
            if let Some(v) = s.novel_fraction {
                spec.novel_fraction = v;
            }
            let synth = synth_credit(&spec)?;
            let fractions = (s.train_fraction, s.val_fraction, s.test_fraction);
            let acc = three_way(&synth.accepted, fractions, data_seed ^ 0xA5A5)?;
            let rej = three_way(&synth.rejects, fractions, data_seed ^ 0x5A5A)?;
            let mut parts = acc.into_iter();
            let mut rej_parts = rej.into_iter();
            Ok(SplitBundle {
                train_acc: parts.next().unwrap(),
                val_acc: parts.next().unwrap(),
                test_acc: parts.next().unwrap(),
                train_rej: rej_parts.next().unwrap(),
                val_rej: rej_parts.next().unwrap(),
                test_rej: rej_parts.next().unwrap(),
            })
        }
        (ExperimentKind::PolicySweep, SharedData::Policy { accepts }) => {
            let p = config.policy.as_ref().expect("validated");
            let epsilon: f64 = condition
                .strip_prefix("eps")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad condition '{condition}'")))?;
            let spec = PolicySpec {
                epsilon,
                policy_fraction: p.policy_fraction,
                features: p.features.clone(),
                l1_strength: p.l1_strength,
                seed: data_seed,
            };
            let seven = make_seven_way(
                accepts,
                &spec,
                (p.train_fraction, p.val_fraction, p.test_fraction),
            )?;
            if seven.manifest.has_empty_subset() {
                return Err(Error::invalid(format!(
                    "epsilon {epsilon} emptied subsets {:?}; cell skipped",
                    seven.manifest.empty_subsets
                )));
            }
            Ok(SplitBundle {
                train_acc: seven.train_accepts,
                train_rej: seven.train_rejects,
                val_acc: seven.val_accepts,
                val_rej: seven.val_rejects,
                test_acc: seven.test_accepts,
                test_rej: seven.test_rejects,
            })
        }
        (ExperimentKind::Temporal, SharedData::Temporal { accepts, rejects }) => {
            let t = config.temporal.as_ref().expect("validated");
            let year: i32 = condition
                .strip_prefix('y')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad condition '{condition}'")))?;
            let in_year = |ds: &Dataset| -> Result<Dataset> {
                let dates = ds
                    .dates()
                    .ok_or_else(|| Error::schema("temporal data needs a date column"))?;
                let mask: Vec<bool> = dates.dates.iter().map(|d| d.year() == year).collect();
                ds.filter_rows(&mask)
            };
            let cut = chrono::NaiveDate::from_ymd_opt(year, 10, 1).unwrap();
            let split_by_cut = |ds: &Dataset| -> Result<(Dataset, Dataset)> {
                let out = data::split(ds, &SplitSpec::Temporal { cut })?;
                let mut parts = out.parts.into_iter();
                Ok((parts.next().unwrap(), parts.next().unwrap()))
            };
            let (acc_pool, test_acc) = split_by_cut(&in_year(accepts)?)?;
            let (rej_pool, test_rej) = split_by_cut(&in_year(rejects)?)?;
            for (name, part) in [
                ("train accepts pool", &acc_pool),
                ("test accepts", &test_acc),
                ("reject pool", &rej_pool),
                ("test rejects", &test_rej),
            ] {
                if part.rows() == 0 {
                    return Err(Error::invalid(format!(
                        "temporal split left {name} empty for year {year}"
                    )));
                }
            }
            let tv = data::split(
                &acc_pool,
                &SplitSpec::Fractions {
                    fractions: vec![1.0 - t.val_fraction, t.val_fraction],
                    seed: data_seed,
                },
            )?;
            let rj = data::split(
                &rej_pool,
                &SplitSpec::Fractions {
                    fractions: vec![1.0 - t.val_fraction, t.val_fraction],
                    seed: data_seed ^ 0x77,
                },
            )?;
            let train_acc = tv.parts[0].clone();
            let val_acc = tv.parts[1].clone();
            // Fill the structurally missing reject features from the
            // accepted training data.
            let train_rej = align_rejects(&train_acc, &rj.parts[0], t.knn_k)?;
            let val_rej = align_rejects(&train_acc, &rj.parts[1], t.knn_k)?;
            let test_rej = align_rejects(&train_acc, &test_rej, t.knn_k)?;
            Ok(SplitBundle {
                train_acc,
                train_rej,
                val_acc,
                val_rej,
                test_acc,
                test_rej,
            })
        }
        _ => Err(Error::Config("experiment kind/data mismatch".into())),
    }
}

struct PreparedCell {
    pipeline: PipelineModel,
    train_acc: Dataset,
    train_rej: Dataset,
    val_acc: Dataset,
    val_rej: Dataset,
    test_acc: Dataset,
    test_rej: Dataset,
    benchmark: FittedClassifier,
    bm_test_scores: Vec<f64>,
}

fn prepare(bundle: &SplitBundle, classifier_spec: &ClassifierSpec) -> Result<PreparedCell> {
    let pipeline = fit_pipeline(&bundle.train_acc)?;
    let train_acc = pipeline.transform(&bundle.train_acc)?;
    let train_rej = pipeline.transform(&bundle.train_rej)?;
    let val_acc = pipeline.transform(&bundle.val_acc)?;
    let val_rej = pipeline.transform(&bundle.val_rej)?;
    let test_acc = pipeline.transform(&bundle.test_acc)?;
    let test_rej = pipeline.transform(&bundle.test_rej)?;
    let benchmark = classifier::fit(
        classifier_spec,
        train_acc.to_matrix()?.view(),
        train_acc.labels().expect("labeled accepts"),
        train_acc.weights(),
    )?;
    let bm_test_scores =
        classifier::predict_proba(&benchmark, test_acc.to_matrix()?.view())?;
    Ok(PreparedCell {
        pipeline,
        train_acc,
        train_rej,
        val_acc,
        val_rej,
        test_acc,
        test_rej,
        benchmark,
        bm_test_scores,
    })
}

struct MethodRun {
    model: FittedClassifier,
    chosen_iteration: Option<usize>,
    ciex_records: Option<Vec<IterationRecord>>,
}

fn fit_on_state(state: &TrainState, spec: &ClassifierSpec) -> Result<FittedClassifier> {
    let pool = state.labeled();
    classifier::fit(
        spec,
        pool.to_matrix()?.view(),
        pool.labels().expect("labeled pool"),
        pool.weights(),
    )
}

fn run_method(
    method: &MethodConfig,
    config: &ExperimentConfig,
    cell: &PreparedCell,
    method_seed: u64,
    log_path: Option<&Path>,
) -> Result<MethodRun> {
    let cls = &config.classifier;
    let none = MethodRun {
        model: cell.benchmark.clone(),
        chosen_iteration: None,
        ciex_records: None,
    };
    match method {
        MethodConfig::Bm => Ok(none),
        MethodConfig::AUw => {
            let out = ri_classic::augment_upward(&cell.train_acc, &cell.train_rej, cls)?;
            Ok(MethodRun {
                model: classifier::fit(
                    cls,
                    out.train.to_matrix()?.view(),
                    out.train.labels().unwrap(),
                    out.train.weights(),
                )?,
                ..none
            })
        }
        MethodConfig::ADw => {
            let out = ri_classic::augment_downward(&cell.train_acc, &cell.train_rej, cls)?;
            Ok(MethodRun {
                model: classifier::fit(
                    cls,
                    out.train.to_matrix()?.view(),
                    out.train.labels().unwrap(),
                    out.train.weights(),
                )?,
                ..none
            })
        }
        MethodConfig::ASc { bands } => {
            let out =
                ri_classic::augment_soft_cutoff(&cell.train_acc, &cell.train_rej, *bands, cls)?;
            Ok(MethodRun {
                model: classifier::fit(
                    cls,
                    out.train.to_matrix()?.view(),
                    out.train.labels().unwrap(),
                    out.train.weights(),
                )?,
                ..none
            })
        }
        MethodConfig::AFu => {
            let state = ri_classic::augment_fuzzy(&cell.train_acc, &cell.train_rej, cls)?;
            Ok(MethodRun {
                model: fit_on_state(&state, cls)?,
                ..none
            })
        }
        MethodConfig::Extrapolation {
            mode,
            confident_fraction,
        } => {
            let mode = match mode {
                ExtrapolationMode::Full => ExtrapolateMode::Full,
                ExtrapolationMode::BadOnly => ExtrapolateMode::BadOnly,
                ExtrapolationMode::Confident => ExtrapolateMode::Confident(*confident_fraction),
            };
            let state = ri_classic::extrapolate(&cell.train_acc, &cell.train_rej, mode, cls)?;
            Ok(MethodRun {
                model: fit_on_state(&state, cls)?,
                ..none
            })
        }
        MethodConfig::Parceling { bands, prejudice } => {
            let out = ri_classic::parceling(
                &cell.train_acc,
                &cell.train_rej,
                *bands,
                *prejudice,
                method_seed,
                cls,
            )?;
            Ok(MethodRun {
                model: fit_on_state(&out.state, cls)?,
                ..none
            })
        }
        MethodConfig::Lsp { k, clamp_alpha } => {
            let spec = SpreadSpec {
                graph: Graph::Knn { k: *k },
                clamp_alpha: *clamp_alpha,
                ..Default::default()
            };
            let state = ri_classic::lsp_ri(&cell.train_acc, &cell.train_rej, &spec)?;
            Ok(MethodRun {
                model: fit_on_state(&state, cls)?,
                ..none
            })
        }
        MethodConfig::Ciex {
            eta,
            bad_fraction,
            contamination,
            max_iterations,
        } => {
            let spec = CiexSpec {
                eta: *eta,
                bad_fraction: *bad_fraction,
                contamination: *contamination,
                max_iterations: *max_iterations,
                classifier: cls.clone(),
                forest: IsoForestSpec::default(),
                seed: method_seed,
            };
            let initial = TrainState::new(cell.train_acc.clone(), cell.train_rej.clone())?;
            let run_cfg = CiexRunConfig {
                kick_alpha: config.selection.kick_alpha,
                auk_grid: auk_grid(),
            };
            let mut log_file = match log_path {
                Some(p) => Some(std::fs::File::create(p)?),
                None => None,
            };
            let run = ciex::run_ciex(
                initial,
                &spec,
                &cell.val_acc,
                &cell.val_rej,
                &run_cfg,
                log_file.as_mut().map(|f| f as &mut dyn Write),
            )?;

            // Pick the iteration balancing validation AUC against the RI
            // criterion, kickout weighted heavily.
            let ri_value = |r: &IterationRecord| match config.selection.criteria {
                SelectionCriteria::Kickout => r.val_kickout,
                SelectionCriteria::Auk => r.val_auk,
            };
            let alternatives: Vec<(u64, Vec<f64>)> = run
                .records
                .iter()
                .map(|r| (r.iteration as u64, vec![r.val_auc, ri_value(r)]))
                .collect();
            let chosen = if alternatives.len() < 2 {
                0
            } else {
                let problem = TopsisProblem {
                    alternatives,
                    weights: vec![config.selection.auc_weight, config.selection.ri_weight],
                    directions: vec![Direction::Benefit, Direction::Benefit],
                };
                match topsis_select(&problem) {
                    Ok(out) => out.winner as usize,
                    // Indistinguishable iterations: stay with the benchmark.
                    Err(Error::InvalidArgument(_)) => 0,
                    Err(e) => return Err(e),
                }
            };
            let model = fit_on_state(&run.states[chosen], cls)?;
            Ok(MethodRun {
                model,
                chosen_iteration: Some(chosen),
                ciex_records: Some(run.records),
            })
        }
    }
}

fn evaluate(
    method: &MethodConfig,
    config: &ExperimentConfig,
    cell: &PreparedCell,
    run: &MethodRun,
) -> Result<(f64, f64, BTreeMap<String, f64>, usize)> {
    let test_x = cell.test_acc.to_matrix()?;
    let labels = cell.test_acc.labels().expect("labeled test accepts");
    let scores = classifier::predict_proba(&run.model, test_x.view())?;
    let test_auc = auc(&scores, labels)?;

    // The benchmark compared against itself uses identical acceptance sets
    // (no reject crowd-out), which makes its kickout exactly zero.
    let is_bm = matches!(method, MethodConfig::Bm);
    let rej_scores = if is_bm {
        Vec::new()
    } else {
        classifier::predict_proba(&run.model, cell.test_rej.to_matrix()?.view())?
    };
    let empty_ids: &[u64] = &[];
    let inputs = KickoutInputs {
        accepted_ids: cell.test_acc.row_ids(),
        accepted_labels: labels,
        bm_scores_accepted: &cell.bm_test_scores,
        ri_scores_accepted: if is_bm { &cell.bm_test_scores } else { &scores },
        reject_ids: if is_bm { empty_ids } else { cell.test_rej.row_ids() },
        ri_scores_rejects: &rej_scores,
    };
    let auk_out = auk(&inputs, &auk_grid())?;
    let mut kick = BTreeMap::new();
    for &alpha in &config.alpha_grid {
        let value = match kickout(&inputs, alpha) {
            Ok(r) => r.value,
            Err(Error::InvalidArgument(msg)) if msg.contains("accepts nobody") => 0.0,
            Err(e) => return Err(e),
        };
        kick.insert(format!("{alpha:.2}"), value);
    }
    Ok((test_auc, auk_out.value, kick, auk_out.degenerate_points))
}

/// Run every (method, condition, seed) cell of the experiment, up to `jobs`
/// cells in parallel. Returns the output directory. Fails only when the
/// config is invalid, inputs are unreadable, or every cell failed.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<PathBuf> {
    config.validate()?;
    let out_dir = config.output_dir.clone();
    let cells_dir = out_dir.join("cells");
    std::fs::create_dir_all(&cells_dir)?;

    let shared = load_shared(config)?;
    let conditions = config.conditions();

    struct CellTask {
        method: MethodConfig,
        condition: String,
        seed: u64,
        replicate: u64,
        cell_id: String,
        cell_seed: u64,
    }
    let mut tasks = Vec::new();
    let mut seed_table = BTreeMap::new();
    for method in &config.methods {
        for condition in &conditions {
            for (replicate, &seed) in config.seeds.iter().enumerate() {
                let cell_id = format!("{}_{}_s{}", method.id(), condition, seed);
                let cell_seed =
                    derive_seed(seed, Some(&method.id()), condition, replicate as u64);
                seed_table.insert(cell_id.clone(), cell_seed);
                tasks.push(CellTask {
                    method: method.clone(),
                    condition: condition.clone(),
                    seed,
                    replicate: replicate as u64,
                    cell_id,
                    cell_seed,
                });
            }
        }
    }

    let config_text = toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
    let manifest = RunManifest {
        config_hash: hex_digest(&Sha256::digest(config_text.as_bytes())),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed_table,
    };
    write_atomic(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;

    let run_task = |task: &CellTask| -> Result<()> {
        let started = Instant::now();
        let data_seed = derive_seed(task.seed, None, &task.condition, task.replicate);
        let cell_path = cells_dir.join(format!("{}.json", task.cell_id));
        let outcome = (|| -> Result<ResultCell> {
            let bundle = build_bundle(config, &shared, &task.condition, data_seed)?;
            let prepared = prepare(&bundle, &config.classifier)?;
            let log_path = matches!(task.method, MethodConfig::Ciex { .. })
                .then(|| cells_dir.join(format!("{}.iterations.jsonl", task.cell_id)));
            let run = run_method(
                &task.method,
                config,
                &prepared,
                task.cell_seed,
                log_path.as_deref(),
            )?;
            let (cell_auc, cell_auk, kick, degenerate) =
                evaluate(&task.method, config, &prepared, &run)?;
            // Leakage guard: the benchmark saw ground-truth accepts only.
            debug_assert!(prepared
                .train_acc
                .provenance()
                .map_or(true, |p| p
                    .iter()
                    .all(|&q| q == crate::data::Provenance::GroundTruth)));
            let _ = &prepared.pipeline;
            Ok(ResultCell {
                method: task.method.id(),
                condition: task.condition.clone(),
                seed: task.seed,
                cell_seed: task.cell_seed,
                auc: cell_auc,
                auk: cell_auk,
                kickout: kick,
                degenerate_auk_points: degenerate,
                chosen_iteration: run.chosen_iteration,
                ciex_records: run.ciex_records,
                wall_ms: started.elapsed().as_millis() as u64,
            })
        })();
        match outcome {
            Ok(cell) => write_atomic(&cell_path, serde_json::to_string_pretty(&cell)?.as_bytes()),
            Err(e) => {
                let failed = FailedCell {
                    method: task.method.id(),
                    condition: task.condition.clone(),
                    seed: task.seed,
                    error: e.to_string(),
                };
                write_atomic(
                    &cells_dir.join(format!("{}.failed.json", task.cell_id)),
                    serde_json::to_string_pretty(&failed)?.as_bytes(),
                )
            }
        }
    };

    let results: Vec<Result<()>> = if jobs <= 1 {
        tasks.iter().map(run_task).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(run_task).collect())
    };
    for r in results {
        r?;
    }

    let succeeded = std::fs::read_dir(&cells_dir)?
        .filter_map(|e| e.ok())
        .filter(|e| {
            let name = e.file_name().to_string_lossy().to_string();
            name.ends_with(".json") && !name.ends_with(".failed.json")
        })
        .count();
    if succeeded == 0 {
        return Err(Error::Numeric("run_experiment: every cell failed".into()));
    }
    Ok(out_dir)
}
