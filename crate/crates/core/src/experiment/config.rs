//! Declarative experiment configuration, read from a TOML file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Synthetic,
    PolicySweep,
    Temporal,
}

/// Which validation metric, besides AUC, drives the TOPSIS iteration choice
/// for CI-EX.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriteria {
    Kickout,
    Auk,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default = "default_selection_criteria")]
    pub criteria: SelectionCriteria,
    /// Acceptance rate for per-iteration validation kickout.
    #[serde(default = "default_kick_alpha")]
    pub kick_alpha: f64,
    #[serde(default = "default_auc_weight")]
    pub auc_weight: f64,
    /// Weight of the RI criterion (kickout or AUK).
    #[serde(default = "default_ri_weight")]
    pub ri_weight: f64,
}

fn default_selection_criteria() -> SelectionCriteria {
    SelectionCriteria::Auk
}
fn default_kick_alpha() -> f64 {
    0.5
}
fn default_auc_weight() -> f64 {
    1.0
}
fn default_ri_weight() -> f64 {
    10.0
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            criteria: default_selection_criteria(),
            kick_alpha: default_kick_alpha(),
            auc_weight: default_auc_weight(),
            ri_weight: default_ri_weight(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_accept: usize,
    pub n_reject: usize,
    pub bias: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Generator overrides; defaults come from the generator itself.
    pub linear_weight: Option<f64>,
    pub cliff_start: Option<f64>,
    pub cliff_weight: Option<f64>,
    pub intercept: Option<f64>,
    pub shift_along: Option<f64>,
    pub shift_ortho: Option<f64>,
    pub shift_novel: Option<f64>,
    pub novel_fraction: Option<f64>,
}

fn default_train_fraction() -> f64 {
    0.6
}
fn default_val_fraction() -> f64 {
    0.2
}
fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub accepts_csv: PathBuf,
    pub schema: PathBuf,
    pub label_column: String,
    pub epsilons: Vec<f64>,
    pub features: Vec<String>,
    #[serde(default = "default_policy_fraction")]
    pub policy_fraction: f64,
    #[serde(default = "default_l1_strength")]
    pub l1_strength: f64,
    #[serde(default = "default_policy_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_policy_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_policy_test_fraction")]
    pub test_fraction: f64,
}

fn default_policy_fraction() -> f64 {
    0.20
}
fn default_l1_strength() -> f64 {
    1.0
}
fn default_policy_train_fraction() -> f64 {
    0.60
}
fn default_policy_val_fraction() -> f64 {
    0.19
}
fn default_policy_test_fraction() -> f64 {
    0.21
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalConfig {
    pub accepts_csv: PathBuf,
    pub accepts_schema: PathBuf,
    pub label_column: String,
    pub rejects_csv: PathBuf,
    pub rejects_schema: PathBuf,
    pub years: Vec<i32>,
    /// Fraction of the January-September pool held out for validation.
    #[serde(default = "default_temporal_val_fraction")]
    pub val_fraction: f64,
    /// Neighbors for imputing reject features missing from their file.
    #[serde(default = "default_knn_k")]
    pub knn_k: usize,
}

fn default_temporal_val_fraction() -> f64 {
    0.30
}
fn default_knn_k() -> usize {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationMode {
    Full,
    BadOnly,
    Confident,
}

/// One reject-inference method with its hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodConfig {
    Bm,
    AUw,
    ADw,
    ASc {
        #[serde(default = "default_bands")]
        bands: usize,
    },
    AFu,
    Extrapolation {
        mode: ExtrapolationMode,
        #[serde(default = "default_confident_fraction")]
        confident_fraction: f64,
    },
    Parceling {
        #[serde(default = "default_bands")]
        bands: usize,
        #[serde(default = "default_prejudice")]
        prejudice: f64,
    },
    Lsp {
        #[serde(default = "default_lsp_k")]
        k: usize,
        #[serde(default = "default_clamp_alpha")]
        clamp_alpha: f64,
    },
    Ciex {
        #[serde(default = "default_eta")]
        eta: usize,
        #[serde(default = "default_bad_fraction")]
        bad_fraction: f64,
        #[serde(default = "default_contamination")]
        contamination: f64,
        #[serde(default = "default_max_iterations")]
        max_iterations: usize,
    },
}

fn default_bands() -> usize {
    10
}
fn default_confident_fraction() -> f64 {
    0.5
}
fn default_prejudice() -> f64 {
    2.0
}
fn default_lsp_k() -> usize {
    7
}
fn default_clamp_alpha() -> f64 {
    0.2
}
fn default_eta() -> usize {
    1000
}
fn default_bad_fraction() -> f64 {
    0.07
}
fn default_contamination() -> f64 {
    0.12
}
fn default_max_iterations() -> usize {
    25
}

impl MethodConfig {
    /// Stable identifier used in file names and report matrices.
    pub fn id(&self) -> String {
        match self {
            MethodConfig::Bm => "bm".into(),
            MethodConfig::AUw => "a-uw".into(),
            MethodConfig::ADw => "a-dw".into(),
            MethodConfig::ASc { .. } => "a-sc".into(),
            MethodConfig::AFu => "a-fu".into(),
            MethodConfig::Extrapolation { mode, .. } => match mode {
                ExtrapolationMode::Full => "ext-full".into(),
                ExtrapolationMode::BadOnly => "ext-bad".into(),
                ExtrapolationMode::Confident => "ext-conf".into(),
            },
            MethodConfig::Parceling { .. } => "par".into(),
            MethodConfig::Lsp { .. } => "lsp".into(),
            MethodConfig::Ciex { .. } => "ciex".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Acceptance rates at which per-cell kickout values are recorded.
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default)]
    pub selection: SelectionConfig,
    /// Final and benchmark classifier settings.
    #[serde(default)]
    pub classifier: ClassifierSpec,
    pub synthetic: Option<SyntheticConfig>,
    pub policy: Option<PolicyConfig>,
    pub temporal: Option<TemporalConfig>,
    pub methods: Vec<MethodConfig>,
}

fn default_alpha_grid() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75, 1.0]
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(config)
    }

    /// Structural validation; file existence is checked where relevant so a
    /// bad config fails before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be nonempty".into()));
        }
        let mut ids = BTreeSet::new();
        for m in &self.methods {
            if !ids.insert(m.id()) {
                return Err(Error::Config(format!("duplicate method '{}'", m.id())));
            }
        }
        if self
            .alpha_grid
            .iter()
            .any(|&a| !(a > 0.0 && a <= 1.0))
        {
            return Err(Error::Config("alpha_grid values must be in (0, 1]".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::Config("alpha_grid must be nonempty".into()));
        }
        if !(self.selection.auc_weight > 0.0 && self.selection.ri_weight > 0.0) {
            return Err(Error::Config("selection weights must be positive".into()));
        }
        if !(self.selection.kick_alpha > 0.0 && self.selection.kick_alpha <= 1.0) {
            return Err(Error::Config("selection.kick_alpha must be in (0, 1]".into()));
        }
        match self.kind {
            ExperimentKind::Synthetic => {
                let s = self
                    .synthetic
                    .as_ref()
                    .ok_or_else(|| Error::Config("kind synthetic needs [synthetic]".into()))?;
                if s.n_accept == 0 || s.n_reject == 0 {
                    return Err(Error::Config("synthetic counts must be positive".into()));
                }
                if !(0.0..=1.0).contains(&s.bias) {
                    return Err(Error::Config("synthetic.bias must be in [0, 1]".into()));
                }
                let total = s.train_fraction + s.val_fraction + s.test_fraction;
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config("synthetic fractions must sum to 1".into()));
                }
            }
            ExperimentKind::PolicySweep => {
                let p = self
                    .policy
                    .as_ref()
                    .ok_or_else(|| Error::Config("kind policy_sweep needs [policy]".into()))?;
                if p.epsilons.is_empty() {
                    return Err(Error::Config("policy.epsilons must be nonempty".into()));
                }
                if p.features.is_empty() {
                    return Err(Error::Config("policy.features must be nonempty".into()));
                }
                for path in [&p.accepts_csv, &p.schema] {
                    if !path.exists() {
                        return Err(Error::Config(format!("missing file {}", path.display())));
                    }
                }
                let total = p.train_fraction + p.val_fraction + p.test_fraction;
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config("policy fractions must sum to 1".into()));
                }
            }
            ExperimentKind::Temporal => {
                let t = self
                    .temporal
                    .as_ref()
                    .ok_or_else(|| Error::Config("kind temporal needs [temporal]".into()))?;
                if t.years.is_empty() {
                    return Err(Error::Config("temporal.years must be nonempty".into()));
                }
                if !(t.val_fraction > 0.0 && t.val_fraction < 1.0) {
                    return Err(Error::Config("temporal.val_fraction must be in (0, 1)".into()));
                }
                if t.knn_k == 0 {
                    return Err(Error::Config("temporal.knn_k must be >= 1".into()));
                }
                for path in [
                    &t.accepts_csv,
                    &t.accepts_schema,
                    &t.rejects_csv,
                    &t.rejects_schema,
                ] {
                    if !path.exists() {
                        return Err(Error::Config(format!("missing file {}", path.display())));
                    }
                }
            }
        }
        Ok(())
    }

    /// Condition labels for this experiment kind.
    pub fn conditions(&self) -> Vec<String> {
        match self.kind {
            ExperimentKind::Synthetic => vec!["synthetic".into()],
            ExperimentKind::PolicySweep => self
                .policy
                .as_ref()
                .map(|p| p.epsilons.iter().map(|e| format!("eps{e:.2}")).collect())
                .unwrap_or_default(),
            ExperimentKind::Temporal => self
                .temporal
                .as_ref()
                .map(|t| t.years.iter().map(|y| format!("y{y}")).collect())
                .unwrap_or_default(),
        }
    }
}
