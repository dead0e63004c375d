//! Reject inference for credit scoring.
//!
//! This crate implements the confident-inlier extrapolation framework
//! (CI-EX) together with the classical reject-inference baselines
//! (augmentation reweighting, extrapolation, parceling, label spreading),
//! the RI-specific evaluation metrics (kickout and area under the kickout),
//! TOPSIS model selection, and two experiment protocols: a simulated
//! accept/reject policy sweep and temporal train/test splits.

pub mod ciex;
pub mod classifier;
pub mod data;
pub mod error;
pub mod experiment;
pub mod isolation_forest;
pub mod label_spreading;
pub mod metrics;
pub mod policy_sim;
pub mod preprocess;
pub mod ri_classic;
pub mod selection;
pub mod state;
pub mod synth;

pub use data::{Dataset, RowId};
pub use error::{Error, Result};
pub use state::TrainState;
