//! The evolving training state shared by the reject-inference methods:
//! a labeled training pool and an unlabeled reject pool with disjoint row
//! ids. Data-inflating methods move rows from the reject pool into the
//! labeled pool with `Provenance::Inferred`.

use std::collections::BTreeSet;

use crate::data::{Dataset, Provenance, RowId};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct TrainState {
    labeled: Dataset,
    rejects: Dataset,
    iteration: usize,
}

impl TrainState {
    /// Build the initial state from a labeled pool and an unlabeled reject
    /// pool. Ground-truth provenance is attached to the labeled rows when
    /// absent.
    pub fn new(labeled: Dataset, rejects: Dataset) -> Result<Self> {
        if labeled.labels().is_none() {
            return Err(Error::invalid("train state: labeled pool has no labels"));
        }
        if rejects.labels().is_some() {
            return Err(Error::invalid(
                "train state: reject pool must not carry labels",
            ));
        }
        let l_ids: BTreeSet<RowId> = labeled.row_ids().iter().copied().collect();
        if rejects.row_ids().iter().any(|id| l_ids.contains(id)) {
            return Err(Error::invalid(
                "train state: labeled and reject pools share row ids",
            ));
        }
        let labeled = if labeled.provenance().is_none() {
            let n = labeled.rows();
            labeled.with_provenance(vec![Provenance::GroundTruth; n])?
        } else {
            labeled
        };
        Ok(TrainState {
            labeled,
            rejects,
            iteration: 0,
        })
    }

    pub fn labeled(&self) -> &Dataset {
        &self.labeled
    }

    pub fn rejects(&self) -> &Dataset {
        &self.rejects
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Total rows across both pools; constant across iterations.
    pub fn total_rows(&self) -> usize {
        self.labeled.rows() + self.rejects.rows()
    }

    /// Move `selected` rows (a subset of the reject pool, now labeled with
    /// provenance) into the labeled pool and drop them from the reject pool.
    pub fn absorb(&self, selected: &Dataset) -> Result<TrainState> {
        let labeled = self.labeled.concat(selected)?;
        let ids: BTreeSet<RowId> = selected.row_ids().iter().copied().collect();
        let rejects = self.rejects.remove_by_ids(&ids);
        Ok(TrainState {
            labeled,
            rejects,
            iteration: self.iteration + 1,
        })
    }

    /// Same pools with a replaced reject pool; used while a single
    /// iteration's two retrievals share the pre-iteration labeled pool.
    pub fn with_rejects(&self, rejects: Dataset) -> TrainState {
        TrainState {
            labeled: self.labeled.clone(),
            rejects,
            iteration: self.iteration,
        }
    }

    /// Number of labeled rows whose provenance is `Inferred`.
    pub fn inferred_count(&self) -> usize {
        self.labeled
            .provenance()
            .map(|p| p.iter().filter(|&&q| q == Provenance::Inferred).count())
            .unwrap_or(0)
    }
}
