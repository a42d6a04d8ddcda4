//! Boolean concept datasets: the shared container, synthetic generators, CSV
//! ingestion, federated partitioning and label-noise injection.

mod csv_io;
mod noise;
mod partition;
mod synthetic;

pub use csv_io::{load_csv, write_csv, CsvOptions};
pub use noise::{inject_noise, NoiseSpec};
pub use partition::{partition, ClientData, Partition, PartitionPlan};
pub use synthetic::{
    default_conjunctive_spec, gen_conjunctive, gen_parity, ClassSpec, ConjunctiveSpec,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `S × n` boolean concept matrix with one class label per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptDataset {
    pub concepts: Vec<Vec<bool>>,
    pub labels: Vec<usize>,
    pub concept_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl ConceptDataset {
    pub fn new(
        concepts: Vec<Vec<bool>>,
        labels: Vec<usize>,
        concept_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self {
            concepts,
            labels,
            concept_names,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.concepts.len() != self.labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} concept rows but {} labels",
                self.concepts.len(),
                self.labels.len()
            )));
        }
        let n = self.concept_names.len();
        if let Some(i) = self.concepts.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} concepts, expected {n}",
                self.concepts[i].len()
            )));
        }
        let c = self.class_names.len();
        if let Some(i) = self.labels.iter().position(|&l| l >= c) {
            return Err(Error::InvalidInput(format!(
                "row {i} has label {} but only {c} classes exist",
                self.labels[i]
            )));
        }
        Ok(())
    }

    /// Same vocabularies, no rows.
    pub fn empty_like(&self) -> Self {
        Self {
            concepts: Vec::new(),
            labels: Vec::new(),
            concept_names: self.concept_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_concepts(&self) -> usize {
        self.concept_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            concepts: indices.iter().map(|&i| self.concepts[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            concept_names: self.concept_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Row-wise concatenation; vocabularies must match.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a ConceptDataset>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidInput("nothing to concatenate".into()))?;
        let mut out = first.clone();
        for part in iter {
            if part.concept_names != out.concept_names || part.class_names != out.class_names {
                return Err(Error::InvalidInput(
                    "cannot concatenate datasets with different vocabularies".into(),
                ));
            }
            out.concepts.extend(part.concepts.iter().cloned());
            out.labels.extend_from_slice(&part.labels);
        }
        Ok(out)
    }

    /// Copy with labels replaced, e.g. by model predictions.
    pub fn relabeled(&self, labels: Vec<usize>) -> Result<Self> {
        let ds = Self {
            concepts: self.concepts.clone(),
            labels,
            concept_names: self.concept_names.clone(),
            class_names: self.class_names.clone(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}
