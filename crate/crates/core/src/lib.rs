//! Federated extraction of propositional class rules from concept-based
//! classifiers.
//!
//! Each client trains an entropy-regularised linear classifier over binary
//! concepts, reads per-class truth tables off it, picks an AND/OR connector
//! from rule co-occurrence statistics and fuses its sample rules into one
//! rule per class. The server votes on the connector, beam-searches the
//! union of client rules and weights model averaging by how often each
//! client's rules were selected.

pub mod baselines;
pub mod client;
pub mod datasets;
pub mod error;
pub mod federation;
pub mod logic;
pub mod metrics;
pub mod model;
pub mod server;

pub use client::{ClientId, ClientState, ClientUpdate, LocalOptions};
pub use datasets::ConceptDataset;
pub use error::{Error, Result};
pub use logic::{ClassRule, ConjunctiveRule, Connector, Literal, Polarity};
pub use model::{Classifier, EntropyClassifier, ModelConfig, ModelParameters};
pub use server::{Candidate, ClientWeights, GlobalRule, GlobalRuleSet};
