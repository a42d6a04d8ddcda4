//! Comparison systems sharing the federated infrastructure: centralised
//! training, FedAvg with OR-union rules, connector ablation and distributed
//! decision trees.

mod centralised;
mod ddt;

pub use centralised::{run_centralised, CentralisedResult};
pub use ddt::{fit_tree, path_rules, run_ddt, DdtResult, DecisionTree, Node, DEFAULT_MAX_DEPTH};

use crate::error::Result;
use crate::federation::{run_federation, FederationConfig, FederationResult, Prepared, Selection, Weighting};
use crate::logic::Connector;

/// The federated loop with OR at both levels, every surviving candidate
/// kept and uniform averaging weights.
pub fn fedavg_logic_config(base: &FederationConfig) -> FederationConfig {
    FederationConfig {
        forced_connector: Some(Connector::Or),
        selection: Selection::Union,
        weighting: Weighting::Uniform,
        ..base.clone()
    }
}

pub fn run_fedavg_logic(prepared: &Prepared, base: &FederationConfig) -> Result<FederationResult> {
    run_federation(prepared, &fedavg_logic_config(base))
}

/// The full loop with the connector fixed at both levels.
pub fn ablated_config(base: &FederationConfig, connector: Connector) -> FederationConfig {
    FederationConfig {
        forced_connector: Some(connector),
        ..base.clone()
    }
}

pub fn run_ablated(prepared: &Prepared, base: &FederationConfig, connector: Connector) -> Result<FederationResult> {
    run_federation(prepared, &ablated_config(base, connector))
}
