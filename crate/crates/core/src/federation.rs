//! The federated training loop and the data preparation shared by every
//! method, so paired runs see identical partitions and noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::client::{ClientId, ClientState, ClientUpdate, LocalOptions, DEFAULT_CLIENT_EPOCHS};
use crate::datasets::{inject_noise, partition, ConceptDataset, NoiseSpec, Partition, PartitionPlan};
use crate::error::{Error, Result};
use crate::logic::{ClassRule, Connector, ConnectorStats, DEFAULT_D_THRESHOLD, DEFAULT_E_THRESHOLD};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{EntropyClassifier, ModelConfig, ModelParameters};
use crate::server::{
    aggregate_models, beam_aggregate, check_stop, compute_weights, filter_candidates, selection_counts,
    union_aggregate, vote_connector, ClientWeights, GlobalRuleSet, DEFAULT_BEAM_WIDTH, DEFAULT_THETA,
};

/// Partitioned, noise-injected data plus the noisy-client roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prepared {
    pub partition: Partition,
    pub noisy_clients: Vec<ClientId>,
}

pub fn prepare(data: &ConceptDataset, plan: &PartitionPlan, noise: &NoiseSpec) -> Result<Prepared> {
    let mut partition = partition(data, plan)?;
    let noisy_clients = inject_noise(&mut partition.clients, noise)?;
    Ok(Prepared { partition, noisy_clients })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Beam search over candidate subsets.
    Beam,
    /// Every surviving candidate, no selection.
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Weights from how many global class rules use each client's clauses.
    RuleContribution,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    pub rounds: usize,
    /// Stop once mean server-validation rule accuracy reaches this.
    pub target: f64,
    pub client_epochs: usize,
    pub d_threshold: f64,
    pub e_threshold: f64,
    pub theta: f64,
    /// When false every client's rules reach the server.
    pub apply_theta: bool,
    pub beam_width: usize,
    /// Overrides both the client connector choice and the server vote.
    pub forced_connector: Option<Connector>,
    pub selection: Selection,
    pub weighting: Weighting,
    pub model: ModelConfig,
    /// Worker threads for client rounds; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            target: 1.0,
            client_epochs: DEFAULT_CLIENT_EPOCHS,
            d_threshold: DEFAULT_D_THRESHOLD,
            e_threshold: DEFAULT_E_THRESHOLD,
            theta: DEFAULT_THETA,
            apply_theta: true,
            beam_width: DEFAULT_BEAM_WIDTH,
            forced_connector: None,
            selection: Selection::Beam,
            weighting: Weighting::RuleContribution,
            model: ModelConfig::default(),
            workers: None,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.beam_width == 0 {
            return bad("beam_width must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.d_threshold) || !(0.0..=1.0).contains(&self.e_threshold) {
            return bad("connector thresholds must lie in [0, 1]");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        self.model.validate()
    }

    fn local_options(&self) -> LocalOptions {
        LocalOptions {
            epochs: self.client_epochs,
            d_threshold: self.d_threshold,
            e_threshold: self.e_threshold,
            forced_connector: self.forced_connector,
        }
    }
}

/// What one client reported in a round, without its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSummary {
    pub client_id: ClientId,
    pub class_rules: Vec<ClassRule>,
    pub connector_vote: Connector,
    pub connector_stats: ConnectorStats,
    pub local_model_accuracy: f64,
    /// Whether the client's rules passed the accuracy filter.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round: usize,
    pub connector: Connector,
    pub rule_set: GlobalRuleSet,
    pub selection_counts: Vec<usize>,
    pub weights: ClientWeights,
    pub beam_evaluations: usize,
    pub clients: Vec<ClientSummary>,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationResult {
    pub rounds: Vec<RoundRecord>,
    pub final_parameters: ModelParameters,
    pub noisy_clients: Vec<ClientId>,
}

impl FederationResult {
    pub fn last(&self) -> &RoundRecord {
        self.rounds.last().expect("at least one round")
    }

    /// Mean weight over noisy clients and over clean clients, each averaged
    /// across rounds. `None` where a group is empty.
    pub fn mean_group_weights(&self) -> (Option<f64>, Option<f64>) {
        let mut noisy = Vec::new();
        let mut clean = Vec::new();
        for r in &self.rounds {
            for (k, &w) in r.weights.0.iter().enumerate() {
                if self.noisy_clients.contains(&k) {
                    noisy.push(w);
                } else {
                    clean.push(w);
                }
            }
        }
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        (mean(&noisy), mean(&clean))
    }
}

fn run_clients(
    clients: &mut [ClientState],
    global: &ModelParameters,
    opts: &LocalOptions,
    workers: Option<usize>,
) -> Result<Vec<ClientUpdate>> {
    let work = |clients: &mut [ClientState]| -> Result<Vec<ClientUpdate>> {
        clients.par_iter_mut().map(|c| c.local_round(global, opts)).collect()
    };
    match workers {
        None => work(clients),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| work(clients)),
    }
}

/// Run the federated loop until the round budget or the validation target.
pub fn run_federation(prepared: &Prepared, config: &FederationConfig) -> Result<FederationResult> {
    config.validate()?;
    let part = &prepared.partition;
    let k = part.clients.len();
    if k == 0 {
        return Err(Error::InvalidInput("federation needs at least one client".into()));
    }
    let n_classes = part.server_validation.n_classes();
    let n_concepts = part.server_validation.n_concepts();
    let global_model = EntropyClassifier::new(n_classes, n_concepts, config.model.clone())?;
    let mut global = global_model.params.clone();
    let mut clients: Vec<ClientState> = part
        .clients
        .iter()
        .enumerate()
        .map(|(id, data)| ClientState::new(id, global_model.clone(), data.clone()))
        .collect();
    let opts = config.local_options();
    let theta = if config.apply_theta { config.theta } else { 0.0 };

    let mut rounds = Vec::new();
    for round in 1..=config.rounds {
        let updates = run_clients(&mut clients, &global, &opts, config.workers)?;
        let connector = match config.forced_connector {
            Some(c) => c,
            None => vote_connector(&updates)?,
        };
        let pools = filter_candidates(&updates, theta);
        let (rule_set, beam_evaluations) = match config.selection {
            Selection::Beam => beam_aggregate(&pools, connector, &part.server_validation, config.beam_width)?,
            Selection::Union => (union_aggregate(&pools, connector, &part.server_validation)?, 0),
        };
        let counts = selection_counts(&rule_set, k);
        let weights = match config.weighting {
            Weighting::RuleContribution => compute_weights(&rule_set, k)?,
            Weighting::Uniform => ClientWeights::uniform(k),
        };
        global = aggregate_models(&updates, &weights)?;

        let model = EntropyClassifier::from_parameters(global.clone(), config.model.clone())?;
        let rules = rule_set.class_rules();
        let validation = evaluate(&rules, &model, &part.server_validation)?;
        let test = evaluate(&rules, &model, &part.server_test)?;
        let stop = check_stop(round, validation.rule_accuracy, config.target, config.rounds);
        rounds.push(RoundRecord {
            round,
            connector,
            selection_counts: counts,
            weights,
            beam_evaluations,
            clients: updates
                .into_iter()
                .map(|u| ClientSummary {
                    accepted: u.local_model_accuracy >= theta,
                    client_id: u.client_id,
                    class_rules: u.class_rules,
                    connector_vote: u.connector_vote,
                    connector_stats: u.connector_stats,
                    local_model_accuracy: u.local_model_accuracy,
                })
                .collect(),
            rule_set,
            validation,
            test,
        });
        if stop {
            break;
        }
    }
    Ok(FederationResult {
        rounds,
        final_parameters: global,
        noisy_clients: prepared.noisy_clients.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_parity;

    fn prepared(samples: usize, k: usize, seed: u64) -> Prepared {
        let data = gen_parity(samples, seed);
        prepare(&data, &PartitionPlan::new(k, seed), &NoiseSpec::none()).unwrap()
    }

    #[test]
    fn parity_federation_learns() {
        let p = prepared(600, 4, 3);
        let cfg = FederationConfig {
            rounds: 3,
            ..FederationConfig::default()
        };
        let res = run_federation(&p, &cfg).unwrap();
        let last = res.last();
        assert_eq!(last.connector, Connector::Or);
        assert!(last.test.model_accuracy >= 0.99, "{:?}", last.test);
        assert_eq!(last.weights.0.len(), 4);
        assert!((last.weights.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = prepared(400, 3, 5);
        let run = |workers| {
            let cfg = FederationConfig {
                rounds: 2,
                workers,
                ..FederationConfig::default()
            };
            run_federation(&p, &cfg).unwrap()
        };
        let a = run(Some(1));
        assert_eq!(a, run(Some(3)));
        assert_eq!(a, run(None));
    }

    #[test]
    fn uniform_union_run_keeps_uniform_weights() {
        let p = prepared(400, 4, 7);
        let cfg = FederationConfig {
            rounds: 2,
            forced_connector: Some(Connector::Or),
            selection: Selection::Union,
            weighting: Weighting::Uniform,
            ..FederationConfig::default()
        };
        let res = run_federation(&p, &cfg).unwrap();
        for r in &res.rounds {
            assert_eq!(r.weights, ClientWeights::uniform(4));
            assert_eq!(r.beam_evaluations, 0);
        }
    }

    #[test]
    fn target_stops_early() {
        let p = prepared(400, 3, 9);
        let cfg = FederationConfig {
            rounds: 5,
            target: 0.0,
            ..FederationConfig::default()
        };
        assert_eq!(run_federation(&p, &cfg).unwrap().rounds.len(), 1);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let p = prepared(200, 2, 1);
        let cfg = FederationConfig {
            beam_width: 0,
            ..FederationConfig::default()
        };
        assert!(run_federation(&p, &cfg).is_err());
    }
}
