//! Executes a configured method and shapes its outcome into a results
//! document.

use lrxfl_core::baselines::{
    ablated_config, fedavg_logic_config, run_centralised, run_ddt, CentralisedResult, DdtResult,
};
use lrxfl_core::datasets::{gen_conjunctive, gen_parity, load_csv, CsvOptions, NoiseSpec, PartitionPlan};
use lrxfl_core::federation::{prepare, run_federation, FederationResult, Prepared};
use lrxfl_core::logic::{render_class_rule, render_conjunction, ClassRule, Connector};
use lrxfl_core::metrics::MetricsReport;
use lrxfl_core::ConceptDataset;
use serde::{Deserialize, Serialize};

use crate::config::{Config, DatasetName, Method};
use crate::error::{CliError, Result};

pub fn load_dataset(config: &Config) -> Result<ConceptDataset> {
    let d = &config.dataset;
    Ok(match d.name {
        DatasetName::Parity => gen_parity(d.samples, d.seed),
        DatasetName::Conjunctive => gen_conjunctive(d.samples, &d.conjunctive_spec(), d.flip_noise, d.seed)?,
        DatasetName::Csv => {
            let path = d
                .csv_path
                .as_ref()
                .ok_or_else(|| CliError::Schema("dataset.csv_path: required".into()))?;
            let opts = CsvOptions {
                label_column: d.label_column.clone(),
                thresholds: d.thresholds.clone(),
                default_threshold: d.default_threshold,
                class_names: d.class_names.clone(),
            };
            load_csv(path, &opts)?
        }
    })
}

/// Dataset plus the partition and noise shared by every method.
pub fn prepare_data(config: &Config) -> Result<(ConceptDataset, Prepared)> {
    let data = load_dataset(config)?;
    let plan = PartitionPlan::new(config.federation.clients, config.dataset.seed);
    let noise = NoiseSpec {
        client_fraction: config.noise.t,
        data_fraction: config.noise.s,
        seed: config.noise.seed,
    };
    let prepared = prepare(&data, &plan, &noise)?;
    Ok((data, prepared))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Federated(FederationResult),
    Ddt(DdtResult),
    Centralised(CentralisedResult),
}

pub fn execute(config: &Config, prepared: &Prepared, workers: Option<usize>) -> Result<Outcome> {
    let base = config.federation_config(workers);
    Ok(match config.method {
        Method::LrXfl => Outcome::Federated(run_federation(prepared, &base)?),
        Method::FedavgLogic => {
            let mut cfg = fedavg_logic_config(&base);
            cfg.apply_theta = config.federation.fedavg_theta_filter;
            Outcome::Federated(run_federation(prepared, &cfg)?)
        }
        Method::Ablated => Outcome::Federated(run_federation(prepared, &ablated_config(&base, config.ablation.connector))?),
        Method::Ddt => Outcome::Ddt(run_ddt(prepared, config.ddt.max_depth)?),
        Method::Centralised => Outcome::Centralised(run_centralised(prepared, &config.model_config())?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub samples: usize,
    pub concept_names: Vec<String>,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub connector: Connector,
    pub model_accuracy: f64,
    pub rule_accuracy: f64,
    pub rule_fidelity: f64,
    pub validation_rule_accuracy: f64,
    pub weights: Vec<f64>,
    pub selection_counts: Vec<usize>,
    pub beam_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseInfo {
    pub text: String,
    pub contributors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleInfo {
    pub class_id: usize,
    pub class_name: String,
    pub text: String,
    pub absent: bool,
    pub validation_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_fidelity: Option<f64>,
    pub clauses: Vec<ClauseInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalInfo {
    pub connector: Connector,
    pub rules: Vec<RuleInfo>,
    pub weights: Vec<f64>,
    pub test: MetricsReport,
    pub validation: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientInfo {
    pub client_id: usize,
    pub local_model_accuracy: Option<f64>,
    pub accepted: bool,
    pub connector_vote: Option<Connector>,
    /// One rendered rule per class.
    pub rules: Vec<String>,
    /// Server-validation score of the client's model, where the method has one.
    pub validation_score: Option<f64>,
}

/// The structured results document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub method: Method,
    pub seed: u64,
    pub config_hash: String,
    pub config: Config,
    pub dataset: DatasetInfo,
    pub noisy_clients: Vec<usize>,
    /// Mean weight of noisy and of clean clients over all rounds.
    pub noisy_client_weight: Option<f64>,
    pub clean_client_weight: Option<f64>,
    pub rounds: Vec<RoundRow>,
    pub global: GlobalInfo,
    pub clients: Vec<ClientInfo>,
}

impl Results {
    pub fn class_names(&self) -> &[String] {
        &self.dataset.class_names
    }
}

fn rule_infos(
    rules: &[ClassRule],
    sources: Option<&[Vec<ClauseInfo>]>,
    validation: &MetricsReport,
    test: &MetricsReport,
    data: &ConceptDataset,
) -> Vec<RuleInfo> {
    rules
        .iter()
        .enumerate()
        .map(|(c, rule)| RuleInfo {
            class_id: c,
            class_name: data.class_names[c].clone(),
            text: render_class_rule(rule, &data.concept_names, &data.class_names),
            absent: rule.is_absent(),
            validation_accuracy: validation.per_class_rule_accuracy[c],
            test_accuracy: test.per_class_rule_accuracy[c],
            test_fidelity: test.per_class_rule_fidelity[c],
            clauses: match sources {
                Some(s) => s[c].clone(),
                None => rule
                    .clauses()
                    .iter()
                    .map(|cl| ClauseInfo {
                        text: render_conjunction(cl, &data.concept_names),
                        contributors: Vec::new(),
                    })
                    .collect(),
            },
        })
        .collect()
}

fn render_all(rules: &[ClassRule], data: &ConceptDataset) -> Vec<String> {
    rules
        .iter()
        .map(|r| render_class_rule(r, &data.concept_names, &data.class_names))
        .collect()
}

pub fn build_results(config: &Config, data: &ConceptDataset, prepared: &Prepared, outcome: &Outcome) -> Results {
    let (rounds, global, clients, group) = match outcome {
        Outcome::Federated(res) => {
            let rounds = res
                .rounds
                .iter()
                .map(|r| RoundRow {
                    round: r.round,
                    connector: r.connector,
                    model_accuracy: r.test.model_accuracy,
                    rule_accuracy: r.test.rule_accuracy,
                    rule_fidelity: r.test.rule_fidelity,
                    validation_rule_accuracy: r.validation.rule_accuracy,
                    weights: r.weights.0.clone(),
                    selection_counts: r.selection_counts.clone(),
                    beam_evaluations: r.beam_evaluations,
                })
                .collect();
            let last = res.last();
            let sources: Vec<Vec<ClauseInfo>> = last
                .rule_set
                .rules
                .iter()
                .map(|g| {
                    g.sources
                        .iter()
                        .map(|s| ClauseInfo {
                            text: render_conjunction(&s.clause, &data.concept_names),
                            contributors: s.contributors.iter().copied().collect(),
                        })
                        .collect()
                })
                .collect();
            let rules = last.rule_set.class_rules();
            let global = GlobalInfo {
                connector: last.connector,
                rules: rule_infos(&rules, Some(&sources), &last.validation, &last.test, data),
                weights: last.weights.0.clone(),
                test: last.test.clone(),
                validation: last.validation.clone(),
            };
            let clients = last
                .clients
                .iter()
                .map(|c| ClientInfo {
                    client_id: c.client_id,
                    local_model_accuracy: Some(c.local_model_accuracy),
                    accepted: c.accepted,
                    connector_vote: Some(c.connector_vote),
                    rules: render_all(&c.class_rules, data),
                    validation_score: None,
                })
                .collect();
            (rounds, global, clients, res.mean_group_weights())
        }
        Outcome::Ddt(res) => {
            let global = GlobalInfo {
                connector: Connector::Or,
                rules: rule_infos(&res.rules, None, &res.validation, &res.test, data),
                weights: Vec::new(),
                test: res.test.clone(),
                validation: res.validation.clone(),
            };
            let clients = res
                .client_scores
                .iter()
                .enumerate()
                .map(|(id, &score)| ClientInfo {
                    client_id: id,
                    local_model_accuracy: None,
                    accepted: id == res.chosen_client,
                    connector_vote: None,
                    rules: if id == res.chosen_client { render_all(&res.rules, data) } else { Vec::new() },
                    validation_score: Some(score),
                })
                .collect();
            (single_round(&res.test, &res.validation), global, clients, (None, None))
        }
        Outcome::Centralised(res) => {
            let global = GlobalInfo {
                connector: Connector::Or,
                rules: rule_infos(&res.rules, None, &res.validation, &res.test, data),
                weights: Vec::new(),
                test: res.test.clone(),
                validation: res.validation.clone(),
            };
            (single_round(&res.test, &res.validation), global, Vec::new(), (None, None))
        }
    };
    Results {
        method: config.method,
        seed: config.dataset.seed,
        config_hash: config.hash(),
        config: config.clone(),
        dataset: DatasetInfo {
            samples: data.len(),
            concept_names: data.concept_names.clone(),
            class_names: data.class_names.clone(),
        },
        noisy_clients: prepared.noisy_clients.clone(),
        noisy_client_weight: group.0,
        clean_client_weight: group.1,
        rounds,
        global,
        clients,
    }
}

fn single_round(test: &MetricsReport, validation: &MetricsReport) -> Vec<RoundRow> {
    vec![RoundRow {
        round: 1,
        connector: Connector::Or,
        model_accuracy: test.model_accuracy,
        rule_accuracy: test.rule_accuracy,
        rule_fidelity: test.rule_fidelity,
        validation_rule_accuracy: validation.rule_accuracy,
        weights: Vec::new(),
        selection_counts: Vec::new(),
        beam_evaluations: 0,
    }]
}

/// Prepare data, execute the method and build the results document.
pub fn run_experiment(config: &Config, workers: Option<usize>) -> Result<Results> {
    let (data, prepared) = prepare_data(config)?;
    let outcome = execute(config, &prepared, workers)?;
    Ok(build_results(config, &data, &prepared, &outcome))
}
