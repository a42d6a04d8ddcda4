//! One federated participant: local training, local connector choice and
//! sample-level to class-level rule aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datasets::{ClientData, ConceptDataset};
use crate::error::{Error, Result};
use crate::logic::{fuse_clauses, select_connector, ClassRule, ConjunctiveRule, Connector, ConnectorStats, Polarity};
use crate::metrics::model_accuracy;
use crate::model::{build_truth_table, Classifier, EntropyClassifier, ModelParameters};

pub type ClientId = usize;

pub const DEFAULT_CLIENT_EPOCHS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientState {
    pub client_id: ClientId,
    pub model: EntropyClassifier,
    pub data: ClientData,
}

/// Per-round payload a client uploads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientUpdate {
    pub client_id: ClientId,
    pub parameters: ModelParameters,
    /// One entry per class; absent rules are explicit.
    pub class_rules: Vec<ClassRule>,
    pub connector_vote: Connector,
    pub connector_stats: ConnectorStats,
    pub local_model_accuracy: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOptions {
    pub epochs: usize,
    pub d_threshold: f64,
    pub e_threshold: f64,
    /// Overrides the co-occurrence decision when set.
    pub forced_connector: Option<Connector>,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_CLIENT_EPOCHS,
            d_threshold: crate::logic::DEFAULT_D_THRESHOLD,
            e_threshold: crate::logic::DEFAULT_E_THRESHOLD,
            forced_connector: None,
        }
    }
}

impl ClientState {
    pub fn new(client_id: ClientId, model: EntropyClassifier, data: ClientData) -> Self {
        Self { client_id, model, data }
    }

    /// Load the global model, train, extract and aggregate rules, report.
    pub fn local_round(&mut self, global: &ModelParameters, opts: &LocalOptions) -> Result<ClientUpdate> {
        self.model.load_parameters(global)?;
        if opts.epochs > 0 {
            self.model.train_epochs(&self.data.train, opts.epochs)?;
        }
        let n_classes = self.model.n_classes();
        let tables = (0..n_classes)
            .map(|c| build_truth_table(&self.model, &self.data.train, c))
            .collect::<Result<Vec<_>>>()?;

        let pooled: Vec<ConjunctiveRule> = tables
            .iter()
            .flat_map(|t| t.rows.iter().map(|(r, _)| r.clone()))
            .collect();
        let connector_stats = select_connector(&pooled, self.model.n_concepts(), opts.d_threshold, opts.e_threshold)?;
        let connector = opts.forced_connector.unwrap_or(connector_stats.chosen);

        let candidates: Vec<Vec<(ConjunctiveRule, usize)>> = tables.into_iter().map(|t| t.rows).collect();
        let class_rules = aggregate_local_rules(&candidates, connector, &self.data.validation)?;

        let predictions = self.model.predict_all(&self.data.validation)?;
        Ok(ClientUpdate {
            client_id: self.client_id,
            parameters: self.model.params.clone(),
            class_rules,
            connector_vote: connector,
            connector_stats,
            local_model_accuracy: model_accuracy(&predictions, &self.data.validation.labels),
            sample_count: self.data.train.len(),
        })
    }
}

/// Running truth values of a fused rule on the validation rows.
struct Fused<'a> {
    validation: &'a ConceptDataset,
    class_id: usize,
    connector: Connector,
    truth: Vec<bool>,
    literals: BTreeMap<usize, Polarity>,
    clauses: Vec<ConjunctiveRule>,
}

impl<'a> Fused<'a> {
    fn new(validation: &'a ConceptDataset, class_id: usize, connector: Connector) -> Self {
        Self {
            validation,
            class_id,
            connector,
            truth: Vec::new(),
            literals: BTreeMap::new(),
            clauses: Vec::new(),
        }
    }

    fn accuracy_of(&self, truth: &[bool]) -> f64 {
        let labels = &self.validation.labels;
        let correct = truth
            .iter()
            .zip(labels)
            .filter(|(&t, &y)| t == (y == self.class_id))
            .count();
        correct as f64 / labels.len() as f64
    }

    fn contradicts(&self, rule: &ConjunctiveRule) -> bool {
        self.connector == Connector::And
            && rule
                .literals()
                .iter()
                .any(|l| self.literals.get(&l.concept).is_some_and(|&p| p != l.polarity))
    }

    fn combined(&self, rule_truth: &[bool]) -> Vec<bool> {
        if self.clauses.is_empty() {
            return rule_truth.to_vec();
        }
        self.truth
            .iter()
            .zip(rule_truth)
            .map(|(&a, &b)| match self.connector {
                Connector::And => a && b,
                Connector::Or => a || b,
            })
            .collect()
    }

    fn accept(&mut self, rule: &ConjunctiveRule, truth: Vec<bool>) {
        for l in rule.literals() {
            self.literals.insert(l.concept, l.polarity);
        }
        self.clauses.push(rule.clone());
        self.truth = truth;
    }
}

/// Rank each class's sample rules by validation rule accuracy (then support,
/// then canonical order), keep the best, and add each further rule only if
/// the fused rule's validation accuracy strictly improves. AND candidates
/// that contradict the current rule are skipped.
pub fn aggregate_local_rules(
    sample_rules: &[Vec<(ConjunctiveRule, usize)>],
    connector: Connector,
    validation: &ConceptDataset,
) -> Result<Vec<ClassRule>> {
    if validation.is_empty() {
        return Err(Error::InvalidInput("local rule aggregation needs validation data".into()));
    }
    sample_rules
        .iter()
        .enumerate()
        .map(|(class_id, rules)| aggregate_class(rules, connector, validation, class_id))
        .collect()
}

fn aggregate_class(
    rules: &[(ConjunctiveRule, usize)],
    connector: Connector,
    validation: &ConceptDataset,
    class_id: usize,
) -> Result<ClassRule> {
    if rules.is_empty() {
        return Ok(ClassRule::absent(class_id, connector));
    }
    let mut fused = Fused::new(validation, class_id, connector);
    let mut scored = Vec::with_capacity(rules.len());
    for (rule, support) in rules {
        let truth: Vec<bool> = validation
            .concepts
            .iter()
            .map(|x| rule.eval(x))
            .collect::<Result<_>>()?;
        scored.push((fused.accuracy_of(&truth), *support, rule, truth));
    }
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| a.2.cmp(b.2))
    });

    let mut best = f64::NEG_INFINITY;
    for (acc, _, rule, truth) in scored {
        if fused.clauses.is_empty() {
            fused.accept(rule, truth);
            best = acc;
            continue;
        }
        if fused.clauses.contains(rule) || fused.contradicts(rule) {
            continue;
        }
        let next = fused.combined(&truth);
        let next_acc = fused.accuracy_of(&next);
        if next_acc > best {
            best = next_acc;
            fused.accept(rule, next);
        }
    }
    fuse_clauses(&fused.clauses, connector, class_id)
}
