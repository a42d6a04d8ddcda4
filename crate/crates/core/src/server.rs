//! Server side of a federated round: connector vote, candidate filtering,
//! beam-search rule fusion, rule-derived client weights and weighted model
//! averaging.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::client::{ClientId, ClientUpdate};
use crate::datasets::ConceptDataset;
use crate::error::{Error, Result};
use crate::logic::{fuse_clauses, ClassRule, ConjunctiveRule, Connector, Polarity};
use crate::model::ModelParameters;

pub const DEFAULT_THETA: f64 = 0.7;
pub const DEFAULT_BEAM_WIDTH: usize = 8;

/// Majority vote over client connectors; an exact tie goes to OR.
pub fn vote_connector(updates: &[ClientUpdate]) -> Result<Connector> {
    if updates.is_empty() {
        return Err(Error::InvalidInput("no client updates to vote on".into()));
    }
    let or = updates.iter().filter(|u| u.connector_vote == Connector::Or).count();
    let and = updates.len() - or;
    Ok(if and > or { Connector::And } else { Connector::Or })
}

/// A distinct clause offered to the server and every client that offered it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub clause: ConjunctiveRule,
    pub contributors: BTreeSet<ClientId>,
}

impl Candidate {
    /// Lowest contributing client id.
    pub fn owner(&self) -> ClientId {
        *self.contributors.iter().next().expect("candidate has a contributor")
    }
}

/// Per-class candidate pools from clients whose local model accuracy is at
/// least `theta`. Pools are sorted by clause.
pub fn filter_candidates(updates: &[ClientUpdate], theta: f64) -> Vec<Vec<Candidate>> {
    let n_classes = updates.iter().map(|u| u.class_rules.len()).max().unwrap_or(0);
    let mut pools: Vec<BTreeMap<ConjunctiveRule, BTreeSet<ClientId>>> = vec![BTreeMap::new(); n_classes];
    for update in updates {
        if update.local_model_accuracy < theta {
            continue;
        }
        for rule in &update.class_rules {
            for clause in rule.clauses() {
                pools[rule.class_id]
                    .entry(clause.clone())
                    .or_default()
                    .insert(update.client_id);
            }
        }
    }
    pools
        .into_iter()
        .map(|pool| {
            pool.into_iter()
                .map(|(clause, contributors)| Candidate { clause, contributors })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalRule {
    pub rule: ClassRule,
    /// Candidates fused into `rule`, with their contributors.
    pub sources: Vec<Candidate>,
    pub validation_accuracy: f64,
}

impl GlobalRule {
    pub fn contributors(&self) -> BTreeSet<ClientId> {
        self.sources.iter().flat_map(|c| c.contributors.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalRuleSet {
    pub connector: Connector,
    pub rules: Vec<GlobalRule>,
}

impl GlobalRuleSet {
    pub fn class_rules(&self) -> Vec<ClassRule> {
        self.rules.iter().map(|g| g.rule.clone()).collect()
    }
}

/// Candidate truth values on the validation rows, computed once per pool.
struct Scorer<'a> {
    pool: &'a [Candidate],
    truth: Vec<Vec<bool>>,
    labels: Vec<bool>,
    connector: Connector,
}

#[derive(Debug, Clone)]
struct State {
    members: Vec<usize>,
    accuracy: f64,
    provenance: Vec<ClientId>,
}

impl State {
    /// Higher accuracy, then fewer members, then smaller provenance.
    fn better_than(&self, other: &State) -> bool {
        self.rank_cmp(other) == std::cmp::Ordering::Less
    }

    fn rank_cmp(&self, other: &State) -> std::cmp::Ordering {
        other
            .accuracy
            .total_cmp(&self.accuracy)
            .then_with(|| self.members.len().cmp(&other.members.len()))
            .then_with(|| self.provenance.cmp(&other.provenance))
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl<'a> Scorer<'a> {
    fn new(pool: &'a [Candidate], connector: Connector, validation: &ConceptDataset, class_id: usize) -> Result<Self> {
        let truth = pool
            .iter()
            .map(|c| {
                validation
                    .concepts
                    .iter()
                    .map(|x| c.clause.eval(x))
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            pool,
            truth,
            labels: validation.labels.iter().map(|&y| y == class_id).collect(),
            connector,
        })
    }

    fn contradictory(&self, members: &[usize]) -> bool {
        if self.connector == Connector::Or {
            return false;
        }
        let mut seen: BTreeMap<usize, Polarity> = BTreeMap::new();
        for &m in members {
            for l in self.pool[m].clause.literals() {
                if let Some(&p) = seen.get(&l.concept) {
                    if p != l.polarity {
                        return true;
                    }
                } else {
                    seen.insert(l.concept, l.polarity);
                }
            }
        }
        false
    }

    /// `None` when AND fusion of the members contradicts.
    fn score(&self, members: Vec<usize>) -> Option<State> {
        if self.contradictory(&members) {
            return None;
        }
        let correct = (0..self.labels.len())
            .filter(|&row| {
                let fires = match self.connector {
                    Connector::And => members.iter().all(|&m| self.truth[m][row]),
                    Connector::Or => members.iter().any(|&m| self.truth[m][row]),
                };
                fires == self.labels[row]
            })
            .count();
        let provenance: BTreeSet<ClientId> = members
            .iter()
            .flat_map(|&m| self.pool[m].contributors.iter().copied())
            .collect();
        Some(State {
            accuracy: correct as f64 / self.labels.len() as f64,
            provenance: provenance.into_iter().collect(),
            members,
        })
    }
}

fn top_b(mut states: Vec<State>, b: usize) -> Vec<State> {
    states.sort_by(|a, b| a.rank_cmp(b));
    states.truncate(b);
    states
}

/// Outcome of a beam search over one class pool.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamOutcome {
    pub rule: GlobalRule,
    /// Number of candidate subsets scored.
    pub evaluations: usize,
}

/// Beam search over subsets of one class's candidate pool.
///
/// The beam starts from the `b` best singletons; each step extends every
/// state by one unused candidate and keeps the `b` best extensions. The
/// search runs until no extension is possible (or a perfect score is found)
/// and returns the best state seen. States rank by validation accuracy, then
/// fewer members, then smallest sorted contributor list.
pub fn beam_search_class(
    pool: &[Candidate],
    connector: Connector,
    validation: &ConceptDataset,
    class_id: usize,
    beam_width: usize,
) -> Result<BeamOutcome> {
    if beam_width == 0 {
        return Err(Error::InvalidInput("beam width must be at least 1".into()));
    }
    if validation.is_empty() {
        return Err(Error::InvalidInput("beam search needs validation data".into()));
    }
    if pool.is_empty() {
        return Ok(BeamOutcome {
            rule: GlobalRule {
                rule: ClassRule::absent(class_id, connector),
                sources: Vec::new(),
                validation_accuracy: absent_accuracy(validation, class_id),
            },
            evaluations: 0,
        });
    }
    let scorer = Scorer::new(pool, connector, validation, class_id)?;
    let singles: Vec<State> = (0..pool.len()).filter_map(|i| scorer.score(vec![i])).collect();
    let mut evaluations = singles.len();
    let mut beam = top_b(singles, beam_width);
    let mut best = beam[0].clone();

    while best.accuracy < 1.0 {
        let extensions: BTreeSet<Vec<usize>> = beam
            .iter()
            .flat_map(|s| {
                (0..pool.len()).filter(move |i| !s.members.contains(i)).map(move |i| {
                    let mut m = s.members.clone();
                    m.push(i);
                    m.sort_unstable();
                    m
                })
            })
            .collect();
        if extensions.is_empty() {
            break;
        }
        evaluations += extensions.len();
        let scored: Vec<State> = extensions
            .into_iter()
            .collect::<Vec<_>>()
            .into_par_iter()
            .filter_map(|m| scorer.score(m))
            .collect();
        if scored.is_empty() {
            break;
        }
        beam = top_b(scored, beam_width);
        if beam[0].better_than(&best) {
            best = beam[0].clone();
        }
    }

    let sources: Vec<Candidate> = best.members.iter().map(|&i| pool[i].clone()).collect();
    let clauses: Vec<ConjunctiveRule> = sources.iter().map(|c| c.clause.clone()).collect();
    Ok(BeamOutcome {
        rule: GlobalRule {
            rule: fuse_clauses(&clauses, connector, class_id)?,
            sources,
            validation_accuracy: best.accuracy,
        },
        evaluations,
    })
}

fn absent_accuracy(validation: &ConceptDataset, class_id: usize) -> f64 {
    let negatives = validation.labels.iter().filter(|&&y| y != class_id).count();
    negatives as f64 / validation.len() as f64
}

/// Beam-search every class pool. Returns the rule set and the total number
/// of subsets scored.
pub fn beam_aggregate(
    pools: &[Vec<Candidate>],
    connector: Connector,
    validation: &ConceptDataset,
    beam_width: usize,
) -> Result<(GlobalRuleSet, usize)> {
    let mut rules = Vec::with_capacity(pools.len());
    let mut evaluations = 0;
    for (class_id, pool) in pools.iter().enumerate() {
        let out = beam_search_class(pool, connector, validation, class_id, beam_width)?;
        evaluations += out.evaluations;
        rules.push(out.rule);
    }
    Ok((GlobalRuleSet { connector, rules }, evaluations))
}

/// Fuse every surviving candidate without selection.
pub fn union_aggregate(pools: &[Vec<Candidate>], connector: Connector, validation: &ConceptDataset) -> Result<GlobalRuleSet> {
    let mut rules = Vec::with_capacity(pools.len());
    for (class_id, pool) in pools.iter().enumerate() {
        let clauses: Vec<ConjunctiveRule> = pool.iter().map(|c| c.clause.clone()).collect();
        let rule = fuse_clauses(&clauses, connector, class_id)?;
        let validation_accuracy = if validation.is_empty() {
            0.0
        } else {
            crate::metrics::rule_accuracy(&rule, validation, class_id)?.0
        };
        rules.push(GlobalRule {
            rule,
            sources: pool.to_vec(),
            validation_accuracy,
        });
    }
    Ok(GlobalRuleSet { connector, rules })
}

/// Per-client aggregation weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientWeights(pub Vec<f64>);

impl ClientWeights {
    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Selection counts per client: the number of classes whose global rule
/// uses at least one clause the client contributed.
pub fn selection_counts(rule_set: &GlobalRuleSet, k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for g in &rule_set.rules {
        for client in g.contributors() {
            if client < k {
                counts[client] += 1;
            }
        }
    }
    counts
}

/// `w_k = p_k / Σ p_i`, uniform when nothing was selected.
pub fn compute_weights(rule_set: &GlobalRuleSet, k: usize) -> Result<ClientWeights> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one client".into()));
    }
    Ok(weights_from_counts(&selection_counts(rule_set, k)))
}

pub fn weights_from_counts(counts: &[usize]) -> ClientWeights {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return ClientWeights::uniform(counts.len());
    }
    ClientWeights(counts.iter().map(|&p| p as f64 / total as f64).collect())
}

/// Elementwise weighted average of client parameters, summed in update order.
pub fn aggregate_models(updates: &[ClientUpdate], weights: &ClientWeights) -> Result<ModelParameters> {
    let first = updates
        .first()
        .ok_or_else(|| Error::InvalidInput("no client parameters to aggregate".into()))?;
    if weights.0.len() != updates.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} updates",
            weights.0.len(),
            updates.len()
        )));
    }
    let sum: f64 = weights.0.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || weights.0.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidInput(format!("weights must form a distribution (sum = {sum})")));
    }
    let mut out = ModelParameters::zeros(first.parameters.n_classes, first.parameters.n_concepts);
    for (u, &w) in updates.iter().zip(&weights.0) {
        let p = &u.parameters;
        if p.shape() != out.shape() || p.weights.len() != out.weights.len() || p.biases.len() != out.biases.len() {
            return Err(Error::ShapeMismatch {
                expected: out.shape(),
                actual: p.shape(),
            });
        }
        for (o, v) in out.weights.iter_mut().zip(&p.weights) {
            *o += w * v;
        }
        for (o, v) in out.biases.iter_mut().zip(&p.biases) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Stop once `round` (1-based count of finished rounds) reaches `max_rounds`
/// or the mean validation rule accuracy reaches `target`.
pub fn check_stop(round: usize, validation_rule_accuracy: f64, target: f64, max_rounds: usize) -> bool {
    round >= max_rounds || validation_rule_accuracy >= target
}
