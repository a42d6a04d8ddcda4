//! Model accuracy, rule accuracy and rule fidelity.

use serde::{Deserialize, Serialize};

use crate::datasets::ConceptDataset;
use crate::error::{Error, Result};
use crate::logic::ClassRule;
use crate::model::Classifier;

/// Counts behind a rule accuracy: `P`/`Q` ground-truth positives/negatives for
/// the class, `p` positives the rule accepts and `q` negatives it rejects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RuleEvalCounts {
    pub positives: usize,
    pub negatives: usize,
    pub true_positives: usize,
    pub true_negatives: usize,
}

impl RuleEvalCounts {
    pub fn accuracy(&self) -> f64 {
        let total = self.positives + self.negatives;
        if total == 0 {
            return 0.0;
        }
        (self.true_positives + self.true_negatives) as f64 / total as f64
    }
}

pub fn model_accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    correct as f64 / labels.len() as f64
}

/// Rule accuracy against arbitrary reference labels.
pub fn rule_counts(rule: &ClassRule, concepts: &[Vec<bool>], labels: &[usize], class_id: usize) -> Result<RuleEvalCounts> {
    let mut counts = RuleEvalCounts::default();
    for (x, &y) in concepts.iter().zip(labels) {
        let fires = rule.eval(x)?;
        if y == class_id {
            counts.positives += 1;
            counts.true_positives += usize::from(fires);
        } else {
            counts.negatives += 1;
            counts.true_negatives += usize::from(!fires);
        }
    }
    Ok(counts)
}

pub fn rule_accuracy(rule: &ClassRule, data: &ConceptDataset, class_id: usize) -> Result<(f64, RuleEvalCounts)> {
    if data.is_empty() {
        return Err(Error::InvalidInput("rule accuracy on an empty dataset".into()));
    }
    let counts = rule_counts(rule, &data.concepts, &data.labels, class_id)?;
    Ok((counts.accuracy(), counts))
}

/// Rule accuracy with the model's predictions standing in for the labels.
pub fn rule_fidelity(rule: &ClassRule, model: &dyn Classifier, data: &ConceptDataset, class_id: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("rule fidelity on an empty dataset".into()));
    }
    let predictions = model.predict_all(data)?;
    Ok(rule_counts(rule, &data.concepts, &predictions, class_id)?.accuracy())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_accuracy: f64,
    /// `None` for classes without a rule.
    pub per_class_rule_accuracy: Vec<Option<f64>>,
    pub per_class_rule_fidelity: Vec<Option<f64>>,
    /// Mean over classes that have a rule.
    pub rule_accuracy: f64,
    pub rule_fidelity: f64,
    /// Classes left out of the means because their rule is absent.
    pub excluded_classes: Vec<usize>,
}

fn mean_present(v: &[Option<f64>]) -> f64 {
    let present: Vec<f64> = v.iter().flatten().copied().collect();
    if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    }
}

/// Mean of per-class rule accuracies over classes that have a rule.
pub fn mean_rule_accuracy(rules: &[ClassRule], data: &ConceptDataset) -> Result<f64> {
    let per: Vec<Option<f64>> = rules
        .iter()
        .map(|r| {
            if r.is_absent() {
                Ok(None)
            } else {
                rule_accuracy(r, data, r.class_id).map(|(a, _)| Some(a))
            }
        })
        .collect::<Result<_>>()?;
    Ok(mean_present(&per))
}

/// All three metrics for one rule per class against one model.
pub fn evaluate(rules: &[ClassRule], model: &dyn Classifier, data: &ConceptDataset) -> Result<MetricsReport> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty dataset".into()));
    }
    let predictions = model.predict_all(data)?;
    let mut acc = Vec::with_capacity(rules.len());
    let mut fid = Vec::with_capacity(rules.len());
    let mut excluded = Vec::new();
    for rule in rules {
        if rule.is_absent() {
            acc.push(None);
            fid.push(None);
            excluded.push(rule.class_id);
            continue;
        }
        acc.push(Some(rule_counts(rule, &data.concepts, &data.labels, rule.class_id)?.accuracy()));
        fid.push(Some(rule_counts(rule, &data.concepts, &predictions, rule.class_id)?.accuracy()));
    }
    Ok(MetricsReport {
        model_accuracy: model_accuracy(&predictions, &data.labels),
        rule_accuracy: mean_present(&acc),
        rule_fidelity: mean_present(&fid),
        per_class_rule_accuracy: acc,
        per_class_rule_fidelity: fid,
        excluded_classes: excluded,
    })
}
