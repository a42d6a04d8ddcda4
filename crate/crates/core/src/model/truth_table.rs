use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Classifier, EntropyClassifier};
use crate::datasets::ConceptDataset;
use crate::error::Result;
use crate::logic::{ConjunctiveRule, Literal};

/// Distinct masked-literal patterns of the samples predicted as one class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    pub class_id: usize,
    /// Canonically ordered, unique rows with their sample counts.
    pub rows: Vec<(ConjunctiveRule, usize)>,
}

impl TruthTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn support(&self, rule: &ConjunctiveRule) -> usize {
        self.rows
            .iter()
            .find(|(r, _)| r == rule)
            .map_or(0, |&(_, s)| s)
    }
}

pub fn build_truth_table(model: &EntropyClassifier, data: &ConceptDataset, class_id: usize) -> Result<TruthTable> {
    let mask = model.active_mask(class_id);
    let predictions = model.predict_all(data)?;
    let mut rows: BTreeMap<ConjunctiveRule, usize> = BTreeMap::new();
    for (x, &pred) in data.concepts.iter().zip(&predictions) {
        if pred != class_id {
            continue;
        }
        let literals = mask
            .iter()
            .enumerate()
            .filter(|&(_, &active)| active)
            .map(|(j, _)| if x[j] { Literal::pos(j) } else { Literal::neg(j) });
        // the mask always keeps the most relevant concept, so the row is non-empty
        let row = ConjunctiveRule::new(literals)?;
        *rows.entry(row).or_insert(0) += 1;
    }
    Ok(TruthTable {
        class_id,
        rows: rows.into_iter().collect(),
    })
}

/// Rows as sample-level rules, most supported first.
pub fn extract_sample_rules(table: &TruthTable) -> Vec<ConjunctiveRule> {
    let mut rows = table.rows.clone();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.into_iter().map(|(r, _)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, ModelParameters};

    fn parity_like_model() -> EntropyClassifier {
        // class 1 (odd) favours odd digits, class 0 the even ones
        let mut p = ModelParameters::zeros(2, 4);
        p.weights = vec![1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        EntropyClassifier::from_parameters(p, ModelConfig::default()).unwrap()
    }

    fn one_hot_data(digits: &[usize]) -> ConceptDataset {
        ConceptDataset::new(
            digits.iter().map(|&d| (0..4).map(|j| j == d).collect()).collect(),
            digits.iter().map(|&d| d % 2).collect(),
            (0..4).map(|i| format!("d{i}")).collect(),
            vec!["even".into(), "odd".into()],
        )
        .unwrap()
    }

    #[test]
    fn rows_use_masked_literals_and_count_support() {
        let model = parity_like_model();
        let data = one_hot_data(&[3, 3, 1, 0]);
        let table = build_truth_table(&model, &data, 1).unwrap();
        assert_eq!(table.rows.len(), 2);
        let d3 = ConjunctiveRule::new([Literal::neg(0), Literal::neg(1), Literal::neg(2), Literal::pos(3)]).unwrap();
        assert_eq!(table.support(&d3), 2);
        let rules = extract_sample_rules(&table);
        assert_eq!(rules[0], d3);
        for (rule, x) in rules.iter().zip([&data.concepts[0], &data.concepts[2]]) {
            assert!(rule.eval(x).unwrap());
        }
    }

    #[test]
    fn class_without_predictions_gives_empty_table() {
        let model = parity_like_model();
        let data = one_hot_data(&[1, 3]);
        let table = build_truth_table(&model, &data, 0).unwrap();
        assert!(table.is_empty());
        assert!(extract_sample_rules(&table).is_empty());
    }

    #[test]
    fn mask_restricts_rows() {
        let mut p = ModelParameters::zeros(2, 4);
        // class 1 relevance dominated by concept 3
        p.weights = vec![0.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0, 4.0];
        let model = EntropyClassifier::from_parameters(p, ModelConfig::default()).unwrap();
        let data = one_hot_data(&[3]);
        let table = build_truth_table(&model, &data, 1).unwrap();
        assert_eq!(table.rows, vec![(ConjunctiveRule::new([Literal::pos(3)]).unwrap(), 1)]);
    }

    #[test]
    fn support_ordering() {
        let a = ConjunctiveRule::new([Literal::pos(0)]).unwrap();
        let b = ConjunctiveRule::new([Literal::pos(1)]).unwrap();
        let table = TruthTable {
            class_id: 0,
            rows: vec![(a.clone(), 2), (b.clone(), 5)],
        };
        assert_eq!(extract_sample_rules(&table), vec![b, a]);
    }
}
