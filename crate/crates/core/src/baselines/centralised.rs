use serde::{Deserialize, Serialize};

use crate::client::aggregate_local_rules;
use crate::datasets::ConceptDataset;
use crate::error::Result;
use crate::federation::Prepared;
use crate::logic::{ClassRule, Connector};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{build_truth_table, EntropyClassifier, ModelConfig, ModelParameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralisedResult {
    pub parameters: ModelParameters,
    pub rules: Vec<ClassRule>,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

/// One model on the pooled client training data; rules are OR-aggregated
/// against the server validation split and reported on the server test split.
pub fn run_centralised(prepared: &Prepared, config: &ModelConfig) -> Result<CentralisedResult> {
    let part = &prepared.partition;
    let train = ConceptDataset::concat(part.clients.iter().map(|c| &c.train))?;
    let mut model = EntropyClassifier::new(train.n_classes(), train.n_concepts(), config.clone())?;
    model.train(&train)?;
    let candidates = (0..train.n_classes())
        .map(|c| build_truth_table(&model, &train, c).map(|t| t.rows))
        .collect::<Result<Vec<_>>>()?;
    let rules = aggregate_local_rules(&candidates, Connector::Or, &part.server_validation)?;
    Ok(CentralisedResult {
        validation: evaluate(&rules, &model, &part.server_validation)?,
        test: evaluate(&rules, &model, &part.server_test)?,
        parameters: model.params,
        rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_parity, NoiseSpec, PartitionPlan};
    use crate::federation::prepare;

    #[test]
    fn parity_rules_are_accurate_and_deterministic() {
        let p = prepare(&gen_parity(1000, 6), &PartitionPlan::new(5, 6), &NoiseSpec::none()).unwrap();
        let res = run_centralised(&p, &ModelConfig::default()).unwrap();
        assert!(res.test.rule_accuracy >= 0.99, "{:?}", res.test);
        assert!(res.rules.iter().all(|r| r.connector == Connector::Or && !r.is_absent()));
        assert_eq!(res, run_centralised(&p, &ModelConfig::default()).unwrap());
    }

    #[test]
    fn class_missing_from_training_gets_absent_rule() {
        let data = gen_parity(600, 2);
        let mut p = prepare(&data, &PartitionPlan::new(3, 2), &NoiseSpec::none()).unwrap();
        for c in &mut p.partition.clients {
            let keep: Vec<usize> = (0..c.train.len()).filter(|&i| c.train.labels[i] == 0).collect();
            c.train = c.train.subset(&keep);
        }
        let res = run_centralised(&p, &ModelConfig::default()).unwrap();
        assert!(res.rules[1].is_absent());
        assert_eq!(res.test.excluded_classes, vec![1]);
    }
}
