use lrxfl_core::baselines::{fedavg_logic_config, run_ablated, run_centralised, run_ddt, DEFAULT_MAX_DEPTH};
use lrxfl_core::datasets::{default_conjunctive_spec, gen_conjunctive, gen_parity, NoiseSpec, PartitionPlan};
use lrxfl_core::federation::{prepare, run_federation, FederationConfig, Prepared};
use lrxfl_core::logic::{parse_class_rule, render_class_rule};
use lrxfl_core::metrics::rule_accuracy;
use lrxfl_core::{Classifier, Connector, EntropyClassifier, ModelConfig};

fn parity(seed: u64) -> Prepared {
    prepare(&gen_parity(2000, seed), &PartitionPlan::new(10, seed), &NoiseSpec::none()).unwrap()
}

fn conjunctive(seed: u64, noise: NoiseSpec) -> Prepared {
    let data = gen_conjunctive(2000, &default_conjunctive_spec(), 0.0, seed).unwrap();
    prepare(&data, &PartitionPlan::new(10, seed), &noise).unwrap()
}

#[test]
fn parity_rules_agree_with_digit_parity_on_one_hot_inputs() {
    let res = run_federation(&parity(1), &FederationConfig::default()).unwrap();
    let last = res.last();
    assert_eq!(last.connector, Connector::Or);
    for rule in last.rule_set.class_rules() {
        for digit in 0..10 {
            let x: Vec<bool> = (0..10).map(|d| d == digit).collect();
            assert_eq!(rule.eval(&x).unwrap(), digit % 2 == rule.class_id, "digit {digit}");
        }
    }
    let model = EntropyClassifier::from_parameters(res.final_parameters.clone(), ModelConfig::default()).unwrap();
    let four: Vec<bool> = (0..10).map(|d| d == 4).collect();
    assert_eq!(model.predict_class(&four).unwrap(), 0);
}

#[test]
fn conjunctive_rules_recover_defining_pairs() {
    let prepared = conjunctive(2, NoiseSpec::none());
    let res = run_federation(&prepared, &FederationConfig::default()).unwrap();
    let last = res.last();
    assert_eq!(last.connector, Connector::And);
    let val = &prepared.partition.server_test;
    for rule in last.rule_set.class_rules() {
        assert_eq!(rule_accuracy(&rule, val, rule.class_id).unwrap().0, 1.0);
        let text = render_class_rule(&rule, &val.concept_names, &val.class_names);
        assert_eq!(parse_class_rule(&text, &val.concept_names, &val.class_names).unwrap(), rule);
    }
}

#[test]
fn weights_form_a_distribution_every_round() {
    let noise = NoiseSpec {
        client_fraction: 0.4,
        data_fraction: 1.0,
        seed: 3,
    };
    let res = run_federation(&conjunctive(3, noise), &FederationConfig::default()).unwrap();
    assert_eq!(res.noisy_clients.len(), 4);
    for round in &res.rounds {
        let sum: f64 = round.weights.0.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(round.weights.0.iter().all(|&w| w >= 0.0));
    }
}

#[test]
fn every_method_runs_on_the_same_partition() {
    let prepared = conjunctive(4, NoiseSpec::none());
    let base = FederationConfig::default();
    let fedavg = run_federation(&prepared, &fedavg_logic_config(&base)).unwrap();
    assert!(fedavg.rounds.iter().all(|r| r.connector == Connector::Or));
    let ablated = run_ablated(&prepared, &base, Connector::And).unwrap();
    assert!(ablated.rounds.iter().all(|r| r.connector == Connector::And));
    let ddt = run_ddt(&prepared, DEFAULT_MAX_DEPTH).unwrap();
    assert_eq!(ddt.test.rule_fidelity, 1.0);
    let central = run_centralised(&prepared, &ModelConfig::default()).unwrap();
    assert!(central.test.model_accuracy > 0.9);
}

#[test]
fn repeated_runs_are_identical() {
    let prepared = conjunctive(5, NoiseSpec::none());
    let a = run_federation(&prepared, &FederationConfig::default()).unwrap();
    let b = run_federation(
        &prepared,
        &FederationConfig {
            workers: Some(2),
            ..FederationConfig::default()
        },
    )
    .unwrap();
    assert_eq!(a, b);
}
