//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use lrxfl_cli::config::{Config, DatasetName, Method};
use lrxfl_cli::runner::{execute, prepare_data, run_experiment, Outcome};
use lrxfl_core::baselines::{fit_tree, path_rules, run_ddt, DEFAULT_MAX_DEPTH};
use lrxfl_core::datasets::{default_conjunctive_spec, gen_conjunctive, gen_parity, NoiseSpec, PartitionPlan};
use lrxfl_core::federation::{prepare, FederationResult};
use lrxfl_core::logic::{fuse_clauses, parse_class_rule};
use lrxfl_core::metrics::rule_accuracy;
use lrxfl_core::model::Classifier;
use lrxfl_core::server::{beam_aggregate, compute_weights, GlobalRule, GlobalRuleSet};
use lrxfl_core::{
    Candidate, ConceptDataset, ConjunctiveRule, Connector, EntropyClassifier, Literal, ModelConfig, ModelParameters,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(
        elapsed <= Duration::from_secs(limit_secs),
        format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()),
    )
}

fn federated(config: &Config) -> Result<FederationResult, String> {
    let (_, prepared) = prepare_data(config).map_err(|e| e.to_string())?;
    match execute(config, &prepared, None).map_err(|e| e.to_string())? {
        Outcome::Federated(r) => Ok(r),
        _ => Err("expected a federated outcome".into()),
    }
}

fn parity_config(seed: u64) -> Config {
    let mut c = Config::default();
    c.dataset.name = DatasetName::Parity;
    c.dataset.samples = 2000;
    c.dataset.seed = seed;
    c.noise.seed = seed;
    c
}

fn conjunctive_config(seed: u64) -> Config {
    let mut c = parity_config(seed);
    c.dataset.name = DatasetName::Conjunctive;
    c
}

fn parity_recovery() -> Check {
    let start = Instant::now();
    let config = parity_config(0);
    let res = federated(&config)?;
    let last = res.last();
    let data = gen_parity(10, 0);
    let reference = [
        "~d1 & ~d3 & ~d5 & ~d7 & ~d9 <-> even",
        "~d0 & ~d2 & ~d4 & ~d6 & ~d8 <-> odd",
    ];
    let rules = last.rule_set.class_rules();
    for text in reference {
        let want = parse_class_rule(text, &data.concept_names, &data.class_names).map_err(|e| e.to_string())?;
        let got = &rules[want.class_id];
        for digit in 0..10 {
            let x: Vec<bool> = (0..10).map(|d| d == digit).collect();
            ensure(
                got.eval(&x).unwrap() == want.eval(&x).unwrap(),
                format!("rule for {} disagrees with `{text}` on digit {digit}", data.class_names[want.class_id]),
            )?;
        }
    }
    let t = &last.test;
    ensure(t.model_accuracy >= 0.99, format!("model accuracy {}", t.model_accuracy))?;
    ensure(t.rule_accuracy >= 0.99, format!("rule accuracy {}", t.rule_accuracy))?;
    ensure(t.rule_fidelity >= 0.99, format!("rule fidelity {}", t.rule_fidelity))?;
    within(start.elapsed(), 60)?;
    Ok(format!(
        "model {:.4} rule {:.4} fidelity {:.4} after {} round(s)",
        t.model_accuracy,
        t.rule_accuracy,
        t.rule_fidelity,
        res.rounds.len()
    ))
}

fn connector_selection() -> Check {
    let start = Instant::now();
    for seed in 0..10 {
        for (config, want) in [(parity_config(seed), Connector::Or), (conjunctive_config(seed), Connector::And)] {
            let mut config = config;
            config.federation.rounds = 1;
            let res = federated(&config)?;
            let got = res.rounds[0].connector;
            ensure(
                got == want,
                format!("{:?} seed {seed}: voted {got}, expected {want}", config.dataset.name),
            )?;
        }
    }
    within(start.elapsed(), 30)?;
    Ok("parity OR and conjunctive AND on 10/10 seeds".into())
}

fn random_clause(rng: &mut ChaCha8Rng, n_concepts: usize) -> ConjunctiveRule {
    let len = rng.gen_range(1..=3);
    let mut concepts = BTreeSet::new();
    while concepts.len() < len {
        concepts.insert(rng.gen_range(0..n_concepts));
    }
    ConjunctiveRule::new(
        concepts
            .into_iter()
            .map(|c| if rng.gen_bool(0.5) { Literal::pos(c) } else { Literal::neg(c) }),
    )
    .unwrap()
}

fn exhaustive_best(pool: &[Candidate], connector: Connector, val: &ConceptDataset, class_id: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for mask in 1u32..(1 << pool.len()) {
        let clauses: Vec<ConjunctiveRule> = (0..pool.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| pool[i].clause.clone())
            .collect();
        if let Ok(rule) = fuse_clauses(&clauses, connector, class_id) {
            best = best.max(rule_accuracy(&rule, val, class_id).unwrap().0);
        }
    }
    best
}

fn beam_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n_concepts = 6;
    let n_classes = 3;
    for trial in 0..50 {
        let rows = rng.gen_range(20..60);
        let concepts: Vec<Vec<bool>> = (0..rows)
            .map(|_| (0..n_concepts).map(|_| rng.gen_bool(0.5)).collect())
            .collect();
        let labels: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..n_classes)).collect();
        let val = ConceptDataset::new(
            concepts,
            labels,
            (0..n_concepts).map(|i| format!("c{i}")).collect(),
            (0..n_classes).map(|i| format!("k{i}")).collect(),
        )
        .unwrap();
        let pools: Vec<Vec<Candidate>> = (0..n_classes)
            .map(|_| {
                let size = rng.gen_range(1..=4);
                let mut clauses = BTreeSet::new();
                while clauses.len() < size {
                    clauses.insert(random_clause(&mut rng, n_concepts));
                }
                clauses
                    .into_iter()
                    .map(|clause| Candidate {
                        clause,
                        contributors: BTreeSet::from([rng.gen_range(0..5)]),
                    })
                    .collect()
            })
            .collect();
        let connector = if trial % 2 == 0 { Connector::Or } else { Connector::And };
        let width = rng.gen_range(16..=24);
        let (set, _) = beam_aggregate(&pools, connector, &val, width).map_err(|e| e.to_string())?;
        for (c, pool) in pools.iter().enumerate() {
            let got = rule_accuracy(&set.rules[c].rule, &val, c).unwrap().0;
            let want = exhaustive_best(pool, connector, &val, c);
            ensure(
                got == want,
                format!("trial {trial} class {c}: beam {got} vs exhaustive {want}"),
            )?;
        }
    }
    within(start.elapsed(), 30)?;
    Ok("50/50 pools match the exhaustive best subset".into())
}

fn rule_set_with_contributors(owners: &[Vec<usize>]) -> GlobalRuleSet {
    GlobalRuleSet {
        connector: Connector::Or,
        rules: owners
            .iter()
            .enumerate()
            .map(|(class_id, ids)| {
                let sources: Vec<Candidate> = ids
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| Candidate {
                        clause: ConjunctiveRule::new([Literal::pos(i)]).unwrap(),
                        contributors: BTreeSet::from([k]),
                    })
                    .collect();
                let clauses: Vec<ConjunctiveRule> = sources.iter().map(|s| s.clause.clone()).collect();
                GlobalRule {
                    rule: fuse_clauses(&clauses, Connector::Or, class_id).unwrap(),
                    sources,
                    validation_accuracy: 1.0,
                }
            })
            .collect(),
    }
}

fn weighting() -> Check {
    // client 0 backs two class rules, clients 1 and 2 one each, client 3 none
    let set = rule_set_with_contributors(&[vec![0, 1], vec![0, 2]]);
    let w = compute_weights(&set, 4).map_err(|e| e.to_string())?;
    ensure(w.0 == vec![0.5, 0.25, 0.25, 0.0], format!("weights {:?}", w.0))?;
    let empty = rule_set_with_contributors(&[vec![], vec![]]);
    let w = compute_weights(&empty, 4).map_err(|e| e.to_string())?;
    ensure(w.0 == vec![0.25; 4], format!("all-zero weights {:?}", w.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..1000 {
        let k = rng.gen_range(1..=12);
        let classes = rng.gen_range(1..=5);
        let owners: Vec<Vec<usize>> = (0..classes)
            .map(|_| (0..rng.gen_range(0..=4)).map(|_| rng.gen_range(0..k)).collect())
            .collect();
        let w = compute_weights(&rule_set_with_contributors(&owners), k).map_err(|e| e.to_string())?;
        let sum: f64 = w.0.iter().sum();
        ensure((sum - 1.0).abs() <= 1e-9, format!("trial {trial}: weights sum to {sum}"))?;
    }
    Ok("(2,1,1,0), all-zero and 1000 random maps".into())
}

fn noise_robustness() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for level in [0.2, 0.4, 0.6] {
        let mut weight_wins = 0;
        let mut rule_wins = 0;
        for seed in 0..5 {
            let mut config = conjunctive_config(seed);
            config.noise.t = level;
            config.noise.s = 1.0;
            let lr = run_experiment(&config, None).map_err(|e| e.to_string())?;
            config.method = Method::FedavgLogic;
            let fa = run_experiment(&config, None).map_err(|e| e.to_string())?;
            if let (Some(noisy), Some(clean)) = (lr.noisy_client_weight, lr.clean_client_weight) {
                weight_wins += usize::from(noisy < clean);
            }
            rule_wins += usize::from(lr.global.test.rule_accuracy >= fa.global.test.rule_accuracy);
        }
        ok &= weight_wins >= 3 && rule_wins >= 3;
        lines.push(format!("t={level}: noisy<clean {weight_wins}/5, rule>=fedavg {rule_wins}/5"));
    }
    within(start.elapsed(), 300)?;
    let summary = lines.join("; ");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn ablation() -> Check {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..5 {
        let config = conjunctive_config(seed);
        let adaptive = run_experiment(&config, None).map_err(|e| e.to_string())?;
        let mut forced = config.clone();
        forced.method = Method::Ablated;
        forced.ablation.connector = Connector::Or;
        let ablated = run_experiment(&forced, None).map_err(|e| e.to_string())?;
        let (a, b) = (adaptive.global.test.rule_accuracy, ablated.global.test.rule_accuracy);
        wins += usize::from(a > b);
        pairs.push(format!("{a:.4}/{b:.4}"));
    }
    let summary = format!("adaptive beats forced OR on {wins}/5 seeds ({})", pairs.join(", "));
    if wins == 5 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn ddt_fidelity() -> Check {
    for (name, data) in [
        ("parity", gen_parity(2000, 0)),
        ("conjunctive", gen_conjunctive(2000, &default_conjunctive_spec(), 0.0, 0).unwrap()),
    ] {
        let prepared = prepare(&data, &PartitionPlan::new(10, 0), &NoiseSpec::none()).map_err(|e| e.to_string())?;
        let res = run_ddt(&prepared, DEFAULT_MAX_DEPTH).map_err(|e| e.to_string())?;
        ensure(res.test.rule_fidelity == 1.0, format!("{name}: test fidelity {}", res.test.rule_fidelity))?;
        ensure(
            res.validation.rule_fidelity == 1.0,
            format!("{name}: validation fidelity {}", res.validation.rule_fidelity),
        )?;
        // the path rules reproduce every prediction of the tree on the full data
        let tree = fit_tree(&data, DEFAULT_MAX_DEPTH).map_err(|e| e.to_string())?;
        let rules = path_rules(&tree).map_err(|e| e.to_string())?;
        let preds = tree.predict_all(&data).map_err(|e| e.to_string())?;
        for (x, &p) in data.concepts.iter().zip(&preds) {
            for rule in &rules {
                ensure(rule.eval(x).unwrap() == (rule.class_id == p), format!("{name}: path rule mismatch"))?;
            }
        }
    }
    Ok("fidelity 1.0 on parity and conjunctive".into())
}

fn numerical_soundness() -> Check {
    let data = ConceptDataset::new(
        vec![
            vec![true, false, true, false],
            vec![false, true, true, true],
            vec![true, true, false, false],
            vec![false, false, false, true],
            vec![true, false, false, true],
            vec![false, true, true, false],
        ],
        vec![0, 1, 0, 1, 0, 1],
        (0..4).map(|i| format!("c{i}")).collect(),
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    let config = ModelConfig {
        entropy_coeff: 0.3,
        temperature: 0.7,
        ..ModelConfig::default()
    };
    let params = ModelParameters {
        n_classes: 2,
        n_concepts: 4,
        weights: vec![0.8, -0.5, 0.3, -1.2, -0.4, 0.9, 1.1, 0.2],
        biases: vec![0.1, -0.2],
    };
    let model = EntropyClassifier::from_parameters(params, config).map_err(|e| e.to_string())?;
    let analytic = model.gradient(&data);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let n_weights = model.params.weights.len();
    for i in 0..n_weights + model.params.biases.len() {
        let bump = |delta: f64| {
            let mut m = model.clone();
            if i < n_weights {
                m.params.weights[i] += delta;
            } else {
                m.params.biases[i - n_weights] += delta;
            }
            m.loss(&data)
        };
        let numeric = (bump(eps) - bump(-eps)) / (2.0 * eps);
        let exact = if i < n_weights { analytic.weights[i] } else { analytic.biases[i - n_weights] };
        let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    ensure(worst < 1e-4, format!("worst relative gradient error {worst:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=12);
        let params = ModelParameters {
            n_classes: 1,
            n_concepts: n,
            weights: (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect(),
            biases: vec![0.0],
        };
        let config = ModelConfig {
            temperature: rng.gen_range(0.05..5.0),
            ..ModelConfig::default()
        };
        let m = EntropyClassifier::from_parameters(params, config).map_err(|e| e.to_string())?;
        let sum: f64 = m.relevance(0).iter().sum();
        ensure((sum - 1.0).abs() <= 1e-9, format!("relevance sums to {sum}"))?;
    }
    Ok(format!("worst gradient error {worst:.2e}; 1000 relevance vectors sum to 1"))
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_lrxfl");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (name, workers) in [("one", "1"), ("four", "4")] {
        for dataset in ["parity", "conjunctive"] {
            let out = dir.path().join(format!("{dataset}_{name}"));
            let status = Command::new(bin)
                .args(["run", "--workers", workers, "--dataset.name", dataset, "--output_dir"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(
                status.status.success(),
                format!("run failed: {}", String::from_utf8_lossy(&status.stderr)),
            )?;
            outputs.push((dataset, std::fs::read(out.join("results.json")).map_err(|e| e.to_string())?));
        }
    }
    for dataset in ["parity", "conjunctive"] {
        let runs: Vec<&Vec<u8>> = outputs.iter().filter(|(d, _)| *d == dataset).map(|(_, b)| b).collect();
        ensure(runs[0] == runs[1], format!("{dataset}: results differ between 1 and 4 workers"))?;
    }
    Ok("results.json byte-identical with 1 and 4 workers".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("parity recovery", parity_recovery),
        ("connector selection", connector_selection),
        ("beam search equals exhaustive search", beam_oracle),
        ("rule-contribution weighting", weighting),
        ("noise robustness ordering", noise_robustness),
        ("adaptive connector beats forced OR", ablation),
        ("decision tree rule fidelity", ddt_fidelity),
        ("numerical soundness", numerical_soundness),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
