//! Result bundles on disk: structured results, metrics table, rule report
//! and manifest; plus the noise sweep and rule inspection.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Config, Method};
use crate::error::{CliError, Result};
use crate::runner::{run_experiment, Results};

pub const RESULTS_FILE: &str = "results.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const RULES_FILE: &str = "rules.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], manifest: &mut Vec<ManifestEntry>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    manifest.push(ManifestEntry {
        file: name.to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    });
    Ok(())
}

pub fn results_json(results: &Results) -> Result<String> {
    let mut s = serde_json::to_string_pretty(results)?;
    s.push('\n');
    Ok(s)
}

pub fn metrics_csv(results: &Results) -> Result<Vec<u8>> {
    let k = results.config.federation.clients;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "round".to_string(),
        "model_accuracy".into(),
        "rule_accuracy".into(),
        "rule_fidelity".into(),
    ];
    header.extend((0..k).map(|i| format!("w_{i}")));
    w.write_record(&header)?;
    for r in &results.rounds {
        let mut row = vec![
            r.round.to_string(),
            r.model_accuracy.to_string(),
            r.rule_accuracy.to_string(),
            r.rule_fidelity.to_string(),
        ];
        row.extend((0..k).map(|i| r.weights.get(i).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |a| format!("{a:.4}"))
}

/// Global and per-client rules grouped by class. Comment lines start with
/// `#`; every other line is a rule in the standard text form. Empty when
/// the filter matches no class.
pub fn rules_report(results: &Results, classes: &[String]) -> String {
    let mut out = String::new();
    for rule in &results.global.rules {
        if !classes.is_empty() && !classes.contains(&rule.class_name) {
            continue;
        }
        let _ = writeln!(out, "# class {}", rule.class_name);
        let _ = writeln!(
            out,
            "# global: validation {} test {} fidelity {}",
            fmt_opt(rule.validation_accuracy),
            fmt_opt(rule.test_accuracy),
            fmt_opt(rule.test_fidelity)
        );
        let _ = writeln!(out, "{}", rule.text);
        for clause in &rule.clauses {
            if !clause.contributors.is_empty() {
                let ids: Vec<String> = clause.contributors.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "#   clients {}: {}", ids.join(","), clause.text);
            }
        }
        for client in &results.clients {
            let Some(text) = client.rules.get(rule.class_id) else {
                continue;
            };
            let mut note = match (client.local_model_accuracy, client.validation_score) {
                (Some(a), _) => format!("local accuracy {a:.4}"),
                (None, Some(s)) => format!("validation rule accuracy {s:.4}"),
                (None, None) => String::new(),
            };
            note.push_str(if client.accepted { ", accepted" } else { ", rejected" });
            let _ = writeln!(out, "# client {}: {}", client.client_id, note);
            let _ = writeln!(out, "{text}");
        }
    }
    if out.is_empty() {
        return out;
    }
    format!(
        "# method {} seed {} connector {}\n{out}",
        results.method.name(),
        results.seed,
        results.global.connector
    )
}

/// Write the bundle into `dir` and return its manifest.
pub fn write_bundle(dir: &Path, results: &Results) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    write_file(dir, RESULTS_FILE, results_json(results)?.as_bytes(), &mut files)?;
    write_file(dir, METRICS_FILE, &metrics_csv(results)?, &mut files)?;
    write_file(dir, RULES_FILE, rules_report(results, &[]).as_bytes(), &mut files)?;
    let manifest = Manifest {
        config_hash: results.config_hash.clone(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

/// Run one experiment and write its bundle to the configured directory.
pub fn run(config: &Config, workers: Option<usize>) -> Result<Results> {
    let results = run_experiment(config, workers)?;
    write_bundle(&config.output_dir, &results)?;
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: f64,
    pub method: Method,
    pub model_accuracy: f64,
    pub rule_accuracy: f64,
    pub rule_fidelity: f64,
    pub noisy_client_weight: Option<f64>,
    pub clean_client_weight: Option<f64>,
    pub noisy_clients: Vec<usize>,
}

pub fn level_dir(base: &Path, level: f64, method: Method) -> PathBuf {
    base.join(format!("level_{level:.2}")).join(method.name())
}

/// Every sweep method at every noise level; bundles go under
/// `output_dir/level_<t>/<method>` and a summary table at the top.
pub fn sweep(config: &Config, workers: Option<usize>) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &level in &config.sweep.levels {
        for &method in &config.sweep.methods {
            let mut cfg = config.clone();
            cfg.noise.t = level;
            cfg.method = method;
            cfg.output_dir = level_dir(&config.output_dir, level, method);
            let res = run(&cfg, workers)?;
            let test = &res.global.test;
            rows.push(SweepRow {
                level,
                method,
                model_accuracy: test.model_accuracy,
                rule_accuracy: test.rule_accuracy,
                rule_fidelity: test.rule_fidelity,
                noisy_client_weight: res.noisy_client_weight,
                clean_client_weight: res.clean_client_weight,
                noisy_clients: res.noisy_clients.clone(),
            });
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "level",
        "method",
        "model_accuracy",
        "rule_accuracy",
        "rule_fidelity",
        "noisy_client_weight",
        "clean_client_weight",
    ])?;
    for r in &rows {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.level.to_string(),
            r.method.name().to_string(),
            r.model_accuracy.to_string(),
            r.rule_accuracy.to_string(),
            r.rule_fidelity.to_string(),
            opt(r.noisy_client_weight),
            opt(r.clean_client_weight),
        ])?;
    }
    fs::create_dir_all(&config.output_dir)?;
    fs::write(
        config.output_dir.join("summary.csv"),
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))?,
    )?;
    Ok(rows)
}

pub fn load_results(bundle: &Path) -> Result<Results> {
    let path = if bundle.is_dir() { bundle.join(RESULTS_FILE) } else { bundle.to_path_buf() };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Rule report for a saved bundle, restricted to `classes` when non-empty.
pub fn inspect(bundle: &Path, classes: &[String]) -> Result<String> {
    Ok(rules_report(&load_results(bundle)?, classes))
}
