//! Experiment configuration: TOML schema, defaults and dotted overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lrxfl_core::datasets::{ClassSpec, ConjunctiveSpec};
use lrxfl_core::federation::{FederationConfig, Selection, Weighting};
use lrxfl_core::logic::Connector;
use lrxfl_core::model::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LrXfl,
    FedavgLogic,
    Ddt,
    Centralised,
    Ablated,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::LrXfl => "lr-xfl",
            Method::FedavgLogic => "fedavg-logic",
            Method::Ddt => "ddt",
            Method::Centralised => "centralised",
            Method::Ablated => "ablated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetName {
    Parity,
    Conjunctive,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub name: DatasetName,
    pub samples: usize,
    /// Seeds generation, partitioning and model initialisation.
    pub seed: u64,
    /// Probability of flipping each non-defining concept (conjunctive only).
    pub flip_noise: f64,
    /// Conjunctive class definitions; the built-in animal spec when empty.
    pub concepts: Vec<String>,
    pub class_specs: Vec<ClassSpec>,
    pub base_rate: f64,
    pub csv_path: Option<PathBuf>,
    pub label_column: String,
    pub default_threshold: f64,
    pub thresholds: BTreeMap<String, f64>,
    pub class_names: Option<Vec<String>>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            name: DatasetName::Parity,
            samples: 2000,
            seed: 0,
            flip_noise: 0.0,
            concepts: Vec::new(),
            class_specs: Vec::new(),
            base_rate: 0.5,
            csv_path: None,
            label_column: "label".into(),
            default_threshold: 0.5,
            thresholds: BTreeMap::new(),
            class_names: None,
        }
    }
}

impl DatasetSection {
    pub fn conjunctive_spec(&self) -> ConjunctiveSpec {
        if self.class_specs.is_empty() {
            let mut spec = lrxfl_core::datasets::default_conjunctive_spec();
            spec.base_rate = self.base_rate;
            return spec;
        }
        ConjunctiveSpec {
            concepts: self.concepts.clone(),
            classes: self.class_specs.clone(),
            base_rate: self.base_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationSection {
    pub clients: usize,
    pub rounds: usize,
    pub target: f64,
    pub client_epochs: usize,
    /// FedAvg-Logic keeps the accuracy filter unless this is false.
    pub fedavg_theta_filter: bool,
}

impl Default for FederationSection {
    fn default() -> Self {
        let f = FederationConfig::default();
        Self {
            clients: 10,
            rounds: f.rounds,
            target: f.target,
            client_epochs: f.client_epochs,
            fedavg_theta_filter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesSection {
    pub d_threshold: f64,
    pub e_threshold: f64,
    pub theta: f64,
    pub beam_width: usize,
    pub tau: f64,
}

impl Default for RulesSection {
    fn default() -> Self {
        let f = FederationConfig::default();
        Self {
            d_threshold: f.d_threshold,
            e_threshold: f.e_threshold,
            theta: f.theta,
            beam_width: f.beam_width,
            tau: ModelConfig::default().mask_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Fraction of clients made noisy.
    pub t: f64,
    /// Fraction of a noisy client's training labels shuffled.
    pub s: f64,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { t: 0.0, s: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub temperature: f64,
    pub entropy_coeff: f64,
    pub learning_rate: f64,
    /// Training epochs for the centralised baseline.
    pub epochs: usize,
    pub init_scale: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            temperature: m.temperature,
            entropy_coeff: m.entropy_coeff,
            learning_rate: m.learning_rate,
            epochs: m.epochs,
            init_scale: m.init_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    pub connector: Connector,
}

impl Default for AblationSection {
    fn default() -> Self {
        Self { connector: Connector::Or }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdtSection {
    pub max_depth: usize,
}

impl Default for DdtSection {
    fn default() -> Self {
        Self {
            max_depth: lrxfl_core::baselines::DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            levels: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            methods: vec![Method::LrXfl, Method::FedavgLogic],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub method: Method,
    /// Where the bundle goes; not part of the experiment identity.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub dataset: DatasetSection,
    pub federation: FederationSection,
    pub rules: RulesSection,
    pub noise: NoiseSection,
    pub model: ModelSection,
    pub ablation: AblationSection,
    pub ddt: DdtSection,
    pub sweep: SweepSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            method: Method::LrXfl,
            output_dir: PathBuf::from("results"),
            dataset: DatasetSection::default(),
            federation: FederationSection::default(),
            rules: RulesSection::default(),
            noise: NoiseSection::default(),
            model: ModelSection::default(),
            ablation: AblationSection::default(),
            ddt: DdtSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl Config {
    /// Parse TOML text, apply `(dotted key, raw value)` overrides, validate.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Schema(e.to_string()))?;
        for (key, raw) in overrides {
            apply_override(&mut table, key, raw)?;
        }
        let config: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(CliError::Schema(format!("{field}: {why}")));
        if self.dataset.samples == 0 && self.dataset.name != DatasetName::Csv {
            return bad("dataset.samples", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.dataset.flip_noise) {
            return bad("dataset.flip_noise", "must lie in [0, 1]");
        }
        if self.dataset.name == DatasetName::Csv && self.dataset.csv_path.is_none() {
            return bad("dataset.csv_path", "required when dataset.name = \"csv\"");
        }
        if self.federation.clients == 0 {
            return bad("federation.clients", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.noise.t) {
            return bad("noise.t", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.noise.s) {
            return bad("noise.s", "must lie in [0, 1]");
        }
        if self.federation.rounds == 0 {
            return bad("federation.rounds", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.federation.target) {
            return bad("federation.target", "must lie in [0, 1]");
        }
        for (field, value) in [
            ("rules.d_threshold", self.rules.d_threshold),
            ("rules.e_threshold", self.rules.e_threshold),
            ("rules.theta", self.rules.theta),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return bad(field, "must lie in [0, 1]");
            }
        }
        if self.rules.beam_width == 0 {
            return bad("rules.beam_width", "must be at least 1");
        }
        if !(self.model.temperature > 0.0 && self.model.temperature.is_finite()) {
            return bad("model.temperature", "must be positive");
        }
        if self.model.entropy_coeff.is_nan() || self.model.entropy_coeff < 0.0 {
            return bad("model.entropy_coeff", "must be nonnegative");
        }
        if !(self.model.learning_rate >= 0.0 && self.model.learning_rate.is_finite()) {
            return bad("model.learning_rate", "must be nonnegative");
        }
        if self.model.init_scale.is_nan() || self.model.init_scale < 0.0 {
            return bad("model.init_scale", "must be nonnegative");
        }
        if !(self.rules.tau > 0.0 && self.rules.tau <= 1.0) {
            return bad("rules.tau", "must lie in (0, 1]");
        }
        if self.sweep.levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("sweep.levels", "every level must lie in [0, 1]");
        }
        self.federation_config(None)
            .validate()
            .map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            temperature: self.model.temperature,
            entropy_coeff: self.model.entropy_coeff,
            mask_fraction: self.rules.tau,
            learning_rate: self.model.learning_rate,
            epochs: self.model.epochs,
            init_scale: self.model.init_scale,
            seed: self.dataset.seed,
        }
    }

    pub fn federation_config(&self, workers: Option<usize>) -> FederationConfig {
        FederationConfig {
            rounds: self.federation.rounds,
            target: self.federation.target,
            client_epochs: self.federation.client_epochs,
            d_threshold: self.rules.d_threshold,
            e_threshold: self.rules.e_threshold,
            theta: self.rules.theta,
            apply_theta: true,
            beam_width: self.rules.beam_width,
            forced_connector: None,
            selection: Selection::Beam,
            weighting: Weighting::RuleContribution,
            model: self.model_config(),
            workers,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Set `key` (dotted path) to `raw`, parsed as a TOML value when possible
/// and as a plain string otherwise.
pub fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let value = parse_value(raw);
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Schema(format!("malformed override key `{key}`")));
    }
    let (last, path) = parts.split_last().expect("non-empty");
    let mut cur = table;
    for p in path {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Schema(format!("override `{key}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Split `--a.b value` / `--a.b=value` pairs from raw arguments.
pub fn parse_override_args(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let key = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::Schema(format!("expected `--section.key value`, got `{arg}`")))?;
        if let Some((k, v)) = key.split_once('=') {
            out.push((k.to_string(), v.to_string()));
        } else {
            let v = it
                .next()
                .ok_or_else(|| CliError::Schema(format!("override `--{key}` needs a value")))?;
            out.push((key.to_string(), v.clone()));
        }
    }
    Ok(out)
}
