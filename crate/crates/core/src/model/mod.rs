//! Relevance-gated linear concept classifier and the rule extraction that
//! reads its per-class concept masks.
//!
//! For class `c` the concept relevance is `softmax(|W_c| / T)`. Each weight is
//! gated by its relevance relative to the class maximum, so the class score is
//! `Σ_j (relevance_cj / max_k relevance_ck) · W_cj · x_j + b_c`. Training
//! minimises the mean cross-entropy plus `λ · Σ_c H(relevance_c)` by
//! full-batch gradient descent.

mod truth_table;

pub use truth_table::{build_truth_table, extract_sample_rules, TruthTable};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::ConceptDataset;
use crate::error::{Error, Result};

/// Anything that maps a concept vector to a class.
pub trait Classifier {
    fn n_classes(&self) -> usize;
    fn predict_class(&self, sample: &[bool]) -> Result<usize>;

    fn predict_all(&self, data: &ConceptDataset) -> Result<Vec<usize>> {
        data.concepts.iter().map(|x| self.predict_class(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub temperature: f64,
    pub entropy_coeff: f64,
    pub mask_fraction: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Initial weights are drawn uniformly from `±init_scale`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            entropy_coeff: 1.0,
            mask_fraction: 0.5,
            learning_rate: 0.1,
            epochs: 200,
            init_scale: 0.01,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidInput("temperature must be positive".into()));
        }
        if self.entropy_coeff.is_nan() || self.entropy_coeff < 0.0 {
            return Err(Error::InvalidInput("entropy_coeff must be nonnegative".into()));
        }
        if !(self.mask_fraction > 0.0 && self.mask_fraction <= 1.0) {
            return Err(Error::InvalidInput("mask_fraction must lie in (0, 1]".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning_rate must be nonnegative".into()));
        }
        if self.init_scale.is_nan() || self.init_scale < 0.0 {
            return Err(Error::InvalidInput("init_scale must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Flat parameter snapshot exchanged between clients and the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub n_classes: usize,
    pub n_concepts: usize,
    /// Row-major `n_classes × n_concepts`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl ModelParameters {
    pub fn zeros(n_classes: usize, n_concepts: usize) -> Self {
        Self {
            n_classes,
            n_concepts,
            weights: vec![0.0; n_classes * n_concepts],
            biases: vec![0.0; n_classes],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_classes, self.n_concepts)
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.n_concepts..(class + 1) * self.n_concepts]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }

    fn check_shape(&self, other: &ModelParameters) -> Result<()> {
        if self.shape() != other.shape()
            || other.weights.len() != self.weights.len()
            || other.biases.len() != self.biases.len()
        {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                actual: other.shape(),
            });
        }
        Ok(())
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyClassifier {
    pub params: ModelParameters,
    pub config: ModelConfig,
}

impl EntropyClassifier {
    /// Seeded uniform initialisation in `±init_scale`.
    pub fn new(n_classes: usize, n_concepts: usize, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        if n_classes == 0 || n_concepts == 0 {
            return Err(Error::InvalidInput("model needs at least one class and one concept".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ModelParameters::zeros(n_classes, n_concepts);
        if config.init_scale > 0.0 {
            for w in &mut params.weights {
                *w = rng.gen_range(-config.init_scale..=config.init_scale);
            }
        }
        Ok(Self { params, config })
    }

    pub fn from_parameters(params: ModelParameters, config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { params, config })
    }

    pub fn n_concepts(&self) -> usize {
        self.params.n_concepts
    }

    pub fn load_parameters(&mut self, params: &ModelParameters) -> Result<()> {
        self.params.check_shape(params)?;
        self.params = params.clone();
        Ok(())
    }

    pub fn relevance(&self, class: usize) -> Vec<f64> {
        relevance_of(&self.params, class, self.config.temperature)
    }

    /// Concepts whose relevance reaches `mask_fraction` of the class maximum.
    pub fn active_mask(&self, class: usize) -> Vec<bool> {
        let rel = self.relevance(class);
        let max = rel.iter().copied().fold(0.0, f64::max);
        let cut = self.config.mask_fraction * max;
        rel.iter().map(|&r| r >= cut).collect()
    }

    pub fn scores(&self, sample: &[bool]) -> Result<Vec<f64>> {
        if sample.len() != self.n_concepts() {
            return Err(Error::InvalidInput(format!(
                "sample has {} concepts, model expects {}",
                sample.len(),
                self.n_concepts()
            )));
        }
        let gates: Vec<Vec<f64>> = (0..self.params.n_classes).map(|c| gate_of(&self.params, c, self.config.temperature)).collect();
        Ok(scores_with(&self.params, &gates, sample))
    }

    /// Argmax class (lowest id on ties) and the per-class scores.
    pub fn predict(&self, sample: &[bool]) -> Result<(usize, Vec<f64>)> {
        let scores = self.scores(sample)?;
        Ok((argmax(&scores), scores))
    }

    /// Regularised training loss on `data`.
    pub fn loss(&self, data: &ConceptDataset) -> f64 {
        objective(&self.params, &self.config, data)
    }

    /// Analytic gradient of [`EntropyClassifier::loss`].
    pub fn gradient(&self, data: &ConceptDataset) -> ModelParameters {
        gradient(&self.params, &self.config, data)
    }

    /// Full-batch gradient descent for the configured number of epochs.
    pub fn train(&mut self, data: &ConceptDataset) -> Result<Vec<f64>> {
        self.train_epochs(data, self.config.epochs)
    }

    /// Returns the loss recorded before each update plus the final loss.
    pub fn train_epochs(&mut self, data: &ConceptDataset, epochs: usize) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
        }
        if data.n_concepts() != self.n_concepts() || data.n_classes() != self.params.n_classes {
            return Err(Error::ShapeMismatch {
                expected: self.params.shape(),
                actual: (data.n_classes(), data.n_concepts()),
            });
        }
        let lr = self.config.learning_rate;
        let mut trace = Vec::with_capacity(epochs + 1);
        for epoch in 0..epochs {
            let loss = self.loss(data);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            trace.push(loss);
            let grad = self.gradient(data);
            for (w, g) in self.params.weights.iter_mut().zip(&grad.weights) {
                *w -= lr * g;
            }
            for (b, g) in self.params.biases.iter_mut().zip(&grad.biases) {
                *b -= lr * g;
            }
        }
        let loss = self.loss(data);
        if !loss.is_finite() || !self.params.is_finite() {
            return Err(Error::Divergence { epoch: epochs, loss });
        }
        trace.push(loss);
        Ok(trace)
    }
}

impl Classifier for EntropyClassifier {
    fn n_classes(&self) -> usize {
        self.params.n_classes
    }

    fn predict_class(&self, sample: &[bool]) -> Result<usize> {
        Ok(self.predict(sample)?.0)
    }

    fn predict_all(&self, data: &ConceptDataset) -> Result<Vec<usize>> {
        let gates: Vec<Vec<f64>> = (0..self.params.n_classes).map(|c| gate_of(&self.params, c, self.config.temperature)).collect();
        data.concepts
            .iter()
            .map(|x| {
                if x.len() != self.n_concepts() {
                    return Err(Error::InvalidInput("sample length mismatch".into()));
                }
                Ok(argmax(&scores_with(&self.params, &gates, x)))
            })
            .collect()
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in v.iter().enumerate() {
        if s > v[best] {
            best = i;
        }
    }
    best
}

fn relevance_of(params: &ModelParameters, class: usize, temperature: f64) -> Vec<f64> {
    let logits: Vec<f64> = params.row(class).iter().map(|w| w.abs() / temperature).collect();
    softmax(&logits)
}

/// Relevance divided by its class maximum, so the top concept passes at 1.
fn gate_of(params: &ModelParameters, class: usize, temperature: f64) -> Vec<f64> {
    let row = params.row(class);
    let top = row.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    row.iter().map(|w| ((w.abs() - top) / temperature).exp()).collect()
}

/// Lowest index of the largest |weight| in a row.
fn top_concept(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, w) in row.iter().enumerate() {
        if w.abs() > row[best].abs() {
            best = j;
        }
    }
    best
}

fn scores_with(params: &ModelParameters, gates: &[Vec<f64>], x: &[bool]) -> Vec<f64> {
    (0..params.n_classes)
        .map(|c| {
            let w = params.row(c);
            let gated: f64 = (0..params.n_concepts)
                .filter(|&j| x[j])
                .map(|j| gates[c][j] * w[j])
                .sum();
            gated + params.biases[c]
        })
        .collect()
}

fn objective(params: &ModelParameters, config: &ModelConfig, data: &ConceptDataset) -> f64 {
    let t = config.temperature;
    let rel: Vec<Vec<f64>> = (0..params.n_classes).map(|c| relevance_of(params, c, t)).collect();
    let gates: Vec<Vec<f64>> = (0..params.n_classes).map(|c| gate_of(params, c, t)).collect();
    let mut ce = 0.0;
    for (x, &y) in data.concepts.iter().zip(&data.labels) {
        let s = scores_with(params, &gates, x);
        let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        ce += lse - s[y];
    }
    ce /= data.len() as f64;
    let reg: f64 = rel.iter().map(|r| entropy(r)).sum();
    ce + config.entropy_coeff * reg
}

fn gradient(params: &ModelParameters, config: &ModelConfig, data: &ConceptDataset) -> ModelParameters {
    let t = config.temperature;
    let (nc, n) = params.shape();
    let rel: Vec<Vec<f64>> = (0..nc).map(|c| relevance_of(params, c, t)).collect();
    let gates: Vec<Vec<f64>> = (0..nc).map(|c| gate_of(params, c, t)).collect();
    let tops: Vec<usize> = (0..nc).map(|c| top_concept(params.row(c))).collect();
    let mut grad = ModelParameters::zeros(nc, n);
    let inv_s = 1.0 / data.len() as f64;

    // d(score_c)/dW_ck = g_ck·x_k + sgn(W_ck)/T · (g_ck·W_ck·x_k − [k = top_c]·u_c),
    // with u_c = Σ_j g_cj W_cj x_j the gated part of the score.
    for (x, &y) in data.concepts.iter().zip(&data.labels) {
        let s = scores_with(params, &gates, x);
        let p = softmax(&s);
        for c in 0..nc {
            let e = (p[c] - if c == y { 1.0 } else { 0.0 }) * inv_s;
            if e == 0.0 {
                continue;
            }
            grad.biases[c] += e;
            let w = params.row(c);
            let u = s[c] - params.biases[c];
            for k in 0..n {
                let xk = if x[k] { 1.0 } else { 0.0 };
                let sign = w[k].signum() * f64::from(w[k] != 0.0);
                let g = gates[c][k];
                let top = if k == tops[c] { u } else { 0.0 };
                grad.weights[c * n + k] += e * (g * xk + sign / t * (g * w[k] * xk - top));
            }
        }
    }

    if config.entropy_coeff > 0.0 {
        // dH/da_k = −r_k (ln r_k + H)
        for (c, r) in rel.iter().enumerate() {
            let h = entropy(r);
            let w = params.row(c);
            for k in 0..n {
                let sign = w[k].signum() * f64::from(w[k] != 0.0);
                let dh = -r[k] * (r[k].ln() + h);
                grad.weights[c * n + k] += config.entropy_coeff * sign / t * dh;
            }
        }
    }
    grad
}
