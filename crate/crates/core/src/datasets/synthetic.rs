use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ConceptDataset;
use crate::error::{Error, Result};

/// One-hot digit concepts `d0..d9`, labelled `even`/`odd` by the hot digit.
pub fn gen_parity(samples: usize, seed: u64) -> ConceptDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut concepts = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for _ in 0..samples {
        let digit = rng.gen_range(0..10usize);
        concepts.push((0..10).map(|d| d == digit).collect());
        labels.push(digit % 2);
    }
    ConceptDataset {
        concepts,
        labels,
        concept_names: (0..10).map(|d| format!("d{d}")).collect(),
        class_names: vec!["even".into(), "odd".into()],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    #[serde(default)]
    pub positive: Vec<String>,
    #[serde(default)]
    pub negative: Vec<String>,
}

/// Vocabulary plus one defining conjunction per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjunctiveSpec {
    pub concepts: Vec<String>,
    pub classes: Vec<ClassSpec>,
    /// Probability that a non-defining concept is true.
    #[serde(default = "default_base_rate")]
    pub base_rate: f64,
}

fn default_base_rate() -> f64 {
    0.5
}

/// Bird-style vocabulary where every class is a conjunction of two
/// co-occurring concepts and the pairs overlap across classes.
pub fn default_conjunctive_spec() -> ConjunctiveSpec {
    let concepts = [
        "has_wings",
        "has_beak",
        "has_fins",
        "has_scales",
        "has_fur",
        "has_tail",
        "is_small",
        "is_colourful",
        "lives_in_water",
        "nocturnal",
    ];
    let class = |name: &str, pos: [&str; 2]| ClassSpec {
        name: name.into(),
        positive: pos.iter().map(|s| s.to_string()).collect(),
        negative: Vec::new(),
    };
    ConjunctiveSpec {
        concepts: concepts.iter().map(|s| s.to_string()).collect(),
        classes: vec![
            class("bird", ["has_wings", "has_beak"]),
            class("fish", ["has_fins", "has_scales"]),
            class("mammal", ["has_fur", "has_tail"]),
        ],
        base_rate: 0.5,
    }
}

struct Compiled {
    /// per class: (concept, required value)
    defining: Vec<Vec<(usize, bool)>>,
}

impl Compiled {
    fn satisfies(&self, class: usize, row: &[bool]) -> bool {
        self.defining[class].iter().all(|&(c, v)| row[c] == v)
    }
}

fn compile(spec: &ConjunctiveSpec) -> Result<Compiled> {
    let lookup = |name: &str| {
        spec.concepts
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidInput(format!("class spec names unknown concept `{name}`")))
    };
    if spec.classes.len() < 2 {
        return Err(Error::InvalidInput("need at least two classes".into()));
    }
    if !(0.0..=1.0).contains(&spec.base_rate) {
        return Err(Error::InvalidInput("base_rate must lie in [0, 1]".into()));
    }
    let mut defining = Vec::new();
    for cls in &spec.classes {
        let mut lits = Vec::new();
        for p in &cls.positive {
            lits.push((lookup(p)?, true));
        }
        for n in &cls.negative {
            lits.push((lookup(n)?, false));
        }
        if lits.is_empty() {
            return Err(Error::InvalidInput(format!("class `{}` has no defining literal", cls.name)));
        }
        lits.sort();
        if lits.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput(format!(
                "class `{}` mentions a concept twice",
                cls.name
            )));
        }
        defining.push(lits);
    }
    Ok(Compiled { defining })
}

/// Samples whose class is defined by a ground-truth conjunction.
///
/// Classes are drawn uniformly. Defining concepts are fixed, the rest are
/// independent draws at `base_rate`; `flip_noise` then flips each
/// non-defining concept with that probability. Rows that would also satisfy
/// another class's conjunction are redrawn, so labels are a deterministic
/// function of the concepts.
pub fn gen_conjunctive(
    samples: usize,
    spec: &ConjunctiveSpec,
    flip_noise: f64,
    seed: u64,
) -> Result<ConceptDataset> {
    if !(0.0..=1.0).contains(&flip_noise) {
        return Err(Error::InvalidInput("flip_noise must lie in [0, 1]".into()));
    }
    let compiled = compile(spec)?;
    let n = spec.concepts.len();
    let n_classes = spec.classes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut concepts = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    const MAX_TRIES: usize = 10_000;
    for _ in 0..samples {
        let class = rng.gen_range(0..n_classes);
        let mut accepted = None;
        for _ in 0..MAX_TRIES {
            let mut row: Vec<bool> = (0..n).map(|_| rng.gen_bool(spec.base_rate)).collect();
            for &(c, v) in &compiled.defining[class] {
                row[c] = v;
            }
            if flip_noise > 0.0 {
                for (j, x) in row.iter_mut().enumerate() {
                    let defining = compiled.defining[class].iter().any(|&(c, _)| c == j);
                    if !defining && rng.gen_bool(flip_noise) {
                        *x = !*x;
                    }
                }
            }
            let ambiguous = (0..n_classes).any(|k| k != class && compiled.satisfies(k, &row));
            if !ambiguous {
                accepted = Some(row);
                break;
            }
        }
        let row = accepted.ok_or_else(|| {
            Error::InvalidInput(format!(
                "class `{}` cannot be sampled without satisfying another class",
                spec.classes[class].name
            ))
        })?;
        concepts.push(row);
        labels.push(class);
    }
    Ok(ConceptDataset {
        concepts,
        labels,
        concept_names: spec.concepts.clone(),
        class_names: spec.classes.iter().map(|c| c.name.clone()).collect(),
    })
}
