//! Propositional rules over named boolean concepts.
//!
//! A [`ConjunctiveRule`] is a conjunction of literals kept in canonical form
//! (sorted by concept, one literal per concept). A [`ClassRule`] joins
//! conjunctions with a [`Connector`]; AND rules are always flattened into a
//! single conjunction.

mod cooccurrence;
mod text;

pub use cooccurrence::{
    build_cooccurrence, diagonality, exclusivity, select_connector, CoOccurrenceMatrices,
    ConnectorStats, DEFAULT_D_THRESHOLD, DEFAULT_E_THRESHOLD,
};
pub use text::{parse_class_rule, parse_conjunction, render_class_rule, render_conjunction};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Negative,
    Positive,
}

/// `f_i` or `¬f_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub concept: usize,
    pub polarity: Polarity,
}

impl Literal {
    pub fn pos(concept: usize) -> Self {
        Self {
            concept,
            polarity: Polarity::Positive,
        }
    }

    pub fn neg(concept: usize) -> Self {
        Self {
            concept,
            polarity: Polarity::Negative,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.polarity == Polarity::Positive
    }

    /// Evaluate against a concept vector.
    pub fn eval(&self, sample: &[bool]) -> Result<bool> {
        match sample.get(self.concept) {
            Some(&v) => Ok(v == self.is_positive()),
            None => Err(Error::ConceptOutOfRange {
                literal: self.to_string(),
                concept: self.concept,
                len: sample.len(),
            }),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "f{}", self.concept)
        } else {
            write!(f, "~f{}", self.concept)
        }
    }
}

/// A non-empty conjunction of literals in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Literal>", into = "Vec<Literal>")]
pub struct ConjunctiveRule {
    literals: Vec<Literal>,
}

impl ConjunctiveRule {
    /// Canonicalize: sort by concept and drop repeated literals. Fails on an
    /// empty literal list or on `f ∧ ¬f`.
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self> {
        let mut literals: Vec<Literal> = literals.into_iter().collect();
        if literals.is_empty() {
            return Err(Error::InvalidInput(
                "a conjunctive rule needs at least one literal".into(),
            ));
        }
        literals.sort();
        literals.dedup();
        for pair in literals.windows(2) {
            if pair[0].concept == pair[1].concept {
                let lit = Literal::pos(pair[0].concept);
                return Err(Error::Contradiction {
                    concept: pair[0].concept,
                    first: lit.to_string(),
                    second: Literal::neg(pair[0].concept).to_string(),
                });
            }
        }
        Ok(Self { literals })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.literals
            .iter()
            .filter(|l| l.is_positive())
            .map(|l| l.concept)
    }

    pub fn negatives(&self) -> impl Iterator<Item = usize> + '_ {
        self.literals
            .iter()
            .filter(|l| !l.is_positive())
            .map(|l| l.concept)
    }

    pub fn max_concept(&self) -> usize {
        // literals are sorted by concept and never empty
        self.literals[self.literals.len() - 1].concept
    }

    pub fn eval(&self, sample: &[bool]) -> Result<bool> {
        let mut all = true;
        for lit in &self.literals {
            // keep scanning after a false literal so out-of-range ids always surface
            all &= lit.eval(sample)?;
        }
        Ok(all)
    }

    pub fn polarity_of(&self, concept: usize) -> Option<Polarity> {
        self.literals
            .binary_search_by_key(&concept, |l| l.concept)
            .ok()
            .map(|i| self.literals[i].polarity)
    }
}

impl TryFrom<Vec<Literal>> for ConjunctiveRule {
    type Error = Error;

    fn try_from(v: Vec<Literal>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ConjunctiveRule> for Vec<Literal> {
    fn from(r: ConjunctiveRule) -> Self {
        r.literals
    }
}

impl fmt::Display for ConjunctiveRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Connector {
    #[serde(alias = "and")]
    And,
    #[serde(alias = "or")]
    Or,
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connector::And => "AND",
            Connector::Or => "OR",
        })
    }
}

impl std::str::FromStr for Connector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AND" => Ok(Connector::And),
            "OR" => Ok(Connector::Or),
            other => Err(Error::InvalidInput(format!("unknown connector `{other}`"))),
        }
    }
}

/// Class-level explanation: clauses joined by a connector.
///
/// Clauses are sorted and deduplicated. An AND rule holds at most one clause
/// (the flattened conjunction). A rule without clauses is the absent rule and
/// evaluates to false everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassRule {
    pub class_id: usize,
    pub connector: Connector,
    clauses: Vec<ConjunctiveRule>,
}

impl ClassRule {
    pub fn absent(class_id: usize, connector: Connector) -> Self {
        Self {
            class_id,
            connector,
            clauses: Vec::new(),
        }
    }

    pub fn clauses(&self) -> &[ConjunctiveRule] {
        &self.clauses
    }

    pub fn is_absent(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn eval(&self, sample: &[bool]) -> Result<bool> {
        if self.clauses.is_empty() {
            return Ok(false);
        }
        let mut acc = self.connector == Connector::And;
        for clause in &self.clauses {
            let v = clause.eval(sample)?;
            acc = match self.connector {
                Connector::And => acc && v,
                Connector::Or => acc || v,
            };
        }
        Ok(acc)
    }

    /// Largest concept id referenced, if any.
    pub fn max_concept(&self) -> Option<usize> {
        self.clauses.iter().map(|c| c.max_concept()).max()
    }
}

/// Join clauses with `connector` into a class rule.
///
/// OR keeps the deduplicated clause list. AND merges every literal into one
/// conjunction and fails if the union contains both `f` and `¬f`.
pub fn fuse_clauses(
    clauses: &[ConjunctiveRule],
    connector: Connector,
    class_id: usize,
) -> Result<ClassRule> {
    let mut uniq: Vec<ConjunctiveRule> = clauses.to_vec();
    uniq.sort();
    uniq.dedup();
    if uniq.is_empty() {
        return Ok(ClassRule::absent(class_id, connector));
    }
    match connector {
        Connector::Or => Ok(ClassRule {
            class_id,
            connector,
            clauses: uniq,
        }),
        Connector::And => {
            // concept -> (polarity, index of first clause that set it)
            let mut seen: BTreeMap<usize, (Polarity, usize)> = BTreeMap::new();
            for (idx, clause) in uniq.iter().enumerate() {
                for lit in clause.literals() {
                    match seen.get(&lit.concept) {
                        Some(&(p, src)) if p != lit.polarity => {
                            return Err(Error::Contradiction {
                                concept: lit.concept,
                                first: uniq[src].to_string(),
                                second: clause.to_string(),
                            });
                        }
                        Some(_) => {}
                        None => {
                            seen.insert(lit.concept, (lit.polarity, idx));
                        }
                    }
                }
            }
            let merged = ConjunctiveRule::new(seen.into_iter().map(|(concept, (polarity, _))| {
                Literal { concept, polarity }
            }))?;
            Ok(ClassRule {
                class_id,
                connector,
                clauses: vec![merged],
            })
        }
    }
}
