//! Positive/negative concept co-occurrence statistics and the connector
//! decision built on them.
//!
//! Counting is once per pair per rule. `pos[i][i]` counts rules containing
//! `f_i` positively; `pos[i][j]` (i ≠ j) counts rules containing both `f_i` and
//! `f_j` positively; `neg[i][j]` counts rules containing `f_i` and `¬f_j`.

use serde::{Deserialize, Serialize};

use super::{ConjunctiveRule, Connector};
use crate::error::{Error, Result};

pub const DEFAULT_D_THRESHOLD: f64 = 0.9;
pub const DEFAULT_E_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoOccurrenceMatrices {
    n: usize,
    pos: Vec<u64>,
    neg: Vec<u64>,
    /// Lengths of the rules that added at least one `neg` entry.
    pub contributing_rule_lengths: Vec<usize>,
}

impl CoOccurrenceMatrices {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            pos: vec![0; n * n],
            neg: vec![0; n * n],
            contributing_rule_lengths: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pos(&self, i: usize, j: usize) -> u64 {
        self.pos[i * self.n + j]
    }

    pub fn neg(&self, i: usize, j: usize) -> u64 {
        self.neg[i * self.n + j]
    }

    fn ingest(&mut self, rule: &ConjunctiveRule) {
        let n = self.n;
        let positives: Vec<usize> = rule.positives().collect();
        let negatives: Vec<usize> = rule.negatives().collect();
        for (a, &i) in positives.iter().enumerate() {
            self.pos[i * n + i] += 1;
            for &j in &positives[a + 1..] {
                self.pos[i * n + j] += 1;
                self.pos[j * n + i] += 1;
            }
            for &j in &negatives {
                self.neg[i * n + j] += 1;
            }
        }
        if !positives.is_empty() && !negatives.is_empty() {
            self.contributing_rule_lengths.push(rule.len());
        }
    }
}

pub fn build_cooccurrence(rules: &[ConjunctiveRule], n: usize) -> Result<CoOccurrenceMatrices> {
    if n == 0 && !rules.is_empty() {
        return Err(Error::InvalidInput(
            "co-occurrence over zero concepts with a non-empty rule set".into(),
        ));
    }
    let mut m = CoOccurrenceMatrices::zeros(n);
    for rule in rules {
        if rule.max_concept() >= n {
            return Err(Error::InvalidInput(format!(
                "rule `{rule}` references a concept outside 0..{n}"
            )));
        }
        m.ingest(rule);
    }
    Ok(m)
}

/// Share of positive co-occurrence mass on the diagonal; 0 when there is none.
pub fn diagonality(m: &CoOccurrenceMatrices) -> f64 {
    let total: u64 = m.pos.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let diag: u64 = (0..m.n).map(|i| m.pos(i, i)).sum();
    diag as f64 / total as f64
}

/// Largest negative co-occurrence row sum over the summed length of the
/// contributing rules; 0 when no rule contributed.
pub fn exclusivity(m: &CoOccurrenceMatrices) -> f64 {
    let denom: usize = m.contributing_rule_lengths.iter().sum();
    if denom == 0 {
        return 0.0;
    }
    let max_row = (0..m.n)
        .map(|i| (0..m.n).map(|j| m.neg(i, j)).sum::<u64>())
        .max()
        .unwrap_or(0);
    max_row as f64 / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectorStats {
    pub diagonality: f64,
    pub exclusivity: f64,
    pub chosen: Connector,
}

/// OR when either statistic reaches its threshold, AND otherwise.
pub fn select_connector(
    rules: &[ConjunctiveRule],
    n: usize,
    d_threshold: f64,
    e_threshold: f64,
) -> Result<ConnectorStats> {
    let m = build_cooccurrence(rules, n)?;
    let d = diagonality(&m);
    let e = exclusivity(&m);
    let chosen = if d >= d_threshold || e >= e_threshold {
        Connector::Or
    } else {
        Connector::And
    };
    Ok(ConnectorStats {
        diagonality: d,
        exclusivity: e,
        chosen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Literal;
    use proptest::prelude::*;

    fn conj(lits: &[Literal]) -> ConjunctiveRule {
        ConjunctiveRule::new(lits.iter().copied()).unwrap()
    }

    fn singleton_digits() -> Vec<ConjunctiveRule> {
        [1, 3, 5].iter().map(|&d| conj(&[Literal::pos(d)])).collect()
    }

    #[test]
    fn singleton_rules_fill_the_diagonal() {
        let m = build_cooccurrence(&singleton_digits(), 10).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let expect = u64::from(i == j && [1, 3, 5].contains(&i));
                assert_eq!(m.pos(i, j), expect, "pos[{i}][{j}]");
                assert_eq!(m.neg(i, j), 0);
            }
        }
        assert_eq!(diagonality(&m), 1.0);
        assert_eq!(exclusivity(&m), 0.0);
    }

    #[test]
    fn wings_and_beak() {
        let m = build_cooccurrence(&[conj(&[Literal::pos(0), Literal::pos(1)])], 2).unwrap();
        assert_eq!([m.pos(0, 0), m.pos(1, 1), m.pos(0, 1), m.pos(1, 0)], [1; 4]);
        assert_eq!(diagonality(&m), 0.5);
        assert_eq!(exclusivity(&m), 0.0);
    }

    #[test]
    fn negative_cooccurrence_and_exclusivity() {
        let rules = [
            conj(&[Literal::pos(1), Literal::neg(2), Literal::neg(3)]),
            conj(&[Literal::pos(2), Literal::neg(1)]),
        ];
        let m = build_cooccurrence(&rules, 4).unwrap();
        assert_eq!(m.neg(1, 2), 1);
        assert_eq!(m.neg(1, 3), 1);
        assert_eq!(m.neg(2, 1), 1);
        let total: u64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| m.neg(i, j)).sum();
        assert_eq!(total, 3);
        assert_eq!(m.contributing_rule_lengths, vec![3, 2]);
        assert!((exclusivity(&m) - 0.4).abs() < 1e-12);

        let single = build_cooccurrence(&[conj(&[Literal::pos(1), Literal::neg(2)])], 3).unwrap();
        assert_eq!(exclusivity(&single), 0.5);
    }

    #[test]
    fn degenerate_inputs() {
        let m = build_cooccurrence(&[], 4).unwrap();
        assert_eq!(diagonality(&m), 0.0);
        assert_eq!(exclusivity(&m), 0.0);
        assert!(build_cooccurrence(&[conj(&[Literal::pos(0)])], 0).is_err());
        assert!(build_cooccurrence(&[conj(&[Literal::pos(4)])], 4).is_err());
        assert!(build_cooccurrence(&[], 0).is_ok());
    }

    #[test]
    fn connector_choices() {
        let s = select_connector(&singleton_digits(), 10, 0.9, 0.8).unwrap();
        assert_eq!(s.chosen, Connector::Or);
        let s = select_connector(&[conj(&[Literal::pos(0), Literal::pos(1)])], 2, 0.9, 0.8).unwrap();
        assert_eq!((s.diagonality, s.exclusivity, s.chosen), (0.5, 0.0, Connector::And));
        let s = select_connector(&[], 3, 0.9, 0.8).unwrap();
        assert_eq!((s.diagonality, s.exclusivity, s.chosen), (0.0, 0.0, Connector::And));
    }

    fn arb_rule(n: usize) -> impl Strategy<Value = ConjunctiveRule> {
        prop::collection::btree_map(0..n, any::<bool>(), 1..=n).prop_map(|m| {
            ConjunctiveRule::new(m.into_iter().map(|(c, p)| {
                if p {
                    Literal::pos(c)
                } else {
                    Literal::neg(c)
                }
            }))
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_counts(rules in prop::collection::vec(arb_rule(6), 0..12)) {
            let n = 6;
            let m = build_cooccurrence(&rules, n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let mut p = 0u64;
                    let mut q = 0u64;
                    for r in &rules {
                        let has = |c: usize, pos: bool| r.literals().iter().any(|l| l.concept == c && l.is_positive() == pos);
                        if has(i, true) && has(j, true) { p += 1; }
                        if has(i, true) && has(j, false) { q += 1; }
                    }
                    prop_assert_eq!(m.pos(i, j), p);
                    prop_assert_eq!(m.pos(i, j), m.pos(j, i));
                    prop_assert_eq!(m.neg(i, j), q);
                    prop_assert!(p <= rules.len() as u64 && q <= rules.len() as u64);
                }
            }
            let d = diagonality(&m);
            let e = exclusivity(&m);
            prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&e));

            let any_pos = rules.iter().any(|r| r.positives().next().is_some());
            let no_pair = rules.iter().all(|r| r.positives().count() <= 1);
            if any_pos {
                prop_assert_eq!(d == 1.0, no_pair);
            }
            let no_mixed = rules.iter().all(|r| r.positives().next().is_none() || r.negatives().next().is_none());
            prop_assert_eq!(e == 0.0, no_mixed);
        }

        #[test]
        fn connector_ignores_rule_order(mut rules in prop::collection::vec(arb_rule(5), 0..10), seed in any::<u64>()) {
            let a = select_connector(&rules, 5, 0.9, 0.8).unwrap();
            let k = rules.len().max(1);
            rules.rotate_left((seed as usize) % k);
            rules.reverse();
            let b = select_connector(&rules, 5, 0.9, 0.8).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
