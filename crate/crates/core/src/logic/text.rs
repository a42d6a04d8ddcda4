//! Text form of rules.
//!
//! ```text
//! has_wings & ~is_small <-> bird             AND rule (one flattened conjunction)
//! (d1 & ~d0) | (d3 & ~d0) <-> odd            OR rule, one parenthesised clause each
//! - <-> even                                 absent AND rule
//! () <-> even                                absent OR rule
//! ```
//!
//! Concept and class names must not contain whitespace or any of `&|()~`.

use std::collections::HashMap;

use super::{fuse_clauses, ClassRule, ConjunctiveRule, Connector, Literal};
use crate::error::{Error, Result};

pub fn render_conjunction(rule: &ConjunctiveRule, concept_names: &[String]) -> String {
    rule.literals()
        .iter()
        .map(|l| {
            let name = concept_names
                .get(l.concept)
                .cloned()
                .unwrap_or_else(|| format!("f{}", l.concept));
            if l.is_positive() {
                name
            } else {
                format!("~{name}")
            }
        })
        .collect::<Vec<_>>()
        .join(" & ")
}

pub fn render_class_rule(rule: &ClassRule, concept_names: &[String], class_names: &[String]) -> String {
    let class = class_names
        .get(rule.class_id)
        .cloned()
        .unwrap_or_else(|| format!("class{}", rule.class_id));
    let body = match (rule.connector, rule.clauses()) {
        (Connector::And, []) => "-".to_string(),
        (Connector::Or, []) => "()".to_string(),
        (Connector::And, clauses) => clauses
            .iter()
            .map(|c| render_conjunction(c, concept_names))
            .collect::<Vec<_>>()
            .join(" & "),
        (Connector::Or, clauses) => clauses
            .iter()
            .map(|c| format!("({})", render_conjunction(c, concept_names)))
            .collect::<Vec<_>>()
            .join(" | "),
    };
    format!("{body} <-> {class}")
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Name(String),
    Not,
    And,
    Or,
    Open,
    Close,
}

fn tokenize(s: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut name = String::new();
    let flush = |name: &mut String, out: &mut Vec<Token>| {
        if !name.is_empty() {
            out.push(Token::Name(std::mem::take(name)));
        }
    };
    for ch in s.chars() {
        let tok = match ch {
            '~' => Some(Token::Not),
            '&' => Some(Token::And),
            '|' => Some(Token::Or),
            '(' => Some(Token::Open),
            ')' => Some(Token::Close),
            c if c.is_whitespace() => None,
            c => {
                name.push(c);
                continue;
            }
        };
        flush(&mut name, &mut out);
        if let Some(t) = tok {
            out.push(t);
        }
    }
    flush(&mut name, &mut out);
    out
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    concepts: HashMap<&'a str, usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::RuleSyntax(format!("expected {want:?}, found {other:?}"))),
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let negated = if self.peek() == Some(&Token::Not) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.next() {
            Some(Token::Name(n)) => {
                let &concept = self
                    .concepts
                    .get(n.as_str())
                    .ok_or_else(|| Error::RuleSyntax(format!("unknown concept `{n}`")))?;
                Ok(if negated {
                    Literal::neg(concept)
                } else {
                    Literal::pos(concept)
                })
            }
            other => Err(Error::RuleSyntax(format!("expected a concept name, found {other:?}"))),
        }
    }

    fn conjunction(&mut self) -> Result<ConjunctiveRule> {
        let mut lits = vec![self.literal()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            lits.push(self.literal()?);
        }
        ConjunctiveRule::new(lits)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }
}

fn parser<'a>(body: &str, concept_names: &'a [String]) -> Parser<'a> {
    Parser {
        tokens: tokenize(body),
        pos: 0,
        concepts: concept_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect(),
    }
}

pub fn parse_conjunction(text: &str, concept_names: &[String]) -> Result<ConjunctiveRule> {
    let mut p = parser(text, concept_names);
    let rule = p.conjunction()?;
    if !p.at_end() {
        return Err(Error::RuleSyntax(format!("trailing input in `{text}`")));
    }
    Ok(rule)
}

pub fn parse_class_rule(text: &str, concept_names: &[String], class_names: &[String]) -> Result<ClassRule> {
    let (body, class) = text
        .rsplit_once("<->")
        .ok_or_else(|| Error::RuleSyntax(format!("missing `<->` in `{text}`")))?;
    let class = class.trim();
    let class_id = class_names
        .iter()
        .position(|c| c == class)
        .ok_or_else(|| Error::RuleSyntax(format!("unknown class `{class}`")))?;
    let body = body.trim();
    if body == "-" {
        return Ok(ClassRule::absent(class_id, Connector::And));
    }
    let mut p = parser(body, concept_names);
    if p.peek() != Some(&Token::Open) {
        let rule = p.conjunction()?;
        if !p.at_end() {
            return Err(Error::RuleSyntax(format!("trailing input in `{body}`")));
        }
        return fuse_clauses(&[rule], Connector::And, class_id);
    }
    if p.tokens == [Token::Open, Token::Close] {
        return Ok(ClassRule::absent(class_id, Connector::Or));
    }
    let mut clauses = Vec::new();
    loop {
        p.expect(Token::Open)?;
        clauses.push(p.conjunction()?);
        p.expect(Token::Close)?;
        match p.next() {
            None => break,
            Some(Token::Or) => continue,
            Some(t) => return Err(Error::RuleSyntax(format!("expected `|`, found {t:?}"))),
        }
    }
    fuse_clauses(&clauses, Connector::Or, class_id)
}
