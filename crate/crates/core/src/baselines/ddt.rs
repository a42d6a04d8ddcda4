use serde::{Deserialize, Serialize};

use crate::datasets::ConceptDataset;
use crate::error::{Error, Result};
use crate::federation::Prepared;
use crate::logic::{fuse_clauses, ClassRule, ConjunctiveRule, Connector, Literal};
use crate::metrics::{evaluate, mean_rule_accuracy, MetricsReport};
use crate::model::Classifier;

pub const DEFAULT_MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class_id: usize,
        samples: usize,
    },
    Split {
        concept: usize,
        when_false: Box<Node>,
        when_true: Box<Node>,
    },
}

/// Binary tree over boolean concepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub n_classes: usize,
    pub n_concepts: usize,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { when_false, when_true, .. } => 1 + depth(when_false).max(depth(when_true)),
            }
        }
        depth(&self.root)
    }
}

impl Classifier for DecisionTree {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_class(&self, sample: &[bool]) -> Result<usize> {
        if sample.len() != self.n_concepts {
            return Err(Error::InvalidInput(format!(
                "sample has {} concepts, tree expects {}",
                sample.len(),
                self.n_concepts
            )));
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class_id, .. } => return Ok(*class_id),
                Node::Split { concept, when_false, when_true } => {
                    node = if sample[*concept] { when_true } else { when_false };
                }
            }
        }
    }
}

fn class_counts(data: &ConceptDataset, rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in rows {
        counts[data.labels[i]] += 1;
    }
    counts
}

fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// Most frequent class, lowest id on ties.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn grow(data: &ConceptDataset, rows: &[usize], depth_left: usize) -> Node {
    let n_classes = data.n_classes();
    let counts = class_counts(data, rows, n_classes);
    let leaf = Node::Leaf {
        class_id: majority(&counts),
        samples: rows.len(),
    };
    let parent = entropy(&counts);
    if depth_left == 0 || parent == 0.0 {
        return leaf;
    }
    let mut best: Option<(usize, f64)> = None;
    for j in 0..data.n_concepts() {
        let (t, f): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| data.concepts[i][j]);
        if t.is_empty() || f.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        let child = t.len() as f64 / n * entropy(&class_counts(data, &t, n_classes))
            + f.len() as f64 / n * entropy(&class_counts(data, &f, n_classes));
        let gain = parent - child;
        if gain > 1e-12 && best.is_none_or(|(_, g)| gain > g + 1e-12) {
            best = Some((j, gain));
        }
    }
    let Some((concept, _)) = best else {
        return leaf;
    };
    let (t, f): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| data.concepts[i][concept]);
    Node::Split {
        concept,
        when_false: Box::new(grow(data, &f, depth_left - 1)),
        when_true: Box::new(grow(data, &t, depth_left - 1)),
    }
}

/// Information-gain tree; ties go to the lowest concept id. A node with no
/// positive-gain split becomes a majority leaf.
pub fn fit_tree(data: &ConceptDataset, max_depth: usize) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot fit a tree on an empty dataset".into()));
    }
    let rows: Vec<usize> = (0..data.len()).collect();
    Ok(DecisionTree {
        root: grow(data, &rows, max_depth),
        n_classes: data.n_classes(),
        n_concepts: data.n_concepts(),
    })
}

/// Per class, the OR of the root-to-leaf paths ending in that class. A
/// single-leaf tree yields the tautology `f0 | ~f0` for its class.
pub fn path_rules(tree: &DecisionTree) -> Result<Vec<ClassRule>> {
    fn walk(node: &Node, path: &mut Vec<Literal>, out: &mut [Vec<ConjunctiveRule>]) -> Result<()> {
        match node {
            Node::Leaf { class_id, .. } => {
                if path.is_empty() {
                    out[*class_id].push(ConjunctiveRule::new([Literal::pos(0)])?);
                    out[*class_id].push(ConjunctiveRule::new([Literal::neg(0)])?);
                } else {
                    out[*class_id].push(ConjunctiveRule::new(path.iter().copied())?);
                }
            }
            Node::Split { concept, when_false, when_true } => {
                path.push(Literal::neg(*concept));
                walk(when_false, path, out)?;
                path.pop();
                path.push(Literal::pos(*concept));
                walk(when_true, path, out)?;
                path.pop();
            }
        }
        Ok(())
    }
    let mut per_class = vec![Vec::new(); tree.n_classes];
    walk(&tree.root, &mut Vec::new(), &mut per_class)?;
    per_class
        .iter()
        .enumerate()
        .map(|(c, clauses)| fuse_clauses(clauses, Connector::Or, c))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdtResult {
    pub tree: DecisionTree,
    pub rules: Vec<ClassRule>,
    /// Client whose tree was adopted.
    pub chosen_client: usize,
    /// Mean server-validation rule accuracy of every client tree.
    pub client_scores: Vec<f64>,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

/// Every client fits a tree on its training split; the server adopts the
/// tree with the best validation rule accuracy (lowest client id on ties).
pub fn run_ddt(prepared: &Prepared, max_depth: usize) -> Result<DdtResult> {
    let part = &prepared.partition;
    if part.clients.is_empty() {
        return Err(Error::InvalidInput("no clients".into()));
    }
    let mut trees = Vec::with_capacity(part.clients.len());
    let mut scores = Vec::with_capacity(part.clients.len());
    for client in &part.clients {
        let tree = fit_tree(&client.train, max_depth)?;
        let rules = path_rules(&tree)?;
        scores.push(mean_rule_accuracy(&rules, &part.server_validation)?);
        trees.push((tree, rules));
    }
    let mut chosen = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[chosen] {
            chosen = k;
        }
    }
    let (tree, rules) = trees.swap_remove(chosen);
    Ok(DdtResult {
        validation: evaluate(&rules, &tree, &part.server_validation)?,
        test: evaluate(&rules, &tree, &part.server_test)?,
        tree,
        rules,
        chosen_client: chosen,
        client_scores: scores,
    })
}
