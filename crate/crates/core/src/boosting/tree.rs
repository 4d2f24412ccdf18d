//! Regression trees over binned features, grown level by level from
//! per-leaf histograms.
//!
//! Serialized layout (JSON): an ensemble is
//! `{"learning_rate", "fraction_bits", "edges", "trees": [..]}` and each tree
//! node is either `{"split": {"feature", "threshold", "left", "right"}}` or
//! `{"leaf": {"weight": "<fixed-point integer>"}}`. Weights are strings so
//! runs can be diffed without float formatting in the way.

use serde::{Deserialize, Serialize};

use super::histogram::{BinEdges, BinStats, BinnedMatrix, FeatureHistogram};
use super::loss::{softplus, Label};
use super::split::{best_split, leaf_weight_fp, SplitParams};

mod weight_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &i64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: u16,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        #[serde(with = "weight_string")]
        weight: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegTree {
    root: TreeNode,
}

impl RegTree {
    pub fn leaf(weight: i64) -> Self {
        Self {
            root: TreeNode::Leaf { weight },
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Fixed-point output for one binned row.
    pub fn output(&self, bins: &[u16]) -> i64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if bins[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn walk(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }

    /// Every threshold indexes a bin boundary of its feature.
    pub fn is_valid_for(&self, shape: &[usize]) -> bool {
        fn walk(n: &TreeNode, shape: &[usize]) -> bool {
            match n {
                TreeNode::Leaf { .. } => true,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    *feature < shape.len()
                        && (*threshold as usize) < shape[*feature]
                        && walk(left, shape)
                        && walk(right, shape)
                }
            }
        }
        walk(&self.root, shape)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    learning_rate: f64,
    fraction_bits: u32,
    edges: BinEdges,
    trees: Vec<RegTree>,
}

impl Ensemble {
    pub fn new(learning_rate: f64, fraction_bits: u32, edges: BinEdges) -> Self {
        Self {
            learning_rate,
            fraction_bits,
            edges,
            trees: Vec::new(),
        }
    }

    pub fn push(&mut self, tree: RegTree) {
        self.trees.push(tree);
    }

    pub fn trees(&self) -> &[RegTree] {
        &self.trees
    }

    pub fn edges(&self) -> &BinEdges {
        &self.edges
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Sum of fixed-point tree outputs.
    pub fn raw_output(&self, bins: &[u16]) -> i64 {
        self.trees.iter().map(|t| t.output(bins)).sum()
    }

    /// `eta * sum of tree outputs`.
    pub fn margin_from_raw(&self, raw: i64) -> f64 {
        self.learning_rate * raw as f64 / (1u64 << self.fraction_bits) as f64
    }

    pub fn predict_binned(&self, bins: &[u16]) -> f64 {
        self.margin_from_raw(self.raw_output(bins))
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        let bins: Vec<u16> = features
            .iter()
            .enumerate()
            .map(|(k, &v)| self.edges.bin(k, v))
            .collect();
        self.predict_binned(&bins)
    }

    pub fn predict_all(&self, binned: &BinnedMatrix) -> Vec<f64> {
        (0..binned.n_rows())
            .map(|i| self.predict_binned(binned.row(i)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub logloss: f64,
}

/// Accuracy thresholds the margin at zero; a margin of exactly zero predicts
/// the majority class of `labels`. Log loss is the logistic one.
pub fn metrics(margins: &[f64], labels: &[Label]) -> Metrics {
    assert_eq!(margins.len(), labels.len());
    if labels.is_empty() {
        return Metrics {
            accuracy: 0.0,
            logloss: 0.0,
        };
    }
    let positives = labels.iter().filter(|l| l.is_positive()).count();
    let majority = Label::from_binary(2 * positives > labels.len());
    let mut correct = 0usize;
    let mut loss = 0.0;
    for (&m, &y) in margins.iter().zip(labels) {
        let predicted = if m > 0.0 {
            Label::Positive
        } else if m < 0.0 {
            Label::Negative
        } else {
            majority
        };
        correct += usize::from(predicted == y);
        loss += softplus(-y.sign() * m);
    }
    let n = labels.len() as f64;
    Metrics {
        accuracy: correct as f64 / n,
        logloss: loss / n,
    }
}

/// Where per-leaf histograms come from: one dataset, or a federation.
///
/// Leaves of the current level are numbered `0..n_leaves` in order. After a
/// level, leaf `l` with a split becomes the next two leaves in order (left,
/// right); leaves without one are finished and drop out.
pub trait LevelSource {
    type Error;

    fn level_histograms(
        &mut self,
        depth: usize,
        n_leaves: usize,
    ) -> Result<Vec<FeatureHistogram>, Self::Error>;

    fn apply_splits(&mut self, splits: &[Option<(usize, u16)>]) -> Result<(), Self::Error>;
}

/// Tracks the current leaf of every row of one shard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafRouter {
    leaf_of: Vec<Option<usize>>,
}

impl LeafRouter {
    pub fn new(n_rows: usize) -> Self {
        Self {
            leaf_of: vec![Some(0); n_rows],
        }
    }

    pub fn leaf_of(&self) -> &[Option<usize>] {
        &self.leaf_of
    }

    pub fn apply(&mut self, binned: &BinnedMatrix, splits: &[Option<(usize, u16)>]) {
        let mut first_child = Vec::with_capacity(splits.len());
        let mut next = 0;
        for s in splits {
            first_child.push(next);
            if s.is_some() {
                next += 2;
            }
        }
        for (i, slot) in self.leaf_of.iter_mut().enumerate() {
            *slot = slot.and_then(|l| {
                splits[l].map(|(feature, threshold)| {
                    let go_right = binned.row(i)[feature] > threshold;
                    first_child[l] + usize::from(go_right)
                })
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub split: SplitParams,
}

enum Draft {
    Open,
    Leaf(i64),
    Split(usize, u16, usize, usize),
}

/// Grows one tree. A leaf whose best split has no positive gain, or that
/// sits at `max_depth`, gets weight `-G / (H + lambda)` from its totals.
pub fn grow_tree<S: LevelSource>(source: &mut S, params: &TreeParams) -> Result<RegTree, S::Error> {
    let mut arena = vec![Draft::Open];
    // arena index and totals of each open leaf
    let mut frontier: Vec<(usize, Option<BinStats>)> = vec![(0, None)];
    for depth in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        let hists = source.level_histograms(depth, frontier.len())?;
        let mut decisions = Vec::with_capacity(frontier.len());
        let mut next = Vec::new();
        for ((node, _), hist) in frontier.iter().zip(&hists) {
            match best_split(hist, &params.split) {
                Some(s) => {
                    let (l, r) = (arena.len(), arena.len() + 1);
                    arena.extend([Draft::Open, Draft::Open]);
                    arena[*node] = Draft::Split(s.feature, s.threshold, l, r);
                    next.push((l, Some(s.left)));
                    next.push((r, Some(s.right)));
                    decisions.push(Some((s.feature, s.threshold)));
                }
                None => {
                    arena[*node] = Draft::Leaf(leaf_weight_fp(&hist.totals(), &params.split));
                    decisions.push(None);
                }
            }
        }
        source.apply_splits(&decisions)?;
        frontier = next;
    }
    for (node, totals) in frontier {
        // only reachable with max_depth == 0 when totals are unknown
        arena[node] = Draft::Leaf(totals.map_or(0, |t| leaf_weight_fp(&t, &params.split)));
    }

    fn assemble(arena: &[Draft], i: usize) -> TreeNode {
        match arena[i] {
            Draft::Leaf(weight) => TreeNode::Leaf { weight },
            Draft::Split(feature, threshold, l, r) => TreeNode::Split {
                feature,
                threshold,
                left: Box::new(assemble(arena, l)),
                right: Box::new(assemble(arena, r)),
            },
            Draft::Open => unreachable!("every node is closed before assembly"),
        }
    }
    Ok(RegTree {
        root: assemble(&arena, 0),
    })
}
