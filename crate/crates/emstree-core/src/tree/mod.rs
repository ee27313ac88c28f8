//! Complete binary decision trees encoded as flat genomes.
//!
//! A tree with `N` split nodes is stored on `3N + 1` genes: `N` feature
//! genes, `N` split-value genes and `N + 1` leaf genes. Decoding lays the
//! nodes out as a heap (children of slot `i` at `2i + 1` and `2i + 2`, the
//! first `N` slots are splits). Traversal sends an observation left when
//! `obs[feature] < threshold` and right otherwise.

mod dot;
mod io;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::genome::Genome;

pub use dot::{ensemble_to_dot, tree_to_dot};
pub use io::{
    ensemble_from_json, ensemble_to_json, load_ensemble, load_tree, save_ensemble, save_tree,
    TreeIoError, SCHEMA_VERSION,
};

/// Default number of split nodes per tree.
pub const DEFAULT_SPLITS: usize = 20;

/// Genes per tree for `splits` split nodes.
pub const fn block_len(splits: usize) -> usize {
    3 * splits + 1
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CodecError {
    #[error("genome block has {actual} genes, expected {expected}")]
    BlockLength { expected: usize, actual: usize },
    #[error("genome has {actual} genes, expected {expected} ({channels} trees of {per_tree})")]
    GenomeLength {
        expected: usize,
        actual: usize,
        channels: usize,
        per_tree: usize,
    },
    #[error("at least one feature is required")]
    NoFeatures,
    #[error("at least one action channel is required")]
    NoChannels,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("observation has {available} features but the tree splits on feature {feature}")]
    MissingFeature { feature: usize, available: usize },
    #[error("policy has {expected} channels, action buffer has {actual}")]
    ChannelCount { expected: usize, actual: usize },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PruneError {
    #[error("no leaf was visited; record at least one episode before pruning")]
    NoVisits,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpecError {
    #[error("feature `{name}`: lower bound {lower} is not below upper bound {upper}")]
    FeatureRange { name: String, lower: f64, upper: f64 },
    #[error("action `{name}`: empty or invalid domain")]
    ActionDomain { name: String },
}

/// A named observation feature with the static range split thresholds are
/// scaled into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self, SpecError> {
        let spec = Self {
            name: name.into(),
            lower,
            upper,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper {
            Ok(())
        } else {
            Err(SpecError::FeatureRange {
                name: self.name.clone(),
                lower: self.lower,
                upper: self.upper,
            })
        }
    }

    pub fn threshold(&self, gene: f64) -> f64 {
        self.lower + gene * (self.upper - self.lower)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionKind {
    Continuous { lo: f64, hi: f64 },
    Discrete { values: Vec<f64> },
}

/// Output domain of one action channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ActionKind,
}

impl ActionSpec {
    pub fn continuous(name: impl Into<String>, lo: f64, hi: f64) -> Result<Self, SpecError> {
        let spec = Self {
            name: name.into(),
            kind: ActionKind::Continuous { lo, hi },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Discrete set of values, kept in the given order.
    pub fn discrete(name: impl Into<String>, values: Vec<f64>) -> Result<Self, SpecError> {
        let spec = Self {
            name: name.into(),
            kind: ActionKind::Discrete { values },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `count` evenly spaced levels from `lo` to `hi` inclusive.
    pub fn levels(name: impl Into<String>, lo: f64, hi: f64, count: usize) -> Result<Self, SpecError> {
        let values = match count {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..count)
                .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
                .collect(),
        };
        Self::discrete(name, values)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let ok = match &self.kind {
            ActionKind::Continuous { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            ActionKind::Discrete { values } => {
                !values.is_empty() && values.iter().all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SpecError::ActionDomain {
                name: self.name.clone(),
            })
        }
    }

    /// Maps a leaf gene in `[0, 1]` onto the domain.
    pub fn decode(&self, gene: f64) -> f64 {
        match &self.kind {
            ActionKind::Continuous { lo, hi } => lo + gene * (hi - lo),
            ActionKind::Discrete { values } => values[bin(gene, values.len())],
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        match &self.kind {
            ActionKind::Continuous { lo, hi } => (*lo..=*hi).contains(&value),
            ActionKind::Discrete { values } => values.contains(&value),
        }
    }

    /// Nearest admissible value, and whether `value` had to move.
    pub fn snap(&self, value: f64) -> (f64, bool) {
        let snapped = match &self.kind {
            ActionKind::Continuous { lo, hi } => {
                if value.is_nan() {
                    *lo
                } else {
                    value.clamp(*lo, *hi)
                }
            }
            ActionKind::Discrete { values } => *values
                .iter()
                .min_by(|a, b| (*a - value).abs().total_cmp(&(*b - value).abs()))
                .expect("validated discrete domain is non-empty"),
        };
        (snapped, snapped != value)
    }

    pub fn bounds(&self) -> (f64, f64) {
        match &self.kind {
            ActionKind::Continuous { lo, hi } => (*lo, *hi),
            ActionKind::Discrete { values } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
        }
    }
}

/// `min(⌊gene·k⌋, k − 1)`.
pub fn bin(gene: f64, k: usize) -> usize {
    ((gene * k as f64).floor().max(0.0) as usize).min(k - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        action: f64,
        visits: u64,
    },
}

/// Node arena rooted at slot 0, stored in breadth-first order. Freshly
/// decoded trees are complete heaps; pruned trees have arbitrary shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Decodes one `3N + 1` gene block.
    pub fn decode(
        block: &[f64],
        features: &[FeatureSpec],
        action: &ActionSpec,
        splits: usize,
    ) -> Result<Self, CodecError> {
        if block.len() != block_len(splits) {
            return Err(CodecError::BlockLength {
                expected: block_len(splits),
                actual: block.len(),
            });
        }
        if features.is_empty() {
            return Err(CodecError::NoFeatures);
        }
        let (feature_genes, rest) = block.split_at(splits);
        let (value_genes, leaf_genes) = rest.split_at(splits);
        let mut nodes = Vec::with_capacity(2 * splits + 1);
        for (f, v) in feature_genes.iter().zip(value_genes) {
            let slot = nodes.len();
            let feature = bin(*f, features.len());
            nodes.push(Node::Split {
                feature,
                threshold: features[feature].threshold(*v),
                left: 2 * slot + 1,
                right: 2 * slot + 2,
            });
        }
        nodes.extend(leaf_genes.iter().map(|&l| Node::Leaf {
            action: action.decode(l),
            visits: 0,
        }));
        Ok(Self { nodes })
    }

    /// Builds a tree from an explicit arena rooted at slot 0. Used by
    /// deserialization and tests; the arena is re-laid out breadth-first.
    pub fn from_nodes(nodes: Vec<Node>) -> Option<Self> {
        let tree = Self { nodes };
        tree.check_shape().then(|| tree.canonical())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// Visit counts of the leaves, in arena order.
    pub fn visits(&self) -> Vec<u64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { visits, .. } => Some(*visits),
                Node::Split { .. } => None,
            })
            .collect()
    }

    pub fn reset_visits(&mut self) {
        for n in &mut self.nodes {
            if let Node::Leaf { visits, .. } = n {
                *visits = 0;
            }
        }
    }

    /// Slots visited from the root to the reached leaf.
    pub fn path(&self, obs: &Observation) -> Result<Vec<usize>, EvalError> {
        let mut slot = 0;
        let mut path = vec![0];
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = self.nodes[slot]
        {
            let value = obs.values.get(feature).ok_or(EvalError::MissingFeature {
                feature,
                available: obs.values.len(),
            })?;
            slot = if *value < threshold { left } else { right };
            path.push(slot);
        }
        Ok(path)
    }

    fn leaf_slot(&self, obs: &Observation) -> Result<usize, EvalError> {
        let mut slot = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = self.nodes[slot]
        {
            let value = obs.values.get(feature).ok_or(EvalError::MissingFeature {
                feature,
                available: obs.values.len(),
            })?;
            slot = if *value < threshold { left } else { right };
        }
        Ok(slot)
    }

    pub fn act(&self, obs: &Observation) -> Result<f64, EvalError> {
        let slot = self.leaf_slot(obs)?;
        match self.nodes[slot] {
            Node::Leaf { action, .. } => Ok(action),
            Node::Split { .. } => unreachable!("traversal ends on a leaf"),
        }
    }

    /// Like [`act`](Self::act) and increments the reached leaf's counter.
    pub fn act_recording(&mut self, obs: &Observation) -> Result<f64, EvalError> {
        let slot = self.leaf_slot(obs)?;
        match &mut self.nodes[slot] {
            Node::Leaf { action, visits } => {
                *visits += 1;
                Ok(*action)
            }
            Node::Split { .. } => unreachable!("traversal ends on a leaf"),
        }
    }

    /// Removes every unvisited leaf, replacing its parent by the sibling
    /// subtree, until all remaining leaves have been visited.
    pub fn prune(&self) -> Result<Self, PruneError> {
        let mut nodes = Vec::new();
        let root = self.prune_into(0, &mut nodes).ok_or(PruneError::NoVisits)?;
        Ok(Self { nodes }.relabel(root))
    }

    /// Copies the pruned subtree at `slot` into `out`; returns its new slot.
    fn prune_into(&self, slot: usize, out: &mut Vec<Node>) -> Option<usize> {
        match &self.nodes[slot] {
            Node::Leaf { visits: 0, .. } => None,
            leaf @ Node::Leaf { .. } => {
                out.push(leaf.clone());
                Some(out.len() - 1)
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => match (self.prune_into(*left, out), self.prune_into(*right, out)) {
                (Some(l), Some(r)) => {
                    out.push(Node::Split {
                        feature: *feature,
                        threshold: *threshold,
                        left: l,
                        right: r,
                    });
                    Some(out.len() - 1)
                }
                (Some(kept), None) | (None, Some(kept)) => Some(kept),
                (None, None) => None,
            },
        }
    }

    fn canonical(&self) -> Self {
        self.relabel(0)
    }

    /// Renumbers the subtree under `root` breadth-first, dropping
    /// unreachable nodes.
    fn relabel(&self, root: usize) -> Self {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut queue = VecDeque::from([root]);
        while let Some(slot) = queue.pop_front() {
            order.push(slot);
            if let Node::Split { left, right, .. } = self.nodes[slot] {
                queue.push_back(left);
                queue.push_back(right);
            }
        }
        let mut new_index = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let nodes = order
            .iter()
            .map(|&old| match &self.nodes[old] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => Node::Split {
                    feature: *feature,
                    threshold: *threshold,
                    left: new_index[*left],
                    right: new_index[*right],
                },
                leaf => leaf.clone(),
            })
            .collect();
        Self { nodes }
    }

    /// True when every node is reachable exactly once from slot 0.
    fn check_shape(&self) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(slot) = stack.pop() {
            if slot >= self.nodes.len() || seen[slot] {
                return false;
            }
            seen[slot] = true;
            if let Node::Split { left, right, .. } = self.nodes[slot] {
                stack.push(left);
                stack.push(right);
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Checks feature indices, threshold ranges and leaf domains.
    pub fn is_consistent_with(&self, features: &[FeatureSpec], action: &ActionSpec) -> bool {
        self.check_shape()
            && self.nodes.iter().all(|n| match n {
                Node::Split {
                    feature, threshold, ..
                } => features
                    .get(*feature)
                    .is_some_and(|f| (f.lower..=f.upper).contains(threshold)),
                Node::Leaf { action: a, .. } => action.contains(*a),
            })
    }
}

/// Shape of an ensemble genome: shared feature catalog, one action per
/// channel, and the split count per tree.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleLayout {
    pub features: Vec<FeatureSpec>,
    pub actions: Vec<ActionSpec>,
    pub splits: usize,
}

impl EnsembleLayout {
    pub fn genome_len(&self) -> usize {
        self.actions.len() * block_len(self.splits)
    }

    pub fn decode(&self, genome: &Genome) -> Result<TreeEnsemble, CodecError> {
        TreeEnsemble::decode(genome, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub action: ActionSpec,
    pub tree: DecisionTree,
}

/// One tree per action channel over a shared feature catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeEnsemble {
    pub features: Vec<FeatureSpec>,
    pub channels: Vec<Channel>,
}

impl TreeEnsemble {
    /// Block `k` of the genome decodes channel `k`.
    pub fn decode(genome: &[f64], layout: &EnsembleLayout) -> Result<Self, CodecError> {
        if layout.actions.is_empty() {
            return Err(CodecError::NoChannels);
        }
        let per_tree = block_len(layout.splits);
        if genome.len() != layout.genome_len() {
            return Err(CodecError::GenomeLength {
                expected: layout.genome_len(),
                actual: genome.len(),
                channels: layout.actions.len(),
                per_tree,
            });
        }
        let channels = genome
            .chunks(per_tree)
            .zip(&layout.actions)
            .map(|(block, action)| {
                Ok(Channel {
                    action: action.clone(),
                    tree: DecisionTree::decode(block, &layout.features, action, layout.splits)?,
                })
            })
            .collect::<Result<_, CodecError>>()?;
        Ok(Self {
            features: layout.features.clone(),
            channels,
        })
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn act(&self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        self.check_out(out)?;
        for (slot, ch) in out.iter_mut().zip(&self.channels) {
            *slot = ch.tree.act(obs)?;
        }
        Ok(())
    }

    pub fn act_recording(&mut self, obs: &Observation, out: &mut [f64]) -> Result<(), EvalError> {
        self.check_out(out)?;
        for (slot, ch) in out.iter_mut().zip(&mut self.channels) {
            *slot = ch.tree.act_recording(obs)?;
        }
        Ok(())
    }

    fn check_out(&self, out: &[f64]) -> Result<(), EvalError> {
        if out.len() == self.channels.len() {
            Ok(())
        } else {
            Err(EvalError::ChannelCount {
                expected: self.channels.len(),
                actual: out.len(),
            })
        }
    }

    pub fn prune(&self) -> Result<Self, PruneError> {
        let channels = self
            .channels
            .iter()
            .map(|ch| {
                Ok(Channel {
                    action: ch.action.clone(),
                    tree: ch.tree.prune()?,
                })
            })
            .collect::<Result<_, PruneError>>()?;
        Ok(Self {
            features: self.features.clone(),
            channels,
        })
    }

    pub fn reset_visits(&mut self) {
        for ch in &mut self.channels {
            ch.tree.reset_visits();
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.channels.iter().map(|c| c.tree.leaf_count()).sum()
    }

    pub fn is_consistent(&self) -> bool {
        !self.channels.is_empty()
            && self.features.iter().all(|f| f.validate().is_ok())
            && self.channels.iter().all(|c| {
                c.action.validate().is_ok() && c.tree.is_consistent_with(&self.features, &c.action)
            })
    }
}
