//! Array-encoded binary decision trees and ensembles.
//!
//! Trees are stored as parallel per-node arrays (children, split feature,
//! threshold, leaf value, cover). Node 0 is the root and `-1` marks a leaf in
//! the child and feature arrays. Routing follows the convention that
//! `x[feature] <= threshold` goes left; this tie-break is part of the model
//! format contract.
//!
//! The JSON document schema accepted by [`TreeEnsemble::from_json_str`]:
//!
//! ```json
//! {
//!   "num_features": 2,
//!   "base_score": 0.0,
//!   "trees": [
//!     {
//!       "children_left":  [1, -1, -1],
//!       "children_right": [2, -1, -1],
//!       "feature":        [0, -1, -1],
//!       "threshold":      [0.5, 0.0, 0.0],
//!       "value":          [0.0, 1.0, 3.0],
//!       "cover":          [10.0, 4.0, 6.0]
//!     }
//!   ]
//! }
//! ```
//!
//! `base_score` defaults to 0 when absent. `value` entries of internal nodes
//! and `threshold` entries of leaves are preserved on round-trip but carry no
//! meaning. Every node must have strictly positive cover, and an internal
//! node's cover must equal the sum of its children's covers.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

/// Sentinel marking a leaf in the `children_*` and `feature` arrays.
pub const LEAF_SENTINEL: i32 = -1;

/// Relative slack allowed when checking `cover[node] == cover[left] + cover[right]`,
/// so models exported by other libraries with rounded float covers still load.
const COVER_SUM_RTOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read model document: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse model document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("model document: {0}")]
    Document(String),
    #[error("tree {tree}, node {node}: {violation}")]
    Invariant {
        tree: usize,
        node: usize,
        violation: String,
    },
    #[error("instance: {0}")]
    Instance(String),
}

/// One binary decision tree in array encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    left: Vec<i32>,
    right: Vec<i32>,
    feature: Vec<i32>,
    threshold: Vec<f64>,
    value: Vec<f64>,
    cover: Vec<f64>,
}

impl TreeModel {
    /// Builds a tree from raw node arrays without validation. Invariants are
    /// checked when the tree is assembled into a [`TreeEnsemble`].
    pub fn from_arrays(
        left: Vec<i32>,
        right: Vec<i32>,
        feature: Vec<i32>,
        threshold: Vec<f64>,
        value: Vec<f64>,
        cover: Vec<f64>,
    ) -> Self {
        TreeModel {
            left,
            right,
            feature,
            threshold,
            value,
            cover,
        }
    }

    /// A single-leaf tree with the given value and cover.
    pub fn leaf(value: f64, cover: f64) -> Self {
        TreeModel::from_arrays(
            vec![LEAF_SENTINEL],
            vec![LEAF_SENTINEL],
            vec![LEAF_SENTINEL],
            vec![0.0],
            vec![value],
            vec![cover],
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.value.len()
    }

    #[inline]
    pub fn is_leaf(&self, node: usize) -> bool {
        self.left[node] < 0
    }

    #[inline]
    pub fn left_child(&self, node: usize) -> usize {
        self.left[node] as usize
    }

    #[inline]
    pub fn right_child(&self, node: usize) -> usize {
        self.right[node] as usize
    }

    #[inline]
    pub fn split_feature(&self, node: usize) -> usize {
        self.feature[node] as usize
    }

    #[inline]
    pub fn threshold(&self, node: usize) -> f64 {
        self.threshold[node]
    }

    /// Leaf output value. Meaningless for internal nodes.
    #[inline]
    pub fn value(&self, node: usize) -> f64 {
        self.value[node]
    }

    #[inline]
    pub fn cover(&self, node: usize) -> f64 {
        self.cover[node]
    }

    pub fn num_leaves(&self) -> usize {
        (0..self.num_nodes()).filter(|&j| self.is_leaf(j)).count()
    }

    /// Maximum number of edges from the root to any leaf.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, d)) = stack.pop() {
            if self.is_leaf(node) {
                max = max.max(d);
            } else {
                stack.push((self.left_child(node), d + 1));
                stack.push((self.right_child(node), d + 1));
            }
        }
        max
    }

    /// Routes a feature vector to a leaf and returns its index.
    pub fn route(&self, features: &[f64]) -> usize {
        let mut node = 0;
        while !self.is_leaf(node) {
            node = if features[self.split_feature(node)] <= self.threshold(node) {
                self.left_child(node)
            } else {
                self.right_child(node)
            };
        }
        node
    }

    /// Tree output for one feature vector.
    pub fn predict_row(&self, features: &[f64]) -> f64 {
        self.value(self.route(features))
    }

    /// Cover-weighted mean of the leaf values, i.e. the tree's output
    /// expectation when no feature is known.
    pub fn leaf_mean(&self) -> f64 {
        let root_cover = self.cover[0];
        let mut acc = 0.0;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if self.is_leaf(node) {
                acc += self.cover(node) * self.value(node);
            } else {
                stack.push(self.left_child(node));
                stack.push(self.right_child(node));
            }
        }
        acc / root_cover
    }

    /// Largest feature index referenced by any split, if the tree splits at all.
    pub fn max_split_feature(&self) -> Option<usize> {
        (0..self.num_nodes())
            .filter(|&j| !self.is_leaf(j))
            .map(|j| self.split_feature(j))
            .max()
    }

    fn validate(&self, tree_index: usize, num_features: usize) -> Result<(), ModelError> {
        let n = self.value.len();
        let err = |node: usize, violation: String| ModelError::Invariant {
            tree: tree_index,
            node,
            violation,
        };
        if n == 0 {
            return Err(ModelError::Document(format!("tree {tree_index} has no nodes")));
        }
        for (name, len) in [
            ("children_left", self.left.len()),
            ("children_right", self.right.len()),
            ("feature", self.feature.len()),
            ("threshold", self.threshold.len()),
            ("cover", self.cover.len()),
        ] {
            if len != n {
                return Err(ModelError::Document(format!(
                    "tree {tree_index}: array `{name}` has {len} entries, `value` has {n}"
                )));
            }
        }
        for j in 0..n {
            let leaf = self.left[j] < 0;
            if leaf != (self.right[j] < 0) {
                return Err(err(
                    j,
                    "one child is a leaf sentinel and the other is not".into(),
                ));
            }
            if !(self.cover[j].is_finite() && self.cover[j] > 0.0) {
                return Err(err(
                    j,
                    format!("cover must be finite and > 0, got {}", self.cover[j]),
                ));
            }
            // Unused slots (internal values, leaf thresholds) are preserved on
            // round-trip, so they must stay JSON-representable too.
            if !self.value[j].is_finite() {
                return Err(err(j, format!("value {} is not finite", self.value[j])));
            }
            if !self.threshold[j].is_finite() {
                return Err(err(
                    j,
                    format!("threshold {} is not finite", self.threshold[j]),
                ));
            }
            if leaf {
                if self.feature[j] != LEAF_SENTINEL {
                    return Err(err(
                        j,
                        format!("leaf has split feature {} instead of -1", self.feature[j]),
                    ));
                }
            } else {
                for (side, child) in [("left", self.left[j]), ("right", self.right[j])] {
                    if child < 0 || child as usize >= n {
                        return Err(err(
                            j,
                            format!("{side} child index {child} out of range (tree has {n} nodes)"),
                        ));
                    }
                    if child as usize == j {
                        return Err(err(j, format!("{side} child points at the node itself")));
                    }
                }
                if self.left[j] == self.right[j] {
                    return Err(err(j, "left and right children are the same node".into()));
                }
                let f = self.feature[j];
                if f < 0 || f as usize >= num_features {
                    return Err(err(
                        j,
                        format!("split feature {f} out of range [0, {num_features})"),
                    ));
                }
                let child_sum =
                    self.cover[self.left[j] as usize] + self.cover[self.right[j] as usize];
                let slack = COVER_SUM_RTOL * self.cover[j].max(1.0);
                if (self.cover[j] - child_sum).abs() > slack {
                    return Err(err(
                        j,
                        format!(
                            "cover {} does not equal the sum of child covers {}",
                            self.cover[j], child_sum
                        ),
                    ));
                }
            }
        }
        // The child graph must be a proper tree: every node reached from the
        // root exactly once, no node shared or orphaned.
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        while let Some(j) = stack.pop() {
            if seen[j] {
                return Err(err(j, "node is reachable from the root more than once".into()));
            }
            seen[j] = true;
            if !self.is_leaf(j) {
                stack.push(self.left_child(j));
                stack.push(self.right_child(j));
            }
        }
        if let Some(orphan) = seen.iter().position(|&s| !s) {
            return Err(err(orphan, "node is not reachable from the root".into()));
        }
        Ok(())
    }
}

/// Derived size statistics of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleStats {
    /// Number of trees.
    pub num_trees: usize,
    /// Maximum leaf count over all trees.
    pub max_leaves: usize,
    /// Maximum depth over all trees.
    pub max_depth: usize,
}

/// An ordered collection of trees plus a base score, evaluated additively.
///
/// Immutable after construction; all operations are pure functions of the
/// ensemble and an instance, so shared references can be used freely across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    trees: Vec<TreeModel>,
    base_score: f64,
    num_features: usize,
}

impl TreeEnsemble {
    /// Assembles and validates an ensemble. Every tree invariant is checked;
    /// the error names the offending tree and node.
    pub fn new(
        trees: Vec<TreeModel>,
        base_score: f64,
        num_features: usize,
    ) -> Result<Self, ModelError> {
        if num_features == 0 {
            return Err(ModelError::Document(
                "num_features must be a positive integer".into(),
            ));
        }
        if !base_score.is_finite() {
            return Err(ModelError::Document(format!(
                "base_score {base_score} is not finite"
            )));
        }
        for (i, tree) in trees.iter().enumerate() {
            tree.validate(i, num_features)?;
        }
        Ok(TreeEnsemble {
            trees,
            base_score,
            num_features,
        })
    }

    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn stats(&self) -> EnsembleStats {
        EnsembleStats {
            num_trees: self.trees.len(),
            max_leaves: self.trees.iter().map(TreeModel::num_leaves).max().unwrap_or(0),
            max_depth: self.trees.iter().map(TreeModel::depth).max().unwrap_or(0),
        }
    }

    /// Ensemble output for one instance: base score plus the leaf value each
    /// tree routes the instance to (`x[feature] <= threshold` goes left).
    pub fn predict(&self, instance: &Instance) -> f64 {
        let x = instance.features();
        assert_eq!(
            x.len(),
            self.num_features,
            "instance length does not match the model's feature count"
        );
        self.base_score + self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }

    /// Expected model output when nothing is known about the instance:
    /// base score plus each tree's cover-weighted leaf mean.
    pub fn expected_value(&self) -> f64 {
        self.base_score + self.trees.iter().map(TreeModel::leaf_mean).sum::<f64>()
    }

    /// Checks that an instance is usable with this model.
    pub fn validate_instance(&self, instance: &Instance) -> Result<(), ModelError> {
        let x = instance.features();
        if x.len() != self.num_features {
            return Err(ModelError::Instance(format!(
                "expected {} features, got {}",
                self.num_features,
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::Instance(format!(
                "feature {i} is not finite ({})",
                x[i]
            )));
        }
        Ok(())
    }

    pub fn from_json_str(doc: &str) -> Result<Self, ModelError> {
        let doc: ModelDoc = serde_json::from_str(doc)?;
        doc.into_ensemble()
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, ModelError> {
        let doc: ModelDoc = serde_json::from_reader(reader)?;
        doc.into_ensemble()
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path)?;
        TreeEnsemble::from_json_str(&text)
    }

    /// Serializes back to the document schema. Numbers keep their exact bits
    /// through a save/load cycle.
    pub fn to_json_string(&self) -> String {
        crate::data::to_json_exact(&ModelDoc::from_ensemble(self))
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<(), ModelError> {
        let mut doc = self.to_json_string();
        doc.push('\n');
        fs::write(path, doc)?;
        Ok(())
    }
}

/// A dense feature vector of one instance to explain.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    features: Vec<f64>,
}

impl Instance {
    pub fn new(features: Vec<f64>) -> Self {
        Instance { features }
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

impl From<Vec<f64>> for Instance {
    fn from(features: Vec<f64>) -> Self {
        Instance::new(features)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    num_features: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_score: Option<f64>,
    trees: Vec<TreeDoc>,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    children_left: Vec<i32>,
    children_right: Vec<i32>,
    feature: Vec<i32>,
    threshold: Vec<f64>,
    value: Vec<f64>,
    cover: Vec<f64>,
}

impl ModelDoc {
    fn into_ensemble(self) -> Result<TreeEnsemble, ModelError> {
        let trees = self
            .trees
            .into_iter()
            .map(|t| {
                TreeModel::from_arrays(
                    t.children_left,
                    t.children_right,
                    t.feature,
                    t.threshold,
                    t.value,
                    t.cover,
                )
            })
            .collect();
        TreeEnsemble::new(trees, self.base_score.unwrap_or(0.0), self.num_features)
    }

    fn from_ensemble(ensemble: &TreeEnsemble) -> ModelDoc {
        ModelDoc {
            num_features: ensemble.num_features,
            base_score: Some(ensemble.base_score),
            trees: ensemble
                .trees
                .iter()
                .map(|t| TreeDoc {
                    children_left: t.left.clone(),
                    children_right: t.right.clone(),
                    feature: t.feature.clone(),
                    threshold: t.threshold.clone(),
                    value: t.value.clone(),
                    cover: t.cover.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_leaf_doc() -> &'static str {
        r#"{
            "num_features": 3,
            "trees": [{
                "children_left": [-1],
                "children_right": [-1],
                "feature": [-1],
                "threshold": [0.0],
                "value": [5.0],
                "cover": [10.0]
            }]
        }"#
    }

    #[test]
    fn single_leaf_loads_and_predicts() {
        let ens = TreeEnsemble::from_json_str(single_leaf_doc()).unwrap();
        let stats = ens.stats();
        assert_eq!(stats.num_trees, 1);
        assert_eq!(stats.max_leaves, 1);
        assert_eq!(stats.max_depth, 0);
        let x = Instance::new(vec![0.3, -2.0, 7.0]);
        assert_eq!(ens.predict(&x), 5.0);
        assert_eq!(ens.expected_value(), 5.0);
    }

    #[test]
    fn base_score_defaults_to_zero_and_offsets_predictions() {
        let ens = TreeEnsemble::from_json_str(single_leaf_doc()).unwrap();
        assert_eq!(ens.base_score(), 0.0);
        let with_base = TreeEnsemble::new(ens.trees().to_vec(), 1.5, 3).unwrap();
        assert_eq!(with_base.predict(&Instance::new(vec![0.0; 3])), 6.5);
        assert_eq!(with_base.expected_value(), 6.5);
    }

    fn depth_one_tree(cover_left: f64, cover_right: f64, cover_root: f64) -> TreeModel {
        TreeModel::from_arrays(
            vec![1, -1, -1],
            vec![2, -1, -1],
            vec![0, -1, -1],
            vec![0.5, 0.0, 0.0],
            vec![0.0, 1.0, 3.0],
            vec![cover_root, cover_left, cover_right],
        )
    }

    #[test]
    fn cover_mismatch_is_reported_with_node_index() {
        let tree = depth_one_tree(4.0, 6.0, 11.0);
        let err = TreeEnsemble::new(vec![tree], 0.0, 1).unwrap_err();
        match err {
            ModelError::Invariant { tree, node, violation } => {
                assert_eq!(tree, 0);
                assert_eq!(node, 0);
                assert!(violation.contains("cover"), "unexpected violation: {violation}");
            }
            other => panic!("expected invariant error, got {other}"),
        }
    }

    #[test]
    fn zero_cover_child_is_rejected() {
        let tree = depth_one_tree(0.0, 10.0, 10.0);
        assert!(matches!(
            TreeEnsemble::new(vec![tree], 0.0, 1),
            Err(ModelError::Invariant { node: 1, .. })
        ));
    }

    #[test]
    fn shared_child_is_rejected() {
        // Node 2 is reachable both as left and right child.
        let tree = TreeModel::from_arrays(
            vec![2, -1, -1],
            vec![2, -1, -1],
            vec![0, -1, -1],
            vec![0.5, 0.0, 0.0],
            vec![0.0, 1.0, 3.0],
            vec![10.0, 5.0, 5.0],
        );
        assert!(matches!(
            TreeEnsemble::new(vec![tree], 0.0, 1),
            Err(ModelError::Invariant { .. })
        ));
    }

    #[test]
    fn orphan_node_is_rejected() {
        let tree = TreeModel::from_arrays(
            vec![-1, -1],
            vec![-1, -1],
            vec![-1, -1],
            vec![0.0, 0.0],
            vec![1.0, 2.0],
            vec![1.0, 1.0],
        );
        let err = TreeEnsemble::new(vec![tree], 0.0, 1).unwrap_err();
        match err {
            ModelError::Invariant { node, violation, .. } => {
                assert_eq!(node, 1);
                assert!(violation.contains("not reachable"));
            }
            other => panic!("expected invariant error, got {other}"),
        }
    }

    #[test]
    fn feature_out_of_range_is_rejected() {
        let mut tree = depth_one_tree(4.0, 6.0, 10.0);
        tree.feature[0] = 3;
        assert!(matches!(
            TreeEnsemble::new(vec![tree], 0.0, 2),
            Err(ModelError::Invariant { node: 0, .. })
        ));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            TreeEnsemble::from_json_str("{\"num_features\": oops"),
            Err(ModelError::Parse(_))
        ));
    }

    #[test]
    fn threshold_ties_route_left() {
        let ens = TreeEnsemble::new(vec![depth_one_tree(4.0, 6.0, 10.0)], 0.0, 1).unwrap();
        assert_eq!(ens.predict(&Instance::new(vec![0.5])), 1.0);
        assert_eq!(ens.predict(&Instance::new(vec![0.5 + 1e-12])), 3.0);
    }

    #[test]
    fn round_trip_preserves_the_ensemble() {
        let mut tree = depth_one_tree(4.0, 6.0, 10.0);
        // Values whose shortest decimal form needs the full 17 digits.
        tree.value[1] = 0.1 + 0.2;
        tree.value[2] = 2.0 / 3.0;
        tree.threshold[0] = 0.9719863718547629_f64.next_down();
        let ens = TreeEnsemble::new(vec![tree, TreeModel::leaf(2.5, 7.0)], 0.25, 4).unwrap();
        let reloaded = TreeEnsemble::from_json_str(&ens.to_json_string()).unwrap();
        assert_eq!(ens, reloaded);
    }

    #[test]
    fn expected_value_is_the_cover_weighted_leaf_mean() {
        let ens = TreeEnsemble::new(vec![depth_one_tree(4.0, 6.0, 10.0)], 0.0, 1).unwrap();
        // (4*1 + 6*3) / 10
        assert!((ens.expected_value() - 2.2).abs() < 1e-12);
    }
}
