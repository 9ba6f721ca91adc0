//! Classical tree attribution methods: per-path output attribution
//! (Saabas-style), gain, and split count, plus a dataset-level SHAP summary.
//!
//! These are the methods SHAP replaces. They are kept here both as
//! comparison points for the clustering evaluation and to reproduce the
//! consistency failure the demo command shows: reshaping a model so a
//! feature matters strictly more can *decrease* that feature's score under
//! every method in this module, while its SHAP value increases.

use crate::attribution::AttributionVector;
use crate::model::{Instance, TreeEnsemble, TreeModel};
use crate::shap::explain_batch;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("dataset is empty")]
    EmptyDataset,
}

/// Which method produced a set of global importance scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportanceMethod {
    Gain,
    SplitCount,
    MeanAbsShap,
}

impl ImportanceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ImportanceMethod::Gain => "gain",
            ImportanceMethod::SplitCount => "split_count",
            ImportanceMethod::MeanAbsShap => "mean_abs_shap",
        }
    }
}

/// Per-feature nonnegative scores summarizing a whole model.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalImportance {
    pub method: ImportanceMethod,
    pub scores: Vec<f64>,
}

/// Per-node sums of `cover * value` and `cover * value^2` over the leaves of
/// each subtree. `mean(j) = weighted[j] / cover(j)`;
/// `sse(j) = weighted_sq[j] - weighted[j]^2 / cover(j)`.
struct SubtreeStats {
    weighted: Vec<f64>,
    weighted_sq: Vec<f64>,
}

impl SubtreeStats {
    fn compute(tree: &TreeModel) -> SubtreeStats {
        let n = tree.num_nodes();
        let mut stats = SubtreeStats {
            weighted: vec![0.0; n],
            weighted_sq: vec![0.0; n],
        };
        stats.fill(tree, 0);
        stats
    }

    fn fill(&mut self, tree: &TreeModel, node: usize) {
        if tree.is_leaf(node) {
            let wv = tree.cover(node) * tree.value(node);
            self.weighted[node] = wv;
            self.weighted_sq[node] = wv * tree.value(node);
            return;
        }
        let (l, r) = (tree.left_child(node), tree.right_child(node));
        self.fill(tree, l);
        self.fill(tree, r);
        self.weighted[node] = self.weighted[l] + self.weighted[r];
        self.weighted_sq[node] = self.weighted_sq[l] + self.weighted_sq[r];
    }

    fn mean(&self, tree: &TreeModel, node: usize) -> f64 {
        self.weighted[node] / tree.cover(node)
    }

    fn sse(&self, tree: &TreeModel, node: usize) -> f64 {
        self.weighted_sq[node] - self.weighted[node] * self.weighted[node] / tree.cover(node)
    }
}

/// Decision-path attribution: walking the instance's path, each split credits
/// its feature with the change in the subtree's cover-weighted mean output.
/// The credits telescope, so the result is locally accurate, but every
/// instance sees only the single feature ordering its path imposes.
pub fn saabas_path(ensemble: &TreeEnsemble, instance: &Instance) -> AttributionVector {
    let x = instance.features();
    let mut att = AttributionVector::zeros(ensemble.expected_value(), ensemble.num_features());
    for tree in ensemble.trees() {
        let stats = SubtreeStats::compute(tree);
        let mut node = 0;
        while !tree.is_leaf(node) {
            let next = if x[tree.split_feature(node)] <= tree.threshold(node) {
                tree.left_child(node)
            } else {
                tree.right_child(node)
            };
            att.phi[tree.split_feature(node)] +=
                stats.mean(tree, next) - stats.mean(tree, node);
            node = next;
        }
    }
    att
}

/// Global importance as the summed squared-error reduction of every split on
/// each feature, assuming a dataset that matches the model exactly with
/// cover-weighted leaf occupancy.
pub fn gain_importance(ensemble: &TreeEnsemble) -> GlobalImportance {
    let mut scores = vec![0.0; ensemble.num_features()];
    for tree in ensemble.trees() {
        let stats = SubtreeStats::compute(tree);
        for node in 0..tree.num_nodes() {
            if !tree.is_leaf(node) {
                let gain = stats.sse(tree, node)
                    - stats.sse(tree, tree.left_child(node))
                    - stats.sse(tree, tree.right_child(node));
                scores[tree.split_feature(node)] += gain;
            }
        }
    }
    GlobalImportance {
        method: ImportanceMethod::Gain,
        scores,
    }
}

/// Global importance as the number of internal nodes splitting on each feature.
pub fn split_count(ensemble: &TreeEnsemble) -> GlobalImportance {
    let mut scores = vec![0.0; ensemble.num_features()];
    for tree in ensemble.trees() {
        for node in 0..tree.num_nodes() {
            if !tree.is_leaf(node) {
                scores[tree.split_feature(node)] += 1.0;
            }
        }
    }
    GlobalImportance {
        method: ImportanceMethod::SplitCount,
        scores,
    }
}

/// Dataset-level SHAP summary: the mean of |phi| per feature over a dataset.
pub fn mean_abs_shap(
    ensemble: &TreeEnsemble,
    instances: &[Instance],
) -> Result<GlobalImportance, BaselineError> {
    if instances.is_empty() {
        return Err(BaselineError::EmptyDataset);
    }
    let mut scores = vec![0.0; ensemble.num_features()];
    for att in explain_batch(ensemble, instances) {
        for (s, p) in scores.iter_mut().zip(&att.phi) {
            *s += p.abs();
        }
    }
    for s in &mut scores {
        *s /= instances.len() as f64;
    }
    Ok(GlobalImportance {
        method: ImportanceMethod::MeanAbsShap,
        scores,
    })
}
