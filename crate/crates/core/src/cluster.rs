//! Supervised clustering over attribution vectors.
//!
//! Instances are clustered in attribution space instead of raw feature
//! space: every dimension is then in model-output units, so Euclidean
//! distances compare like with like and features only matter to the extent
//! they move the prediction. Clustering quality is scored by replaying the
//! merge sequence against the outcomes: each group predicts its member mean,
//! and the explained-variance R^2 is traced from one-group-per-row (R^2 = 1)
//! down to a single group (R^2 = 0).

use crate::baselines::saabas_path;
use crate::model::{Instance, TreeEnsemble};
use crate::shap::explain_batch;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("clustering needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("matrix row {row} has {got} columns, expected {expected}")]
    RaggedMatrix {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("merge sequence of length {merges} cannot partition {rows} rows")]
    MergeMismatch { merges: usize, rows: usize },
    #[error("merge step {step} references group {id}, which is not active")]
    InvalidMerge { step: usize, id: usize },
    #[error("outcomes have (near-)zero variance; the R^2 curve is undefined")]
    DegenerateOutcomes,
}

/// Feature space used to build the clustering matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributionMethod {
    /// SHAP values from the polynomial-time traversal.
    TreeShap,
    /// Decision-path (Saabas-style) attributions.
    Path,
    /// The raw feature values, unattributed.
    Raw,
}

impl AttributionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributionMethod::TreeShap => "treeshap",
            AttributionMethod::Path => "path",
            AttributionMethod::Raw => "raw",
        }
    }
}

/// One row per instance: its attribution vector (or raw features).
pub fn attribution_matrix(
    ensemble: &TreeEnsemble,
    instances: &[Instance],
    method: AttributionMethod,
) -> Result<Vec<Vec<f64>>, ClusterError> {
    if instances.is_empty() {
        return Err(ClusterError::EmptyDataset);
    }
    Ok(match method {
        AttributionMethod::TreeShap => explain_batch(ensemble, instances)
            .into_iter()
            .map(|att| att.phi)
            .collect(),
        AttributionMethod::Path => instances
            .par_iter()
            .map(|x| saabas_path(ensemble, x).phi)
            .collect(),
        AttributionMethod::Raw => instances.iter().map(|x| x.features().to_vec()).collect(),
    })
}

/// Agglomerative merges under Ward linkage on Euclidean distances.
///
/// Group ids follow the usual dendrogram convention: rows are groups
/// `0..n`, and the merge at step `s` creates group `n + s`. Each returned
/// pair is (lower id, higher id). Ties are broken toward the lowest pair of
/// group ids, which makes the sequence deterministic.
pub fn hierarchical_cluster(matrix: &[Vec<f64>]) -> Result<Vec<(usize, usize)>, ClusterError> {
    let n = matrix.len();
    if n < 2 {
        return Err(ClusterError::TooFewRows(n));
    }
    let dim = matrix[0].len();
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != dim {
            return Err(ClusterError::RaggedMatrix {
                row,
                got: r.len(),
                expected: dim,
            });
        }
    }

    struct Group {
        id: usize,
        size: f64,
        centroid: Vec<f64>,
    }

    let mut active: Vec<Group> = matrix
        .iter()
        .enumerate()
        .map(|(id, row)| Group {
            id,
            size: 1.0,
            centroid: row.clone(),
        })
        .collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        // Ward's objective: merging A and B raises the within-group squared
        // error by |A||B|/(|A|+|B|) * ||centroid_A - centroid_B||^2.
        let mut best: Option<(f64, usize, usize)> = None;
        let mut merge_at = (0, 0);
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let (a, b) = (&active[i], &active[j]);
                let d2: f64 = a
                    .centroid
                    .iter()
                    .zip(&b.centroid)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                let delta = a.size * b.size / (a.size + b.size) * d2;
                let key = (delta, a.id.min(b.id), a.id.max(b.id));
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        key.0 < bd || (key.0 == bd && (key.1, key.2) < (bi, bj))
                    }
                };
                if better {
                    best = Some(key);
                    merge_at = (i, j);
                }
            }
        }
        // i < j, so removing j first keeps i valid.
        let (i, j) = merge_at;
        let b = active.swap_remove(j);
        let a = active.swap_remove(i);
        merges.push((a.id.min(b.id), a.id.max(b.id)));

        let size = a.size + b.size;
        let centroid = a
            .centroid
            .iter()
            .zip(&b.centroid)
            .map(|(x, y)| (a.size * x + b.size * y) / size)
            .collect();
        active.push(Group {
            id: n + step,
            size,
            centroid,
        });
    }
    Ok(merges)
}

/// R^2 after each merge, indexed so `curve[k]` is the value with `k + 1`
/// groups remaining: `curve[n-1] = 1` (all singletons) and `curve[0] = 0`
/// (one group), and the sequence is non-increasing as groups merge.
pub fn r2_curve(merges: &[(usize, usize)], outcomes: &[f64]) -> Result<Vec<f64>, ClusterError> {
    let n = outcomes.len();
    if merges.len() + 1 != n {
        return Err(ClusterError::MergeMismatch {
            merges: merges.len(),
            rows: n,
        });
    }

    let sum: f64 = outcomes.iter().sum();
    let sumsq: f64 = outcomes.iter().map(|y| y * y).sum();
    let ss_total = sumsq - sum * sum / n as f64;
    if ss_total <= 1e-12 * sumsq.abs().max(f64::MIN_POSITIVE) {
        return Err(ClusterError::DegenerateOutcomes);
    }

    // Group stats by dendrogram id; within-group squared error accumulates
    // merge by merge, each increment nonnegative, so the curve cannot tick
    // upward from rounding.
    let mut stats: Vec<Option<(f64, f64)>> = outcomes.iter().map(|&y| Some((1.0, y))).collect();
    stats.resize(2 * n - 1, None);

    let mut curve = vec![0.0; n];
    curve[n - 1] = 1.0;
    let mut ss_within = 0.0;
    for (step, &(a, b)) in merges.iter().enumerate() {
        let take = |stats: &mut Vec<Option<(f64, f64)>>, id: usize| {
            if id >= stats.len() {
                return Err(ClusterError::InvalidMerge { step, id });
            }
            stats[id].take().ok_or(ClusterError::InvalidMerge { step, id })
        };
        let (na, sa) = take(&mut stats, a)?;
        let (nb, sb) = take(&mut stats, b)?;
        ss_within += na * nb / (na + nb) * (sa / na - sb / nb) * (sa / na - sb / nb);
        stats[n + step] = Some((na + nb, sa + sb));
        curve[n - 2 - step] = 1.0 - ss_within / ss_total;
    }
    Ok(curve)
}

/// Normalized area under the R^2-vs-groups-remaining curve, in [0, 1].
/// Trapezoidal rule over the curve read from `n` groups down to 1.
pub fn r2_auc(curve: &[f64]) -> f64 {
    let n = curve.len();
    assert!(n >= 2, "r2_auc needs a curve over at least 2 group counts");
    let mut area = 0.0;
    // curve[n-1] is the n-groups end; walk down to curve[0].
    for k in (1..n).rev() {
        area += (curve[k] + curve[k - 1]) / 2.0;
    }
    area / (n - 1) as f64
}

/// A full supervised-clustering run: the merge sequence and its R^2 curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace {
    pub merges: Vec<(usize, usize)>,
    pub r2: Vec<f64>,
}

impl MergeTrace {
    pub fn compute(matrix: &[Vec<f64>], outcomes: &[f64]) -> Result<MergeTrace, ClusterError> {
        if matrix.len() != outcomes.len() {
            return Err(ClusterError::MergeMismatch {
                merges: matrix.len().saturating_sub(1),
                rows: outcomes.len(),
            });
        }
        let merges = hierarchical_cluster(matrix)?;
        let r2 = r2_curve(&merges, outcomes)?;
        Ok(MergeTrace { merges, r2 })
    }

    pub fn auc(&self) -> f64 {
        r2_auc(&self.r2)
    }
}
