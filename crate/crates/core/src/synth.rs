//! Seeded generators for random models and labeled datasets.
//!
//! Everything here is deterministic given the seed/rng: the oracle test
//! suites, the benchmark grids, and the clustering evaluation all rebuild
//! identical inputs from the same seed. Features are drawn uniformly from
//! [0, 1), so thresholds are kept inside that range.

use crate::model::{Instance, TreeEnsemble, TreeModel, LEAF_SENTINEL};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// An instance with features uniform in [0, 1).
pub fn random_instance<R: Rng>(rng: &mut R, num_features: usize) -> Instance {
    Instance::new((0..num_features).map(|_| rng.random::<f64>()).collect())
}

/// A random-shaped tree splitting on any feature, depth at most `max_depth`,
/// integer leaf covers in 1..=8 and normal leaf values. The root always
/// splits when `max_depth > 0`.
pub fn random_tree<R: Rng>(rng: &mut R, num_features: usize, max_depth: usize) -> TreeModel {
    let allowed: Vec<usize> = (0..num_features).collect();
    random_tree_on_features(rng, &allowed, max_depth)
}

/// Like [`random_tree`], but splits only on the given feature set.
pub fn random_tree_on_features<R: Rng>(
    rng: &mut R,
    allowed: &[usize],
    max_depth: usize,
) -> TreeModel {
    let mut b = Builder::default();
    grow(&mut b, rng, allowed, max_depth, false, true);
    b.finish()
}

/// A complete binary tree of exactly `depth` levels with unit leaf covers,
/// random split features and normal leaf values.
pub fn full_tree<R: Rng>(rng: &mut R, num_features: usize, depth: usize) -> TreeModel {
    let allowed: Vec<usize> = (0..num_features).collect();
    full_tree_on_features(rng, &allowed, depth)
}

/// Like [`full_tree`], but splits only on the given feature set.
pub fn full_tree_on_features<R: Rng>(rng: &mut R, allowed: &[usize], depth: usize) -> TreeModel {
    let mut b = Builder::default();
    grow(&mut b, rng, allowed, depth, true, true);
    b.finish()
}

pub fn random_ensemble<R: Rng>(
    rng: &mut R,
    num_trees: usize,
    num_features: usize,
    max_depth: usize,
) -> TreeEnsemble {
    let trees = (0..num_trees)
        .map(|_| random_tree(rng, num_features, max_depth))
        .collect();
    TreeEnsemble::new(trees, 0.0, num_features).expect("generated tree is valid")
}

/// An ensemble whose trees split only on `allowed`; the remaining features
/// are guaranteed dummies.
pub fn random_ensemble_on_features<R: Rng>(
    rng: &mut R,
    num_trees: usize,
    num_features: usize,
    allowed: &[usize],
    max_depth: usize,
) -> TreeEnsemble {
    let trees = (0..num_trees)
        .map(|_| random_tree_on_features(rng, allowed, max_depth))
        .collect();
    TreeEnsemble::new(trees, 0.0, num_features).expect("generated tree is valid")
}

/// An ensemble of complete binary trees, as used by the scaling benchmarks.
pub fn full_ensemble<R: Rng>(
    rng: &mut R,
    num_trees: usize,
    num_features: usize,
    depth: usize,
) -> TreeEnsemble {
    let trees = (0..num_trees)
        .map(|_| full_tree(rng, num_features, depth))
        .collect();
    TreeEnsemble::new(trees, 0.0, num_features).expect("generated tree is valid")
}

#[derive(Default)]
struct Builder {
    left: Vec<i32>,
    right: Vec<i32>,
    feature: Vec<i32>,
    threshold: Vec<f64>,
    value: Vec<f64>,
    cover: Vec<f64>,
}

impl Builder {
    fn push_placeholder(&mut self) -> usize {
        self.left.push(LEAF_SENTINEL);
        self.right.push(LEAF_SENTINEL);
        self.feature.push(LEAF_SENTINEL);
        self.threshold.push(0.0);
        self.value.push(0.0);
        self.cover.push(0.0);
        self.left.len() - 1
    }

    fn finish(self) -> TreeModel {
        TreeModel::from_arrays(
            self.left,
            self.right,
            self.feature,
            self.threshold,
            self.value,
            self.cover,
        )
    }
}

/// Grows a subtree and returns its (node index, cover). Covers are built
/// bottom-up so the parent-equals-sum-of-children invariant holds exactly.
fn grow<R: Rng>(
    b: &mut Builder,
    rng: &mut R,
    allowed: &[usize],
    depth_left: usize,
    full: bool,
    is_root: bool,
) -> (usize, f64) {
    let node = b.push_placeholder();
    let stop = depth_left == 0 || (!full && !is_root && rng.random::<f64>() < 0.25);
    if stop {
        let cover = if full {
            1.0
        } else {
            rng.random_range(1..=8) as f64
        };
        b.value[node] = rng.sample::<f64, _>(StandardNormal);
        b.cover[node] = cover;
        return (node, cover);
    }
    let feature = allowed[rng.random_range(0..allowed.len())];
    let threshold = rng.random_range(0.05..0.95);
    let (left, left_cover) = grow(b, rng, allowed, depth_left - 1, full, false);
    let (right, right_cover) = grow(b, rng, allowed, depth_left - 1, full, false);
    b.left[node] = left as i32;
    b.right[node] = right as i32;
    b.feature[node] = feature as i32;
    b.threshold[node] = threshold;
    b.cover[node] = left_cover + right_cover;
    (node, left_cover + right_cover)
}

/// A deterministic regression dataset with a known generating model.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub instances: Vec<Instance>,
    pub outcomes: Vec<f64>,
    /// The ensemble that produced the outcomes (before noise).
    pub ensemble: TreeEnsemble,
    /// Features `0..num_informative` drive the outcome; the rest are noise.
    pub num_informative: usize,
}

/// Generates `n` instances with uniform features, outcomes equal to a random
/// tree ensemble over the first `num_informative` features plus
/// `noise * N(0, 1)`. The remaining features are pure distractors.
pub fn synth_dataset(
    seed: u64,
    n: usize,
    num_features: usize,
    num_informative: usize,
    noise: f64,
) -> SynthDataset {
    assert!(n >= 2, "synth_dataset needs n >= 2");
    assert!(num_features >= 2, "synth_dataset needs at least 2 features");
    assert!(
        (1..=num_features).contains(&num_informative),
        "num_informative must be in 1..=num_features"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let informative: Vec<usize> = (0..num_informative).collect();
    let trees = (0..6)
        .map(|_| full_tree_on_features(&mut rng, &informative, 3))
        .collect();
    let ensemble = TreeEnsemble::new(trees, 0.0, num_features).expect("generated tree is valid");

    let instances: Vec<Instance> = (0..n)
        .map(|_| random_instance(&mut rng, num_features))
        .collect();
    let outcomes = instances
        .iter()
        .map(|x| ensemble.predict(x) + noise * rng.sample::<f64, _>(StandardNormal))
        .collect();

    SynthDataset {
        instances,
        outcomes,
        ensemble,
        num_informative,
    }
}
