//! Brute-force Shapley attribution over all feature subsets.
//!
//! This is the exponential-cost reference: for every subset of features it
//! evaluates the cover-weighted conditional expectation of the model output,
//! then combines the marginal contributions with the classic Shapley kernel.
//! The fast traversal in [`crate::shap`] must reproduce these values exactly
//! (up to float accumulation), which is what makes this module the oracle in
//! tests and in the `validate` command.
//!
//! The conditional expectation follows the tree semantics: at a split on a
//! feature in the subset, descend the branch the instance takes; at a split on
//! a feature outside the subset, descend both branches weighted by their share
//! of the parent's cover. The oracle and the fast path are compared under this
//! same estimator, not against a population conditional expectation.

use crate::attribution::AttributionVector;
use crate::model::{Instance, TreeEnsemble, TreeModel};
use rayon::prelude::*;
use thiserror::Error;

/// Default maximum feature count accepted by [`shapley_brute_force`].
/// Cost grows as `O(T * L * 2^M)`.
pub const DEFAULT_FEATURE_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "brute-force Shapley needs num_features <= {cap}, model has {num_features}; \
         use the tree traversal instead"
    )]
    FeatureCapExceeded { num_features: usize, cap: usize },
}

/// A set of feature indexes, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSubset(u32);

impl FeatureSubset {
    /// Largest feature index count representable by the bitmask.
    pub const MAX_FEATURES: usize = 30;

    pub const fn empty() -> Self {
        FeatureSubset(0)
    }

    /// All features `0..num_features`.
    pub fn full(num_features: usize) -> Self {
        debug_assert!(num_features <= Self::MAX_FEATURES);
        FeatureSubset(((1u64 << num_features) - 1) as u32)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        let mut s = FeatureSubset::empty();
        for &i in indices {
            s = s.with(i);
        }
        s
    }

    pub const fn from_mask(mask: u32) -> Self {
        FeatureSubset(mask)
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn contains(self, feature: usize) -> bool {
        self.0 & (1 << feature) != 0
    }

    pub const fn with(self, feature: usize) -> Self {
        FeatureSubset(self.0 | (1 << feature))
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// The Shapley kernel weight `|S|! (M - |S| - 1)! / M!` for a subset of size
/// `subset_size` out of `num_features` players, computed as
/// `1 / (M * C(M-1, |S|))` to avoid factorial overflow.
///
/// Panics when `num_features == 0` or `subset_size >= num_features`.
pub fn subset_weight(subset_size: usize, num_features: usize) -> f64 {
    assert!(num_features >= 1, "subset_weight: num_features must be >= 1");
    assert!(
        subset_size < num_features,
        "subset_weight: subset_size {subset_size} out of range for {num_features} features"
    );
    1.0 / (num_features as f64 * binomial(num_features - 1, subset_size) as f64)
}

/// Exact binomial coefficient; intermediate products stay within u64 for the
/// feature counts the oracle accepts.
pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k.min(n));
    let mut r: u64 = 1;
    for i in 1..=k {
        // r * (n - k + i) is always divisible by i here.
        r = r * (n - k + i) as u64 / i as u64;
    }
    r
}

/// Cover-weighted estimate of the expected model output given that exactly
/// the features in `subset` take their values from `instance`.
pub fn expvalue(ensemble: &TreeEnsemble, instance: &Instance, subset: FeatureSubset) -> f64 {
    ensemble.base_score()
        + ensemble
            .trees()
            .iter()
            .map(|t| expvalue_tree(t, instance.features(), subset))
            .sum::<f64>()
}

/// Single-tree term of [`expvalue`].
pub fn expvalue_tree(tree: &TreeModel, features: &[f64], subset: FeatureSubset) -> f64 {
    descend(tree, features, subset, 0, 1.0)
}

fn descend(tree: &TreeModel, x: &[f64], subset: FeatureSubset, node: usize, weight: f64) -> f64 {
    if tree.is_leaf(node) {
        return weight * tree.value(node);
    }
    let feature = tree.split_feature(node);
    let (left, right) = (tree.left_child(node), tree.right_child(node));
    if subset.contains(feature) {
        let next = if x[feature] <= tree.threshold(node) {
            left
        } else {
            right
        };
        descend(tree, x, subset, next, weight)
    } else {
        let cover = tree.cover(node);
        descend(tree, x, subset, left, weight * tree.cover(left) / cover)
            + descend(tree, x, subset, right, weight * tree.cover(right) / cover)
    }
}

/// Exact Shapley attributions by enumerating every feature subset in
/// ascending bitmask order. `phi[i]` sums the kernel-weighted marginal
/// contributions of feature `i`; the base value is the empty-subset
/// expectation.
///
/// Fails when the model has more than [`DEFAULT_FEATURE_CAP`] features.
pub fn shapley_brute_force(
    ensemble: &TreeEnsemble,
    instance: &Instance,
) -> Result<AttributionVector, OracleError> {
    shapley_brute_force_with_cap(ensemble, instance, DEFAULT_FEATURE_CAP)
}

/// [`shapley_brute_force`] with a caller-chosen feature cap (clamped to
/// [`FeatureSubset::MAX_FEATURES`]).
pub fn shapley_brute_force_with_cap(
    ensemble: &TreeEnsemble,
    instance: &Instance,
    cap: usize,
) -> Result<AttributionVector, OracleError> {
    let m = ensemble.num_features();
    let cap = cap.min(FeatureSubset::MAX_FEATURES);
    if m > cap {
        return Err(OracleError::FeatureCapExceeded {
            num_features: m,
            cap,
        });
    }

    let size = 1usize << m;
    // One conditional-expectation evaluation per subset. Subsets are
    // independent, so large tables are filled in parallel and collected back
    // in mask order to keep the final sums bit-reproducible.
    let table: Vec<f64> = if size >= 1 << 12 {
        (0..size)
            .into_par_iter()
            .map(|mask| expvalue(ensemble, instance, FeatureSubset::from_mask(mask as u32)))
            .collect()
    } else {
        (0..size)
            .map(|mask| expvalue(ensemble, instance, FeatureSubset::from_mask(mask as u32)))
            .collect()
    };

    let weights: Vec<f64> = (0..m).map(|k| subset_weight(k, m)).collect();
    let mut phi = vec![0.0; m];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in 0..size {
            if mask & bit == 0 {
                let k = mask.count_ones() as usize;
                *phi_i += weights[k] * (table[mask | bit] - table[mask]);
            }
        }
    }

    Ok(AttributionVector {
        base: table[0],
        phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::model::Instance;
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subset_weight_examples() {
        assert_eq!(subset_weight(0, 2), 0.5);
        assert_eq!(subset_weight(1, 2), 0.5);
        assert!((subset_weight(3, 8) - 1.0 / 280.0).abs() < 1e-18);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn subset_weight_rejects_full_subset() {
        subset_weight(2, 2);
    }

    #[test]
    fn weights_sum_to_one_over_all_subset_sizes() {
        for m in 1..=20 {
            let total: f64 = (0..m)
                .map(|k| binomial(m - 1, k) as f64 * subset_weight(k, m))
                .sum();
            assert!(
                (total - 1.0).abs() <= 1e-12,
                "weight normalization failed for m={m}: {total}"
            );
        }
    }

    #[test]
    fn expvalue_on_the_and_model() {
        let ens = demo::model_a();
        let x = Instance::new(vec![1.0, 1.0]);
        assert_eq!(expvalue(&ens, &x, FeatureSubset::full(2)), 80.0);
        assert_eq!(expvalue(&ens, &x, FeatureSubset::empty()), 20.0);
        assert_eq!(expvalue(&ens, &x, FeatureSubset::from_indices(&[0])), 40.0);
    }

    #[test]
    fn brute_force_on_the_demo_pair() {
        let x = Instance::new(vec![1.0, 1.0]);

        let a = shapley_brute_force(&demo::model_a(), &x).unwrap();
        assert!((a.base - 20.0).abs() < 1e-12);
        assert!((a.phi[0] - 30.0).abs() < 1e-12);
        assert!((a.phi[1] - 30.0).abs() < 1e-12);

        let b = shapley_brute_force(&demo::model_b(), &x).unwrap();
        assert!((b.base - 25.0).abs() < 1e-12);
        assert!((b.phi[0] - 30.0).abs() < 1e-12);
        assert!((b.phi[1] - 35.0).abs() < 1e-12);
    }

    #[test]
    fn single_leaf_attributes_nothing() {
        let ens = crate::model::TreeEnsemble::new(
            vec![crate::model::TreeModel::leaf(5.0, 10.0)],
            0.0,
            3,
        )
        .unwrap();
        let att = shapley_brute_force(&ens, &Instance::new(vec![0.0, 1.0, 2.0])).unwrap();
        assert_eq!(att.base, 5.0);
        assert_eq!(att.phi, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetry_on_the_and_model() {
        // Fever and Cough play interchangeable roles in model A at (1, 1).
        let att = shapley_brute_force(&demo::model_a(), &Instance::new(vec![1.0, 1.0])).unwrap();
        assert_eq!(att.phi[0], att.phi[1]);
    }

    #[test]
    fn cap_exceeded_is_an_error() {
        let ens = crate::model::TreeEnsemble::new(
            vec![crate::model::TreeModel::leaf(1.0, 1.0)],
            0.0,
            21,
        )
        .unwrap();
        let x = Instance::new(vec![0.0; 21]);
        assert!(matches!(
            shapley_brute_force(&ens, &x),
            Err(OracleError::FeatureCapExceeded { num_features: 21, cap: 20 })
        ));
    }

    #[test]
    fn expvalue_extremes_match_predict_and_expected_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let ens = synth::random_ensemble(&mut rng, 3, 6, 4);
            let x = synth::random_instance(&mut rng, 6);
            let full = expvalue(&ens, &x, FeatureSubset::full(6));
            let empty = expvalue(&ens, &x, FeatureSubset::empty());
            assert!((full - ens.predict(&x)).abs() < 1e-10);
            assert!((empty - ens.expected_value()).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_is_linear_over_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ens = synth::random_ensemble(&mut rng, 4, 5, 4);
        let x = synth::random_instance(&mut rng, 5);
        let whole = shapley_brute_force(&ens, &x).unwrap();
        let mut summed = AttributionVector::zeros(ens.base_score(), 5);
        for tree in ens.trees() {
            let single =
                crate::model::TreeEnsemble::new(vec![tree.clone()], 0.0, 5).unwrap();
            summed.add_assign(&shapley_brute_force(&single, &x).unwrap());
        }
        assert!((whole.base - summed.base).abs() < 1e-9);
        for i in 0..5 {
            assert!((whole.phi[i] - summed.phi[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dummy_features_get_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        // Trees split only on features 0..3 of 6.
        let ens = synth::random_ensemble_on_features(&mut rng, 4, 6, &[0, 1, 2], 4);
        let x = synth::random_instance(&mut rng, 6);
        let att = shapley_brute_force(&ens, &x).unwrap();
        for i in 3..6 {
            assert_eq!(att.phi[i], 0.0);
        }
    }

    #[test]
    fn local_accuracy_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let ens = synth::random_ensemble(&mut rng, 2, 7, 4);
            let x = synth::random_instance(&mut rng, 7);
            let att = shapley_brute_force(&ens, &x).unwrap();
            assert!(att.is_locally_accurate(ens.predict(&x), 1e-9));
        }
    }
}
