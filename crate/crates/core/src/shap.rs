//! Exact SHAP values in polynomial time via a single tree traversal.
//!
//! Instead of enumerating feature subsets, the traversal tracks what
//! proportion of all subsets of each cardinality flows down every branch. The
//! state is a path of unique split features; extending the path splits each
//! cardinality's weight between "feature included" and "feature excluded"
//! mass, and unwinding restores the weights exactly. At a leaf, unwinding each
//! path element yields the kernel-weighted share that element's feature
//! contributes to the leaf's value.
//!
//! Per tree the cost is `O(L * D^2)` for `L` leaves and depth `D`; the
//! brute-force oracle in [`crate::oracle`] computes the same attributions in
//! `O(L * 2^M)` and pins this implementation down in tests.

use crate::attribution::AttributionVector;
use crate::model::{Instance, TreeEnsemble, TreeModel};
use rayon::prelude::*;

/// One unique feature on the traversal path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathElement {
    /// Split feature, `None` only for the root placeholder element.
    pub feature: Option<usize>,
    /// Fraction of "feature excluded" subsets that flow down this branch.
    pub zero_fraction: f64,
    /// Fraction of "feature included" subsets that flow down this branch
    /// (1 on the branch the instance takes, 0 otherwise).
    pub one_fraction: f64,
    /// Proportion of subsets of a given cardinality still present.
    pub pweight: f64,
}

/// The path of unique features split on between the root and the current
/// node. Extension and unwinding have value semantics: they return a new
/// path and leave the receiver untouched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathState {
    elements: Vec<PathElement>,
}

impl PathState {
    pub fn new() -> Self {
        PathState::default()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, position: usize) -> &PathElement {
        &self.elements[position]
    }

    /// Position of the path element splitting on `feature`, if any. The root
    /// placeholder at position 0 never matches.
    pub fn find_first(&self, feature: usize) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e.feature == Some(feature))
    }

    /// Returns the path grown by one element, with every cardinality weight
    /// split between inclusion mass (`one_fraction`, shifted one position up)
    /// and exclusion mass (`zero_fraction`, kept in place).
    pub fn extended(
        &self,
        zero_fraction: f64,
        one_fraction: f64,
        feature: Option<usize>,
    ) -> PathState {
        let mut path = self.clone();
        let depth = path.elements.len();
        path.elements.push(PathElement {
            feature,
            zero_fraction,
            one_fraction,
            pweight: if depth == 0 { 1.0 } else { 0.0 },
        });
        let scale = (depth + 1) as f64;
        for i in (0..depth).rev() {
            path.elements[i + 1].pweight +=
                one_fraction * path.elements[i].pweight * (i + 1) as f64 / scale;
            path.elements[i].pweight =
                zero_fraction * path.elements[i].pweight * (depth - i) as f64 / scale;
        }
        path
    }

    /// Returns the path with the element at `position` removed and all
    /// cardinality weights restored to their pre-extension values. `position`
    /// must be in `1..len()`.
    ///
    /// Panics if the element carries neither inclusion nor exclusion mass;
    /// paths built by the traversal never do, so that signals corrupted state.
    pub fn unwound(&self, position: usize) -> PathState {
        let mut path = self.clone();
        let depth = path.elements.len() - 1;
        assert!(
            position >= 1 && position <= depth,
            "unwind position {position} out of range 1..={depth}"
        );
        let one = path.elements[position].one_fraction;
        let zero = path.elements[position].zero_fraction;
        assert!(
            one != 0.0 || zero != 0.0,
            "corrupted path state: element has no inclusion or exclusion mass"
        );
        let scale = (depth + 1) as f64;
        let mut next_one = path.elements[depth].pweight;
        for j in (0..depth).rev() {
            if one != 0.0 {
                let tmp = path.elements[j].pweight;
                path.elements[j].pweight = next_one * scale / ((j + 1) as f64 * one);
                next_one = tmp - path.elements[j].pweight * zero * (depth - j) as f64 / scale;
            } else {
                path.elements[j].pweight =
                    path.elements[j].pweight * scale / (zero * (depth - j) as f64);
            }
        }
        for j in position..depth {
            let next = path.elements[j + 1];
            let el = &mut path.elements[j];
            el.feature = next.feature;
            el.zero_fraction = next.zero_fraction;
            el.one_fraction = next.one_fraction;
        }
        path.elements.pop();
        path
    }

    /// Total weight the element at `position` would leave behind if unwound,
    /// without building the unwound path. This is the kernel weight used in
    /// the leaf accumulation.
    pub fn unwound_sum(&self, position: usize) -> f64 {
        let depth = self.elements.len() - 1;
        let one = self.elements[position].one_fraction;
        let zero = self.elements[position].zero_fraction;
        assert!(
            one != 0.0 || zero != 0.0,
            "corrupted path state: element has no inclusion or exclusion mass"
        );
        let scale = (depth + 1) as f64;
        let mut next_one = self.elements[depth].pweight;
        let mut total = 0.0;
        for j in (0..depth).rev() {
            if one != 0.0 {
                let tmp = next_one * scale / ((j + 1) as f64 * one);
                total += tmp;
                next_one = self.elements[j].pweight - tmp * zero * (depth - j) as f64 / scale;
            } else {
                total += self.elements[j].pweight * scale / (zero * (depth - j) as f64);
            }
        }
        total
    }
}

/// SHAP values of a single tree. `phi` matches the brute-force oracle term
/// for this tree exactly; the base value is the tree's cover-weighted leaf
/// mean.
pub fn tree_shap_single(
    tree: &TreeModel,
    instance: &Instance,
    num_features: usize,
) -> AttributionVector {
    tree_shap_single_counted(tree, instance, num_features).0
}

/// [`tree_shap_single`] plus the number of elementary path operations
/// performed (node visits and extend/unwind/accumulate loop steps), for
/// complexity measurements.
pub fn tree_shap_single_counted(
    tree: &TreeModel,
    instance: &Instance,
    num_features: usize,
) -> (AttributionVector, u64) {
    debug_assert!(tree.max_split_feature().map_or(0, |f| f + 1) <= num_features);
    let mut att = AttributionVector::zeros(tree.leaf_mean(), num_features);
    let mut ops = 0;
    recurse(
        tree,
        instance.features(),
        &mut att.phi,
        0,
        &PathState::new(),
        1.0,
        1.0,
        None,
        &mut ops,
    );
    (att, ops)
}

/// SHAP values of a whole ensemble: per-tree attributions summed in tree
/// order, base value equal to the ensemble's expected output.
pub fn tree_shap_ensemble(ensemble: &TreeEnsemble, instance: &Instance) -> AttributionVector {
    tree_shap_ensemble_counted(ensemble, instance).0
}

/// [`tree_shap_ensemble`] plus the total operation count across trees.
pub fn tree_shap_ensemble_counted(
    ensemble: &TreeEnsemble,
    instance: &Instance,
) -> (AttributionVector, u64) {
    let m = ensemble.num_features();
    let mut att = AttributionVector::zeros(ensemble.base_score(), m);
    let mut ops = 0;
    for tree in ensemble.trees() {
        let (term, tree_ops) = tree_shap_single_counted(tree, instance, m);
        att.add_assign(&term);
        ops += tree_ops;
    }
    (att, ops)
}

/// SHAP values for a batch of instances, computed in parallel and returned
/// in input order.
pub fn explain_batch(ensemble: &TreeEnsemble, instances: &[Instance]) -> Vec<AttributionVector> {
    instances
        .par_iter()
        .map(|x| tree_shap_ensemble(ensemble, x))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    tree: &TreeModel,
    x: &[f64],
    phi: &mut [f64],
    node: usize,
    path: &PathState,
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
    ops: &mut u64,
) {
    let path = path.extended(zero_fraction, one_fraction, feature);
    // One op per node visit plus one per extend-loop step.
    *ops += path.len() as u64;

    if tree.is_leaf(node) {
        let value = tree.value(node);
        for i in 1..path.len() {
            let weight = path.unwound_sum(i);
            *ops += (path.len() - 1) as u64;
            let el = path.element(i);
            phi[el.feature.expect("non-root path element carries a feature")] +=
                weight * (el.one_fraction - el.zero_fraction) * value;
        }
        return;
    }

    let split = tree.split_feature(node);
    let (left, right) = (tree.left_child(node), tree.right_child(node));
    let (hot, cold) = if x[split] <= tree.threshold(node) {
        (left, right)
    } else {
        (right, left)
    };

    // A feature met twice on one path: undo its previous extension and fold
    // its fractions into the child calls.
    let mut incoming_zero = 1.0;
    let mut incoming_one = 1.0;
    let path = match path.find_first(split) {
        Some(k) => {
            incoming_zero = path.element(k).zero_fraction;
            incoming_one = path.element(k).one_fraction;
            *ops += (path.len() - 1) as u64;
            path.unwound(k)
        }
        None => path,
    };

    let cover = tree.cover(node);
    recurse(
        tree,
        x,
        phi,
        hot,
        &path,
        incoming_zero * tree.cover(hot) / cover,
        incoming_one,
        Some(split),
        ops,
    );
    recurse(
        tree,
        x,
        phi,
        cold,
        &path,
        incoming_zero * tree.cover(cold) / cover,
        0.0,
        Some(split),
        ops,
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::model::TreeEnsemble;
    use crate::oracle::shapley_brute_force;
    use crate::synth;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_extension_has_unit_weight() {
        let path = PathState::new().extended(1.0, 1.0, None);
        assert_eq!(path.len(), 1);
        assert_eq!(path.element(0).pweight, 1.0);
        assert_eq!(path.element(0).feature, None);
    }

    fn assert_paths_close(a: &PathState, b: &PathState) {
        assert_eq!(a.len(), b.len());
        for i in 0..a.len() {
            let (ea, eb) = (a.element(i), b.element(i));
            assert_eq!(ea.feature, eb.feature);
            assert_eq!(ea.zero_fraction, eb.zero_fraction);
            assert_eq!(ea.one_fraction, eb.one_fraction);
            assert!(
                (ea.pweight - eb.pweight).abs() <= 1e-15 + 1e-9 * ea.pweight.abs(),
                "pweight mismatch at {i}: {} vs {}",
                ea.pweight,
                eb.pweight
            );
        }
    }

    proptest! {
        // Unwinding the element just extended restores the path. Fractions
        // are drawn from the shapes a traversal produces: zero fractions are
        // cover ratios in (0, 1], one fractions are exactly 0 or 1. (For
        // arbitrary tiny one fractions the identity still holds in exact
        // arithmetic but cancels catastrophically in floats; the traversal
        // never creates such paths.)
        #[test]
        fn unwind_inverts_extend(
            fractions in prop::collection::vec((0.05f64..=1.0, prop::bool::ANY), 1..7),
            last_zero in 0.05f64..=1.0,
            last_one in prop::bool::ANY,
        ) {
            let mut path = PathState::new().extended(1.0, 1.0, None);
            for (i, (z, o)) in fractions.iter().enumerate() {
                path = path.extended(*z, if *o { 1.0 } else { 0.0 }, Some(i));
            }
            let grown = path.extended(last_zero, if last_one { 1.0 } else { 0.0 }, Some(99));
            let back = grown.unwound(grown.len() - 1);
            assert_paths_close(&back, &path);
        }
    }

    #[test]
    fn and_model_attributions_match_oracle_fixtures() {
        let x = crate::model::Instance::new(vec![1.0, 1.0]);

        let a = tree_shap_ensemble(&demo::model_a(), &x);
        assert!((a.base - 20.0).abs() < 1e-12);
        assert!((a.phi[0] - 30.0).abs() < 1e-12);
        assert!((a.phi[1] - 30.0).abs() < 1e-12);

        let b = tree_shap_ensemble(&demo::model_b(), &x);
        assert!((b.base - 25.0).abs() < 1e-12);
        assert!((b.phi[0] - 30.0).abs() < 1e-12);
        assert!((b.phi[1] - 35.0).abs() < 1e-12);

        // The whole point: Cough's attribution rises from A to B.
        assert!(b.phi[1] > a.phi[1]);
    }

    #[test]
    fn single_split_tree_is_a_one_player_game() {
        let tree = crate::model::TreeModel::from_arrays(
            vec![1, -1, -1],
            vec![2, -1, -1],
            vec![0, -1, -1],
            vec![0.5, 0.0, 0.0],
            vec![0.0, 1.0, 3.0],
            vec![10.0, 4.0, 6.0],
        );
        let ens = TreeEnsemble::new(vec![tree], 0.0, 3).unwrap();
        let x = crate::model::Instance::new(vec![0.2, 9.0, -1.0]);
        let att = tree_shap_ensemble(&ens, &x);
        let expected = ens.predict(&x) - ens.expected_value();
        assert!((att.phi[0] - expected).abs() < 1e-12);
        assert_eq!(att.phi[1], 0.0);
        assert_eq!(att.phi[2], 0.0);
    }

    #[test]
    fn ensemble_attributions_add_over_trees() {
        let trees: Vec<_> = demo::model_a()
            .trees()
            .iter()
            .chain(demo::model_b().trees())
            .cloned()
            .collect();
        let ens = TreeEnsemble::new(trees, 0.0, 2).unwrap();
        let att = tree_shap_ensemble(&ens, &crate::model::Instance::new(vec![1.0, 1.0]));
        assert!((att.base - 45.0).abs() < 1e-12);
        assert!((att.phi[0] - 60.0).abs() < 1e-12);
        assert!((att.phi[1] - 65.0).abs() < 1e-12);
    }

    fn assert_matches_oracle(ens: &TreeEnsemble, x: &crate::model::Instance) {
        let fast = tree_shap_ensemble(ens, x);
        let slow = shapley_brute_force(ens, x).unwrap();
        assert!((fast.base - slow.base).abs() < 1e-9);
        for i in 0..ens.num_features() {
            let (a, b) = (fast.phi[i], slow.phi[i]);
            let tol = 1e-8f64.max(1e-10 * a.abs().max(b.abs()));
            assert!(
                (a - b).abs() <= tol,
                "phi[{i}] diverges: traversal {a} vs oracle {b}"
            );
        }
        assert!(fast.is_locally_accurate(ens.predict(x), 1e-9));
    }

    #[test]
    fn random_trees_match_the_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let ens = synth::random_ensemble(&mut rng, 2, 8, 5);
            for _ in 0..5 {
                let x = synth::random_instance(&mut rng, 8);
                assert_matches_oracle(&ens, &x);
            }
        }
    }

    #[test]
    fn repeated_splits_on_one_feature_match_the_oracle() {
        // Root and both children split on feature 0, exercising the
        // unwind-and-fold duplicate handling on every path.
        let tree = crate::model::TreeModel::from_arrays(
            vec![1, 3, 5, -1, -1, -1, -1],
            vec![2, 4, 6, -1, -1, -1, -1],
            vec![0, 0, 0, -1, -1, -1, -1],
            vec![0.5, 0.25, 0.75, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 2.0, 4.0, 8.0],
            vec![10.0, 6.0, 4.0, 2.0, 4.0, 3.0, 1.0],
        );
        let ens = TreeEnsemble::new(vec![tree], 0.0, 2).unwrap();
        for x0 in [0.1, 0.3, 0.6, 0.9] {
            assert_matches_oracle(&ens, &crate::model::Instance::new(vec![x0, 0.0]));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..40 {
            // Few features and generous depth force duplicate splits.
            let ens = synth::random_ensemble(&mut rng, 1, 2, 6);
            let x = synth::random_instance(&mut rng, 2);
            assert_matches_oracle(&ens, &x);
        }
    }

    #[test]
    fn unused_features_get_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ens = synth::random_ensemble_on_features(&mut rng, 3, 9, &[1, 4], 4);
        let x = synth::random_instance(&mut rng, 9);
        let att = tree_shap_ensemble(&ens, &x);
        for i in [0, 2, 3, 5, 6, 7, 8] {
            assert_eq!(att.phi[i], 0.0, "feature {i} never split on");
        }
    }

    #[test]
    fn identical_inputs_give_bit_identical_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let ens = synth::random_ensemble(&mut rng, 5, 6, 5);
        let x = synth::random_instance(&mut rng, 6);
        let first = tree_shap_ensemble(&ens, &x);
        let second = tree_shap_ensemble(&ens, &x);
        assert_eq!(first.base.to_bits(), second.base.to_bits());
        for (a, b) in first.phi.iter().zip(&second.phi) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn batch_explanations_preserve_input_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let ens = synth::random_ensemble(&mut rng, 4, 5, 4);
        let xs: Vec<_> = (0..32).map(|_| synth::random_instance(&mut rng, 5)).collect();
        let batch = explain_batch(&ens, &xs);
        for (x, att) in xs.iter().zip(&batch) {
            assert_eq!(att, &tree_shap_ensemble(&ens, x));
        }
    }
}
