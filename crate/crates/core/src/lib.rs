//! Exact SHAP feature attribution for decision-tree ensembles.
//!
//! The crate has three layers:
//!
//! * [`model`] loads and evaluates array-encoded tree ensembles from a small
//!   JSON schema.
//! * Attribution engines: [`shap`] computes exact SHAP values with a
//!   polynomial-time tree traversal; [`oracle`] computes the same values by
//!   brute-force subset enumeration (exponential, used to verify the
//!   traversal); [`baselines`] implements the classical gain, split-count and
//!   decision-path attributions for comparison.
//! * Evaluation: [`cluster`] scores attribution quality via supervised
//!   clustering (Ward linkage plus an R^2 merge curve), with seeded data and
//!   model generators in [`synth`] and CSV plumbing in [`data`].
//!
//! Attributions explain a single prediction as `base + sum(phi)` where the
//! base value is the model's expected output; see
//! [`AttributionVector`]. The built-in [`demo`] models are a two-feature
//! worked example where all of the classical methods rank features
//! inconsistently and SHAP does not.

pub mod attribution;
pub mod baselines;
pub mod cluster;
pub mod data;
pub mod demo;
pub mod model;
pub mod oracle;
pub mod shap;
pub mod synth;

pub use attribution::{AttributionVector, LOCAL_ACCURACY_RTOL};
pub use baselines::{
    gain_importance, mean_abs_shap, saabas_path, split_count, BaselineError, GlobalImportance,
    ImportanceMethod,
};
pub use cluster::{
    attribution_matrix, hierarchical_cluster, r2_auc, r2_curve, AttributionMethod, ClusterError,
    MergeTrace,
};
pub use data::{DataError, LabeledDataset};
pub use model::{EnsembleStats, Instance, ModelError, TreeEnsemble, TreeModel};
pub use oracle::{
    expvalue, shapley_brute_force, shapley_brute_force_with_cap, subset_weight, FeatureSubset,
    OracleError, DEFAULT_FEATURE_CAP,
};
pub use shap::{
    explain_batch, tree_shap_ensemble, tree_shap_ensemble_counted, tree_shap_single,
    tree_shap_single_counted, PathState,
};
pub use synth::{synth_dataset, SynthDataset};
