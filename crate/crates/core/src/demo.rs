//! Built-in demo models: two depth-2 trees over (Fever, Cough) encoding an
//! AND of both symptoms. Model A splits Fever at the root; model B splits
//! Cough at the root and adds +10 whenever Cough is present, so Cough
//! matters strictly more in B. The pair is small enough to attribute by hand
//! and is what the CLI `demo` command prints.
//!
//! Features are 0/1 encoded (1 = symptom present) with all splits at 0.5,
//! and each leaf carries one unit of cover.

use crate::model::{Instance, TreeEnsemble};

pub const FEATURE_NAMES: [&str; 2] = ["Fever", "Cough"];
pub const FEVER: usize = 0;
pub const COUGH: usize = 1;

const MODEL_A_JSON: &str = include_str!("../fixtures/model_a.json");
const MODEL_B_JSON: &str = include_str!("../fixtures/model_b.json");

/// AND(Fever, Cough) scaled to 80; root splits Fever.
pub fn model_a() -> TreeEnsemble {
    TreeEnsemble::from_json_str(MODEL_A_JSON).expect("embedded model A is valid")
}

/// Same AND plus +10 whenever Cough is present; root splits Cough.
pub fn model_b() -> TreeEnsemble {
    TreeEnsemble::from_json_str(MODEL_B_JSON).expect("embedded model B is valid")
}

/// The instance both models are explained at in the demo: both symptoms present.
pub fn demo_instance() -> Instance {
    Instance::new(vec![1.0, 1.0])
}
