//! `treeshap importance`: whole-model feature scores.

use crate::util::{load_instances, load_model, CliError, OutTarget};
use serde::Serialize;
use std::path::{Path, PathBuf};
use treeshap::data::{default_feature_names, to_json_exact};
use treeshap::{gain_importance, mean_abs_shap, split_count};

#[derive(Serialize)]
struct ImportanceReport {
    features: Vec<String>,
    gain: Vec<f64>,
    split_count: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_abs_shap: Option<Vec<f64>>,
}

pub fn run(
    model: &Path,
    data: Option<&Path>,
    out: Option<PathBuf>,
    csv: bool,
) -> Result<(), CliError> {
    let ensemble = load_model(model)?;

    let (features, shap_scores) = match data {
        Some(path) => {
            let (names, instances) = load_instances(path, &ensemble)?;
            let imp = mean_abs_shap(&ensemble, &instances)
                .map_err(|e| CliError::Input(format!("data {}: {e}", path.display())))?;
            (names, Some(imp.scores))
        }
        None => (default_feature_names(ensemble.num_features()), None),
    };
    let report = ImportanceReport {
        features,
        gain: gain_importance(&ensemble).scores,
        split_count: split_count(&ensemble).scores,
        mean_abs_shap: shap_scores,
    };

    let text = if csv {
        let mut t = String::from("feature,gain,split_count");
        if report.mean_abs_shap.is_some() {
            t.push_str(",mean_abs_shap");
        }
        t.push('\n');
        for i in 0..report.features.len() {
            t.push_str(&format!(
                "{},{},{}",
                report.features[i], report.gain[i], report.split_count[i]
            ));
            if let Some(s) = &report.mean_abs_shap {
                t.push_str(&format!(",{}", s[i]));
            }
            t.push('\n');
        }
        t
    } else {
        let mut t = to_json_exact(&report);
        t.push('\n');
        t
    };

    OutTarget::new(out).write(&text)
}
