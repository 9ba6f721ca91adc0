//! `treeshap explain`: one explanation per input instance.

use crate::util::{load_instances, load_model, CliError, OutTarget};
use crate::ExplainMethod;
use serde::Serialize;
use std::path::{Path, PathBuf};
use treeshap::data::to_json_exact;
use treeshap::{
    explain_batch, saabas_path, shapley_brute_force, AttributionVector, OracleError,
    LOCAL_ACCURACY_RTOL,
};

#[derive(Serialize)]
struct ExplanationRecord<'a> {
    prediction: f64,
    base_value: f64,
    phi: &'a [f64],
}

pub fn run(
    model: &Path,
    data: &Path,
    method: ExplainMethod,
    out: Option<PathBuf>,
    csv: bool,
    tol: Option<f64>,
) -> Result<(), CliError> {
    let ensemble = load_model(model)?;
    let (names, instances) = load_instances(data, &ensemble)?;
    let rtol = tol.unwrap_or(LOCAL_ACCURACY_RTOL);

    let attributions: Vec<AttributionVector> = match method {
        ExplainMethod::Treeshap => explain_batch(&ensemble, &instances),
        ExplainMethod::Path => instances.iter().map(|x| saabas_path(&ensemble, x)).collect(),
        ExplainMethod::Brute => instances
            .iter()
            .map(|x| shapley_brute_force(&ensemble, x))
            .collect::<Result<_, OracleError>>()
            .map_err(|e| CliError::Input(e.to_string()))?,
    };

    // Every record must sum back to the model's prediction before anything
    // is written.
    let mut lines = String::new();
    if csv {
        lines.push_str("prediction,base_value");
        for name in &names {
            lines.push_str(&format!(",phi_{name}"));
        }
        lines.push('\n');
    }
    for (i, (x, att)) in instances.iter().zip(&attributions).enumerate() {
        let prediction = ensemble.predict(x);
        if !att.is_locally_accurate(prediction, rtol) {
            return Err(CliError::Check(format!(
                "row {}: attribution sums to {} but the model predicts {} (gap {:e}, tolerance {:e})",
                i + 1,
                att.total(),
                prediction,
                att.local_accuracy_gap(prediction),
                rtol * prediction.abs().max(1.0),
            )));
        }
        if csv {
            lines.push_str(&format!("{prediction},{}", att.base));
            for phi in &att.phi {
                lines.push_str(&format!(",{phi}"));
            }
            lines.push('\n');
        } else {
            lines.push_str(&to_json_exact(&ExplanationRecord {
                prediction,
                base_value: att.base,
                phi: &att.phi,
            }));
            lines.push('\n');
        }
    }

    OutTarget::new(out).write(&lines)
}
