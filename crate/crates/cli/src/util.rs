//! Shared command plumbing: error-to-exit-code mapping, checked input
//! loading, and output-target handling.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;
use treeshap::{DataError, Instance, ModelError, TreeEnsemble};

/// Command failures split by exit code: usage and I/O problems exit with 1,
/// semantic validation and assertion failures exit with 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Check(_) => 2,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Loads and validates a model document. Unreadable or syntactically broken
/// files are input errors; invariant violations are validation failures.
pub fn load_model(path: &Path) -> Result<TreeEnsemble, CliError> {
    TreeEnsemble::load(path).map_err(|e| {
        let msg = format!("model {}: {e}", path.display());
        match e {
            ModelError::Io(_) | ModelError::Parse(_) => CliError::Input(msg),
            _ => CliError::Check(msg),
        }
    })
}

fn data_error(path: &Path, e: DataError) -> CliError {
    CliError::Input(format!("data {}: {e}", path.display()))
}

/// Reads a feature-only CSV and checks every row against the model.
pub fn load_instances(
    path: &Path,
    ensemble: &TreeEnsemble,
) -> Result<(Vec<String>, Vec<Instance>), CliError> {
    let (names, instances) =
        treeshap::data::read_instances_csv(path).map_err(|e| data_error(path, e))?;
    check_instances(path, ensemble, &instances)?;
    Ok((names, instances))
}

/// Reads a labeled CSV (last column is the outcome) and checks every row.
pub fn load_labeled(
    path: &Path,
    ensemble: &TreeEnsemble,
) -> Result<treeshap::LabeledDataset, CliError> {
    let data = treeshap::data::read_labeled_csv(path).map_err(|e| data_error(path, e))?;
    check_instances(path, ensemble, &data.instances)?;
    Ok(data)
}

fn check_instances(
    path: &Path,
    ensemble: &TreeEnsemble,
    instances: &[Instance],
) -> Result<(), CliError> {
    for (i, x) in instances.iter().enumerate() {
        ensemble.validate_instance(x).map_err(|e| {
            CliError::Check(format!("data {}, row {}: {e}", path.display(), i + 1))
        })?;
    }
    Ok(())
}

/// Where a command writes its primary artifact.
pub enum OutTarget {
    File(PathBuf),
    Stdout,
}

impl OutTarget {
    pub fn new(out: Option<PathBuf>) -> Self {
        match out {
            Some(p) => OutTarget::File(p),
            None => OutTarget::Stdout,
        }
    }

    pub fn is_file(&self) -> bool {
        matches!(self, OutTarget::File(_))
    }

    pub fn write(&self, contents: &str) -> Result<(), CliError> {
        match self {
            OutTarget::File(p) => fs::write(p, contents).map_err(|e| {
                CliError::Input(format!("cannot write {}: {e}", p.display()))
            }),
            OutTarget::Stdout => {
                io::stdout()
                    .write_all(contents.as_bytes())
                    .map_err(CliError::from)?;
                Ok(())
            }
        }
    }
}
