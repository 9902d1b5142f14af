//! Loader for externally supplied benchmark data.
//!
//! A dataset directory holds one instance per profile name, either as
//! `<NAME>.json` or `<NAME>/instance.json`, in the instance JSON schema.
//! Anything else is reported back with the files that were found.

use std::path::{Path, PathBuf};

use q4rpd_core::model::ProblemInstance;
use thiserror::Error;

use crate::io::{read_instance, IoError};

pub const DATASET_ENV: &str = "Q4RPD_DATASET_DIR";

/// Reference figures for each published instance: Σo₁ and the sub-route mix.
pub const REFERENCE: [(&str, f64, [usize; 4]); 6] = [
    ("D14_P1", 210.43, [1, 1, 0, 1]),
    ("D16_P1", 223.74, [2, 1, 0, 1]),
    ("D14_P2", 245.30, [0, 2, 0, 2]),
    ("D21_P2", 309.99, [1, 2, 0, 2]),
    ("D21_P0", 381.46, [3, 0, 0, 0]),
    ("D29_P0", 562.11, [4, 0, 0, 0]),
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset directory {0} does not exist")]
    MissingDirectory(PathBuf),
    #[error("no instance `{name}` in {dir}; files present: {files:?}")]
    UnrecognisedFormat {
        name: String,
        dir: PathBuf,
        files: Vec<String>,
    },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Dataset directory from the environment, if set and present.
pub fn dataset_dir() -> Option<PathBuf> {
    std::env::var_os(DATASET_ENV)
        .map(PathBuf::from)
        .filter(|p| p.is_dir())
}

pub fn load_dataset_instance(dir: &Path, name: &str) -> Result<(ProblemInstance, Vec<String>), DatasetError> {
    if !dir.is_dir() {
        return Err(DatasetError::MissingDirectory(dir.to_path_buf()));
    }
    for candidate in [dir.join(format!("{name}.json")), dir.join(name).join("instance.json")] {
        if candidate.is_file() {
            return Ok(read_instance(&candidate)?);
        }
    }
    let mut files: Vec<String> = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(Result::ok)
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    Err(DatasetError::UnrecognisedFormat {
        name: name.to_string(),
        dir: dir.to_path_buf(),
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_instance, InstanceProfile};
    use crate::io::{instance_to_json, write_text};

    #[test]
    fn loads_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let inst = generate_instance(&InstanceProfile::named("D14_P1").unwrap()).unwrap();
        write_text(&dir.path().join("D14_P1.json"), &instance_to_json(&inst)).unwrap();
        write_text(&dir.path().join("D16_P1/instance.json"), &instance_to_json(&inst)).unwrap();
        assert_eq!(load_dataset_instance(dir.path(), "D14_P1").unwrap().0, inst);
        assert_eq!(load_dataset_instance(dir.path(), "D16_P1").unwrap().0, inst);
        match load_dataset_instance(dir.path(), "D29_P0") {
            Err(DatasetError::UnrecognisedFormat { files, .. }) => {
                assert_eq!(files, vec!["D14_P1.json".to_string(), "D16_P1".to_string()])
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_dataset_instance(&dir.path().join("nope"), "D14_P1"),
            Err(DatasetError::MissingDirectory(_))
        ));
    }
}
