//! The JSON structure descriptor, canonical input of every subcommand:
//! `{"block_sizes": [p0, ..., pr], "matrix": [[row], ...]}` with row-major
//! `d×d` entries.

use std::fs;
use std::path::Path;

use kolmo_core::KolmogorovStructure;
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
pub struct StructureDescriptor {
    pub block_sizes: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
}

pub fn load(path: &Path) -> Result<KolmogorovStructure, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let descriptor: StructureDescriptor = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let rows = descriptor.matrix.len();
    if descriptor.matrix.iter().any(|r| r.len() != rows) {
        return Err(CliError::Validation(format!(
            "{}: matrix must be square with equal row lengths",
            path.display()
        )));
    }
    let matrix = DMatrix::from_row_iterator(rows, rows, descriptor.matrix.into_iter().flatten());
    KolmogorovStructure::new(matrix, &descriptor.block_sizes)
        .map_err(|e| CliError::Validation(e.to_string()))
}
