use super::{Matrix, Rng};
use crate::error::{Error, Result};

/// Glorot-uniform initialisation: entries in `[-s, s]` with `s = sqrt(6 / (rows + cols))`.
pub fn init_glorot(rows: usize, cols: usize, rng: &mut Rng) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Shape(format!(
            "glorot init needs non-zero dimensions, got {rows}x{cols}"
        )));
    }
    let s = glorot_bound(rows, cols);
    Ok(Matrix::from_fn(rows, cols, |_, _| rng.uniform(-s, s)))
}

pub fn glorot_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}
