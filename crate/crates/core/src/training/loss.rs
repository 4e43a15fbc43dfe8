use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Mean squared error over a column of predictions, with its gradient `(2/n)(p - y)`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() || pred.cols() != 1 || pred.rows() == 0 {
        return Err(Error::shape("mse_loss", pred.shape(), target.shape()));
    }
    let n = pred.rows() as f64;
    let diff = pred.sub(target)?;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff.scale(2.0 / n)))
}
