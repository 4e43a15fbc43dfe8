use super::TrafficDataset;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// `W` past timesteps of every channel, flattened per node, and the next-step density.
///
/// Column `w·F + c` of `input` holds channel `c` at timestep `start + w`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedSample {
    pub input: Matrix,
    pub target: Matrix,
    /// Timestep the target is taken from.
    pub target_step: usize,
}

/// Sample `k` covers timesteps `[k, k + W)` and targets `k + W`; `T - W` samples in order.
pub fn make_windows(ds: &TrafficDataset, window: usize) -> Result<Vec<WindowedSample>> {
    let steps = ds.num_timesteps();
    if window == 0 || window >= steps {
        return Err(Error::Validation(format!(
            "window must be in 1..{steps}, got {window}"
        )));
    }
    let (n, f) = (ds.num_nodes(), ds.num_channels());
    Ok((0..steps - window)
        .map(|k| {
            let input = Matrix::from_fn(n, window * f, |v, col| {
                ds.feature(k + col / f, v, col % f)
            });
            WindowedSample {
                input,
                target: Matrix::column(ds.targets_at(k + window)),
                target_step: k + window,
            }
        })
        .collect())
}
