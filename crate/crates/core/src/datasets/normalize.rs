use serde::{Deserialize, Serialize};

use super::WindowedSample;
use crate::error::{Error, Result};
use crate::models::TargetScale;

/// Per-channel z-score statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    /// Divisor per channel; 1 where the channel has no spread.
    pub std: Vec<f64>,
}

fn is_flat(std: f64, mean: f64) -> bool {
    std <= 1e-12 * mean.abs().max(1.0)
}

/// Fits statistics over every input cell of the training samples. Column `j`
/// of an input belongs to channel `j % num_channels`.
pub fn fit_normalizer(train: &[WindowedSample], num_channels: usize) -> Result<Normalizer> {
    if train.is_empty() {
        return Err(Error::Validation("cannot fit a normalizer on an empty split".into()));
    }
    if num_channels == 0 || !train[0].input.cols().is_multiple_of(num_channels) {
        return Err(Error::Validation(format!(
            "{} input columns do not divide into {num_channels} channels",
            train[0].input.cols()
        )));
    }
    let mut sum = vec![0.0; num_channels];
    let mut count = vec![0usize; num_channels];
    for s in train {
        for r in 0..s.input.rows() {
            for (j, x) in s.input.row(r).iter().enumerate() {
                sum[j % num_channels] += x;
                count[j % num_channels] += 1;
            }
        }
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let mut sq = vec![0.0; num_channels];
    for s in train {
        for r in 0..s.input.rows() {
            for (j, x) in s.input.row(r).iter().enumerate() {
                let c = j % num_channels;
                sq[c] += (x - mean[c]).powi(2);
            }
        }
    }
    let std = sq
        .iter()
        .zip(&count)
        .zip(&mean)
        .map(|((s, &c), &m)| {
            let sd = (s / c as f64).sqrt();
            if is_flat(sd, m) {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(Normalizer { mean, std })
}

impl Normalizer {
    pub fn num_channels(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, samples: &[WindowedSample]) -> Result<Vec<WindowedSample>> {
        let f = self.num_channels();
        samples
            .iter()
            .map(|s| {
                if s.input.cols() % f != 0 {
                    return Err(Error::Shape(format!(
                        "{} input columns do not divide into {f} channels",
                        s.input.cols()
                    )));
                }
                let mut out = s.clone();
                for r in 0..out.input.rows() {
                    for (j, x) in out.input.row_mut(r).iter_mut().enumerate() {
                        let c = j % f;
                        *x = (*x - self.mean[c]) / self.std[c];
                    }
                }
                Ok(out)
            })
            .collect()
    }
}

/// Mean and spread of the training targets, used to put the prediction head on unit scale.
pub fn fit_target_scale(train: &[WindowedSample]) -> Result<TargetScale> {
    let values: Vec<f64> = train.iter().flat_map(|s| s.target.as_slice().iter().copied()).collect();
    if values.is_empty() {
        return Err(Error::Validation("cannot fit target scale on an empty split".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sd = (values.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
    Ok(TargetScale {
        shift: mean,
        scale: if is_flat(sd, mean) { 1.0 } else { sd },
    })
}
