use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chronological train/validation/test fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.70,
            val_frac: 0.15,
            test_frac: 0.15,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::Validation(format!("split fractions must be positive, got {fr:?}")));
        }
        let total: f64 = fr.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("split fractions sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// `(floor(train·M), floor(val·M), remainder)`.
pub fn split_sizes(m: usize, spec: &SplitSpec) -> Result<(usize, usize, usize)> {
    spec.validate()?;
    // the epsilon keeps products like 0.7 * 30 = 20.999.. from flooring down
    let floor = |frac: f64| (frac * m as f64 + 1e-9).floor() as usize;
    let train = floor(spec.train_frac);
    let val = floor(spec.val_frac);
    let test = m.saturating_sub(train + val);
    if train == 0 || val == 0 || test == 0 || train + val > m {
        return Err(Error::Validation(format!(
            "{m} samples cannot be split into non-empty parts ({train}/{val}/{test})"
        )));
    }
    Ok((train, val, test))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Contiguous chronological split: train, then validation, then test.
pub fn split<T>(samples: Vec<T>, spec: &SplitSpec) -> Result<Splits<T>> {
    let (train_len, val_len, _) = split_sizes(samples.len(), spec)?;
    let mut train = samples;
    let mut val = train.split_off(train_len);
    let test = val.split_off(val_len);
    Ok(Splits { train, val, test })
}
