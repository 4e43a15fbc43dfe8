use serde::{Deserialize, Serialize};

use crate::datasets::WindowedSample;
use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::models::Model;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    pub num_predictions: usize,
}

impl Metrics {
    /// RMSE and MAE over paired predictions and targets.
    pub fn from_pairs(pred: &[f64], target: &[f64]) -> Result<Self> {
        if pred.len() != target.len() {
            return Err(Error::Shape(format!(
                "{} predictions for {} targets",
                pred.len(),
                target.len()
            )));
        }
        if pred.is_empty() {
            return Err(Error::Validation("no predictions to score".into()));
        }
        let n = pred.len() as f64;
        let (sq, abs) = pred
            .iter()
            .zip(target)
            .fold((0.0, 0.0), |(sq, abs), (p, y)| {
                let e = p - y;
                (sq + e * e, abs + e.abs())
            });
        Ok(Self {
            rmse: (sq / n).sqrt(),
            mae: abs / n,
            num_predictions: pred.len(),
        })
    }
}

/// Pools node-level eval-mode predictions over all samples.
pub fn evaluate(model: &Model, ctx: &GraphContext, samples: &[WindowedSample]) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty split".into()));
    }
    let mut pred = Vec::new();
    let mut target = Vec::new();
    for s in samples {
        pred.extend_from_slice(model.predict(ctx, &s.input)?.as_slice());
        target.extend_from_slice(s.target.as_slice());
    }
    Metrics::from_pairs(&pred, &target)
}

/// Predicts each node's mean training-split density, ignoring inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoricalMean {
    pub node_means: Vec<f64>,
}

impl HistoricalMean {
    pub fn fit(train: &[WindowedSample]) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| Error::Validation("cannot fit a baseline on an empty split".into()))?;
        let n = first.target.rows();
        let mut node_means = vec![0.0; n];
        for s in train {
            if s.target.rows() != n {
                return Err(Error::Shape("samples disagree on node count".into()));
            }
            for (m, y) in node_means.iter_mut().zip(s.target.as_slice()) {
                *m += y;
            }
        }
        node_means.iter_mut().for_each(|m| *m /= train.len() as f64);
        Ok(Self { node_means })
    }

    pub fn evaluate(&self, samples: &[WindowedSample]) -> Result<Metrics> {
        if samples.is_empty() {
            return Err(Error::Validation("cannot evaluate on an empty split".into()));
        }
        let mut pred = Vec::new();
        let mut target = Vec::new();
        for s in samples {
            pred.extend_from_slice(&self.node_means);
            target.extend_from_slice(s.target.as_slice());
        }
        Metrics::from_pairs(&pred, &target)
    }
}
