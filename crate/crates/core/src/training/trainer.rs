use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::loss::mse_loss;
use crate::datasets::{fit_target_scale, Splits, WindowedSample};
use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::models::{Architecture, Mode, Model, ModelParams, ModelSpec};
use crate::numeric::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Windowed samples per optimizer step.
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub weight_decay: f64,
    /// Dropout for GraphSAGE and GGNN. GCN uses the rate in its own config.
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 8,
            max_epochs: 100,
            patience: 10,
            weight_decay: 0.0,
            dropout_rate: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive".into());
        }
        if self.patience == 0 || self.patience > self.max_epochs {
            return bad(format!(
                "patience must be in 1..={}, got {}",
                self.max_epochs, self.patience
            ));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_ms: u64,
}

/// Tracks the best validation loss and decides when to stop.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records the validation loss of `epoch`. Only a strict decrease counts as improvement.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        let improved = val_loss < self.best;
        if improved {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        StopDecision {
            improved,
            stop: self.stale >= self.patience,
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Model restored to its best-validation parameters.
    pub model: Model,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// The dropout rate a training run applies to `spec`.
pub fn effective_dropout(spec: &ModelSpec, cfg: &TrainConfig) -> f64 {
    match &spec.arch {
        Architecture::Gcn(c) => c.dropout_rate,
        _ => cfg.dropout_rate,
    }
}

/// Mean per-sample MSE in eval mode.
pub fn mean_loss(model: &Model, ctx: &GraphContext, samples: &[WindowedSample]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        total += mse_loss(&model.predict(ctx, &s.input)?, &s.target)?.0;
    }
    Ok(total / samples.len() as f64)
}

/// Trains `spec` on `splits.train`, monitoring `splits.val`.
///
/// The output scale of the head is fitted to the training targets first.
/// Each epoch walks the training samples in chronological batches; after
/// every epoch the validation loss is computed in eval mode. Training stops
/// once validation loss has not improved for `patience` epochs, and the
/// parameters from the best epoch are returned.
pub fn train(
    spec: &ModelSpec,
    ctx: &GraphContext,
    splits: &Splits<WindowedSample>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if splits.train.is_empty() || splits.val.is_empty() || splits.test.is_empty() {
        return Err(Error::Validation("train, validation and test splits must be non-empty".into()));
    }
    let mut spec = spec.clone();
    spec.target_scale = fit_target_scale(&splits.train)?;

    let mut rng = Rng::new(cfg.seed);
    let mut init_rng = rng.fork(0);
    let mut model = Model::new(spec.clone(), &mut init_rng)?;
    model.set_dropout_rate(effective_dropout(&spec, cfg))?;
    run_epochs(model, ctx, splits, cfg, &mut rng.fork(1), |model, ctx, val| {
        mean_loss(model, ctx, val)
    })
}

/// The epoch loop with a pluggable validation scorer.
pub fn run_epochs<F>(
    mut model: Model,
    ctx: &GraphContext,
    splits: &Splits<WindowedSample>,
    cfg: &TrainConfig,
    rng: &mut Rng,
    mut val_score: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&Model, &GraphContext, &[WindowedSample]) -> Result<f64>,
{
    let mut adam = AdamState::new(&model.params);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best: Option<ModelParams> = None;
    let mut history = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let mut train_total = 0.0;
        for batch in splits.train.chunks(cfg.batch_size) {
            let inv = 1.0 / batch.len() as f64;
            for s in batch {
                let pred = model.forward(ctx, &s.input, Mode::Train, rng)?;
                let (loss, grad) = mse_loss(&pred, &s.target)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        reason: format!("training loss became {loss}"),
                    });
                }
                train_total += loss;
                model.backward(ctx, &grad.scale(inv))?;
            }
            adam.step(&mut model.params, cfg.learning_rate, cfg.weight_decay)?;
        }
        model.clear_cache();
        let train_loss = train_total / splits.train.len() as f64;
        let val_loss = val_score(&model, ctx, &splits.val)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                reason: format!("train loss {train_loss}, validation loss {val_loss}"),
            });
        }
        history.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            wall_ms: started.elapsed().as_millis() as u64,
        });
        let decision = stopper.observe(epoch, val_loss);
        if decision.improved {
            best = Some(model.params.clone());
        }
        if decision.stop {
            break;
        }
    }

    if let Some(params) = best {
        model.params = params;
    }
    model.params.zero_grads();
    Ok(TrainOutcome {
        model,
        history,
        best_epoch: stopper.best_epoch(),
    })
}

/// History as CSV with header `epoch,train_loss,val_loss,wall_ms`.
pub fn history_csv(history: &[EpochLog]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,wall_ms\n");
    for h in history {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{}\n",
            h.epoch, h.train_loss, h.val_loss, h.wall_ms
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopper_with_rising_losses() {
        let mut s = EarlyStopping::new(1);
        assert_eq!(s.observe(1, 1.0), StopDecision { improved: true, stop: false });
        assert_eq!(s.observe(2, 1.5), StopDecision { improved: false, stop: true });
        assert_eq!(s.best_epoch(), 1);
    }

    #[test]
    fn stopper_resets_on_improvement() {
        let mut s = EarlyStopping::new(3);
        let seq = [5.0, 4.0, 4.5, 4.2, 3.9, 4.0, 4.0, 4.0];
        let mut stopped_at = None;
        for (i, &v) in seq.iter().enumerate() {
            if s.observe(i + 1, v).stop {
                stopped_at = Some(i + 1);
                break;
            }
        }
        assert_eq!(s.best_epoch(), 5);
        assert_eq!(stopped_at, Some(8));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for cfg in [
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { patience: 200, ..Default::default() },
            TrainConfig { weight_decay: -1.0, ..Default::default() },
            TrainConfig { dropout_rate: 1.0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn history_format() {
        let csv = history_csv(&[EpochLog { epoch: 1, train_loss: 0.5, val_loss: 0.25, wall_ms: 3 }]);
        assert_eq!(
            csv,
            "epoch,train_loss,val_loss,wall_ms\n1,5.0000000000000000e-1,2.5000000000000000e-1,3\n"
        );
    }
}
