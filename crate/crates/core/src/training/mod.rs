//! Loss, optimizer, the epoch loop with early stopping, and evaluation.

mod adam;
mod loss;
mod metrics;
mod trainer;

pub use adam::{AdamState, BETA1, BETA2, EPSILON};
pub use loss::mse_loss;
pub use metrics::{evaluate, HistoricalMean, Metrics};
pub use trainer::{
    effective_dropout, history_csv, mean_loss, run_epochs, train, EarlyStopping, EpochLog,
    StopDecision, TrainConfig, TrainOutcome,
};

use crate::models::ModelParams;

/// Free-function form of [`AdamState::step`].
pub fn adam_step(params: &mut ModelParams, state: &mut AdamState, cfg: &TrainConfig) -> crate::Result<()> {
    state.step(params, cfg.learning_rate, cfg.weight_decay)
}
