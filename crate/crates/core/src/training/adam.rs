//! Adam with L2 weight decay folded into the gradient.

use crate::error::{Error, Result};
use crate::models::ModelParams;
use crate::numeric::Matrix;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First/second moment estimates, one pair per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update:
    ///
    /// ```text
    /// g ← g + λθ
    /// m ← β1·m + (1-β1)·g
    /// v ← β2·v + (1-β2)·g²
    /// θ ← θ - lr · m̂ / (sqrt(v̂) + ε)
    /// ```
    ///
    /// Gradients are zeroed afterwards.
    pub fn step(&mut self, params: &mut ModelParams, learning_rate: f64, weight_decay: f64) -> Result<()> {
        if params.is_empty() {
            return Err(Error::State("adam step on a model without parameters".into()));
        }
        if params.len() != self.m.len() {
            return Err(Error::State(format!(
                "optimizer tracks {} parameters, model has {}",
                self.m.len(),
                params.len()
            )));
        }
        for (p, m) in params.iter().zip(&self.m) {
            if p.shape() != m.shape() || p.grad.shape() != p.shape() {
                return Err(Error::State(format!("parameter {} changed shape", p.name)));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let theta = p.value.as_mut_slice();
            let grad = p.grad.as_slice();
            for (((th, &g), mi), vi) in theta
                .iter_mut()
                .zip(grad)
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                let g = g + weight_decay * *th;
                *mi = BETA1 * *mi + (1.0 - BETA1) * g;
                *vi = BETA2 * *vi + (1.0 - BETA2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *th -= learning_rate * m_hat / (v_hat.sqrt() + EPSILON);
            }
            p.zero_grad();
        }
        Ok(())
    }
}
