//! Single-layer forward and backward passes.
//!
//! Each `*_forward_cached` returns the output together with whatever the
//! matching `*_backward` needs. Backward functions return gradients rather
//! than accumulating them; the caller decides where they go.

use crate::error::{Error, Result};
use crate::graph::{sample_neighbors, NeighborTable, NormalizedAdjacency};
use crate::numeric::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

fn check_bias(b: &Matrix, cols: usize, op: &str) -> Result<()> {
    if b.shape() != (1, cols) {
        return Err(Error::shape(op, (1, cols), b.shape()));
    }
    Ok(())
}

fn relu_backward(d_out: &Matrix, pre: &Matrix) -> Matrix {
    let mut d = d_out.clone();
    for (g, &z) in d.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
    d
}

/// Gradients of one affine layer plus the gradient flowing into its input.
#[derive(Clone, Debug)]
pub struct LayerGrads {
    pub weight: Matrix,
    pub bias: Matrix,
    pub input: Matrix,
}

// ---------------------------------------------------------------- GCN

#[derive(Clone, Debug)]
pub struct GcnLayerCache {
    propagated: Matrix,
    pre: Matrix,
}

/// `ReLU(Â·H·W + b)`, or the affine part alone when `apply_relu` is false.
pub fn gcn_layer_forward(
    adj: &NormalizedAdjacency,
    h: &Matrix,
    w: &Matrix,
    b: &Matrix,
    apply_relu: bool,
) -> Result<Matrix> {
    gcn_layer_forward_cached(adj, h, w, b, apply_relu).map(|(out, _)| out)
}

pub fn gcn_layer_forward_cached(
    adj: &NormalizedAdjacency,
    h: &Matrix,
    w: &Matrix,
    b: &Matrix,
    apply_relu: bool,
) -> Result<(Matrix, GcnLayerCache)> {
    check_bias(b, w.cols(), "gcn bias")?;
    let propagated = adj.matrix().matmul(h)?;
    let pre = propagated.matmul(w)?.add_row(b)?;
    let out = if apply_relu { pre.relu() } else { pre.clone() };
    Ok((out, GcnLayerCache { propagated, pre }))
}

pub fn gcn_layer_backward(
    adj: &NormalizedAdjacency,
    w: &Matrix,
    cache: &GcnLayerCache,
    d_out: &Matrix,
    apply_relu: bool,
) -> Result<LayerGrads> {
    let dz = if apply_relu {
        relu_backward(d_out, &cache.pre)
    } else {
        d_out.clone()
    };
    let weight = cache.propagated.t_matmul(&dz)?;
    let bias = dz.sum_rows();
    let input = adj.matrix().t_matmul(&dz.matmul_t(w)?)?;
    Ok(LayerGrads {
        weight,
        bias,
        input,
    })
}

// ---------------------------------------------------------- GraphSAGE

/// Row-stochastic mean operator: row `v` averages the sampled neighbours of `v`.
/// Isolated nodes get an all-zero row, so their neighbour mean is the zero vector.
/// `sampling = None` uses every neighbour.
pub fn mean_operator(table: &NeighborTable, sampling: Option<(usize, &mut Rng)>) -> Result<Matrix> {
    let n = table.num_nodes();
    let mut m = Matrix::zeros(n, n);
    match sampling {
        None => {
            for v in 0..n {
                fill_mean_row(&mut m, v, table.neighbors(v)?);
            }
        }
        Some((fanout, rng)) => {
            for v in 0..n {
                let picked = sample_neighbors(table, v, fanout, rng)?;
                fill_mean_row(&mut m, v, &picked);
            }
        }
    }
    Ok(m)
}

fn fill_mean_row(m: &mut Matrix, v: usize, nbrs: &[usize]) {
    if nbrs.is_empty() {
        return;
    }
    let w = 1.0 / nbrs.len() as f64;
    for &u in nbrs {
        m.set(v, u, w);
    }
}

#[derive(Clone, Debug)]
pub struct SageLayerCache {
    mean_op: Matrix,
    concat: Matrix,
    pre: Matrix,
}

/// Mean-aggregator GraphSAGE layer: `σ([h_v ‖ mean(h_u : u ∈ S(v))]·W + b)`.
#[allow(clippy::too_many_arguments)]
pub fn sage_layer_forward(
    table: &NeighborTable,
    h: &Matrix,
    w: &Matrix,
    b: &Matrix,
    fanout: usize,
    rng: &mut Rng,
    apply_relu: bool,
) -> Result<Matrix> {
    let mean_op = mean_operator(table, Some((fanout, rng)))?;
    sage_layer_forward_cached(mean_op, h, w, b, apply_relu).map(|(out, _)| out)
}

pub fn sage_layer_forward_cached(
    mean_op: Matrix,
    h: &Matrix,
    w: &Matrix,
    b: &Matrix,
    apply_relu: bool,
) -> Result<(Matrix, SageLayerCache)> {
    if w.rows() != 2 * h.cols() {
        return Err(Error::shape("sage weight", (2 * h.cols(), w.cols()), w.shape()));
    }
    check_bias(b, w.cols(), "sage bias")?;
    let agg = mean_op.matmul(h)?;
    let concat = h.concat_cols(&agg)?;
    let pre = concat.matmul(w)?.add_row(b)?;
    let out = if apply_relu { pre.relu() } else { pre.clone() };
    Ok((
        out,
        SageLayerCache {
            mean_op,
            concat,
            pre,
        },
    ))
}

pub fn sage_layer_backward(
    w: &Matrix,
    cache: &SageLayerCache,
    d_out: &Matrix,
    apply_relu: bool,
) -> Result<LayerGrads> {
    let dz = if apply_relu {
        relu_backward(d_out, &cache.pre)
    } else {
        d_out.clone()
    };
    let weight = cache.concat.t_matmul(&dz)?;
    let bias = dz.sum_rows();
    let d_concat = dz.matmul_t(w)?;
    let (d_self, d_agg) = d_concat.split_cols(cache.concat.cols() / 2)?;
    let input = d_self.add(&cache.mean_op.t_matmul(&d_agg)?)?;
    Ok(LayerGrads {
        weight,
        bias,
        input,
    })
}

// --------------------------------------------------------------- GGNN

/// Shared weights of the gated propagation cell. All square `d x d` except
/// the `1 x d` message bias.
#[derive(Clone, Copy, Debug)]
pub struct GgnnWeights<'a> {
    pub msg_w: &'a Matrix,
    pub msg_b: &'a Matrix,
    pub update_w: &'a Matrix,
    pub update_u: &'a Matrix,
    pub reset_w: &'a Matrix,
    pub reset_u: &'a Matrix,
    pub cand_w: &'a Matrix,
    pub cand_u: &'a Matrix,
}

impl GgnnWeights<'_> {
    fn check(&self, d: usize) -> Result<()> {
        for (name, m) in [
            ("message weight", self.msg_w),
            ("update W", self.update_w),
            ("update U", self.update_u),
            ("reset W", self.reset_w),
            ("reset U", self.reset_u),
            ("candidate W", self.cand_w),
            ("candidate U", self.cand_u),
        ] {
            if m.shape() != (d, d) {
                return Err(Error::Shape(format!(
                    "ggnn {name} is {}x{}, state width is {d}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        check_bias(self.msg_b, d, "ggnn message bias")
    }
}

#[derive(Clone, Debug)]
pub struct GgnnGrads {
    pub msg_w: Matrix,
    pub msg_b: Matrix,
    pub update_w: Matrix,
    pub update_u: Matrix,
    pub reset_w: Matrix,
    pub reset_u: Matrix,
    pub cand_w: Matrix,
    pub cand_u: Matrix,
}

#[derive(Clone, Debug)]
pub struct GgnnStepCache {
    h: Matrix,
    summed: Matrix,
    msg: Matrix,
    update: Matrix,
    reset: Matrix,
    reset_h: Matrix,
    cand: Matrix,
}

impl GgnnStepCache {
    /// Update gate `z` of the step.
    pub fn update_gate(&self) -> &Matrix {
        &self.update
    }

    /// Candidate state `h~` of the step.
    pub fn candidate(&self) -> &Matrix {
        &self.cand
    }
}

/// One gated propagation step:
///
/// ```text
/// a  = A·h·W_a + b_a
/// z  = σ(a·W_z + h·U_z)
/// r  = σ(a·W_r + h·U_r)
/// h~ = tanh(a·W_h + (r ⊙ h)·U_h)
/// h' = (1 - z) ⊙ h + z ⊙ h~
/// ```
pub fn ggnn_step(adj: &Matrix, h: &Matrix, weights: GgnnWeights<'_>) -> Result<Matrix> {
    ggnn_step_cached(adj, h, weights).map(|(out, _)| out)
}

pub fn ggnn_step_cached(
    adj: &Matrix,
    h: &Matrix,
    p: GgnnWeights<'_>,
) -> Result<(Matrix, GgnnStepCache)> {
    p.check(h.cols())?;
    let summed = adj.matmul(h)?;
    let msg = summed.matmul(p.msg_w)?.add_row(p.msg_b)?;
    let update = msg.matmul(p.update_w)?.add(&h.matmul(p.update_u)?)?.sigmoid();
    let reset = msg.matmul(p.reset_w)?.add(&h.matmul(p.reset_u)?)?.sigmoid();
    let reset_h = reset.hadamard(h)?;
    let cand = msg
        .matmul(p.cand_w)?
        .add(&reset_h.matmul(p.cand_u)?)?
        .tanh_el();

    let mut out = Matrix::zeros(h.rows(), h.cols());
    for (i, o) in out.as_mut_slice().iter_mut().enumerate() {
        let (z, old, new) = (update.as_slice()[i], h.as_slice()[i], cand.as_slice()[i]);
        // rounding can push the blend an ulp outside its endpoints; keep it inside
        *o = ((1.0 - z) * old + z * new).clamp(old.min(new), old.max(new));
    }
    Ok((
        out,
        GgnnStepCache {
            h: h.clone(),
            summed,
            msg,
            update,
            reset,
            reset_h,
            cand,
        },
    ))
}

/// Returns the weight gradients of one step and the gradient w.r.t. its input state.
pub fn ggnn_step_backward(
    adj: &Matrix,
    p: GgnnWeights<'_>,
    cache: &GgnnStepCache,
    d_out: &Matrix,
) -> Result<(GgnnGrads, Matrix)> {
    let n = d_out.as_slice().len();
    let (rows, cols) = d_out.shape();
    let mut d_update = Matrix::zeros(rows, cols);
    let mut d_cand_pre = Matrix::zeros(rows, cols);
    let mut d_h = Matrix::zeros(rows, cols);
    for i in 0..n {
        let g = d_out.as_slice()[i];
        let z = cache.update.as_slice()[i];
        let c = cache.cand.as_slice()[i];
        let h = cache.h.as_slice()[i];
        d_update.as_mut_slice()[i] = g * (c - h) * z * (1.0 - z);
        d_cand_pre.as_mut_slice()[i] = g * z * (1.0 - c * c);
        d_h.as_mut_slice()[i] = g * (1.0 - z);
    }

    // candidate branch
    let cand_w = cache.msg.t_matmul(&d_cand_pre)?;
    let cand_u = cache.reset_h.t_matmul(&d_cand_pre)?;
    let mut d_msg = d_cand_pre.matmul_t(p.cand_w)?;
    let d_reset_h = d_cand_pre.matmul_t(p.cand_u)?;
    d_h.add_assign(&d_reset_h.hadamard(&cache.reset)?)?;
    let mut d_reset_pre = d_reset_h.hadamard(&cache.h)?;
    for (g, &r) in d_reset_pre
        .as_mut_slice()
        .iter_mut()
        .zip(cache.reset.as_slice())
    {
        *g *= r * (1.0 - r);
    }

    // reset gate
    let reset_w = cache.msg.t_matmul(&d_reset_pre)?;
    let reset_u = cache.h.t_matmul(&d_reset_pre)?;
    d_msg.add_assign(&d_reset_pre.matmul_t(p.reset_w)?)?;
    d_h.add_assign(&d_reset_pre.matmul_t(p.reset_u)?)?;

    // update gate
    let update_w = cache.msg.t_matmul(&d_update)?;
    let update_u = cache.h.t_matmul(&d_update)?;
    d_msg.add_assign(&d_update.matmul_t(p.update_w)?)?;
    d_h.add_assign(&d_update.matmul_t(p.update_u)?)?;

    // message
    let msg_w = cache.summed.t_matmul(&d_msg)?;
    let msg_b = d_msg.sum_rows();
    d_h.add_assign(&adj.t_matmul(&d_msg.matmul_t(p.msg_w)?)?)?;

    Ok((
        GgnnGrads {
            msg_w,
            msg_b,
            update_w,
            update_u,
            reset_w,
            reset_u,
            cand_w,
            cand_u,
        },
        d_h,
    ))
}

// ------------------------------------------------------------ dropout

/// Inverted dropout. Identity in eval mode or at rate 0.
pub fn apply_dropout(h: &Matrix, rate: f64, rng: &mut Rng, mode: Mode) -> Result<Matrix> {
    match dropout_mask(h.rows(), h.cols(), rate, rng, mode)? {
        Some(mask) => h.hadamard(&mask),
        None => Ok(h.clone()),
    }
}

/// The scaled keep-mask (`0` or `1/(1-rate)`), or `None` when dropout is a no-op.
pub fn dropout_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut Rng,
    mode: Mode,
) -> Result<Option<Matrix>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Validation(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(None);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok(Some(Matrix::from_fn(rows, cols, |_, _| {
        if rng.next_f64() < rate {
            0.0
        } else {
            keep
        }
    })))
}
