//! GCN, GraphSAGE and GGNN node regressors sharing one linear prediction head.
//!
//! A [`Model`] owns its [`ModelParams`] and the cache of its most recent
//! forward pass. [`Model::predict`] is pure and never touches the cache;
//! [`Model::forward`] records what [`Model::backward`] needs.

mod checkpoint;
pub mod layers;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphContext;
use crate::numeric::{init_glorot, Matrix, Parameter, Rng};

pub use checkpoint::Checkpoint;
pub use layers::{
    apply_dropout, gcn_layer_forward, ggnn_step, sage_layer_forward, GgnnWeights, Mode,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcnConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    #[serde(default)]
    pub dropout_rate: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SageConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub fanouts: Vec<usize>,
    #[serde(default)]
    pub aggregator: Aggregator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GgnnConfig {
    pub num_steps: usize,
    pub hidden_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Gcn(GcnConfig),
    Sage(SageConfig),
    Ggnn(GgnnConfig),
}

/// Fixed affine map applied after the head: `ŷ = raw · scale + shift`.
///
/// Lets the trainable head work on unit-scale targets while predictions stay
/// in physical units. Set from training targets; not trained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub shift: f64,
    pub scale: f64,
}

impl Default for TargetScale {
    fn default() -> Self {
        Self {
            shift: 0.0,
            scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub arch: Architecture,
    #[serde(default)]
    pub target_scale: TargetScale,
}

impl ModelSpec {
    pub fn gcn(input_dim: usize, num_layers: usize, hidden_dim: usize) -> Self {
        Self::new(
            input_dim,
            Architecture::Gcn(GcnConfig {
                num_layers,
                hidden_dim,
                dropout_rate: 0.0,
            }),
        )
    }

    pub fn sage(input_dim: usize, hidden_dim: usize, fanouts: Vec<usize>) -> Self {
        Self::new(
            input_dim,
            Architecture::Sage(SageConfig {
                num_layers: fanouts.len(),
                hidden_dim,
                fanouts,
                aggregator: Aggregator::Mean,
            }),
        )
    }

    pub fn ggnn(input_dim: usize, num_steps: usize, hidden_dim: usize) -> Self {
        Self::new(
            input_dim,
            Architecture::Ggnn(GgnnConfig {
                num_steps,
                hidden_dim,
            }),
        )
    }

    pub fn new(input_dim: usize, arch: Architecture) -> Self {
        Self {
            input_dim,
            arch,
            target_scale: TargetScale::default(),
        }
    }

    /// Short identifier used on the command line and in file names.
    pub fn key(&self) -> &'static str {
        match self.arch {
            Architecture::Gcn(_) => "gcn",
            Architecture::Sage(_) => "sage",
            Architecture::Ggnn(_) => "ggnn",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self.arch {
            Architecture::Gcn(_) => "GCN",
            Architecture::Sage(_) => "GraphSAGE",
            Architecture::Ggnn(_) => "GGNN",
        }
    }

    pub fn hidden_dim(&self) -> usize {
        match &self.arch {
            Architecture::Gcn(c) => c.hidden_dim,
            Architecture::Sage(c) => c.hidden_dim,
            Architecture::Ggnn(c) => c.hidden_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.hidden_dim() == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if !(self.target_scale.scale.is_finite() && self.target_scale.scale > 0.0)
            || !self.target_scale.shift.is_finite()
        {
            return bad(format!("invalid target scale {:?}", self.target_scale));
        }
        match &self.arch {
            Architecture::Gcn(c) => {
                if c.num_layers == 0 {
                    return bad("gcn num_layers must be at least 1".into());
                }
                if !(0.0..1.0).contains(&c.dropout_rate) {
                    return bad(format!("gcn dropout_rate {} not in [0, 1)", c.dropout_rate));
                }
            }
            Architecture::Sage(c) => {
                if c.num_layers == 0 {
                    return bad("sage num_layers must be at least 1".into());
                }
                if c.fanouts.len() != c.num_layers {
                    return bad(format!(
                        "sage has {} fanouts for {} layers",
                        c.fanouts.len(),
                        c.num_layers
                    ));
                }
                if c.fanouts.contains(&0) {
                    return bad("sage fanouts must be positive".into());
                }
            }
            Architecture::Ggnn(c) => {
                if c.num_steps == 0 {
                    return bad("ggnn num_steps must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    /// Parameter names and shapes in canonical order.
    pub fn parameter_shapes(&self) -> Vec<(String, (usize, usize))> {
        let d = self.hidden_dim();
        let f = self.input_dim;
        let mut out = Vec::new();
        match &self.arch {
            Architecture::Gcn(c) => {
                for l in 0..c.num_layers {
                    let d_in = if l == 0 { f } else { d };
                    out.push((format!("gcn.{l}.weight"), (d_in, d)));
                    out.push((format!("gcn.{l}.bias"), (1, d)));
                }
            }
            Architecture::Sage(c) => {
                for l in 0..c.num_layers {
                    let d_in = if l == 0 { f } else { d };
                    out.push((format!("sage.{l}.weight"), (2 * d_in, d)));
                    out.push((format!("sage.{l}.bias"), (1, d)));
                }
            }
            Architecture::Ggnn(_) => {
                out.push(("ggnn.input.weight".into(), (f, d)));
                out.push(("ggnn.input.bias".into(), (1, d)));
                out.push(("ggnn.message.weight".into(), (d, d)));
                out.push(("ggnn.message.bias".into(), (1, d)));
                for gate in ["update", "reset", "candidate"] {
                    out.push((format!("ggnn.{gate}.w"), (d, d)));
                    out.push((format!("ggnn.{gate}.u"), (d, d)));
                }
            }
        }
        out.push(("head.weight".into(), (d, 1)));
        out.push(("head.bias".into(), (1, 1)));
        out
    }
}

/// Named parameters in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    params: Vec<Parameter>,
}

impl ModelParams {
    pub fn new(params: Vec<Parameter>) -> Result<Self> {
        for (i, p) in params.iter().enumerate() {
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::Validation(format!(
                    "duplicate parameter name {}",
                    p.name
                )));
            }
        }
        Ok(Self { params })
    }

    /// Glorot weights, zero biases.
    pub fn init(spec: &ModelSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let params = spec
            .parameter_shapes()
            .into_iter()
            .map(|(name, (r, c))| {
                let value = if name.ends_with("bias") {
                    Matrix::zeros(r, c)
                } else {
                    init_glorot(r, c, rng)?
                };
                Ok(Parameter::new(name, value))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(params)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn get(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Parameter> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    fn value(&self, name: &str) -> Result<&Matrix> {
        self.get(name)
            .map(|p| &p.value)
            .ok_or_else(|| Error::State(format!("missing parameter {name}")))
    }

    fn accumulate(&mut self, name: &str, grad: &Matrix) -> Result<()> {
        let p = self
            .get_mut(name)
            .ok_or_else(|| Error::State(format!("missing parameter {name}")))?;
        p.grad.add_assign(grad)
    }

    pub fn zero_grads(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }

    /// Checks names and shapes against what `spec` expects.
    pub fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        let expected = spec.parameter_shapes();
        if expected.len() != self.params.len() {
            return Err(Error::Validation(format!(
                "spec expects {} parameters, found {}",
                expected.len(),
                self.params.len()
            )));
        }
        for ((name, shape), p) in expected.iter().zip(&self.params) {
            if &p.name != name || p.shape() != *shape {
                return Err(Error::Validation(format!(
                    "expected parameter {name} {}x{}, found {} {}x{}",
                    shape.0,
                    shape.1,
                    p.name,
                    p.value.rows(),
                    p.value.cols()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum LayerCache {
    Gcn(layers::GcnLayerCache),
    Sage(layers::SageLayerCache),
}

#[derive(Clone, Debug)]
enum ArchCache {
    Stacked {
        layers: Vec<LayerCache>,
        masks: Vec<Option<Matrix>>,
    },
    Ggnn {
        input: Matrix,
        steps: Vec<layers::GgnnStepCache>,
        mask: Option<Matrix>,
    },
}

#[derive(Clone, Debug)]
struct ForwardCache {
    arch: ArchCache,
    embedding: Matrix,
}

/// A model instance: spec, parameters, and the last forward cache.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    pub params: ModelParams,
    dropout_rate: f64,
    cache: Option<ForwardCache>,
}

impl Model {
    pub fn new(spec: ModelSpec, rng: &mut Rng) -> Result<Self> {
        let params = ModelParams::init(&spec, rng)?;
        Self::from_parts(spec, params)
    }

    pub fn from_parts(spec: ModelSpec, params: ModelParams) -> Result<Self> {
        spec.validate()?;
        params.check_against(&spec)?;
        let dropout_rate = match &spec.arch {
            Architecture::Gcn(c) => c.dropout_rate,
            _ => 0.0,
        };
        Ok(Self {
            spec,
            params,
            dropout_rate,
            cache: None,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn set_target_scale(&mut self, scale: TargetScale) -> Result<()> {
        let mut spec = self.spec.clone();
        spec.target_scale = scale;
        spec.validate()?;
        self.spec = spec;
        Ok(())
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    /// Rate used by train-mode forwards after each hidden nonlinearity.
    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Validation(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        self.dropout_rate = rate;
        Ok(())
    }

    /// Eval-mode predictions (`N x 1`). Pure: identical inputs give bit-identical outputs.
    pub fn predict(&self, ctx: &GraphContext, x: &Matrix) -> Result<Matrix> {
        // eval mode never draws from the generator
        let mut rng = Rng::new(0);
        self.run(ctx, x, Mode::Eval, &mut rng).map(|(y, _)| y)
    }

    /// Forward pass that keeps the intermediates for [`Model::backward`].
    pub fn forward(
        &mut self,
        ctx: &GraphContext,
        x: &Matrix,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<Matrix> {
        let (y, cache) = self.run(ctx, x, mode, rng)?;
        self.cache = Some(cache);
        Ok(y)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    fn run(
        &self,
        ctx: &GraphContext,
        x: &Matrix,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.spec.input_dim {
            return Err(Error::Shape(format!(
                "input has {} feature columns, model expects {}",
                x.cols(),
                self.spec.input_dim
            )));
        }
        if x.rows() != ctx.num_nodes() {
            return Err(Error::Shape(format!(
                "input has {} rows, graph has {} nodes",
                x.rows(),
                ctx.num_nodes()
            )));
        }
        let p = &self.params;
        let rate = self.dropout_rate;
        let (embedding, arch) = match &self.spec.arch {
            Architecture::Gcn(c) => {
                let mut h = x.clone();
                let mut caches = Vec::with_capacity(c.num_layers);
                let mut masks = Vec::with_capacity(c.num_layers);
                for l in 0..c.num_layers {
                    let hidden = l + 1 < c.num_layers;
                    let (out, cache) = layers::gcn_layer_forward_cached(
                        &ctx.normalized,
                        &h,
                        p.value(&format!("gcn.{l}.weight"))?,
                        p.value(&format!("gcn.{l}.bias"))?,
                        hidden,
                    )?;
                    let (out, mask) = dropout_if(out, hidden, rate, rng, mode)?;
                    caches.push(LayerCache::Gcn(cache));
                    masks.push(mask);
                    h = out;
                }
                (
                    h,
                    ArchCache::Stacked {
                        layers: caches,
                        masks,
                    },
                )
            }
            Architecture::Sage(c) => {
                let mut h = x.clone();
                let mut caches = Vec::with_capacity(c.num_layers);
                let mut masks = Vec::with_capacity(c.num_layers);
                for l in 0..c.num_layers {
                    let hidden = l + 1 < c.num_layers;
                    let mean_op = match mode {
                        Mode::Train => {
                            layers::mean_operator(&ctx.neighbors, Some((c.fanouts[l], &mut *rng)))?
                        }
                        Mode::Eval => layers::mean_operator(&ctx.neighbors, None)?,
                    };
                    let (out, cache) = layers::sage_layer_forward_cached(
                        mean_op,
                        &h,
                        p.value(&format!("sage.{l}.weight"))?,
                        p.value(&format!("sage.{l}.bias"))?,
                        hidden,
                    )?;
                    let (out, mask) = dropout_if(out, hidden, rate, rng, mode)?;
                    caches.push(LayerCache::Sage(cache));
                    masks.push(mask);
                    h = out;
                }
                (
                    h,
                    ArchCache::Stacked {
                        layers: caches,
                        masks,
                    },
                )
            }
            Architecture::Ggnn(c) => {
                let mut h = x
                    .matmul(p.value("ggnn.input.weight")?)?
                    .add_row(p.value("ggnn.input.bias")?)?;
                let weights = self.ggnn_weights()?;
                let mut steps = Vec::with_capacity(c.num_steps);
                for _ in 0..c.num_steps {
                    let (next, cache) = layers::ggnn_step_cached(&ctx.adjacency, &h, weights)?;
                    steps.push(cache);
                    h = next;
                }
                let (h, mask) = dropout_if(h, true, rate, rng, mode)?;
                (
                    h,
                    ArchCache::Ggnn {
                        input: x.clone(),
                        steps,
                        mask,
                    },
                )
            }
        };
        let ts = self.spec.target_scale;
        let y = embedding
            .matmul(p.value("head.weight")?)?
            .add_row(p.value("head.bias")?)?
            .map(|r| r * ts.scale + ts.shift);
        Ok((y, ForwardCache { arch, embedding }))
    }

    fn ggnn_weights(&self) -> Result<GgnnWeights<'_>> {
        let p = &self.params;
        Ok(GgnnWeights {
            msg_w: p.value("ggnn.message.weight")?,
            msg_b: p.value("ggnn.message.bias")?,
            update_w: p.value("ggnn.update.w")?,
            update_u: p.value("ggnn.update.u")?,
            reset_w: p.value("ggnn.reset.w")?,
            reset_u: p.value("ggnn.reset.u")?,
            cand_w: p.value("ggnn.candidate.w")?,
            cand_u: p.value("ggnn.candidate.u")?,
        })
    }

    /// Accumulates `dL/dθ` into every parameter's `grad`, given `dL/dŷ` (`N x 1`).
    pub fn backward(&mut self, ctx: &GraphContext, d_pred: &Matrix) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("backward called before forward".into()))?;
        let result = self.backward_with(ctx, &cache, d_pred);
        self.cache = Some(cache);
        result
    }

    fn backward_with(
        &mut self,
        ctx: &GraphContext,
        cache: &ForwardCache,
        d_pred: &Matrix,
    ) -> Result<()> {
        let n = cache.embedding.rows();
        if d_pred.shape() != (n, 1) {
            return Err(Error::shape("backward", (n, 1), d_pred.shape()));
        }
        let d_raw = d_pred.scale(self.spec.target_scale.scale);
        let head_w = self.params.value("head.weight")?.clone();
        self.params
            .accumulate("head.weight", &cache.embedding.t_matmul(&d_raw)?)?;
        self.params.accumulate("head.bias", &d_raw.sum_rows())?;
        let mut d_h = d_raw.matmul_t(&head_w)?;

        match (&cache.arch, self.spec.arch.clone()) {
            (ArchCache::Stacked { layers, masks }, arch) => {
                let prefix = match arch {
                    Architecture::Gcn(_) => "gcn",
                    Architecture::Sage(_) => "sage",
                    Architecture::Ggnn(_) => unreachable!("ggnn uses its own cache"),
                };
                for l in (0..layers.len()).rev() {
                    let hidden = l + 1 < layers.len();
                    if let Some(mask) = &masks[l] {
                        d_h = d_h.hadamard(mask)?;
                    }
                    let w_name = format!("{prefix}.{l}.weight");
                    let w = self.params.value(&w_name)?.clone();
                    let grads = match &layers[l] {
                        LayerCache::Gcn(c) => {
                            layers::gcn_layer_backward(&ctx.normalized, &w, c, &d_h, hidden)?
                        }
                        LayerCache::Sage(c) => layers::sage_layer_backward(&w, c, &d_h, hidden)?,
                    };
                    self.params.accumulate(&w_name, &grads.weight)?;
                    self.params
                        .accumulate(&format!("{prefix}.{l}.bias"), &grads.bias)?;
                    d_h = grads.input;
                }
            }
            (ArchCache::Ggnn { input, steps, mask }, _) => {
                if let Some(mask) = mask {
                    d_h = d_h.hadamard(mask)?;
                }
                let d = self.spec.hidden_dim();
                let mut total = layers::GgnnGrads {
                    msg_w: Matrix::zeros(d, d),
                    msg_b: Matrix::zeros(1, d),
                    update_w: Matrix::zeros(d, d),
                    update_u: Matrix::zeros(d, d),
                    reset_w: Matrix::zeros(d, d),
                    reset_u: Matrix::zeros(d, d),
                    cand_w: Matrix::zeros(d, d),
                    cand_u: Matrix::zeros(d, d),
                };
                {
                    let weights = self.ggnn_weights()?;
                    for step in steps.iter().rev() {
                        let (g, d_prev) =
                            layers::ggnn_step_backward(&ctx.adjacency, weights, step, &d_h)?;
                        total.msg_w.add_assign(&g.msg_w)?;
                        total.msg_b.add_assign(&g.msg_b)?;
                        total.update_w.add_assign(&g.update_w)?;
                        total.update_u.add_assign(&g.update_u)?;
                        total.reset_w.add_assign(&g.reset_w)?;
                        total.reset_u.add_assign(&g.reset_u)?;
                        total.cand_w.add_assign(&g.cand_w)?;
                        total.cand_u.add_assign(&g.cand_u)?;
                        d_h = d_prev;
                    }
                }
                let p = &mut self.params;
                p.accumulate("ggnn.message.weight", &total.msg_w)?;
                p.accumulate("ggnn.message.bias", &total.msg_b)?;
                p.accumulate("ggnn.update.w", &total.update_w)?;
                p.accumulate("ggnn.update.u", &total.update_u)?;
                p.accumulate("ggnn.reset.w", &total.reset_w)?;
                p.accumulate("ggnn.reset.u", &total.reset_u)?;
                p.accumulate("ggnn.candidate.w", &total.cand_w)?;
                p.accumulate("ggnn.candidate.u", &total.cand_u)?;
                p.accumulate("ggnn.input.weight", &input.t_matmul(&d_h)?)?;
                p.accumulate("ggnn.input.bias", &d_h.sum_rows())?;
            }
        }
        Ok(())
    }
}

fn dropout_if(
    h: Matrix,
    hidden: bool,
    rate: f64,
    rng: &mut Rng,
    mode: Mode,
) -> Result<(Matrix, Option<Matrix>)> {
    if !hidden {
        return Ok((h, None));
    }
    match layers::dropout_mask(h.rows(), h.cols(), rate, rng, mode)? {
        Some(mask) => Ok((h.hadamard(&mask)?, Some(mask))),
        None => Ok((h, None)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RoadGraph;

    fn ctx2() -> GraphContext {
        GraphContext::new(&RoadGraph::new(2, vec![(0, 1)]).unwrap()).unwrap()
    }

    fn specs(f: usize) -> Vec<ModelSpec> {
        vec![
            ModelSpec::gcn(f, 2, 3),
            ModelSpec::sage(f, 3, vec![2, 2]),
            ModelSpec::ggnn(f, 2, 3),
        ]
    }

    #[test]
    fn zero_head_predicts_bias() {
        let ctx = ctx2();
        let x = Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0]]).unwrap();
        for spec in specs(2) {
            let mut model = Model::new(spec, &mut Rng::new(3)).unwrap();
            model.params.get_mut("head.weight").unwrap().value.fill(0.0);
            model.params.get_mut("head.bias").unwrap().value.fill(1.25);
            let y = model.predict(&ctx, &x).unwrap();
            assert_eq!(y, Matrix::filled(2, 1, 1.25));
        }
    }

    #[test]
    fn eval_is_bit_identical() {
        let ctx = ctx2();
        let x = Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0]]).unwrap();
        for spec in specs(2) {
            let mut model = Model::new(spec, &mut Rng::new(3)).unwrap();
            model.set_dropout_rate(0.5).unwrap();
            let a = model.predict(&ctx, &x).unwrap();
            let b = model.forward(&ctx, &x, Mode::Eval, &mut Rng::new(77)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn one_layer_gcn_matches_manual_composition() {
        let ctx = ctx2();
        let mut model = Model::new(ModelSpec::gcn(1, 1, 2), &mut Rng::new(5)).unwrap();
        let x = Matrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let p = &model.params;
        let layer = gcn_layer_forward(
            &ctx.normalized,
            &x,
            &p.get("gcn.0.weight").unwrap().value,
            &p.get("gcn.0.bias").unwrap().value,
            false,
        )
        .unwrap();
        let manual = layer
            .matmul(&p.get("head.weight").unwrap().value)
            .unwrap()
            .add_row(&p.get("head.bias").unwrap().value)
            .unwrap();
        let y = model.forward(&ctx, &x, Mode::Train, &mut Rng::new(0)).unwrap();
        assert!(y.max_abs_diff(&manual) < 1e-15);
    }

    #[test]
    fn backward_needs_forward() {
        let ctx = ctx2();
        let mut model = Model::new(ModelSpec::gcn(1, 1, 2), &mut Rng::new(5)).unwrap();
        let err = model.backward(&ctx, &Matrix::zeros(2, 1)).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn zero_upstream_gives_zero_grads_and_repeat_doubles() {
        let ctx = ctx2();
        let x = Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0]]).unwrap();
        for spec in specs(2) {
            let mut model = Model::new(spec, &mut Rng::new(3)).unwrap();
            model.forward(&ctx, &x, Mode::Train, &mut Rng::new(1)).unwrap();
            model.backward(&ctx, &Matrix::zeros(2, 1)).unwrap();
            assert!(model.params.iter().all(|p| p.grad.as_slice().iter().all(|&g| g == 0.0)));

            let d = Matrix::column(&[0.3, -0.7]);
            model.backward(&ctx, &d).unwrap();
            let once: Vec<Matrix> = model.params.iter().map(|p| p.grad.clone()).collect();
            model.backward(&ctx, &d).unwrap();
            for (p, g) in model.params.iter().zip(&once) {
                assert!(p.grad.max_abs_diff(&g.scale(2.0)) < 1e-14, "{}", p.name);
            }
        }
    }

    #[test]
    fn input_width_checked() {
        let ctx = ctx2();
        let model = Model::new(ModelSpec::gcn(3, 1, 2), &mut Rng::new(5)).unwrap();
        assert!(matches!(
            model.predict(&ctx, &Matrix::zeros(2, 2)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::gcn(2, 0, 3).validate().is_err());
        assert!(ModelSpec::ggnn(2, 0, 3).validate().is_err());
        assert!(ModelSpec::gcn(0, 1, 3).validate().is_err());
        let mut sage = ModelSpec::sage(2, 3, vec![2, 2]);
        if let Architecture::Sage(c) = &mut sage.arch {
            c.num_layers = 3;
        }
        assert!(sage.validate().is_err());
        assert!(ModelSpec::sage(2, 3, vec![0]).validate().is_err());
    }

    #[test]
    fn parameter_names_are_unique() {
        for spec in specs(3) {
            let params = ModelParams::init(&spec, &mut Rng::new(0)).unwrap();
            let mut names: Vec<_> = params.iter().map(|p| p.name.clone()).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), params.len());
        }
    }

    #[test]
    fn spec_serde_shape() {
        let json = serde_json::to_value(ModelSpec::ggnn(3, 4, 8)).unwrap();
        assert_eq!(json["arch"]["kind"], "ggnn");
        assert_eq!(json["arch"]["num_steps"], 4);
    }
}
