//! Dense feed-forward network with a scalar output.
//!
//! Weights are stored row-major with shape `(out_dim, in_dim)`. Batched inputs
//! are flat row-major buffers of shape `(batch, input_width)`.
//!
//! Two differentiation paths exist and are kept independent:
//! - [`Network::loss_and_grad`] runs reverse accumulation over a batch for the
//!   parameter gradient used in training.
//! - [`Network::value_and_grad_input`] runs a tangent (forward-mode) pass next
//!   to the primal evaluation to get one exact input derivative.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::activation::{Activation, PRELU_INIT};
use super::loss::Loss;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    GlorotUniform,
    GlorotNormal,
}

impl InitScheme {
    pub fn name(self) -> &'static str {
        match self {
            InitScheme::GlorotUniform => "glorot_uniform",
            InitScheme::GlorotNormal => "glorot_normal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "glorot_uniform" | "glorot" => Ok(InitScheme::GlorotUniform),
            "glorot_normal" => Ok(InitScheme::GlorotNormal),
            other => Err(Error::config(format!("unknown init scheme `{other}`"))),
        }
    }

    /// Standard deviation of the scheme for a layer, before any κ factor.
    pub fn std(self, fan_in: usize, fan_out: usize) -> f64 {
        (2.0 / (fan_in + fan_out) as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub scheme: InitScheme,
    /// Multiplies the first-layer weights only.
    pub kappa: f64,
    pub seed: u64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            scheme: InitScheme::GlorotUniform,
            kappa: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Input width first, output width (always 1) last.
    pub layer_widths: Vec<usize>,
    /// One entry per hidden layer.
    pub hidden_activations: Vec<Activation>,
    pub output_activation: Activation,
    pub init: InitSpec,
}

impl NetworkSpec {
    pub fn new(
        layer_widths: Vec<usize>,
        hidden_activations: Vec<Activation>,
        output_activation: Activation,
    ) -> Self {
        Self {
            layer_widths,
            hidden_activations,
            output_activation,
            init: InitSpec::default(),
        }
    }

    /// `depth` hidden layers of `width` units sharing one activation.
    pub fn uniform(
        input: usize,
        depth: usize,
        width: usize,
        hidden: Activation,
        output: Activation,
    ) -> Self {
        let mut widths = vec![input];
        widths.extend(std::iter::repeat_n(width, depth));
        widths.push(1);
        Self::new(widths, vec![hidden; depth], output)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init.seed = seed;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.init.kappa = kappa;
        self
    }

    pub fn with_scheme(mut self, scheme: InitScheme) -> Self {
        self.init.scheme = scheme;
        self
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn hidden_layers(&self) -> usize {
        self.layer_widths.len().saturating_sub(2)
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer < self.hidden_activations.len() {
            self.hidden_activations[layer]
        } else {
            self.output_activation
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 3 {
            return Err(Error::config(
                "network needs an input width, at least one hidden layer and an output width",
            ));
        }
        if let Some(i) = self.layer_widths.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("layer width {i} is zero")));
        }
        if *self.layer_widths.last().unwrap() != 1 {
            return Err(Error::config("the output layer must have width 1"));
        }
        if self.hidden_activations.len() != self.hidden_layers() {
            return Err(Error::Shape {
                what: "hidden activations",
                expected: self.hidden_layers(),
                got: self.hidden_activations.len(),
            });
        }
        if !(self.init.kappa >= 1.0 && self.init.kappa.is_finite()) {
            return Err(Error::config(format!(
                "kappa must be a finite value >= 1, got {}",
                self.init.kappa
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    /// Learnable slope, present only for parametric activations.
    pub slope: Option<f64>,
}

impl Layer {
    #[inline]
    fn slope_value(&self) -> f64 {
        self.slope.unwrap_or(0.0)
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
            && self.slope.is_none_or(f64::is_finite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

/// Gradient of a batch-mean loss with respect to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    /// One entry per layer; zero for layers without a learnable slope.
    pub slopes: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            slopes: vec![0.0; net.layers.len()],
        }
    }

    pub(crate) fn first_non_finite_layer(&self) -> Option<usize> {
        (0..self.weights.len()).find(|&l| {
            !(self.weights[l].iter().all(|v| v.is_finite())
                && self.biases[l].iter().all(|v| v.is_finite())
                && self.slopes[l].is_finite())
        })
    }

    pub(crate) fn matches(&self, net: &Network) -> bool {
        self.weights.len() == net.layers.len()
            && self.slopes.len() == net.layers.len()
            && net.layers.iter().enumerate().all(|(l, layer)| {
                self.weights[l].len() == layer.weights.len()
                    && self.biases[l].len() == layer.bias.len()
            })
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .chain(&self.slopes)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Reusable per-layer buffers for batched passes.
#[derive(Debug, Default)]
pub struct Workspace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    upstream: Vec<f64>,
    downstream: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, net: &Network, batch: usize) {
        self.pre.resize_with(net.layers.len(), Vec::new);
        self.post.resize_with(net.layers.len(), Vec::new);
        for (l, layer) in net.layers.iter().enumerate() {
            self.pre[l].resize(batch * layer.out_dim, 0.0);
            self.post[l].resize(batch * layer.out_dim, 0.0);
        }
    }

    fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// `C (m×n) = alpha·A·B + beta·C` for strided row/column layouts.
#[allow(clippy::too_many_arguments)]
fn gemm(
    (m, k, n): (usize, usize, usize),
    alpha: f64,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() > (m - 1) * rsc + (n - 1) * csc);
    // SAFETY: the asserts above bound every index the kernel touches, and `c`
    // is uniquely borrowed while `a`/`b` are shared borrows of other buffers.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

impl Network {
    /// Glorot-initialized network; first-layer weights scaled by κ, zero biases.
    pub fn init(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::rng(spec.init.seed);
        let mut layers = Vec::with_capacity(spec.layer_widths.len() - 1);
        for (l, pair) in spec.layer_widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let std = spec.init.scheme.std(fan_in, fan_out);
            let scale = if l == 0 { spec.init.kappa } else { 1.0 };
            let weights: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| {
                    let w = match spec.init.scheme {
                        InitScheme::GlorotUniform => {
                            let limit = std * 3f64.sqrt();
                            rng.random_range(-limit..limit)
                        }
                        InitScheme::GlorotNormal => {
                            std * <StandardNormal as Distribution<f64>>::sample(
                                &StandardNormal,
                                &mut rng,
                            )
                        }
                    };
                    w * scale
                })
                .collect();
            let activation = spec.activation(l);
            layers.push(Layer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                bias: vec![0.0; fan_out],
                activation,
                slope: activation.is_parametric().then_some(PRELU_INIT),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    /// Assemble a network from explicit parameters, checking shapes and finiteness.
    pub fn from_parts(spec: NetworkSpec, layers: Vec<Layer>) -> Result<Self> {
        spec.validate()?;
        if layers.len() != spec.layer_widths.len() - 1 {
            return Err(Error::Shape {
                what: "layer count",
                expected: spec.layer_widths.len() - 1,
                got: layers.len(),
            });
        }
        for (l, layer) in layers.iter().enumerate() {
            let (i, o) = (spec.layer_widths[l], spec.layer_widths[l + 1]);
            if layer.in_dim != i || layer.out_dim != o || layer.weights.len() != i * o {
                return Err(Error::Shape {
                    what: "layer weights",
                    expected: i * o,
                    got: layer.weights.len(),
                });
            }
            if layer.bias.len() != o {
                return Err(Error::Shape {
                    what: "layer bias",
                    expected: o,
                    got: layer.bias.len(),
                });
            }
            if layer.activation != spec.activation(l)
                || layer.activation.is_parametric() != layer.slope.is_some()
            {
                return Err(Error::Schema(format!(
                    "layer {l} activation does not match the network spec"
                )));
            }
            if !layer.is_finite() {
                return Err(Error::Numeric {
                    layer: l,
                    context: "parameters",
                });
            }
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.spec.input_width()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len() + usize::from(l.slope.is_some()))
            .sum()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_width() {
            return Err(Error::Shape {
                what: "network input",
                expected: self.input_width(),
                got: len,
            });
        }
        Ok(())
    }

    /// Scalar output for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x.len())?;
        let mut a = x.to_vec();
        let mut next = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            next.clear();
            let slope = layer.slope_value();
            for (row, b) in layer.weights.chunks_exact(layer.in_dim).zip(&layer.bias) {
                let z = b + dot(row, &a);
                next.push(layer.activation.value(z, slope));
            }
            if !next.iter().all(|v| v.is_finite()) {
                return Err(Error::Numeric {
                    layer: l,
                    context: "forward",
                });
            }
            std::mem::swap(&mut a, &mut next);
        }
        Ok(a[0])
    }

    /// Output and its exact derivative with respect to input coordinate `index`,
    /// by propagating a tangent alongside the primal values.
    pub fn value_and_grad_input(&self, x: &[f64], index: usize) -> Result<(f64, f64)> {
        self.check_input(x.len())?;
        if index >= x.len() {
            return Err(Error::domain(format!(
                "input index {index} out of range for width {}",
                x.len()
            )));
        }
        let mut a = x.to_vec();
        let mut t = vec![0.0; x.len()];
        t[index] = 1.0;
        let (mut na, mut nt) = (Vec::new(), Vec::new());
        for (l, layer) in self.layers.iter().enumerate() {
            na.clear();
            nt.clear();
            let slope = layer.slope_value();
            for (row, b) in layer.weights.chunks_exact(layer.in_dim).zip(&layer.bias) {
                let z = b + dot(row, &a);
                let tz = dot(row, &t);
                let (v, d) = layer.activation.value_and_derivative(z, slope);
                na.push(v);
                nt.push(d * tz);
            }
            if !(na.iter().all(|v| v.is_finite()) && nt.iter().all(|v| v.is_finite())) {
                return Err(Error::Numeric {
                    layer: l,
                    context: "tangent",
                });
            }
            std::mem::swap(&mut a, &mut na);
            std::mem::swap(&mut t, &mut nt);
        }
        Ok((a[0], t[0]))
    }

    pub fn grad_input(&self, x: &[f64], index: usize) -> Result<f64> {
        self.value_and_grad_input(x, index).map(|(_, d)| d)
    }

    /// Whether any kinked unit changes side of zero between `x − h·e_index` and
    /// `x + h·e_index`, i.e. a central difference of that width straddles a
    /// point where the network is not differentiable.
    pub fn kink_within(&self, x: &[f64], index: usize, h: f64) -> Result<bool> {
        if !self.layers.iter().any(|l| l.activation.has_kink()) {
            return Ok(false);
        }
        let mut lo = x.to_vec();
        let mut hi = x.to_vec();
        lo[index] -= h;
        hi[index] += h;
        let sides = |input: &[f64]| -> Result<Vec<Vec<bool>>> {
            self.check_input(input.len())?;
            let mut a = input.to_vec();
            let mut out = Vec::with_capacity(self.layers.len());
            for layer in &self.layers {
                let slope = layer.slope_value();
                let z: Vec<f64> = layer
                    .weights
                    .chunks_exact(layer.in_dim)
                    .zip(&layer.bias)
                    .map(|(row, b)| b + dot(row, &a))
                    .collect();
                out.push(z.iter().map(|&v| v >= 0.0).collect());
                a = z.iter().map(|&v| layer.activation.value(v, slope)).collect();
            }
            Ok(out)
        };
        let (s_lo, s_hi, s_mid) = (sides(&lo)?, sides(&hi)?, sides(x)?);
        Ok(self.layers.iter().enumerate().any(|(l, layer)| {
            layer.activation.has_kink() && (s_lo[l] != s_hi[l] || s_lo[l] != s_mid[l])
        }))
    }

    fn forward_into(&self, xs: &[f64], batch: usize, ws: &mut Workspace) -> Result<()> {
        ws.prepare(self, batch);
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, rest) = ws.post.split_at_mut(l);
            let input: &[f64] = if l == 0 { xs } else { &before[l - 1] };
            let pre = &mut ws.pre[l];
            for row in pre.chunks_exact_mut(layer.out_dim) {
                row.copy_from_slice(&layer.bias);
            }
            gemm(
                (batch, layer.in_dim, layer.out_dim),
                1.0,
                input,
                (layer.in_dim, 1),
                &layer.weights,
                (1, layer.in_dim),
                1.0,
                pre,
                (layer.out_dim, 1),
            );
            let slope = layer.slope_value();
            let post = &mut rest[0];
            let mut finite = true;
            for (p, &z) in post.iter_mut().zip(pre.iter()) {
                *p = layer.activation.value(z, slope);
                finite &= p.is_finite();
            }
            if !finite {
                return Err(Error::Numeric {
                    layer: l,
                    context: "forward",
                });
            }
        }
        Ok(())
    }

    /// Outputs for a flat row-major batch of inputs.
    pub fn predict(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let w = self.input_width();
        if !xs.len().is_multiple_of(w) {
            return Err(Error::Shape {
                what: "batched input",
                expected: w,
                got: xs.len() % w,
            });
        }
        const CHUNK: usize = 4096;
        let mut ws = Workspace::new();
        let mut out = Vec::with_capacity(xs.len() / w);
        for chunk in xs.chunks(CHUNK * w) {
            self.forward_into(chunk, chunk.len() / w, &mut ws)?;
            out.extend_from_slice(ws.output());
        }
        Ok(out)
    }

    /// Batch-mean loss and its gradient, written into `grads`.
    pub fn loss_and_grad(
        &self,
        xs: &[f64],
        ys: &[f64],
        loss: &Loss,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let batch = ys.len();
        if batch == 0 {
            return Err(Error::domain("empty batch"));
        }
        if xs.len() != batch * self.input_width() {
            return Err(Error::Shape {
                what: "batch inputs",
                expected: batch * self.input_width(),
                got: xs.len(),
            });
        }
        if !grads.matches(self) {
            *grads = Gradients::zeros_like(self);
        }
        self.forward_into(xs, batch, ws)?;

        let inv = 1.0 / batch as f64;
        let preds = ws.post.last().map(Vec::as_slice).unwrap_or(&[]);
        let value = loss.mean(preds, ys);
        ws.upstream.clear();
        ws.upstream.extend(
            preds
                .iter()
                .zip(ys)
                .map(|(&p, &y)| loss.derivative(p, y) * inv),
        );

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let slope = layer.slope_value();
            let pre = &ws.pre[l];
            if layer.slope.is_some() {
                grads.slopes[l] = ws
                    .upstream
                    .iter()
                    .zip(pre)
                    .map(|(&g, &z)| g * layer.activation.slope_derivative(z))
                    .sum();
            }
            for (g, &z) in ws.upstream.iter_mut().zip(pre) {
                *g *= layer.activation.derivative(z, slope);
            }
            let delta = &ws.upstream;
            let input: &[f64] = if l == 0 { xs } else { &ws.post[l - 1] };
            gemm(
                (layer.out_dim, batch, layer.in_dim),
                1.0,
                delta,
                (1, layer.out_dim),
                input,
                (layer.in_dim, 1),
                0.0,
                &mut grads.weights[l],
                (layer.in_dim, 1),
            );
            let db = &mut grads.biases[l];
            db.fill(0.0);
            for row in delta.chunks_exact(layer.out_dim) {
                for (acc, v) in db.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            if l > 0 {
                ws.downstream.clear();
                ws.downstream.resize(batch * layer.in_dim, 0.0);
                gemm(
                    (batch, layer.out_dim, layer.in_dim),
                    1.0,
                    delta,
                    (layer.out_dim, 1),
                    &layer.weights,
                    (layer.in_dim, 1),
                    0.0,
                    &mut ws.downstream,
                    (layer.in_dim, 1),
                );
                std::mem::swap(&mut ws.upstream, &mut ws.downstream);
            }
        }
        if let Some(layer) = grads.first_non_finite_layer() {
            return Err(Error::Numeric {
                layer,
                context: "gradient",
            });
        }
        if !value.is_finite() {
            return Err(Error::Numeric {
                layer: self.layers.len() - 1,
                context: "loss",
            });
        }
        Ok(value)
    }

    /// Gradient of the batch-mean loss with respect to every parameter.
    pub fn grad_params(&self, xs: &[f64], ys: &[f64], loss: &Loss) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.loss_and_grad(xs, ys, loss, &mut Workspace::new(), &mut grads)?;
        Ok(grads)
    }

    /// Mean loss over a flat batch, evaluated in chunks.
    pub fn mean_loss(&self, xs: &[f64], ys: &[f64], loss: &Loss) -> Result<f64> {
        let preds = self.predict(xs)?;
        if preds.len() != ys.len() {
            return Err(Error::Shape {
                what: "targets",
                expected: preds.len(),
                got: ys.len(),
            });
        }
        Ok(loss.mean(&preds, ys))
    }

    /// Rewrite the first layer so that the network maps raw inputs `x` to
    /// what it previously produced for `(x − shift) / scale`.
    pub fn fold_input_affine(&mut self, shift: &[f64], scale: &[f64]) -> Result<()> {
        let width = self.input_width();
        self.check_input(shift.len())?;
        self.check_input(scale.len())?;
        if scale.iter().any(|s| !(s.is_finite() && *s != 0.0)) || shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("input scaling must be finite with nonzero scales"));
        }
        let first = &mut self.layers[0];
        for o in 0..first.out_dim {
            let row = &mut first.weights[o * width..(o + 1) * width];
            let mut offset = 0.0;
            for ((w, &sh), &sc) in row.iter_mut().zip(shift).zip(scale) {
                *w /= sc;
                offset += *w * sh;
            }
            first.bias[o] -= offset;
        }
        Ok(())
    }

    /// Every weight and bias, in layer order (weights then bias per layer).
    pub fn for_each_weight_and_bias_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for layer in &mut self.layers {
            layer.weights.iter_mut().for_each(&mut f);
            layer.bias.iter_mut().for_each(&mut f);
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
