use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LossSpec, NetError, Trainable};

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    Sigmoid,
    Identity,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z` with output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    /// Uniform in `±sqrt(6 / fan_in)`, zero bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / inputs.max(1) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn identity(dim: usize, activation: Activation) -> Self {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        Self {
            inputs: dim,
            outputs: dim,
            weights,
            bias: vec![0.0; dim],
            activation,
        }
    }

    fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

/// A borrowed network input. Sparse entries are `(index, value)` pairs.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    Dense(&'a [f64]),
    Sparse(&'a [(usize, f64)]),
}

/// An owned network input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Features {
    Dense(Vec<f64>),
    Sparse(Vec<(usize, f64)>),
}

impl Features {
    pub fn as_input(&self) -> Input<'_> {
        match self {
            Features::Dense(v) => Input::Dense(v),
            Features::Sparse(v) => Input::Sparse(v),
        }
    }
}

/// A supervised example for a plain [`DenseNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub input: Features,
    pub target: Vec<f64>,
}

/// Per-layer pre-activations and activations from one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("non-empty network")
    }

    pub fn output_pre(&self) -> &[f64] {
        self.pre.last().expect("non-empty network")
    }
}

/// Gradient (or velocity) buffers, one block per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub blocks: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros_like(shapes: &[&[f64]]) -> Self {
        Self {
            blocks: shapes.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for b in &mut self.blocks {
            for x in b.iter_mut() {
                *x *= k;
            }
        }
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flatten().copied()
    }
}

/// A multi-layer perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
    pub seed: u64,
}

impl DenseNet {
    /// `dims` lists layer widths including the input; one activation per layer.
    pub fn new(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self, NetError> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(NetError::Architecture(format!(
                "{} dims need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        if dims.contains(&0) {
            return Err(NetError::Architecture("zero-width layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| Layer::init(w[0], w[1], a, &mut rng))
            .collect();
        Ok(Self { layers, seed })
    }

    /// Hidden layers share `hidden_act`; the last layer uses `out_act`.
    pub fn mlp(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_act: Activation,
        out_act: Activation,
        seed: u64,
    ) -> Result<Self, NetError> {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        let mut acts = vec![hidden_act; hidden.len()];
        acts.push(out_act);
        Self::new(&dims, &acts, seed)
    }

    pub fn from_layers(layers: Vec<Layer>, seed: u64) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::Architecture("no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(NetError::Architecture(format!("layer {i} has inconsistent shapes")));
            }
            if l.weights.iter().chain(&l.bias).any(|x| !x.is_finite()) {
                return Err(NetError::Architecture(format!("layer {i} has non-finite parameters")));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].outputs != w[1].inputs {
                return Err(NetError::Architecture(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].outputs,
                    i + 1,
                    w[1].inputs
                )));
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().expect("non-empty").activation
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: Input<'_>) -> Result<(), NetError> {
        let expected = self.input_dim();
        match x {
            Input::Dense(v) if v.len() != expected => Err(NetError::DimensionMismatch {
                expected,
                found: v.len(),
            }),
            Input::Sparse(v) => match v.iter().find(|(i, _)| *i >= expected) {
                Some(&(i, _)) => Err(NetError::DimensionMismatch {
                    expected,
                    found: i + 1,
                }),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        self.forward_input(Input::Dense(x))
    }

    pub fn forward_input(&self, x: Input<'_>) -> Result<Vec<f64>, NetError> {
        Ok(self.forward_trace(x)?.post.pop().expect("non-empty"))
    }

    pub fn forward_trace(&self, x: Input<'_>) -> Result<Trace, NetError> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.bias.clone();
            if li == 0 {
                match x {
                    Input::Dense(v) => affine_dense(layer, v, &mut z),
                    Input::Sparse(v) => {
                        for (o, zo) in z.iter_mut().enumerate() {
                            let row = layer.row(o);
                            *zo += v.iter().map(|&(i, xi)| row[i] * xi).sum::<f64>();
                        }
                    }
                }
            } else {
                affine_dense(layer, &post[li - 1], &mut z);
            }
            let a: Vec<f64> = z.iter().map(|&zi| layer.activation.apply(zi)).collect();
            pre.push(z);
            post.push(a);
        }
        Ok(Trace { pre, post })
    }

    /// Backpropagates `delta` (the loss gradient with respect to the last
    /// layer's pre-activation) and adds parameter gradients into `grads`.
    /// Returns the gradient with respect to the input when `want_input` is set.
    pub fn backward(
        &self,
        x: Input<'_>,
        trace: &Trace,
        delta: &[f64],
        grads: &mut Grads,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let mut delta = delta.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let (gw, gb) = {
                let (w, rest) = grads.blocks[2 * li..].split_at_mut(1);
                (&mut w[0], &mut rest[0])
            };
            for (g, d) in gb.iter_mut().zip(&delta) {
                *g += d;
            }
            if li == 0 {
                match x {
                    Input::Dense(v) => outer_add(gw, &delta, v),
                    Input::Sparse(v) => {
                        for (o, &d) in delta.iter().enumerate() {
                            if d == 0.0 {
                                continue;
                            }
                            let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                            for &(i, xi) in v {
                                row[i] += d * xi;
                            }
                        }
                    }
                }
                if !want_input {
                    return None;
                }
            } else {
                outer_add(gw, &delta, &trace.post[li - 1]);
            }
            let mut upstream = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (u, w) in upstream.iter_mut().zip(layer.row(o)) {
                    *u += d * w;
                }
            }
            if li == 0 {
                return Some(upstream);
            }
            let prev = &self.layers[li - 1];
            delta = upstream
                .iter()
                .zip(trace.pre[li - 1].iter().zip(&trace.post[li - 1]))
                .map(|(u, (&z, &a))| u * prev.activation.derivative(z, a))
                .collect();
        }
        None
    }

    pub fn param_blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn zero_grads(&self) -> Grads {
        Grads::zeros_like(&self.param_blocks())
    }
}

fn affine_dense(layer: &Layer, x: &[f64], z: &mut [f64]) {
    for (o, zo) in z.iter_mut().enumerate() {
        *zo += layer.row(o).iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
    }
}

fn outer_add(g: &mut [f64], delta: &[f64], x: &[f64]) {
    let n = x.len();
    for (o, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (gi, xi) in g[o * n..(o + 1) * n].iter_mut().zip(x) {
            *gi += d * xi;
        }
    }
}

impl Trainable for DenseNet {
    type Sample = Example;

    fn parameters(&self) -> Vec<&[f64]> {
        self.param_blocks()
    }

    fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.param_blocks_mut()
    }

    fn accumulate(
        &self,
        sample: &Example,
        loss: &LossSpec,
        grads: &mut Grads,
    ) -> Result<f64, NetError> {
        let x = sample.input.as_input();
        let trace = self.forward_trace(x)?;
        let (l, delta) = super::output_delta(
            loss,
            self.output_activation(),
            trace.output_pre(),
            trace.output(),
            &sample.target,
        )?;
        self.backward(x, &trace, &delta, grads, false);
        Ok(l)
    }
}
