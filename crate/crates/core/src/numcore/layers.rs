//! Sequential TCN networks with a recorded forward pass and reverse-mode
//! gradients.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{conv_backward, conv_forward, ConvShape, ConvSpec};
use super::tensor::Tensor2;
use crate::error::{invalid, shape, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(T::zero()),
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => T::one() / (T::one() + (-v).exp()),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, out: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if out > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - out * out,
            Activation::Sigmoid => out * (T::one() - out),
        }
    }

    fn apply_in_place<T: Scalar>(self, values: &mut [T]) {
        if self != Activation::Identity {
            values.iter_mut().for_each(|v| *v = self.apply(*v));
        }
    }
}

/// Conv, then activation, then an optional identity skip.
#[derive(Debug, Clone, PartialEq)]
pub struct TcnBlock<T> {
    pub conv: ConvSpec<T>,
    pub activation: Activation,
    pub residual: bool,
}

impl<T: Scalar> TcnBlock<T> {
    pub fn forward(&self, x: &Tensor2<T>) -> Result<Tensor2<T>> {
        if x.channels() != self.conv.shape.in_channels {
            return Err(shape(format!(
                "block expects {} channels, got {}",
                self.conv.shape.in_channels,
                x.channels()
            )));
        }
        if self.residual && self.conv.shape.in_channels != self.conv.shape.out_channels {
            return Err(shape("residual path needs equal in/out channels"));
        }
        Ok(self.forward_unchecked(x).0)
    }

    fn forward_unchecked(&self, x: &Tensor2<T>) -> (Tensor2<T>, Tensor2<T>) {
        let mut act = conv_forward(x, &self.conv);
        self.activation.apply_in_place(act.data_mut());
        if self.residual {
            let mut out = act.clone();
            for (o, &xv) in out.data_mut().iter_mut().zip(x.data()) {
                *o += xv;
            }
            (out, act)
        } else {
            (act.clone(), act)
        }
    }
}

/// Applies a stack of TCN blocks in order.
pub fn forward_blocks<T: Scalar>(x: &Tensor2<T>, blocks: &[TcnBlock<T>]) -> Result<Tensor2<T>> {
    let mut cur = x.clone();
    for b in blocks {
        cur = b.forward(&cur)?;
    }
    Ok(cur)
}

/// Fully connected layer over a column tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `[out][in]`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Dense<T> {
    fn forward_column(&self, x: &[T]) -> Vec<T> {
        let mut out = self.bias.clone();
        for (o, y) in out.iter_mut().enumerate() {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = T::zero();
            for (&a, &b) in w.iter().zip(x) {
                acc += a * b;
            }
            *y = self.activation.apply(*y + acc);
        }
        out
    }
}

/// Serializable description of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageArch {
    Block { conv: ConvShape, activation: Activation, residual: bool },
    Dense { inputs: usize, outputs: usize, activation: Activation },
    /// `(C, L) -> (C, 1)`: keeps the most recent sample.
    LastStep,
    /// `(C, L) -> (C*L, 1)`.
    Flatten,
    /// `(C*L, 1) -> (C, L)`.
    Reshape { channels: usize, length: usize },
}

impl StageArch {
    /// Block with a residual skip whenever in and out channels agree.
    pub fn block(in_channels: usize, out_channels: usize, kernel: usize, dilation: usize, activation: Activation) -> Self {
        StageArch::Block {
            conv: ConvShape { in_channels, out_channels, kernel, dilation },
            activation,
            residual: in_channels == out_channels,
        }
    }

    pub fn dense(inputs: usize, outputs: usize, activation: Activation) -> Self {
        StageArch::Dense { inputs, outputs, activation }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage<T> {
    Block(TcnBlock<T>),
    Dense(Dense<T>),
    LastStep,
    Flatten,
    Reshape { channels: usize, length: usize },
}

impl<T: Scalar> Stage<T> {
    fn arch(&self) -> StageArch {
        match self {
            Stage::Block(b) => StageArch::Block { conv: b.conv.shape, activation: b.activation, residual: b.residual },
            Stage::Dense(d) => StageArch::Dense { inputs: d.inputs, outputs: d.outputs, activation: d.activation },
            Stage::LastStep => StageArch::LastStep,
            Stage::Flatten => StageArch::Flatten,
            Stage::Reshape { channels, length } => StageArch::Reshape { channels: *channels, length: *length },
        }
    }
}

/// Per-stage record kept by a forward pass for the backward pass.
#[derive(Debug, Clone)]
struct TapeEntry<T> {
    input: Tensor2<T>,
    /// Activation output before any residual add (blocks and dense only).
    activated: Option<Tensor2<T>>,
}

/// Recording of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct GradTape<T> {
    entries: Vec<TapeEntry<T>>,
}

impl<T> GradTape<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn is_recorded(&self) -> bool {
        !self.entries.is_empty()
    }
}

/// Gradient buffers, one per parameter tensor in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T> {
    pub tensors: Vec<Vec<T>>,
}

impl<T: Scalar> Grads<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Self { tensors: net.param_sizes().into_iter().map(|n| vec![T::zero(); n]).collect() }
    }

    pub fn scale(&mut self, k: T) {
        self.tensors.iter_mut().flatten().for_each(|g| *g *= k);
    }

    pub fn add(&mut self, other: &Grads<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|g| g.is_finite())
    }

    pub fn flat(&self) -> Vec<T> {
        self.tensors.iter().flatten().copied().collect()
    }

    pub fn zero(&mut self) {
        self.tensors.iter_mut().flatten().for_each(|g| *g = T::zero());
    }
}

/// Straight-line sequence of stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    stages: Vec<Stage<T>>,
}

fn init_bound(fan_in: usize, fan_out: usize, activation: Activation) -> f64 {
    match activation {
        Activation::Relu => (6.0 / fan_in as f64).sqrt(),
        _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
    }
}

impl<T: Scalar> Network<T> {
    /// All-zero weights and biases.
    pub fn zeros(arch: &[StageArch]) -> Result<Self> {
        Self::build(arch, |_, _, _| T::zero())
    }

    /// Uniform He (ReLU) or Glorot (other activations) initialization with
    /// zero biases.
    pub fn random(arch: &[StageArch], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(arch, |fan_in, fan_out, act| {
            let b = init_bound(fan_in, fan_out, act);
            T::of(rng.gen_range(-b..b))
        })
    }

    fn build(arch: &[StageArch], mut draw: impl FnMut(usize, usize, Activation) -> T) -> Result<Self> {
        let mut stages = Vec::with_capacity(arch.len());
        for a in arch {
            stages.push(match *a {
                StageArch::Block { conv, activation, residual } => {
                    conv.validate()?;
                    if residual && conv.in_channels != conv.out_channels {
                        return Err(shape("residual block needs equal in/out channels"));
                    }
                    let fan_in = conv.in_channels * conv.kernel;
                    let fan_out = conv.out_channels * conv.kernel;
                    let weights = (0..conv.weight_count()).map(|_| draw(fan_in, fan_out, activation)).collect();
                    Stage::Block(TcnBlock {
                        conv: ConvSpec { shape: conv, weights, bias: vec![T::zero(); conv.out_channels] },
                        activation,
                        residual,
                    })
                }
                StageArch::Dense { inputs, outputs, activation } => {
                    if inputs == 0 || outputs == 0 {
                        return Err(invalid("dense layer sizes must be >= 1"));
                    }
                    let weights = (0..inputs * outputs).map(|_| draw(inputs, outputs, activation)).collect();
                    Stage::Dense(Dense { inputs, outputs, weights, bias: vec![T::zero(); outputs], activation })
                }
                StageArch::LastStep => Stage::LastStep,
                StageArch::Flatten => Stage::Flatten,
                StageArch::Reshape { channels, length } => Stage::Reshape { channels, length },
            });
        }
        Ok(Self { stages })
    }

    pub fn from_stages(stages: Vec<Stage<T>>) -> Self {
        Self { stages }
    }

    pub fn stages(&self) -> &[Stage<T>] {
        &self.stages
    }

    pub fn stages_mut(&mut self) -> &mut [Stage<T>] {
        &mut self.stages
    }

    pub fn arch(&self) -> Vec<StageArch> {
        self.stages.iter().map(Stage::arch).collect()
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    pub fn param_slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for s in &self.stages {
            match s {
                Stage::Block(b) => {
                    out.push(b.conv.weights.as_slice());
                    out.push(b.conv.bias.as_slice());
                }
                Stage::Dense(d) => {
                    out.push(d.weights.as_slice());
                    out.push(d.bias.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for s in &mut self.stages {
            match s {
                Stage::Block(b) => {
                    out.push(b.conv.weights.as_mut_slice());
                    out.push(b.conv.bias.as_mut_slice());
                }
                Stage::Dense(d) => {
                    out.push(d.weights.as_mut_slice());
                    out.push(d.bias.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn flat_params(&self) -> Vec<T> {
        self.param_slices().into_iter().flatten().copied().collect()
    }

    pub fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(shape(format!("expected {} parameters, got {}", self.param_count(), flat.len())));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter payload".into()));
        }
        let mut off = 0;
        for s in self.param_slices_mut() {
            let n = s.len();
            s.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let mut net = Network::<U>::zeros(&self.arch()).expect("architecture already validated");
        let flat: Vec<U> = crate::scalar::cast_slice(&self.flat_params());
        net.load_flat(&flat).expect("same architecture");
        net
    }

    pub fn forward(&self, x: &Tensor2<T>) -> Result<Tensor2<T>> {
        let mut cur = x.clone();
        for s in &self.stages {
            cur = self.stage_forward(s, cur, None)?;
        }
        Ok(cur)
    }

    /// Forward pass that records what the backward pass needs.
    pub fn forward_taped(&self, x: &Tensor2<T>) -> Result<(Tensor2<T>, GradTape<T>)> {
        let mut tape = GradTape { entries: Vec::with_capacity(self.stages.len()) };
        let mut cur = x.clone();
        for s in &self.stages {
            cur = self.stage_forward(s, cur, Some(&mut tape))?;
        }
        Ok((cur, tape))
    }

    fn stage_forward(&self, stage: &Stage<T>, x: Tensor2<T>, tape: Option<&mut GradTape<T>>) -> Result<Tensor2<T>> {
        let (out, activated) = match stage {
            Stage::Block(b) => {
                if x.channels() != b.conv.shape.in_channels {
                    return Err(shape(format!(
                        "block expects {} channels, got {}",
                        b.conv.shape.in_channels,
                        x.channels()
                    )));
                }
                let (out, act) = b.forward_unchecked(&x);
                (out, Some(act))
            }
            Stage::Dense(d) => {
                if x.length() != 1 || x.channels() != d.inputs {
                    return Err(shape(format!(
                        "dense expects a {}x1 column, got {}x{}",
                        d.inputs,
                        x.channels(),
                        x.length()
                    )));
                }
                let out = Tensor2::column(d.forward_column(x.data()));
                (out.clone(), Some(out))
            }
            Stage::LastStep => {
                if x.length() == 0 {
                    return Err(shape("last-step on an empty tensor"));
                }
                let l = x.length();
                let out = Tensor2::column((0..x.channels()).map(|c| x.get(c, l - 1)).collect());
                (out, None)
            }
            Stage::Flatten => {
                let n = x.channels() * x.length();
                (x.clone().reshaped(n, 1)?, None)
            }
            Stage::Reshape { channels, length } => (x.clone().reshaped(*channels, *length)?, None),
        };
        if let Some(t) = tape {
            t.entries.push(TapeEntry { input: x, activated });
        }
        Ok(out)
    }

    /// Back-propagates `grad_out` through a recorded pass, adding parameter
    /// gradients into `grads`; returns the gradient with respect to the
    /// network input.
    pub fn backward_into(&self, tape: &GradTape<T>, grad_out: &Tensor2<T>, grads: &mut Grads<T>) -> Result<Tensor2<T>> {
        if !tape.is_recorded() {
            return Err(Error::EmptyTape);
        }
        if tape.entries.len() != self.stages.len() {
            return Err(shape("tape was recorded on a different network"));
        }
        if grads.tensors.len() != self.param_sizes().len() {
            return Err(shape("gradient buffers do not match the network"));
        }
        let mut g = grad_out.clone();
        let mut slot = grads.tensors.len();
        for (stage, entry) in self.stages.iter().zip(&tape.entries).rev() {
            g = match stage {
                Stage::Block(b) => {
                    slot -= 2;
                    let act = entry.activated.as_ref().expect("block records activation");
                    if !g.same_shape(act) {
                        return Err(shape("gradient shape does not match block output"));
                    }
                    let mut pre = g.clone();
                    if b.activation != Activation::Identity {
                        for (p, &a) in pre.data_mut().iter_mut().zip(act.data()) {
                            *p *= b.activation.derivative_from_output(a);
                        }
                    }
                    let (gw, rest) = grads.tensors[slot..].split_at_mut(1);
                    let mut gx = conv_backward(&entry.input, &b.conv, &pre, &mut gw[0], &mut rest[0]);
                    if b.residual {
                        for (d, &v) in gx.data_mut().iter_mut().zip(g.data()) {
                            *d += v;
                        }
                    }
                    gx
                }
                Stage::Dense(d) => {
                    slot -= 2;
                    let act = entry.activated.as_ref().expect("dense records activation");
                    if g.data().len() != d.outputs {
                        return Err(shape("gradient shape does not match dense output"));
                    }
                    let pre: Vec<T> = g
                        .data()
                        .iter()
                        .zip(act.data())
                        .map(|(&gv, &a)| gv * d.activation.derivative_from_output(a))
                        .collect();
                    let x = entry.input.data();
                    let (gw, rest) = grads.tensors[slot..].split_at_mut(1);
                    let mut gx = vec![T::zero(); d.inputs];
                    for (o, &p) in pre.iter().enumerate() {
                        rest[0][o] += p;
                        let wrow = &d.weights[o * d.inputs..(o + 1) * d.inputs];
                        let grow = &mut gw[0][o * d.inputs..(o + 1) * d.inputs];
                        for i in 0..d.inputs {
                            grow[i] += p * x[i];
                            gx[i] += p * wrow[i];
                        }
                    }
                    Tensor2::column(gx)
                }
                Stage::LastStep => {
                    let x = &entry.input;
                    let l = x.length();
                    let mut gx = Tensor2::zeros(x.channels(), l);
                    for c in 0..x.channels() {
                        gx.set(c, l - 1, g.get(c, 0));
                    }
                    gx
                }
                Stage::Flatten | Stage::Reshape { .. } => {
                    let x = &entry.input;
                    g.reshaped(x.channels(), x.length())?
                }
            };
        }
        Ok(g)
    }

    /// Convenience wrapper returning fresh gradients.
    pub fn backward(&self, tape: &GradTape<T>, grad_out: &Tensor2<T>) -> Result<(Grads<T>, Tensor2<T>)> {
        let mut grads = Grads::zeros_like(self);
        let gx = self.backward_into(tape, grad_out, &mut grads)?;
        Ok((grads, gx))
    }
}
