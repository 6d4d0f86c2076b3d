// SPDX-License-Identifier: MIT OR Apache-2.0

//! Layer stacks, span evaluation and single-neuron ablation.
//!
//! Layers are indexed from 1 to `L` in the order they are applied; the span
//! `(l1, l2)` denotes `f^(l2) ∘ … ∘ f^(l1)` and consumes values shaped like
//! the output of layer `l1 - 1` (the network input when `l1 = 1`).
//! Nonlinearities are separate layers, so a hidden "affine + relu" block
//! occupies two indices.

mod io;
mod train;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::autodiff::{Conv2dGeom, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use io::{FORMAT_VERSION, load, save};
pub use train::{train, train_with, Dataset, Loss, Optimizer, Targets, TrainConfig, TrainOutcome};

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<S = f64> {
    /// `y = W x + b` with `W` shaped `(d_out, d_in)`.
    Affine { weight: Tensor<S>, bias: Tensor<S> },
    Relu,
    Gelu,
    /// Weight shaped `(out_channels, in_channels, kh, kw)`.
    Conv2d {
        weight: Tensor<S>,
        bias: Tensor<S>,
        stride: usize,
        padding: usize,
    },
    Flatten,
}

impl<S: Scalar> Layer<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Affine { .. } => "affine",
            Layer::Relu => "relu",
            Layer::Gelu => "gelu",
            Layer::Conv2d { .. } => "conv2d",
            Layer::Flatten => "flatten",
        }
    }

    pub fn is_activation(&self) -> bool {
        matches!(self, Layer::Relu | Layer::Gelu)
    }

    fn params(&self) -> Vec<&Tensor<S>> {
        match self {
            Layer::Affine { weight, bias } | Layer::Conv2d { weight, bias, .. } => {
                vec![weight, bias]
            }
            _ => vec![],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        match self {
            Layer::Affine { weight, bias } | Layer::Conv2d { weight, bias, .. } => {
                vec![weight, bias]
            }
            _ => vec![],
        }
    }

    /// Per-sample output shape, or an error naming the mismatch.
    fn output_shape(&self, index: usize, input: &[usize]) -> Result<Vec<usize>> {
        let bad = |what: String| Error::invalid(format!("layer {index} ({}): {what}", self.kind()));
        match self {
            Layer::Affine { weight, bias } => {
                if weight.rank() != 2 || bias.shape() != [weight.shape()[0]] {
                    return Err(bad(format!(
                        "weight {:?} and bias {:?} do not form an affine map",
                        weight.shape(),
                        bias.shape()
                    )));
                }
                if input != [weight.shape()[1]] {
                    return Err(bad(format!(
                        "expects input [{}] but receives {input:?}",
                        weight.shape()[1]
                    )));
                }
                Ok(vec![weight.shape()[0]])
            }
            Layer::Relu | Layer::Gelu => Ok(input.to_vec()),
            Layer::Conv2d {
                weight,
                bias,
                stride,
                padding,
            } => {
                if weight.rank() != 4 || bias.shape() != [weight.shape()[0]] {
                    return Err(bad(format!(
                        "weight {:?} and bias {:?} do not form a convolution",
                        weight.shape(),
                        bias.shape()
                    )));
                }
                if input.len() != 3 || input[0] != weight.shape()[1] || *stride == 0 {
                    return Err(bad(format!(
                        "expects [{}, H, W] input but receives {input:?}",
                        weight.shape()[1]
                    )));
                }
                let out = |n: usize, k: usize| {
                    (n + 2 * padding)
                        .checked_sub(k)
                        .map(|v| v / stride + 1)
                        .ok_or_else(|| bad(format!("kernel larger than padded input {input:?}")))
                };
                Ok(vec![
                    weight.shape()[0],
                    out(input[1], weight.shape()[2])?,
                    out(input[2], weight.shape()[3])?,
                ])
            }
            Layer::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

/// Zeroes the post-activation output of one neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AblationMask {
    /// 1-based layer index.
    pub layer: usize,
    /// Flat index into the layer's per-sample output.
    pub neuron: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<S = f64> {
    layers: Vec<Layer<S>>,
    input_shape: Vec<usize>,
    seed: u64,
    ablations: BTreeSet<AblationMask>,
    shapes: Vec<Vec<usize>>,
}

/// How parameters enter a recorded graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamMode {
    /// Parameters are constants; only the input is differentiable.
    Frozen,
    /// Parameters are differentiable leaves.
    Trainable,
}

/// Output of [`Network::record`].
pub struct Recording {
    /// Value after each layer of the span, in order.
    pub layer_outputs: Vec<Var>,
    /// Parameter leaves in layer order (empty unless trainable).
    pub params: Vec<Var>,
}

impl Recording {
    pub fn output(&self, input: Var) -> Var {
        self.layer_outputs.last().copied().unwrap_or(input)
    }
}

impl Network {
    /// Starts a seeded builder; `build::<S>()` picks the scalar type.
    pub fn builder(input_shape: &[usize], seed: u64) -> NetworkBuilder {
        NetworkBuilder::new(input_shape, seed)
    }
}

impl<S: Scalar> Network<S> {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer<S>>, seed: u64) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::invalid(format!("invalid input shape {input_shape:?}")));
        }
        let mut shapes = vec![input_shape.clone()];
        let mut seen_flatten = false;
        for (i, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Conv2d { .. } if seen_flatten => {
                    return Err(Error::invalid(format!(
                        "layer {}: conv2d after flatten",
                        i + 1
                    )))
                }
                Layer::Flatten => seen_flatten = true,
                _ => {}
            }
            for p in layer.params() {
                if !p.is_finite() {
                    return Err(Error::NonFinite(format!("parameters of layer {}", i + 1)));
                }
            }
            let next = layer.output_shape(i + 1, &shapes[i])?;
            shapes.push(next);
        }
        Ok(Self {
            layers,
            input_shape,
            seed,
            ablations: BTreeSet::new(),
            shapes,
        })
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layer(&self, index: usize) -> Option<&Layer<S>> {
        index.checked_sub(1).and_then(|i| self.layers.get(i))
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ablations(&self) -> impl Iterator<Item = &AblationMask> {
        self.ablations.iter()
    }

    /// Per-sample shape of the value after layer `index` (0 = input).
    pub fn shape_after(&self, index: usize) -> &[usize] {
        &self.shapes[index]
    }

    pub fn width_after(&self, index: usize) -> usize {
        self.shapes[index].iter().product()
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().expect("at least the input shape")
    }

    /// Layer index of the `k`-th nonlinearity (1-based), i.e. the "k-th
    /// hidden layer" of an MLP.
    pub fn hidden_layer(&self, k: usize) -> Option<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_activation())
            .nth(k.checked_sub(1)?)
            .map(|(i, _)| i + 1)
    }

    pub fn is_cpa(&self) -> bool {
        !self.layers.iter().any(|l| matches!(l, Layer::Gelu))
    }

    pub fn check_span(&self, l1: usize, l2: usize) -> Result<()> {
        if l1 == 0 || l1 > l2 || l2 > self.layers.len() {
            return Err(Error::Span {
                l1,
                l2,
                layers: self.layers.len(),
            });
        }
        Ok(())
    }

    /// Wraps a single sample into a batch of one; returns whether it did.
    fn batched(&self, x: &Tensor<S>, index: usize) -> Result<(Tensor<S>, bool)> {
        let want = &self.shapes[index];
        if x.shape() == want.as_slice() {
            let mut shape = vec![1];
            shape.extend_from_slice(want);
            Ok((x.reshape(&shape)?, true))
        } else if x.rank() == want.len() + 1 && &x.shape()[1..] == want.as_slice() {
            Ok((x.clone(), false))
        } else {
            Err(Error::shape("network input", want, x.shape()))
        }
    }

    /// Appends layers `l1..=l2` to `tape`, starting from the batched value `x`.
    pub fn record(
        &self,
        tape: &mut Tape<S>,
        x: Var,
        l1: usize,
        l2: usize,
        mode: ParamMode,
    ) -> Result<Recording> {
        self.check_span(l1, l2)?;
        let batch = tape.value(x).rows();
        let mut cur = x;
        let mut rec = Recording {
            layer_outputs: Vec::with_capacity(l2 + 1 - l1),
            params: Vec::new(),
        };
        for index in l1..=l2 {
            let layer = &self.layers[index - 1];
            cur = match layer {
                Layer::Affine { weight, bias } => {
                    let (wt, b) = match mode {
                        ParamMode::Frozen => {
                            (tape.constant(weight.transpose()?), tape.constant(bias.clone()))
                        }
                        ParamMode::Trainable => {
                            let w = tape.param(weight.clone());
                            let b = tape.param(bias.clone());
                            rec.params.extend([w, b]);
                            (tape.transpose(w)?, b)
                        }
                    };
                    let y = tape.matmul(cur, wt)?;
                    tape.add_bias(y, b)?
                }
                Layer::Relu => tape.relu(cur),
                Layer::Gelu => tape.gelu(cur),
                Layer::Conv2d {
                    weight,
                    bias,
                    stride,
                    padding,
                } => {
                    let (w, b) = match mode {
                        ParamMode::Frozen => {
                            (tape.constant(weight.clone()), tape.constant(bias.clone()))
                        }
                        ParamMode::Trainable => {
                            let w = tape.param(weight.clone());
                            let b = tape.param(bias.clone());
                            rec.params.extend([w, b]);
                            (w, b)
                        }
                    };
                    let geom = Conv2dGeom {
                        stride: *stride,
                        padding: *padding,
                    };
                    tape.conv2d(cur, w, b, geom)?
                }
                Layer::Flatten => tape.reshape(cur, &[batch, self.width_after(index)])?,
            };
            let masks: Vec<_> = self.ablations.iter().filter(|m| m.layer == index).collect();
            if !masks.is_empty() {
                let mut shape = vec![batch];
                shape.extend_from_slice(&self.shapes[index]);
                let width = self.width_after(index);
                let mut keep = Tensor::ones(&shape);
                for m in masks {
                    for b in 0..batch {
                        keep.data_mut()[b * width + m.neuron] = S::zero();
                    }
                }
                let keep = tape.constant(keep);
                cur = tape.mul(cur, keep)?;
            }
            rec.layer_outputs.push(cur);
        }
        Ok(rec)
    }

    /// `f^(l1←l2)(x)` for a single sample or a batch.
    pub fn forward_span(&self, x: &Tensor<S>, l1: usize, l2: usize) -> Result<Tensor<S>> {
        self.check_span(l1, l2)?;
        let (xb, single) = self.batched(x, l1 - 1)?;
        let mut tape = Tape::new();
        let xv = tape.constant(xb);
        let rec = self.record(&mut tape, xv, l1, l2, ParamMode::Frozen)?;
        let out = tape.value(rec.output(xv)).clone();
        if single {
            out.reshape(&self.shapes[l2])
        } else {
            Ok(out)
        }
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.forward_span(x, 1, self.layers.len())
    }

    /// Values after every layer (index 0 holds the input), single or batched.
    pub fn layer_outputs(&self, x: &Tensor<S>) -> Result<Vec<Tensor<S>>> {
        let (xb, single) = self.batched(x, 0)?;
        let mut tape = Tape::new();
        let xv = tape.constant(xb);
        let rec = self.record(&mut tape, xv, 1, self.layers.len(), ParamMode::Frozen)?;
        let mut outs = vec![tape.value(xv).clone()];
        outs.extend(rec.layer_outputs.iter().map(|&v| tape.value(v).clone()));
        if single {
            outs.iter()
                .enumerate()
                .map(|(i, t)| t.reshape(&self.shapes[i]))
                .collect()
        } else {
            Ok(outs)
        }
    }

    /// Copy of the network with neuron `(layer, neuron)` forced to zero.
    pub fn ablate(&self, mask: AblationMask) -> Result<Self> {
        if mask.layer == 0 || mask.layer > self.layers.len() {
            return Err(Error::invalid(format!(
                "ablation layer {} out of range 1..={}",
                mask.layer,
                self.layers.len()
            )));
        }
        let width = self.width_after(mask.layer);
        if mask.neuron >= width {
            return Err(Error::invalid(format!(
                "ablation neuron {} out of range for layer {} of width {width}",
                mask.neuron, mask.layer
            )));
        }
        let mut out = self.clone();
        out.ablations.insert(mask);
        Ok(out)
    }

    pub fn params(&self) -> Vec<&Tensor<S>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// Same weights with every nonlinearity replaced by `f`.
    pub fn with_activation(&self, act: Layer<S>) -> Result<Self> {
        let layers = self
            .layers
            .iter()
            .map(|l| if l.is_activation() { act.clone() } else { l.clone() })
            .collect();
        let mut out = Network::new(self.input_shape.clone(), layers, self.seed)?;
        out.ablations = self.ablations.clone();
        Ok(out)
    }

    /// Hex SHA-256 of the canonical serialized form.
    pub fn digest(&self) -> String {
        let bytes = io::to_json_string(self);
        hex::encode(Sha256::digest(bytes.as_bytes()))
    }

    pub fn cast<T: Scalar>(&self) -> Network<T> {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Affine { weight, bias } => Layer::Affine {
                    weight: weight.cast(),
                    bias: bias.cast(),
                },
                Layer::Relu => Layer::Relu,
                Layer::Gelu => Layer::Gelu,
                Layer::Conv2d {
                    weight,
                    bias,
                    stride,
                    padding,
                } => Layer::Conv2d {
                    weight: weight.cast(),
                    bias: bias.cast(),
                    stride: *stride,
                    padding: *padding,
                },
                Layer::Flatten => Layer::Flatten,
            })
            .collect();
        Network {
            layers,
            input_shape: self.input_shape.clone(),
            seed: self.seed,
            ablations: self.ablations.clone(),
            shapes: self.shapes.clone(),
        }
    }
}

#[derive(Clone, Debug)]
enum Planned {
    Affine(usize),
    Relu,
    Gelu,
    Conv2d {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Flatten,
}

/// Declarative construction with seeded initialization: Kaiming-uniform
/// weights for ReLU stacks, Xavier-uniform when any GELU is present, and
/// biases uniform in `±1/√fan_in`.
#[derive(Clone, Debug)]
pub struct NetworkBuilder {
    input_shape: Vec<usize>,
    seed: u64,
    plan: Vec<Planned>,
}

impl NetworkBuilder {
    pub fn new(input_shape: &[usize], seed: u64) -> Self {
        Self {
            input_shape: input_shape.to_vec(),
            seed,
            plan: Vec::new(),
        }
    }

    pub fn affine(mut self, out: usize) -> Self {
        self.plan.push(Planned::Affine(out));
        self
    }

    pub fn relu(mut self) -> Self {
        self.plan.push(Planned::Relu);
        self
    }

    pub fn gelu(mut self) -> Self {
        self.plan.push(Planned::Gelu);
        self
    }

    pub fn conv2d(mut self, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        self.plan.push(Planned::Conv2d {
            out_channels,
            kernel,
            stride,
            padding,
        });
        self
    }

    pub fn flatten(mut self) -> Self {
        self.plan.push(Planned::Flatten);
        self
    }

    /// Hidden `affine → act` blocks followed by a final affine readout.
    pub fn mlp(mut self, hidden: &[usize], out: usize, gelu: bool) -> Self {
        for &h in hidden {
            self = self.affine(h);
            self = if gelu { self.gelu() } else { self.relu() };
        }
        self.affine(out)
    }

    pub fn build<S: Scalar>(self) -> Result<Network<S>> {
        let xavier = self.plan.iter().any(|p| matches!(p, Planned::Gelu));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut shape = self.input_shape.clone();
        let mut layers = Vec::with_capacity(self.plan.len());
        for (i, p) in self.plan.iter().enumerate() {
            let layer = match *p {
                Planned::Affine(out) => {
                    if shape.len() != 1 {
                        return Err(Error::invalid(format!(
                            "layer {}: affine needs a flat input, got {shape:?} (add flatten)",
                            i + 1
                        )));
                    }
                    let fan_in = shape[0];
                    Layer::Affine {
                        weight: init_uniform(&mut rng, &[out, fan_in], fan_in, out, xavier),
                        bias: init_bias(&mut rng, out, fan_in),
                    }
                }
                Planned::Relu => Layer::Relu,
                Planned::Gelu => Layer::Gelu,
                Planned::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let in_c = shape.first().copied().unwrap_or(0);
                    let fan_in = in_c * kernel * kernel;
                    let fan_out = out_channels * kernel * kernel;
                    Layer::Conv2d {
                        weight: init_uniform(
                            &mut rng,
                            &[out_channels, in_c, kernel, kernel],
                            fan_in,
                            fan_out,
                            xavier,
                        ),
                        bias: init_bias(&mut rng, out_channels, fan_in),
                        stride,
                        padding,
                    }
                }
                Planned::Flatten => Layer::Flatten,
            };
            shape = layer.output_shape(i + 1, &shape)?;
            layers.push(layer);
        }
        Network::new(self.input_shape, layers, self.seed)
    }
}

fn init_uniform<S: Scalar>(
    rng: &mut ChaCha8Rng,
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    xavier: bool,
) -> Tensor<S> {
    let bound = if xavier {
        (6.0 / (fan_in + fan_out).max(1) as f64).sqrt()
    } else {
        (6.0 / fan_in.max(1) as f64).sqrt()
    };
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| S::c(rng.random_range(-bound..bound)))
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches")
}

fn init_bias<S: Scalar>(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Tensor<S> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Tensor::vector(
        (0..n)
            .map(|_| S::c(rng.random_range(-bound..bound)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_like(seed: u64) -> Network {
        Network::builder(&[2], seed)
            .mlp(&[16, 16, 16], 1, false)
            .build()
            .unwrap()
    }

    #[test]
    fn relu_layer_span() {
        let net = Network::<f64>::new(vec![2], vec![Layer::Relu], 0).unwrap();
        let y = net
            .forward_span(&Tensor::from_f64(&[2], &[-1.0, 2.0]).unwrap(), 1, 1)
            .unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);
    }

    #[test]
    fn span_composition_is_exact() {
        let net = star_like(3);
        let x = Tensor::from_f64(&[4, 2], &[0.1, 0.2, -0.5, 0.7, 0.9, -0.3, 0.0, 0.0]).unwrap();
        let full = net.forward(&x).unwrap();
        for k in 1..net.num_layers() {
            let mid = net.forward_span(&x, 1, k).unwrap();
            let rest = net.forward_span(&mid, k + 1, net.num_layers()).unwrap();
            assert_eq!(rest, full, "split at {k}");
        }
    }

    #[test]
    fn span_out_of_range() {
        let net = star_like(0);
        let x = Tensor::<f64>::zeros(&[2]);
        assert!(matches!(net.forward_span(&x, 0, 1), Err(Error::Span { .. })));
        assert!(matches!(net.forward_span(&x, 3, 2), Err(Error::Span { .. })));
        assert!(matches!(net.forward_span(&x, 1, 8), Err(Error::Span { .. })));
    }

    #[test]
    fn chain_mismatch_rejected() {
        let layers = vec![
            Layer::Affine {
                weight: Tensor::<f64>::zeros(&[3, 2]),
                bias: Tensor::zeros(&[3]),
            },
            Layer::Affine {
                weight: Tensor::zeros(&[1, 4]),
                bias: Tensor::zeros(&[1]),
            },
        ];
        assert!(Network::new(vec![2], layers, 0).is_err());
    }

    #[test]
    fn conv_after_flatten_rejected() {
        let layers = vec![
            Layer::<f64>::Flatten,
            Layer::Conv2d {
                weight: Tensor::zeros(&[1, 1, 1, 1]),
                bias: Tensor::zeros(&[1]),
                stride: 1,
                padding: 0,
            },
        ];
        assert!(Network::new(vec![1, 2, 2], layers, 0).is_err());
    }

    #[test]
    fn ablated_neuron_reads_zero() {
        let net = star_like(1);
        let layer = net.hidden_layer(2).unwrap();
        let ab = net.ablate(AblationMask { layer, neuron: 5 }).unwrap();
        let x = Tensor::from_f64(&[3, 2], &[0.3, 0.1, -0.8, 0.4, 0.5, 0.5]).unwrap();
        let outs = ab.layer_outputs(&x).unwrap();
        for b in 0..3 {
            assert_eq!(outs[layer].row(b)[5], 0.0);
        }
        // the original is untouched
        assert_eq!(net.ablations().count(), 0);
    }

    #[test]
    fn ablation_is_idempotent() {
        let net = star_like(2);
        let m = AblationMask { layer: 2, neuron: 0 };
        let once = net.ablate(m).unwrap();
        let twice = once.ablate(m).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn dead_neuron_ablation_changes_nothing() {
        let mut net = star_like(4);
        // zero the outgoing weights of neuron 3 of the first hidden layer
        if let Layer::Affine { weight, .. } = &mut net.layers[2] {
            for r in 0..weight.shape()[0] {
                weight.set2(r, 3, 0.0);
            }
        }
        let ab = net.ablate(AblationMask { layer: 2, neuron: 3 }).unwrap();
        let x = Tensor::from_f64(&[2, 2], &[0.3, -0.6, 0.05, 0.9]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), ab.forward(&x).unwrap());
    }

    #[test]
    fn invalid_ablation_rejected() {
        let net = star_like(0);
        assert!(net.ablate(AblationMask { layer: 0, neuron: 0 }).is_err());
        assert!(net.ablate(AblationMask { layer: 2, neuron: 16 }).is_err());
        assert!(net.ablate(AblationMask { layer: 9, neuron: 0 }).is_err());
    }

    #[test]
    fn single_ablations_do_not_sum_to_joint() {
        let net = star_like(5);
        let layer = net.hidden_layer(1).unwrap();
        let x = Tensor::from_f64(&[2], &[0.4, -0.2]).unwrap();
        let base = net.forward(&x).unwrap().data()[0];
        let mut joint = net.clone();
        let mut summed = 0.0;
        for i in 0..16 {
            let m = AblationMask { layer, neuron: i };
            summed += net.ablate(m).unwrap().forward(&x).unwrap().data()[0] - base;
            joint = joint.ablate(m).unwrap();
        }
        let joint_effect = joint.forward(&x).unwrap().data()[0] - base;
        assert!((summed - joint_effect).abs() > 1e-6);
    }

    #[test]
    fn hidden_layer_indices() {
        let net = star_like(0);
        assert_eq!(net.hidden_layer(1), Some(2));
        assert_eq!(net.hidden_layer(3), Some(6));
        assert_eq!(net.hidden_layer(4), None);
    }
}
