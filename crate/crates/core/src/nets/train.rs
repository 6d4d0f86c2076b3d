// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minibatch training with SGD or Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Network, ParamMode};
use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// Softmax cross-entropy over class logits.
    CrossEntropy,
    Mse,
    /// Sigmoid binary cross-entropy on a single logit.
    Bce,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            epochs: 10,
            batch_size: 32,
            loss: Loss::CrossEntropy,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Targets<S = f64> {
    Classes(Vec<usize>),
    Values(Tensor<S>),
}

/// Batched inputs with one target per leading-axis row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<S = f64> {
    pub inputs: Tensor<S>,
    pub targets: Targets<S>,
}

impl<S: Scalar> Dataset<S> {
    pub fn classification(inputs: Tensor<S>, labels: Vec<usize>) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} labels",
                inputs.rows(),
                labels.len()
            )));
        }
        Ok(Self {
            inputs,
            targets: Targets::Classes(labels),
        })
    }

    pub fn len(&self) -> usize {
        if self.inputs.rank() == 0 {
            0
        } else {
            self.inputs.rows()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Classes(c) => Some(c),
            Targets::Values(_) => None,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select_rows(idx),
            targets: match &self.targets {
                Targets::Classes(c) => Targets::Classes(idx.iter().map(|&i| c[i]).collect()),
                Targets::Values(v) => Targets::Values(v.select_rows(idx)),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<S = f64> {
    pub network: Network<S>,
    /// Mean training loss of each epoch.
    pub losses: Vec<f64>,
}

pub fn train<S: Scalar>(net: &Network<S>, data: &Dataset<S>, cfg: &TrainConfig) -> Result<TrainOutcome<S>> {
    train_with(net, data, cfg, |_, _| {})
}

/// Like [`train`], calling `on_epoch(e, net)` before the first epoch
/// (`e = 0`) and after each completed epoch `e`.
pub fn train_with<S: Scalar>(
    net: &Network<S>,
    data: &Dataset<S>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &Network<S>),
) -> Result<TrainOutcome<S>> {
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::invalid("batch_size and learning_rate must be positive"));
    }
    let n = data.len();
    let out_width = net.width_after(net.num_layers());
    check_targets(data, cfg.loss, out_width)?;

    let mut net = net.clone();
    let mut opt = OptState::new(&net, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    on_epoch(0, &net);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.subset(chunk);
            let mut tape = Tape::new();
            let x = tape.constant(batch.inputs.clone());
            let rec = net.record(&mut tape, x, 1, net.num_layers(), ParamMode::Trainable)?;
            let out = rec.output(x);
            tape.set_output(out);
            let (loss, grad) = loss_and_grad(tape.value(out), &batch.targets, cfg.loss)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            total += loss * chunk.len() as f64;
            let mut grads = tape.backward(&grad)?;
            let g: Vec<Tensor<S>> = rec
                .params
                .iter()
                .map(|&p| grads.take(p).expect("parameters are differentiable"))
                .collect();
            opt.step(&mut net, &g);
        }
        let mean = total / n as f64;
        if !mean.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        losses.push(mean);
        on_epoch(epoch, &net);
    }
    Ok(TrainOutcome {
        network: net,
        losses,
    })
}

fn check_targets<S: Scalar>(data: &Dataset<S>, loss: Loss, width: usize) -> Result<()> {
    match (&data.targets, loss) {
        (Targets::Classes(c), Loss::CrossEntropy) => {
            if let Some(&bad) = c.iter().find(|&&c| c >= width) {
                return Err(Error::invalid(format!("label {bad} exceeds {width} logits")));
            }
        }
        (Targets::Classes(c), Loss::Bce) => {
            if width != 1 || c.iter().any(|&c| c > 1) {
                return Err(Error::invalid("bce needs one logit and 0/1 labels"));
            }
        }
        (Targets::Values(v), Loss::Mse) => {
            if v.rows() != data.len() || v.row_len() != width {
                return Err(Error::shape("mse targets", &[data.len(), width], v.shape()));
            }
        }
        (_, l) => return Err(Error::invalid(format!("targets do not fit loss {l:?}"))),
    }
    Ok(())
}

/// Mean loss over the batch and its gradient with respect to the outputs.
pub(crate) fn loss_and_grad<S: Scalar>(
    out: &Tensor<S>,
    targets: &Targets<S>,
    loss: Loss,
) -> Result<(f64, Tensor<S>)> {
    let b = out.rows();
    let w = out.row_len();
    let bs = S::from_usize_lossy(b);
    let mut grad = Tensor::zeros(out.shape());
    let mut total = S::zero();
    match (targets, loss) {
        (Targets::Classes(labels), Loss::CrossEntropy) => {
            for (i, &y) in labels.iter().enumerate() {
                let row = out.row(i);
                let m = row.iter().copied().fold(S::neg_infinity(), S::max);
                let z: S = row.iter().map(|&v| (v - m).exp()).sum();
                let lse = m + z.ln();
                total += lse - row[y];
                let g = &mut grad.data_mut()[i * w..(i + 1) * w];
                for (j, gj) in g.iter_mut().enumerate() {
                    let p = (row[j] - lse).exp();
                    let t = if j == y { S::one() } else { S::zero() };
                    *gj = (p - t) / bs;
                }
            }
        }
        (Targets::Classes(labels), Loss::Bce) => {
            for (i, &y) in labels.iter().enumerate() {
                let z = out.data()[i];
                let y = S::from_usize_lossy(y);
                // log(1 + e^z) - y z, stable form
                total += z.max(S::zero()) - z * y + (-z.abs()).exp().ln_1p();
                let p = S::one() / (S::one() + (-z).exp());
                grad.data_mut()[i] = (p - y) / bs;
            }
        }
        (Targets::Values(t), Loss::Mse) => {
            let n = S::from_usize_lossy(b * w);
            for (k, (&o, &y)) in out.data().iter().zip(t.data()).enumerate() {
                let d = o - y;
                total += d * d;
                grad.data_mut()[k] = S::c(2.0) * d / n;
            }
            return Ok(((total / n).to_f64_lossy(), grad));
        }
        (_, l) => return Err(Error::invalid(format!("targets do not fit loss {l:?}"))),
    }
    Ok(((total / bs).to_f64_lossy(), grad))
}

struct OptState<S> {
    kind: Optimizer,
    lr: S,
    t: i32,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> OptState<S> {
    fn new(net: &Network<S>, cfg: &TrainConfig) -> Self {
        let zeros: Vec<Tensor<S>> = net.params().iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            kind: cfg.optimizer,
            lr: S::c(cfg.learning_rate),
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn step(&mut self, net: &mut Network<S>, grads: &[Tensor<S>]) {
        self.t += 1;
        let (b1, b2, eps) = (S::c(0.9), S::c(0.999), S::c(1e-8));
        let c1 = S::one() - b1.powi(self.t);
        let c2 = S::one() - b2.powi(self.t);
        for (k, (p, g)) in net.params_mut().into_iter().zip(grads).enumerate() {
            match self.kind {
                Optimizer::Sgd => {
                    for (w, &gi) in p.data_mut().iter_mut().zip(g.data()) {
                        *w -= self.lr * gi;
                    }
                }
                Optimizer::Adam => {
                    let m = self.m[k].data_mut();
                    let v = self.v[k].data_mut();
                    for (((w, &gi), mi), vi) in
                        p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        *mi = b1 * *mi + (S::one() - b1) * gi;
                        *vi = b2 * *vi + (S::one() - b2) * gi * gi;
                        let mhat = *mi / c1;
                        let vhat = *vi / c2;
                        *w -= self.lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Dataset {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let t = i as f64 * 0.1;
            let c = i % 2;
            let s = if c == 0 { -1.0 } else { 1.0 };
            xs.extend([s + 0.2 * t.sin(), s + 0.2 * t.cos()]);
            ys.push(c);
        }
        Dataset::classification(Tensor::from_f64(&[40, 2], &xs).unwrap(), ys).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let net: Network = Network::builder(&[2], 1).mlp(&[8], 2, false).build().unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let out = train(&net, &blobs(), &cfg).unwrap();
        assert_eq!(out.network, net);
        assert!(out.losses.is_empty());
    }

    #[test]
    fn training_is_bit_reproducible() {
        let net: Network = Network::builder(&[2], 1).mlp(&[8], 2, false).build().unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 8,
            learning_rate: 0.01,
            ..Default::default()
        };
        let a = train(&net, &blobs(), &cfg).unwrap();
        let b = train(&net, &blobs(), &cfg).unwrap();
        assert_eq!(a.network, b.network);
        assert_eq!(a.losses, b.losses);
    }

    #[test]
    fn adam_and_sgd_reduce_loss() {
        let net: Network = Network::builder(&[2], 4).mlp(&[8], 2, false).build().unwrap();
        for optimizer in [Optimizer::Sgd, Optimizer::Adam] {
            let cfg = TrainConfig {
                optimizer,
                epochs: 30,
                batch_size: 8,
                learning_rate: 0.05,
                ..Default::default()
            };
            let out = train(&net, &blobs(), &cfg).unwrap();
            assert!(out.losses.last().unwrap() < &(out.losses[0] * 0.5), "{optimizer:?}");
        }
    }

    #[test]
    fn divergence_names_epoch() {
        let net: Network = Network::builder(&[2], 4).mlp(&[8], 1, false).build().unwrap();
        let data: Dataset = Dataset {
            inputs: Tensor::from_f64(&[2, 2], &[1e300, 1e300, -1e300, 1e300]).unwrap(),
            targets: Targets::Values(Tensor::from_f64(&[2, 1], &[1.0, 2.0]).unwrap()),
        };
        let cfg = TrainConfig {
            loss: Loss::Mse,
            optimizer: Optimizer::Sgd,
            learning_rate: 1.0,
            epochs: 3,
            ..Default::default()
        };
        assert!(matches!(train(&net, &data, &cfg), Err(Error::Divergence { epoch: 1, .. })));
    }

    #[test]
    fn bce_gradient_matches_finite_difference() {
        let z: Tensor = Tensor::from_f64(&[3, 1], &[0.3, -1.2, 2.0]).unwrap();
        let t: Targets = Targets::Classes(vec![1, 0, 1]);
        let (_, g) = loss_and_grad(&z, &t, Loss::Bce).unwrap();
        for i in 0..3 {
            let h = 1e-6;
            let mut zp = z.clone();
            zp.data_mut()[i] += h;
            let mut zm = z.clone();
            zm.data_mut()[i] -= h;
            let fd = (loss_and_grad(&zp, &t, Loss::Bce).unwrap().0
                - loss_and_grad(&zm, &t, Loss::Bce).unwrap().0)
                / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-8);
        }
    }
}
