// SPDX-License-Identifier: MIT OR Apache-2.0

//! Centroids, local centroids and centroid-based neuron attribution.
//!
//! The centroid of a span `(l1, l2)` at an input `x` is `Jᵀ𝟙`, where `J` is
//! the Jacobian of `f^(l1←l2)` evaluated at `f^(1←l1-1)(x)`. One backward
//! pass with an all-ones cotangent produces it; for a batch the rows are
//! independent, so a single pass yields every sample's centroid.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::{vjp, Tape};
use crate::error::{Error, Result};
use crate::nets::{AblationMask, Network, ParamMode};
use crate::scalar::Scalar;
use crate::tensor::{norm, Tensor};

/// Baseline centroid norms at or below this are rejected by attribution.
pub const ZERO_NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidRecord<S = f64> {
    pub input_id: String,
    pub span: (usize, usize),
    pub centroid: Vec<S>,
    pub network_hash: String,
}

/// Centroids of a batch over `(l1, l2)`; one row per sample.
///
/// `xs` lives in the network input space, either one sample or a batch.
pub fn centroid_batch<S: Scalar>(net: &Network<S>, xs: &Tensor<S>, l1: usize, l2: usize) -> Result<Tensor<S>> {
    net.check_span(l1, l2)?;
    if !xs.is_finite() {
        return Err(Error::NonFinite("centroid input".into()));
    }
    let single = xs.shape() == net.input_shape();
    let xs = if single {
        let mut shape = vec![1];
        shape.extend_from_slice(net.input_shape());
        xs.reshape(&shape)?
    } else {
        xs.clone()
    };
    let at = if l1 == 1 {
        xs
    } else {
        net.forward_span(&xs, 1, l1 - 1)?
    };
    let mut tape = Tape::new();
    let x = tape.input(at);
    let rec = net.record(&mut tape, x, l1, l2, ParamMode::Frozen)?;
    let out = rec.output(x);
    tape.set_output(out);
    let ones = Tensor::ones(tape.value(out).shape());
    let mu = vjp(&tape, &ones)?;
    let rows = mu.rows();
    mu.reshape(&[rows, mu.row_len()])
}

/// Centroid of one input, flattened to a vector of length `d^(l1-1)`.
pub fn centroid<S: Scalar>(net: &Network<S>, x: &Tensor<S>, l1: usize, l2: usize) -> Result<CentroidRecord<S>> {
    centroid_with_id(net, x, l1, l2, "0".into(), &net.digest())
}

fn centroid_with_id<S: Scalar>(
    net: &Network<S>,
    x: &Tensor<S>,
    l1: usize,
    l2: usize,
    input_id: String,
    hash: &str,
) -> Result<CentroidRecord<S>> {
    if x.shape() != net.input_shape() {
        return Err(Error::shape("centroid input", net.input_shape(), x.shape()));
    }
    let mu = centroid_batch(net, x, l1, l2)?;
    Ok(CentroidRecord {
        input_id,
        span: (l1, l2),
        centroid: mu.into_data(),
        network_hash: hash.to_owned(),
    })
}

/// Centroid records for every sample of a batch, in order; ids are the
/// sample positions.
pub fn extract_centroid_dataset<S: Scalar>(
    net: &Network<S>,
    inputs: &Tensor<S>,
    l1: usize,
    l2: usize,
) -> Result<Vec<CentroidRecord<S>>> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let hash = net.digest();
    let mu = centroid_batch(net, inputs, l1, l2)?;
    Ok((0..mu.rows())
        .map(|i| CentroidRecord {
            input_id: i.to_string(),
            span: (l1, l2),
            centroid: mu.row(i).to_vec(),
            network_hash: hash.clone(),
        })
        .collect())
}

/// Writes `input_id,l1,l2,v0..vk` rows with a header.
pub fn write_centroid_csv<S: Scalar, W: Write>(records: &[CentroidRecord<S>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = records.first().map_or(0, |r| r.centroid.len());
    let mut header = vec!["input_id".to_string(), "l1".into(), "l2".into()];
    header.extend((0..k).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.input_id.clone(), r.span.0.to_string(), r.span.1.to_string()];
        row.extend(r.centroid.iter().map(|v| v.to_f64_lossy().to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_centroid_csv<S: Scalar>(records: &[CentroidRecord<S>], path: impl AsRef<Path>) -> Result<()> {
    write_centroid_csv(records, std::fs::File::create(path)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    UniformBall,
    Gaussian,
}

/// Sample set `B_ε(center)`, drawn deterministically from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood<S = f64> {
    pub center: Tensor<S>,
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
    pub sampling: Sampling,
}

impl<S: Scalar> Neighborhood<S> {
    pub fn new(center: Tensor<S>, radius: f64, count: usize, seed: u64) -> Self {
        Self {
            center,
            radius,
            count,
            seed,
            sampling: Sampling::UniformBall,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("neighborhood needs at least one sample"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::invalid(format!(
                "neighborhood radius must be finite and positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// The sample batch, shaped `[count, ...center.shape]`.
    ///
    /// Uniform-ball samples are drawn inside the open ball of the given
    /// radius; Gaussian samples use the radius as the per-coordinate
    /// standard deviation.
    pub fn samples(&self) -> Result<Tensor<S>> {
        self.validate()?;
        let d = self.center.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut data = Vec::with_capacity(self.count * d);
        for _ in 0..self.count {
            let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let scale = match self.sampling {
                Sampling::Gaussian => self.radius,
                Sampling::UniformBall => {
                    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    let u: f64 = rng.random();
                    self.radius * u.powf(1.0 / d as f64) / n
                }
            };
            data.extend(
                self.center
                    .data()
                    .iter()
                    .zip(&dir)
                    .map(|(&c, &v)| c + S::c(v * scale)),
            );
        }
        let mut shape = vec![self.count];
        shape.extend_from_slice(self.center.shape());
        Tensor::new(shape, data)
    }
}

/// Mean centroid over the neighborhood samples.
pub fn local_centroid<S: Scalar>(net: &Network<S>, nb: &Neighborhood<S>, l1: usize, l2: usize) -> Result<Tensor<S>> {
    let samples = nb.samples()?;
    let mu = centroid_batch(net, &samples, l1, l2)?;
    Ok(mean_rows(&mu))
}

fn mean_rows<S: Scalar>(m: &Tensor<S>) -> Tensor<S> {
    let (n, d) = (m.rows(), m.row_len());
    let mut acc = vec![S::zero(); d];
    for i in 0..n {
        for (a, &v) in acc.iter_mut().zip(m.row(i)) {
            *a += v;
        }
    }
    let nn = S::from_usize_lossy(n);
    Tensor::vector(acc.into_iter().map(|v| v / nn).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport<S = f64> {
    pub layer: usize,
    pub span: (usize, usize),
    pub scores: Vec<S>,
    pub normalized_scores: Vec<S>,
    pub neighborhood: Neighborhood<S>,
}

impl<S: Scalar> AttributionReport<S> {
    /// Percentage of the other neurons scoring strictly below `neuron`.
    pub fn percentile(&self, neuron: usize) -> f64 {
        percentile_of(&self.scores, neuron)
    }

    pub fn argmax(&self) -> usize {
        self.scores
            .iter()
            .enumerate()
            .fold((0, S::neg_infinity()), |best, (i, &s)| if s > best.1 { (i, s) } else { best })
            .0
    }
}

pub fn percentile_of<S: Scalar>(scores: &[S], i: usize) -> f64 {
    if scores.len() < 2 {
        return 100.0;
    }
    let below = scores.iter().filter(|&&s| s < scores[i]).count();
    100.0 * below as f64 / (scores.len() - 1) as f64
}

/// Min-max rescaling to `[0, 1]`; all zeros when every value is equal.
pub fn normalize_unit<S: Scalar>(v: &[S]) -> Vec<S> {
    let lo = v.iter().copied().fold(S::infinity(), S::min);
    let hi = v.iter().copied().fold(S::neg_infinity(), S::max);
    if v.is_empty() || hi <= lo {
        return vec![S::zero(); v.len()];
    }
    v.iter().map(|&x| (x - lo) / (hi - lo)).collect()
}

/// Scores every neuron of `layer` by the mean relative change of the span
/// centroid when that neuron is zeroed, over a sample set drawn once.
pub fn neuron_attribution<S: Scalar>(
    net: &Network<S>,
    nb: &Neighborhood<S>,
    layer: usize,
    span: (usize, usize),
) -> Result<AttributionReport<S>> {
    let samples = nb.samples()?;
    let scores = attribution_scores(net, &samples, layer, span)?;
    Ok(AttributionReport {
        layer,
        span,
        normalized_scores: normalize_unit(&scores),
        scores,
        neighborhood: nb.clone(),
    })
}

/// Attribution scores over an explicit sample batch.
pub fn attribution_scores<S: Scalar>(
    net: &Network<S>,
    samples: &Tensor<S>,
    layer: usize,
    (l1, l2): (usize, usize),
) -> Result<Vec<S>> {
    net.check_span(l1, l2)?;
    if layer < l1 || layer > l2 {
        return Err(Error::invalid(format!(
            "layer {layer} lies outside the span ({l1}, {l2})"
        )));
    }
    let base = centroid_batch(net, samples, l1, l2)?;
    let norms: Vec<S> = (0..base.rows()).map(|i| norm(base.row(i))).collect();
    if let Some(sample) = norms.iter().position(|&n| n <= S::c(ZERO_NORM_TOLERANCE)) {
        return Err(Error::ZeroNormBaseline { sample });
    }
    let count = S::from_usize_lossy(base.rows());
    (0..net.width_after(layer))
        .map(|neuron| {
            let ablated = net.ablate(AblationMask { layer, neuron })?;
            let mu = centroid_batch(&ablated, samples, l1, l2)?;
            let total: S = (0..mu.rows())
                .map(|i| {
                    let diff: Vec<S> = base.row(i).iter().zip(mu.row(i)).map(|(&a, &b)| a - b).collect();
                    norm(&diff) / norms[i]
                })
                .sum();
            Ok(total / count)
        })
        .collect()
}

/// Per-radius statistics of the attribution scores across resamplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    /// Radius as a fraction of the centroid norm at the center.
    pub relative_radius: f64,
    pub radius: f64,
    pub mean_scores: Vec<f64>,
    pub std_scores: Vec<f64>,
    /// Percentile of the tracked neuron in each resample.
    pub percentiles: Vec<f64>,
    pub percentile_mean: f64,
    pub percentile_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessTable {
    pub layer: usize,
    pub tracked_neuron: usize,
    pub centroid_norm: f64,
    pub rows: Vec<RobustnessRow>,
}

impl RobustnessTable {
    /// Standard deviation of the tracked percentile pooled over every
    /// radius and resample.
    pub fn pooled_percentile_std(&self) -> f64 {
        let all: Vec<f64> = self.rows.iter().flat_map(|r| r.percentiles.iter().copied()).collect();
        mean_std(&all).1
    }
}

/// Population mean and standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    /// Radii as fractions of the centroid norm at the center.
    pub relative_radii: Vec<f64>,
    pub resamples: usize,
    pub count: usize,
    pub seed: u64,
    /// Neuron whose percentile is tracked; the top neuron of the first
    /// resample at the first radius when absent.
    pub tracked_neuron: Option<usize>,
}

/// Sweeps neighborhood radii, resampling each `resamples` times.
pub fn attribution_robustness<S: Scalar>(
    net: &Network<S>,
    x: &Tensor<S>,
    layer: usize,
    span: (usize, usize),
    cfg: &RobustnessConfig,
) -> Result<RobustnessTable> {
    if cfg.relative_radii.is_empty() || cfg.relative_radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("radii must be positive and finite"));
    }
    if cfg.resamples == 0 {
        return Err(Error::invalid("at least one resample is required"));
    }
    let mu = centroid(net, x, span.0, span.1)?;
    let mu_norm = norm(&mu.centroid).to_f64_lossy();
    let mut tracked = cfg.tracked_neuron;
    let mut rows = Vec::with_capacity(cfg.relative_radii.len());
    for (ri, &rel) in cfg.relative_radii.iter().enumerate() {
        let radius = rel * mu_norm;
        let mut per_resample: Vec<Vec<f64>> = Vec::with_capacity(cfg.resamples);
        for r in 0..cfg.resamples {
            let seed = cfg
                .seed
                .wrapping_add((ri as u64) << 32)
                .wrapping_add(r as u64);
            let nb = Neighborhood::new(x.clone(), radius, cfg.count, seed);
            let rep = neuron_attribution(net, &nb, layer, span)?;
            tracked.get_or_insert_with(|| rep.argmax());
            per_resample.push(rep.scores.iter().map(|s| s.to_f64_lossy()).collect());
        }
        let t = tracked.expect("set by the first resample");
        let width = per_resample[0].len();
        let mut mean_scores = Vec::with_capacity(width);
        let mut std_scores = Vec::with_capacity(width);
        for i in 0..width {
            let col: Vec<f64> = per_resample.iter().map(|s| s[i]).collect();
            let (m, s) = mean_std(&col);
            mean_scores.push(m);
            std_scores.push(s);
        }
        let percentiles: Vec<f64> = per_resample.iter().map(|s| percentile_of(s, t)).collect();
        let (pm, ps) = mean_std(&percentiles);
        rows.push(RobustnessRow {
            relative_radius: rel,
            radius,
            mean_scores,
            std_scores,
            percentiles,
            percentile_mean: pm,
            percentile_std: ps,
        });
    }
    Ok(RobustnessTable {
        layer,
        tracked_neuron: tracked.expect("at least one resample ran"),
        centroid_norm: mu_norm,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{forward_record, full_jacobian};
    use crate::nets::Layer;

    fn affine(w: &[f64], rows: usize, cols: usize) -> Network {
        Network::new(
            vec![cols],
            vec![Layer::Affine {
                weight: Tensor::from_f64(&[rows, cols], w).unwrap(),
                bias: Tensor::zeros(&[rows]),
            }],
            0,
        )
        .unwrap()
    }

    fn mlp(seed: u64) -> Network {
        Network::builder(&[3], seed).mlp(&[8, 8], 2, false).build().unwrap()
    }

    #[test]
    fn identity_network_centroid_is_ones() {
        let net = affine(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3, 3);
        let r = centroid(&net, &Tensor::from_f64(&[3], &[4.0, -2.0, 0.5]).unwrap(), 1, 1).unwrap();
        assert_eq!(r.centroid, vec![1.0, 1.0, 1.0]);
        assert_eq!(r.span, (1, 1));
        assert_eq!(r.network_hash, net.digest());
    }

    #[test]
    fn affine_centroid_is_column_sums() {
        let net = affine(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, 3);
        for x in [[0.0, 0.0, 0.0], [9.0, -3.0, 1.0]] {
            let r = centroid(&net, &Tensor::from_f64(&[3], &x).unwrap(), 1, 1).unwrap();
            assert_eq!(r.centroid, vec![5.0, 7.0, 9.0]);
        }
    }

    #[test]
    fn matches_dense_jacobian_row_sum() {
        for seed in 0..5 {
            let net = mlp(seed);
            let x = Tensor::from_f64(&[3], &[0.3, -0.7, 0.2]).unwrap();
            let mu = centroid(&net, &x, 1, net.num_layers()).unwrap();
            let (_, tape) = forward_record(
                |t, v| {
                    let rec = net.record(t, v, 1, net.num_layers(), ParamMode::Frozen)?;
                    Ok(rec.output(v))
                },
                x.reshape(&[1, 3]).unwrap(),
            )
            .unwrap();
            let j = full_jacobian(&tape).unwrap();
            for c in 0..3 {
                let s: f64 = (0..j.shape()[0]).map(|r| j.get2(r, c)).sum();
                assert!((s - mu.centroid[c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let net = mlp(0);
        let x = Tensor::from_f64(&[3], &[f64::NAN, 0.0, 0.0]).unwrap();
        assert!(matches!(centroid(&net, &x, 1, 5), Err(Error::NonFinite(_))));
    }

    #[test]
    fn batch_equals_per_sample_bitwise() {
        let net = mlp(9);
        let xs = Tensor::from_f64(&[3, 3], &[0.1, 0.2, 0.3, -0.4, 0.5, 0.9, 0.0, -1.0, 0.25]).unwrap();
        let recs = extract_centroid_dataset(&net, &xs, 3, 5).unwrap();
        for (i, r) in recs.iter().enumerate() {
            let single = centroid(&net, &xs.unstack()[i], 3, 5).unwrap();
            assert_eq!(single.centroid, r.centroid);
            assert_eq!(r.centroid.len(), net.width_after(2));
        }
    }

    #[test]
    fn empty_and_singleton_batches() {
        let net = mlp(1);
        assert!(extract_centroid_dataset(&net, &Tensor::zeros(&[0, 3]), 1, 5).unwrap().is_empty());
        let x = Tensor::from_f64(&[3], &[0.5, 0.5, 0.5]).unwrap();
        let one = extract_centroid_dataset(&net, &x.reshape(&[1, 3]).unwrap(), 1, 5).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].centroid, centroid(&net, &x, 1, 5).unwrap().centroid);
    }

    #[test]
    fn csv_layout() {
        let net = mlp(1);
        let xs = Tensor::from_f64(&[2, 3], &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let recs = extract_centroid_dataset(&net, &xs, 1, 5).unwrap();
        let mut buf = Vec::new();
        write_centroid_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("input_id,l1,l2,v0,v1,v2"));
        assert!(lines.next().unwrap().starts_with("0,1,5,"));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn uniform_samples_stay_in_ball() {
        let nb: Neighborhood = Neighborhood::new(Tensor::from_f64(&[2], &[1.0, -1.0]).unwrap(), 0.3, 500, 4);
        let s = nb.samples().unwrap();
        for i in 0..500 {
            let r = s.row(i);
            assert!(((r[0] - 1.0).powi(2) + (r[1] + 1.0).powi(2)).sqrt() < 0.3);
        }
        assert_eq!(nb.samples().unwrap(), s);
    }

    #[test]
    fn neighborhood_validation() {
        let c: Tensor = Tensor::from_f64(&[2], &[0.0, 0.0]).unwrap();
        assert!(Neighborhood::new(c.clone(), 0.0, 4, 0).samples().is_err());
        assert!(Neighborhood::new(c.clone(), f64::INFINITY, 4, 0).samples().is_err());
        assert!(Neighborhood::new(c, 0.1, 0, 0).samples().is_err());
    }

    #[test]
    fn local_centroid_of_linear_network_is_constant() {
        let net = affine(&[1.0, -2.0, 0.5, 3.0], 2, 2);
        for sampling in [Sampling::UniformBall, Sampling::Gaussian] {
            let mut nb = Neighborhood::new(Tensor::from_f64(&[2], &[0.2, 0.1]).unwrap(), 5.0, 17, 3);
            nb.sampling = sampling;
            let lc = local_centroid(&net, &nb, 1, 1).unwrap();
            assert!((lc.data()[0] - 1.5).abs() < 1e-12 && (lc.data()[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_neighborhood_recovers_point_centroid() {
        let net = mlp(2);
        let x = Tensor::from_f64(&[3], &[0.31, -0.12, 0.44]).unwrap();
        let nb = Neighborhood::new(x.clone(), 1e-12, 1, 0);
        let lc = local_centroid(&net, &nb, 1, 5).unwrap();
        let mu = centroid(&net, &x, 1, 5).unwrap();
        assert_eq!(lc.data(), mu.centroid.as_slice());
    }

    #[test]
    fn zero_outgoing_neuron_scores_exactly_zero() {
        let mut net = mlp(3);
        let layer = net.hidden_layer(1).unwrap();
        let mut layers = net.layers().to_vec();
        if let Layer::Affine { weight, .. } = &mut layers[2] {
            for r in 0..weight.shape()[0] {
                weight.set2(r, 4, 0.0);
            }
        }
        net = Network::new(vec![3], layers, 3).unwrap();
        let nb = Neighborhood::new(Tensor::from_f64(&[3], &[0.2, 0.2, 0.2]).unwrap(), 0.1, 16, 1);
        let rep = neuron_attribution(&net, &nb, layer, (1, 5)).unwrap();
        assert_eq!(rep.scores[4], 0.0);
        assert!(rep.scores.iter().all(|&s| s >= 0.0));
        let lo = rep.normalized_scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = rep.normalized_scores.iter().copied().fold(0.0, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn zero_norm_baseline_is_an_error() {
        let net = affine(&[1.0, -1.0, -1.0, 1.0], 2, 2);
        let nb = Neighborhood::new(Tensor::from_f64(&[2], &[0.0, 0.0]).unwrap(), 0.1, 3, 0);
        assert!(matches!(
            neuron_attribution(&net, &nb, 1, (1, 1)),
            Err(Error::ZeroNormBaseline { sample: 0 })
        ));
    }

    #[test]
    fn attribution_invariant_to_sample_order() {
        let net = mlp(5);
        let nb = Neighborhood::new(Tensor::from_f64(&[3], &[0.1, 0.4, -0.3]).unwrap(), 0.2, 8, 7);
        let s = nb.samples().unwrap();
        let layer = net.hidden_layer(2).unwrap();
        let fwd = attribution_scores(&net, &s, layer, (1, 5)).unwrap();
        let rev: Vec<usize> = (0..8).rev().collect();
        let bwd = attribution_scores(&net, &s.select_rows(&rev), layer, (1, 5)).unwrap();
        for (a, b) in fwd.iter().zip(&bwd) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn normalize_constant_scores() {
        assert_eq!(normalize_unit(&[0.5, 0.5]), vec![0.0, 0.0]);
        assert_eq!(normalize_unit(&[1.0, 3.0, 2.0]), vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn single_resample_has_zero_spread() {
        let net = mlp(6);
        let x = Tensor::from_f64(&[3], &[0.3, 0.3, -0.1]).unwrap();
        let cfg = RobustnessConfig {
            relative_radii: vec![0.05, 0.1],
            resamples: 1,
            count: 8,
            seed: 0,
            tracked_neuron: None,
        };
        let t = attribution_robustness(&net, &x, 4, (1, 5), &cfg).unwrap();
        for row in &t.rows {
            assert!(row.std_scores.iter().all(|&s| s == 0.0));
            assert_eq!(row.percentile_std, 0.0);
        }
    }

    #[test]
    fn percentile_of_top() {
        assert_eq!(percentile_of(&[0.1, 0.5, 0.3], 1), 100.0);
        assert_eq!(percentile_of(&[0.1, 0.5, 0.3], 0), 0.0);
    }
}
