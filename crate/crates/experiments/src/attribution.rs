// SPDX-License-Identifier: MIT OR Apache-2.0

//! Neuron attribution on a network with one planted dominant neuron and
//! one disconnected neuron, plus the radius/resample robustness sweep.

use std::path::Path;

use lch_core::centroid::{attribution_robustness, centroid, percentile_of, RobustnessConfig};
use lch_core::{neuron_attribution, Layer, Neighborhood, Network, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{RunDir, RunManifest};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionConfig {
    pub seed: u64,
    pub input_dim: usize,
    pub hidden: [usize; 2],
    pub outputs: usize,
    /// Hidden neuron (first hidden layer) wired to dominate the output.
    pub designated: usize,
    /// Hidden neuron (first hidden layer) with zero outgoing weights.
    pub disconnected: usize,
    pub samples: usize,
    /// Neighborhood radius as a fraction of the centroid norm at the center.
    pub relative_radius: f64,
    pub sweep_radii: Vec<f64>,
    pub resamples: usize,
    /// Percentile a neuron must reach to be kept in the circuit.
    pub circuit_percentile: f64,
    pub histogram_bins: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            input_dim: 8,
            hidden: [64, 32],
            outputs: 4,
            designated: 0,
            disconnected: 1,
            samples: 256,
            relative_radius: 0.25,
            sweep_radii: vec![0.025, 0.05, 0.1, 0.25],
            resamples: 10,
            circuit_percentile: 95.0,
            histogram_bins: 20,
        }
    }
}

impl AttributionConfig {
    pub fn validate(&self) -> Result<()> {
        let [h1, h2] = self.hidden;
        if self.input_dim == 0 || h1 < 2 || h2 == 0 || self.outputs == 0 {
            return Err(Error::config("layer widths must be positive, first hidden width at least 2"));
        }
        if self.designated >= h1 || self.disconnected >= h1 || self.designated == self.disconnected {
            return Err(Error::config("designated and disconnected must be distinct first-layer neurons"));
        }
        if self.samples == 0 || self.resamples == 0 || self.histogram_bins == 0 {
            return Err(Error::config("samples, resamples and histogram_bins must be positive"));
        }
        if !(self.relative_radius > 0.0) || self.sweep_radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::config("radii must be positive"));
        }
        Ok(())
    }
}

/// Layer index of the first hidden ReLU, where neurons are attributed.
pub const ATTRIBUTED_LAYER: usize = 2;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<f64> {
    (0..rows * cols)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

/// `affine → relu → affine → relu → affine`. The designated neuron has a
/// large bias (always active near the origin), a strong input direction and
/// positive outgoing weights; the readout has positive weights so its
/// contribution to the summed Jacobian cannot cancel. Every other
/// first-layer neuron gets small random weights; the disconnected neuron's
/// outgoing column is zero.
pub fn planted_network(cfg: &AttributionConfig) -> Result<Network> {
    cfg.validate()?;
    let (d, [h1, h2], o) = (cfg.input_dim, cfg.hidden, cfg.outputs);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w1 = gaussian(&mut rng, h1, d, 0.3 / (d as f64).sqrt());
    let mut b1: Vec<f64> = (0..h1).map(|_| rng.random_range(-0.1..0.1)).collect();
    let dir = gaussian(&mut rng, 1, d, 1.0);
    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (j, v) in dir.iter().enumerate() {
        w1[cfg.designated * d + j] = 2.0 * v / n;
    }
    b1[cfg.designated] = 10.0;
    let mut w2 = gaussian(&mut rng, h2, h1, 0.1);
    for r in 0..h2 {
        w2[r * h1 + cfg.designated] = 0.8;
        w2[r * h1 + cfg.disconnected] = 0.0;
    }
    let b2 = vec![0.5; h2];
    let w3: Vec<f64> = gaussian(&mut rng, o, h2, 0.3).into_iter().map(f64::abs).collect();
    let b3 = vec![0.0; o];
    let layers = vec![
        Layer::Affine {
            weight: Tensor::new(vec![h1, d], w1)?,
            bias: Tensor::vector(b1),
        },
        Layer::Relu,
        Layer::Affine {
            weight: Tensor::new(vec![h2, h1], w2)?,
            bias: Tensor::vector(b2),
        },
        Layer::Relu,
        Layer::Affine {
            weight: Tensor::new(vec![o, h2], w3)?,
            bias: Tensor::vector(b3),
        },
    ];
    Ok(Network::new(vec![d], layers, cfg.seed)?)
}

/// Neurons whose percentile within the layer reaches `threshold`.
pub fn circuit_filter(scores: &[f64], threshold: f64) -> Vec<usize> {
    (0..scores.len())
        .filter(|&i| percentile_of(scores, i) >= threshold)
        .collect()
}

pub fn run_attribution_demo(cfg: &AttributionConfig, out: &Path) -> Result<RunManifest> {
    let net = planted_network(cfg)?;
    let mut run = RunDir::create(out, "attribution", serde_json::to_value(cfg)?)?;
    run.seed("network", cfg.seed);
    run.write_text("network.json", &net.to_json())?;
    let span = (1, net.num_layers());
    let x = Tensor::vector(vec![0.0; cfg.input_dim]);
    let mu = centroid(&net, &x, span.0, span.1)?;
    let mu_norm = lch_core::tensor::norm(&mu.centroid);
    let nb = Neighborhood::new(x.clone(), cfg.relative_radius * mu_norm, cfg.samples, cfg.seed);
    run.seed("neighborhood", cfg.seed);
    let report = neuron_attribution(&net, &nb, ATTRIBUTED_LAYER, span)?;
    let scores = report.scores.clone();
    run.write_csv(
        "scores.csv",
        &["neuron", "score", "normalized", "percentile"],
        (0..scores.len()).map(|i| {
            vec![
                i.to_string(),
                scores[i].to_string(),
                report.normalized_scores[i].to_string(),
                report.percentile(i).to_string(),
            ]
        }),
    )?;
    let mut hist = vec![0usize; cfg.histogram_bins];
    for &v in &report.normalized_scores {
        let b = ((v * cfg.histogram_bins as f64) as usize).min(cfg.histogram_bins - 1);
        hist[b] += 1;
    }
    let width = 1.0 / cfg.histogram_bins as f64;
    run.write_csv(
        "histogram.csv",
        &["bin_lo", "bin_hi", "count"],
        hist.iter()
            .enumerate()
            .map(|(b, c)| vec![(b as f64 * width).to_string(), ((b + 1) as f64 * width).to_string(), c.to_string()]),
    )?;
    let circuit = circuit_filter(&scores, cfg.circuit_percentile);
    run.write_csv(
        "circuit.csv",
        &["neuron", "score", "percentile"],
        circuit
            .iter()
            .map(|&i| vec![i.to_string(), scores[i].to_string(), report.percentile(i).to_string()]),
    )?;

    let table = attribution_robustness(
        &net,
        &x,
        ATTRIBUTED_LAYER,
        span,
        &RobustnessConfig {
            relative_radii: cfg.sweep_radii.clone(),
            resamples: cfg.resamples,
            count: cfg.samples,
            seed: cfg.seed.wrapping_add(1),
            tracked_neuron: Some(cfg.designated),
        },
    )?;
    run.seed("sweep", cfg.seed.wrapping_add(1));
    run.write_csv(
        "robustness.csv",
        &["relative_radius", "radius", "percentile_mean", "percentile_std", "designated_mean_score", "designated_std_score"],
        table.rows.iter().map(|r| {
            vec![
                r.relative_radius.to_string(),
                r.radius.to_string(),
                r.percentile_mean.to_string(),
                r.percentile_std.to_string(),
                r.mean_scores[cfg.designated].to_string(),
                r.std_scores[cfg.designated].to_string(),
            ]
        }),
    )?;
    run.write_csv(
        "robustness_scores.csv",
        &["relative_radius", "neuron", "mean_score", "std_score"],
        table.rows.iter().flat_map(|r| {
            (0..r.mean_scores.len()).map(move |i| {
                vec![
                    r.relative_radius.to_string(),
                    i.to_string(),
                    r.mean_scores[i].to_string(),
                    r.std_scores[i].to_string(),
                ]
            })
        }),
    )?;

    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let max = sorted[sorted.len() - 1];
    run.metric("centroid_norm", mu_norm);
    run.metric("designated_percentile", report.percentile(cfg.designated));
    run.metric("designated_is_top", report.argmax() == cfg.designated);
    run.metric("disconnected_score", scores[cfg.disconnected]);
    run.metric("median_over_max", median / max);
    run.metric("pooled_percentile_std", table.pooled_percentile_std());
    run.metric("circuit_size", circuit.len());
    run.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circuit_keeps_top_neurons() {
        let s = [0.1, 0.9, 0.2, 0.05, 0.3];
        assert_eq!(circuit_filter(&s, 75.0), vec![1, 4]);
        assert_eq!(circuit_filter(&s, 100.0), vec![1]);
    }

    #[test]
    fn planted_network_has_expected_wiring() {
        let cfg = AttributionConfig::default();
        let net = planted_network(&cfg).unwrap();
        let Some(Layer::Affine { weight, .. }) = net.layer(3) else {
            panic!("layer 3 is affine");
        };
        assert!((0..cfg.hidden[1]).all(|r| weight.get2(r, cfg.disconnected) == 0.0));
        assert!(planted_network(&AttributionConfig { designated: 1, ..cfg }).is_err());
    }
}
