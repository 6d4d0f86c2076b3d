// SPDX-License-Identifier: MIT OR Apache-2.0

//! Color probes on activations and centroids of classifiers trained at
//! varying color/class correlation.

use std::path::Path;
use std::time::Instant;

use lch_core::centroid::{centroid_batch, mean_std};
use lch_core::dictionary::{probe_accuracy, split_ids};
use lch_core::nets::{train, Dataset, Loss, Optimizer, TrainConfig};
use lch_core::probes::ProbeConfig;
use lch_core::{Network, Tensor};
use serde::{Deserialize, Serialize};

use crate::colored::{ColoredDataset, CLASSES, SIDE};
use crate::error::{Error, Result};
use crate::manifest::{RunDir, RunManifest};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Output channels of the three stride-aware 3×3 convolutions.
    pub conv_channels: [usize; 3],
    pub head_hidden: usize,
    pub n_train: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            conv_channels: [8, 16, 16],
            head_hidden: 64,
            n_train: 2000,
            epochs: 10,
            learning_rate: 1e-3,
            batch_size: 32,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.contains(&0) || self.head_hidden == 0 {
            return Err(Error::config("layer widths must be positive"));
        }
        if self.n_train == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::config("n_train, batch_size and learning_rate must be positive"));
        }
        Ok(())
    }

    /// Conv feature extractor (stride 1, 2, 2) followed by a two-layer head.
    pub fn build(&self, seed: u64) -> Result<Network> {
        let [a, b, c] = self.conv_channels;
        Ok(Network::builder(&[3, SIDE, SIDE], seed)
            .conv2d(a, 3, 1, 1)
            .relu()
            .conv2d(b, 3, 2, 1)
            .relu()
            .conv2d(c, 3, 2, 1)
            .relu()
            .flatten()
            .mlp(&[self.head_hidden], CLASSES, false)
            .build()?)
    }
}

/// First layer of the classifier head (the affine after flatten).
pub const HEAD_START: usize = 8;

/// Classifier trained on one colored dataset.
pub struct TrainedClassifier {
    pub net: Network,
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
}

pub fn train_classifier(cfg: &ClassifierConfig, correlation: f64, seed: u64) -> Result<TrainedClassifier> {
    cfg.validate()?;
    let data = ColoredDataset::generate(cfg.n_train, correlation, seed)?;
    let init = cfg.build(seed)?;
    let tc = TrainConfig {
        optimizer: Optimizer::Adam,
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        loss: Loss::CrossEntropy,
        seed,
    };
    let set = Dataset::classification(data.images.clone(), data.classes.clone())?;
    let out = train(&init, &set, &tc)?;
    let train_accuracy = class_accuracy(&out.network, &data)?;
    Ok(TrainedClassifier {
        net: out.network,
        losses: out.losses,
        train_accuracy,
    })
}

pub fn class_accuracy(net: &Network, data: &ColoredDataset) -> Result<f64> {
    let logits = net.forward(&data.images)?;
    let hits = (0..logits.rows())
        .filter(|&i| argmax(logits.row(i)) == data.classes[i])
        .count();
    Ok(hits as f64 / data.len().max(1) as f64)
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

/// Head inputs and head centroids of a batch of images.
pub fn head_representations(net: &Network, images: &Tensor) -> Result<(Tensor, Tensor)> {
    let acts = net.forward_span(images, 1, HEAD_START - 1)?;
    let mu = centroid_batch(net, images, HEAD_START, net.num_layers())?;
    Ok((acts, mu))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpuriousConfig {
    pub correlations: Vec<f64>,
    pub seeds: usize,
    pub base_seed: u64,
    pub classifier: ClassifierConfig,
    /// Fresh samples used to fit and score the color probes.
    pub n_probe: usize,
    pub probe_test_fraction: f64,
    pub probe: ProbeConfig,
}

impl Default for SpuriousConfig {
    fn default() -> Self {
        Self {
            correlations: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            seeds: 5,
            base_seed: 0,
            classifier: ClassifierConfig {
                head_hidden: 128,
                ..ClassifierConfig::default()
            },
            n_probe: 1500,
            probe_test_fraction: 0.3,
            probe: ProbeConfig::default(),
        }
    }
}

/// One (correlation, seed) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpuriousCell {
    pub correlation: f64,
    pub seed: u64,
    pub class_accuracy: f64,
    pub activation_probe: f64,
    pub centroid_probe: f64,
}

/// Mean and population std over seeds for one correlation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpuriousSummary {
    pub correlation: f64,
    pub activation_mean: f64,
    pub activation_std: f64,
    pub centroid_mean: f64,
    pub centroid_std: f64,
    pub class_accuracy_mean: f64,
}

pub fn run_cell(cfg: &SpuriousConfig, correlation: f64, seed: u64) -> Result<SpuriousCell> {
    let trained = train_classifier(&cfg.classifier, correlation, seed)?;
    let probe_set = ColoredDataset::generate(cfg.n_probe, correlation, seed.wrapping_add(1_000_003))?;
    let class_accuracy = class_accuracy(&trained.net, &probe_set)?;
    let (acts, mu) = head_representations(&trained.net, &probe_set.images)?;
    let (tr, te) = split_ids(probe_set.len(), cfg.probe_test_fraction, seed)?;
    let pc = ProbeConfig { seed, ..cfg.probe.clone() };
    Ok(SpuriousCell {
        correlation,
        seed,
        class_accuracy,
        activation_probe: probe_accuracy(&acts, &probe_set.colors, &tr, &te, &pc)?,
        centroid_probe: probe_accuracy(&mu, &probe_set.colors, &tr, &te, &pc)?,
    })
}

pub fn summarize(cells: &[SpuriousCell], correlations: &[f64]) -> Vec<SpuriousSummary> {
    correlations
        .iter()
        .map(|&rho| {
            let pick = |f: fn(&SpuriousCell) -> f64| -> Vec<f64> {
                cells.iter().filter(|c| c.correlation == rho).map(f).collect()
            };
            let (am, asd) = mean_std(&pick(|c| c.activation_probe));
            let (cm, csd) = mean_std(&pick(|c| c.centroid_probe));
            SpuriousSummary {
                correlation: rho,
                activation_mean: am,
                activation_std: asd,
                centroid_mean: cm,
                centroid_std: csd,
                class_accuracy_mean: mean_std(&pick(|c| c.class_accuracy)).0,
            }
        })
        .collect()
}

/// Number of decreases along `v` and the largest one.
pub fn inversions(v: &[f64]) -> (usize, f64) {
    v.windows(2)
        .filter(|w| w[1] < w[0])
        .fold((0, 0.0), |(n, m), w| (n + 1, f64::max(m, w[0] - w[1])))
}

pub fn run_spurious(cfg: &SpuriousConfig, out: &Path) -> Result<RunManifest> {
    if cfg.seeds == 0 || cfg.correlations.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::config("need at least one seed and correlations in [0, 1]"));
    }
    cfg.classifier.validate()?;
    let mut run = RunDir::create(out, "spurious", serde_json::to_value(cfg)?)?;
    let t0 = Instant::now();
    let mut cells = Vec::new();
    for &rho in &cfg.correlations {
        for s in 0..cfg.seeds as u64 {
            let seed = cfg.base_seed.wrapping_add(s);
            run.seed(&format!("cell_{rho}_{s}"), seed);
            cells.push(run_cell(cfg, rho, seed)?);
        }
    }
    run.metric("seconds", t0.elapsed().as_secs_f64());
    run.write_csv(
        "cells.csv",
        &["correlation", "seed", "class_accuracy", "activation_probe", "centroid_probe"],
        cells.iter().map(|c| {
            vec![
                c.correlation.to_string(),
                c.seed.to_string(),
                c.class_accuracy.to_string(),
                c.activation_probe.to_string(),
                c.centroid_probe.to_string(),
            ]
        }),
    )?;
    let summary = summarize(&cells, &cfg.correlations);
    run.write_csv(
        "spurious_feature_hypothesis.csv",
        &["correlation", "lrh_mean", "lrh_std", "lch_mean", "lch_std", "class_accuracy"],
        summary.iter().map(|s| {
            vec![
                s.correlation.to_string(),
                s.activation_mean.to_string(),
                s.activation_std.to_string(),
                s.centroid_mean.to_string(),
                s.centroid_std.to_string(),
                s.class_accuracy_mean.to_string(),
            ]
        }),
    )?;
    let curve: Vec<f64> = summary.iter().map(|s| s.centroid_mean).collect();
    let (n_inv, max_inv) = inversions(&curve);
    run.metric("centroid_curve_inversions", n_inv);
    run.metric("centroid_curve_max_inversion", max_inv);
    run.metric("summary", &summary);
    run.finish()
}
