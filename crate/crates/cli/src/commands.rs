// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use lch_core::centroid::{extract_centroid_dataset, write_centroid_csv, Neighborhood};
use lch_core::dictionary::{encode_dense, firing_frequency, sae_train, SaeConfig, Source};
use lch_core::geometry::{enumerate_regions, Partition, Rect};
use lch_core::nets::{self, Dataset, Loss, Optimizer, TrainConfig};
use lch_core::probes::{fit_logistic_probe, fit_mass_mean_probe, ProbeConfig, ProbeKind};
use lch_core::render::{heatmap_svg, normalize_channels, partition_svg, pgm_bytes};
use lch_core::{local_centroid, neuron_attribution, Network, Tensor};
use lch_experiments::polygon::Shape;
use lch_experiments::star::{train_polygon, StarConfig};
use lch_experiments::{Error, Result, RunDir, RunManifest};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

fn parse<T: DeserializeOwned>(config: Value) -> Result<T> {
    serde_json::from_value(config).map_err(|e| Error::config(format!("bad config: {e}")))
}

fn load_network(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read network {}: {e}", path.display())))?;
    Network::from_json(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

/// Numeric CSV with a header row.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let row = rec?
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::config(format!("{} row {}: {e}", path.display(), i + 1)))?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::config(format!("{} has no rows", path.display())));
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("no column {name:?}")))
    }

    /// Features (every column but `label`) and integer labels.
    fn split_labels(&self, label: &str) -> Result<(Tensor, Vec<usize>)> {
        let j = self.column(label)?;
        let mut labels = Vec::with_capacity(self.rows.len());
        let mut feats = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let y = row[j];
            if y < 0.0 || y.fract() != 0.0 {
                return Err(Error::config(format!("label {y} is not a class index")));
            }
            labels.push(y as usize);
            feats.push(row.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect());
        }
        Ok((Tensor::from_rows(&feats)?, labels))
    }

    fn tensor(&self) -> Result<Tensor> {
        Ok(Tensor::from_rows(&self.rows)?)
    }
}

fn reshape_batch(x: Tensor, input_shape: &[usize]) -> Result<Tensor> {
    let mut shape = vec![x.rows()];
    shape.extend_from_slice(input_shape);
    x.reshape(&shape)
        .map_err(|_| Error::config(format!("inputs do not match the network input shape {input_shape:?}")))
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCmd {
    pub seed: u64,
    /// CSV with feature columns and an integer label column; when absent
    /// the polygon task of `shape` is used.
    pub data: Option<PathBuf>,
    pub label_column: String,
    pub shape: Shape,
    pub n_train: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainCmd {
    fn default() -> Self {
        let s = StarConfig::default();
        Self {
            seed: s.seed,
            data: None,
            label_column: "label".into(),
            shape: s.shape,
            n_train: s.n_train,
            hidden: s.hidden,
            epochs: s.epochs,
            learning_rate: s.learning_rate,
            batch_size: s.batch_size,
        }
    }
}

pub fn train(config: Value, out: &Path) -> Result<RunManifest> {
    let cfg: TrainCmd = parse(config)?;
    let mut run = RunDir::create(out, "train", serde_json::to_value(&cfg)?)?;
    run.seed("seed", cfg.seed);
    let (net, losses, accuracy) = match &cfg.data {
        None => {
            let t = train_polygon(&StarConfig {
                shape: cfg.shape,
                seed: cfg.seed,
                hidden: cfg.hidden.clone(),
                n_train: cfg.n_train,
                epochs: cfg.epochs,
                learning_rate: cfg.learning_rate,
                batch_size: cfg.batch_size,
                checkpoints: vec![],
                levelset_layers: vec![],
                heatmap_layers: vec![],
                ..StarConfig::default()
            })?;
            (t.net, t.losses, t.train_accuracy)
        }
        Some(path) => {
            let (x, y) = Table::read(path)?.split_labels(&cfg.label_column)?;
            if cfg.hidden.contains(&0) {
                return Err(Error::config("hidden widths must be positive"));
            }
            let classes = y.iter().max().map_or(1, |m| m + 1).max(2);
            let net: Network = Network::builder(&[x.row_len()], cfg.seed)
                .mlp(&cfg.hidden, classes, false)
                .build()?;
            let tc = TrainConfig {
                optimizer: Optimizer::Adam,
                learning_rate: cfg.learning_rate,
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                loss: Loss::CrossEntropy,
                seed: cfg.seed,
            };
            let data = Dataset::classification(x.clone(), y.clone())?;
            let outcome = nets::train(&net, &data, &tc)?;
            let logits = outcome.network.forward(&x)?;
            let hits = (0..logits.rows()).filter(|&i| argmax(logits.row(i)) == y[i]).count();
            (outcome.network, outcome.losses, hits as f64 / y.len() as f64)
        }
    };
    run.metric("train_accuracy", accuracy);
    run.write_text("network.json", &net.to_json())?;
    run.write_csv(
        "losses.csv",
        &["epoch", "loss"],
        losses.iter().enumerate().map(|(e, l)| [(e + 1).to_string(), l.to_string()]),
    )?;
    run.finish()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentroidsCmd {
    #[serde(default)]
    pub seed: u64,
    pub network: PathBuf,
    /// One flattened input per row.
    pub inputs: PathBuf,
    /// Span; defaults to the whole network.
    pub l1: Option<usize>,
    pub l2: Option<usize>,
}

pub fn centroids(config: Value, out: &Path) -> Result<RunManifest> {
    let cfg: CentroidsCmd = parse(config)?;
    let net = load_network(&cfg.network)?;
    let (l1, l2) = (cfg.l1.unwrap_or(1), cfg.l2.unwrap_or(net.num_layers()));
    let x = reshape_batch(Table::read(&cfg.inputs)?.tensor()?, net.input_shape())?;
    let mut run = RunDir::create(out, "centroids", serde_json::to_value(&cfg)?)?;
    run.metric("network_digest", net.digest());
    let records = extract_centroid_dataset(&net, &x, l1, l2)?;
    let mut buf = Vec::new();
    write_centroid_csv(&records, &mut buf)?;
    run.write_bytes("centroids.csv", &buf)?;
    run.metric("count", records.len());
    run.finish()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaliencyCmd {
    #[serde(default)]
    pub seed: u64,
    pub network: PathBuf,
    /// Flattened input in the network's input layout.
    pub input: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub l1: Option<usize>,
    pub l2: Option<usize>,
}

fn default_radius() -> f64 {
    0.05
}

fn default_samples() -> usize {
    32
}

pub fn saliency(config: Value, out: &Path) -> Result<RunManifest> {
    let cfg: SaliencyCmd = parse(config)?;
    let net = load_network(&cfg.network)?;
    let (l1, l2) = (cfg.l1.unwrap_or(1), cfg.l2.unwrap_or(net.num_layers()));
    if l1 != 1 {
        return Err(Error::config("saliency is taken with respect to the input (l1 = 1)"));
    }
    let x = Tensor::vector(cfg.input.clone())
        .reshape(net.input_shape())
        .map_err(|_| Error::config(format!("input does not match shape {:?}", net.input_shape())))?;
    let mut run = RunDir::create(out, "saliency", serde_json::to_value(&cfg)?)?;
    run.seed("seed", cfg.seed);
    let nb = Neighborhood::new(x, cfg.radius, cfg.samples, cfg.seed);
    let mu = local_centroid(&net, &nb, l1, l2)?;
    run.write_csv(
        "saliency.csv",
        &["index", "value"],
        mu.data().iter().enumerate().map(|(i, v)| [i.to_string(), v.to_string()]),
    )?;
    match *net.input_shape() {
        // images: one grayscale map per channel, each min-max scaled
        [c, h, w] => {
            let maps = normalize_channels(&mu.reshape(&[c, h, w])?)?;
            for ch in 0..c {
                let plane = Tensor::new(vec![h, w], maps.data()[ch * h * w..(ch + 1) * h * w].to_vec())?;
                run.write_bytes(&format!("saliency_ch{ch}.pgm"), &pgm_bytes(&plane)?)?;
                run.write_text(&format!("saliency_ch{ch}.svg"), &heatmap_svg(&plane, 16.0)?)?;
            }
        }
        _ => {
            let map = match *net.input_shape() {
                [h, w] => mu.reshape(&[h, w])?,
                _ => mu.reshape(&[1, mu.len()])?,
            };
            run.write_bytes("saliency.pgm", &pgm_bytes(&map)?)?;
            run.write_text("saliency.svg", &heatmap_svg(&map, 16.0)?)?;
        }
    }
    run.finish()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsCmd {
    #[serde(default)]
    pub seed: u64,
    pub network: PathBuf,
    #[serde(default)]
    pub domain: Rect,
}

pub fn regions(config: Value, out: &Path) -> Result<RunManifest> {
    let cfg: RegionsCmd = parse(config)?;
    let net = load_network(&cfg.network)?;
    let mut run = RunDir::create(out, "regions", serde_json::to_value(&cfg)?)?;
    let part: Partition = enumerate_regions(&net, cfg.domain)?;
    run.metric("regions", part.regions.len());
    run.write_json("partition.json", &part.to_json())?;
    run.write_text("partition.svg", &partition_svg(&part, 512.0, None))?;
    let width = part.regions.first().map_or(0, |r| r.centroid.len());
    let mut header = vec!["region".to_string(), "pattern".into(), "area".into(), "frobenius".into()];
    header.extend((0..width).map(|i| format!("mu{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.write_csv(
        "regions.csv",
        &header,
        part.regions.iter().enumerate().map(|(i, r)| {
            let mut row = vec![i.to_string(), r.pattern_string(), r.polygon.area().to_string(), r.frobenius.to_string()];
            row.extend(r.centroid.iter().map(f64::to_string));
            row
        }),
    )?;
    run.finish()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaeCmd {
    #[serde(default)]
    pub seed: u64,
    /// One vector per row.
    pub data: PathBuf,
    pub k: usize,
    /// Dictionary size; defaults to 4 times the input dimension.
    pub m: Option<usize>,
    #[serde(default = "default_source")]
    pub source: Source,
    #[serde(default)]
    pub sae: SaeConfig,
}

fn default_source() -> Source {
    Source::Centroids
}

pub fn sae(config: Value, out: &Path) -> Result<RunManifest> {
    let mut cfg: SaeCmd = parse(config)?;
    cfg.sae.seed = cfg.seed;
    let x = Table::read(&cfg.data)?.tensor()?;
    let m = cfg.m.unwrap_or(4 * x.row_len());
    let mut run = RunDir::create(out, "sae", serde_json::to_value(&cfg)?)?;
    run.seed("seed", cfg.seed);
    let dict = sae_train(&x, m, cfg.k, cfg.source, &cfg.sae)?;
    run.write_text("dictionary.json", &dict.to_json()?)?;
    run.write_csv(
        "error_trace.csv",
        &["epoch", "mse"],
        dict.error_trace.iter().enumerate().map(|(e, v)| [e.to_string(), v.to_string()]),
    )?;
    let firing = firing_frequency(&dict, &x)?;
    let mut buf = Vec::new();
    firing.write_csv(&mut buf)?;
    run.write_bytes("firing.csv", &buf)?;
    let codes = encode_dense(&dict, &x)?;
    run.metric("m", m);
    run.metric("reconstruction_mse", dict.error_trace.last().copied());
    run.metric("dead_fraction", firing.dead_fraction());
    run.metric("codes", codes.rows());
    run.finish()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeCmd {
    #[serde(default)]
    pub seed: u64,
    pub data: PathBuf,
    #[serde(default = "default_label")]
    pub label_column: String,
    #[serde(default = "default_kind")]
    pub kind: ProbeKind,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub probe: ProbeConfig,
}

fn default_label() -> String {
    "label".into()
}

fn default_kind() -> ProbeKind {
    ProbeKind::Logistic
}

fn default_test_fraction() -> f64 {
    0.3
}

pub fn probe(config: Value, out: &Path) -> Result<RunManifest> {
    let mut cfg: ProbeCmd = parse(config)?;
    cfg.probe.seed = cfg.seed;
    let (x, y) = Table::read(&cfg.data)?.split_labels(&cfg.label_column)?;
    let (train_ids, test_ids) = lch_core::dictionary::split_ids(y.len(), cfg.test_fraction, cfg.seed)?;
    let pick = |ids: &[usize]| (x.select_rows(ids), ids.iter().map(|&i| y[i]).collect::<Vec<_>>());
    let (xtr, ytr) = pick(&train_ids);
    let (xte, yte) = pick(&test_ids);
    let mut run = RunDir::create(out, "probe", serde_json::to_value(&cfg)?)?;
    run.seed("seed", cfg.seed);
    let probe = match cfg.kind {
        ProbeKind::Logistic => fit_logistic_probe(&xtr, &ytr, &cfg.probe)?,
        ProbeKind::MassMean => {
            if ytr.iter().any(|&c| c > 1) {
                return Err(Error::config("mass-mean probes need 0/1 labels"));
            }
            let rows = |c: usize| -> Vec<usize> { (0..ytr.len()).filter(|&i| ytr[i] == c).collect() };
            fit_mass_mean_probe(&xtr.select_rows(&rows(1)), &xtr.select_rows(&rows(0)))?
        }
    };
    run.metric("train_accuracy", probe.accuracy(&xtr, &ytr)?);
    run.metric("test_accuracy", probe.accuracy(&xte, &yte)?);
    run.write_text("probe.json", &probe.to_json()?)?;
    let pred = probe.predict(&xte)?;
    run.write_csv(
        "predictions.csv",
        &["row", "label", "predicted"],
        test_ids
            .iter()
            .zip(&yte)
            .zip(&pred)
            .map(|((i, y), p)| [i.to_string(), y.to_string(), p.to_string()]),
    )?;
    run.finish()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeCmd {
    #[serde(default)]
    pub seed: u64,
    pub network: PathBuf,
    pub center: Vec<f64>,
    /// Hidden layer, counted from 1.
    pub hidden_layer: usize,
    /// Neighbourhood radius; defaults to a quarter of the centroid norm.
    pub radius: Option<f64>,
    #[serde(default = "default_attr_samples")]
    pub samples: usize,
}

fn default_attr_samples() -> usize {
    256
}

pub fn attribute(config: Value, out: &Path) -> Result<RunManifest> {
    let cfg: AttributeCmd = parse(config)?;
    let net = load_network(&cfg.network)?;
    let layer = net
        .hidden_layer(cfg.hidden_layer)
        .ok_or_else(|| Error::config(format!("network has no hidden layer {}", cfg.hidden_layer)))?;
    let x = Tensor::vector(cfg.center.clone())
        .reshape(net.input_shape())
        .map_err(|_| Error::config(format!("center does not match shape {:?}", net.input_shape())))?;
    let span = (1, net.num_layers());
    let radius = match cfg.radius {
        Some(r) => r,
        None => {
            let mu = lch_core::centroid(&net, &x, span.0, span.1)?.centroid;
            0.25 * mu.iter().map(|v| v * v).sum::<f64>().sqrt()
        }
    };
    let mut run = RunDir::create(out, "attribute", serde_json::to_value(&cfg)?)?;
    run.seed("seed", cfg.seed);
    run.metric("radius", radius);
    let nb = Neighborhood::new(x, radius, cfg.samples, cfg.seed);
    let report = neuron_attribution(&net, &nb, layer, span)?;
    run.metric("argmax", report.argmax());
    run.write_csv(
        "scores.csv",
        &["neuron", "score", "normalized", "percentile"],
        report.scores.iter().zip(&report.normalized_scores).enumerate().map(|(i, (s, n))| {
            [i.to_string(), s.to_string(), n.to_string(), report.percentile(i).to_string()]
        }),
    )?;
    run.finish()
}
