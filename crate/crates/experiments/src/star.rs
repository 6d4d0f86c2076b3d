// SPDX-License-Identifier: MIT OR Apache-2.0

//! Polygon-interior networks: training, centroids, partitions, level sets,
//! attribution heatmaps, training snapshots and the GELU variant.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use lch_core::centroid::{attribution_scores, centroid_batch, Neighborhood};
use lch_core::dictionary::split_ids;
use lch_core::geometry::{enumerate_regions, BoundarySegment, Partition, Rect};
use lch_core::nets::{train_with, Loss, Optimizer, TrainConfig};
use lch_core::probes::{anisotropy_ratio, fit_logistic_probe, pca_fit, pca_project, ProbeConfig};
use lch_core::render::{heatmap_svg, levelset_svg, partition_svg};
use lch_core::{Error as CoreError, Layer, Network, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{RunDir, RunManifest};
use crate::polygon::{points_tensor, PolygonTask, Shape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StarConfig {
    pub shape: Shape,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub n_train: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Edge samples per side used for centroid analysis.
    pub per_side: usize,
    /// Maximum normal offset of edge samples from their side.
    pub edge_jitter: f64,
    /// Fractions of training at which centroid snapshots are taken.
    pub checkpoints: Vec<f64>,
    /// Hidden layers (1-based) whose level sets are drawn.
    pub levelset_layers: Vec<usize>,
    /// Distance band around the polygon boundary for level-set concentration.
    pub boundary_band: f64,
    /// Hidden layers whose attribution heatmap is computed.
    pub heatmap_layers: Vec<usize>,
    pub heatmap_grid: usize,
    pub heatmap_samples: usize,
    pub heatmap_radius: f64,
    pub probe: ProbeConfig,
    /// Skip region enumeration and level sets.
    pub skip_geometry: bool,
}

impl Default for StarConfig {
    fn default() -> Self {
        Self {
            shape: Shape::Star,
            seed: 0,
            hidden: vec![64, 64, 64],
            n_train: 4000,
            epochs: 150,
            learning_rate: 2e-3,
            batch_size: 64,
            per_side: 40,
            edge_jitter: 0.0,
            checkpoints: vec![0.0, 0.05, 0.1, 0.3, 1.0],
            levelset_layers: vec![1, 2, 3],
            boundary_band: 0.1,
            heatmap_layers: vec![2, 3],
            heatmap_grid: 24,
            heatmap_samples: 8,
            heatmap_radius: 0.05,
            probe: ProbeConfig::default(),
            skip_geometry: false,
        }
    }
}

impl StarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("hidden widths must be nonempty and positive"));
        }
        if self.n_train == 0 || self.batch_size == 0 || self.per_side < 2 {
            return Err(Error::config("n_train and batch_size must be positive, per_side at least 2"));
        }
        if !(self.learning_rate > 0.0) || !(self.boundary_band > 0.0) || !(self.heatmap_radius > 0.0) {
            return Err(Error::config("learning_rate, boundary_band and heatmap_radius must be positive"));
        }
        if self.checkpoints.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::config("checkpoints must lie in [0, 1]"));
        }
        let depth = self.hidden.len();
        if self.levelset_layers.iter().chain(&self.heatmap_layers).any(|&k| k == 0 || k > depth) {
            return Err(Error::config(format!("hidden layer indices must lie in 1..={depth}")));
        }
        Ok(())
    }

    fn checkpoint_epochs(&self) -> Vec<usize> {
        let mut e: Vec<usize> = self
            .checkpoints
            .iter()
            .map(|&f| (f * self.epochs as f64).round() as usize)
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}

/// Trained polygon network with the task it solves.
pub struct TrainedPolygon {
    pub task: PolygonTask,
    pub net: Network,
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
    pub snapshots: BTreeMap<usize, Network>,
}

pub fn train_polygon(cfg: &StarConfig) -> Result<TrainedPolygon> {
    cfg.validate()?;
    let task = PolygonTask::new(cfg.shape, cfg.n_train, cfg.seed);
    let data = task.training_set()?;
    let init: Network = Network::builder(&[2], cfg.seed).mlp(&cfg.hidden, 1, false).build()?;
    let tc = TrainConfig {
        optimizer: Optimizer::Adam,
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        loss: Loss::Bce,
        seed: cfg.seed,
    };
    let wanted = cfg.checkpoint_epochs();
    let mut snapshots = BTreeMap::new();
    let out = train_with(&init, &data, &tc, |e, net| {
        if wanted.contains(&e) {
            snapshots.insert(e, net.clone());
        }
    })?;
    let train_accuracy = binary_accuracy(&out.network, &data.inputs, &task.sample(cfg.n_train, cfg.seed).1)?;
    Ok(TrainedPolygon {
        task,
        net: out.network,
        losses: out.losses,
        train_accuracy,
        snapshots,
    })
}

/// Fraction of points whose logit sign matches the label.
pub fn binary_accuracy(net: &Network, x: &Tensor, labels: &[usize]) -> Result<f64> {
    let logits = net.forward(x)?;
    let hits = logits
        .data()
        .iter()
        .zip(labels)
        .filter(|(&z, &l)| (z > 0.0) == (l == 1))
        .count();
    Ok(hits as f64 / labels.len().max(1) as f64)
}

/// Per-side anisotropy of a centroid set grouped by `side`.
pub fn per_side_anisotropy(mu: &Tensor, side: &[usize], sides: usize) -> Result<Vec<f64>> {
    (0..sides)
        .map(|s| {
            let ids: Vec<usize> = (0..side.len()).filter(|&i| side[i] == s).collect();
            Ok(anisotropy_ratio(&mu.select_rows(&ids))?)
        })
        .collect()
}

/// Held-out accuracy of a logistic probe predicting the side from centroids.
pub fn edge_probe_accuracy(mu: &Tensor, side: &[usize], cfg: &ProbeConfig, seed: u64) -> Result<f64> {
    let (train, test) = split_ids(side.len(), 0.3, seed)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| side[i]).collect::<Vec<_>>();
    let probe = fit_logistic_probe(&mu.select_rows(&train), &pick(&train), cfg)?;
    Ok(probe.accuracy(&mu.select_rows(&test), &pick(&test))?)
}

/// Share of the segments' total length lying within `band` of the task's
/// boundary, measured by sampling each segment at 32 evenly spaced midpoints.
pub fn boundary_concentration(segments: &[BoundarySegment], task: &PolygonTask, band: f64) -> f64 {
    const STEPS: usize = 32;
    let (mut near, mut total) = (0.0, 0.0);
    for s in segments {
        let len = s.segment.length();
        for k in 0..STEPS {
            let p = s.segment.point_at((k as f64 + 0.5) / STEPS as f64);
            total += len / STEPS as f64;
            if task.boundary_distance(p) <= band {
                near += len / STEPS as f64;
            }
        }
    }
    if total > 0.0 {
        near / total
    } else {
        0.0
    }
}

/// Mean over neurons of the attribution score at each grid point. Grid
/// points whose baseline centroid vanishes are set to 0 and counted.
pub fn attribution_heatmap(
    net: &Network,
    layer: usize,
    grid: usize,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<(Tensor, usize)> {
    let span = (1, net.num_layers());
    let mut vals = Vec::with_capacity(grid * grid);
    let mut zero = 0;
    for i in 0..grid {
        // row 0 at the top of the domain
        let y = 1.0 - (i as f64 + 0.5) * 2.0 / grid as f64;
        for j in 0..grid {
            let x = -1.0 + (j as f64 + 0.5) * 2.0 / grid as f64;
            let nb = Neighborhood::new(Tensor::vector(vec![x, y]), radius, samples, seed ^ (i * grid + j) as u64);
            match attribution_scores(net, &nb.samples()?, layer, span) {
                Ok(s) => vals.push(s.iter().sum::<f64>() / s.len() as f64),
                Err(CoreError::ZeroNormBaseline { .. }) => {
                    zero += 1;
                    vals.push(0.0);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok((Tensor::new(vec![grid, grid], vals)?, zero))
}

/// Mean heatmap score of grid cells within `near` of the boundary divided
/// by the mean over cells farther than `far`.
pub fn heatmap_boundary_ratio(grid: &Tensor, task: &PolygonTask, near: f64, far: f64) -> f64 {
    let g = grid.rows();
    let (mut a, mut na, mut b, mut nb) = (0.0, 0, 0.0, 0);
    for i in 0..g {
        let y = 1.0 - (i as f64 + 0.5) * 2.0 / g as f64;
        for j in 0..g {
            let x = -1.0 + (j as f64 + 0.5) * 2.0 / g as f64;
            let d = task.boundary_distance([x, y]);
            let v = grid.get2(i, j);
            if d <= near {
                a += v;
                na += 1;
            } else if d > far {
                b += v;
                nb += 1;
            }
        }
    }
    (a / na.max(1) as f64) / (b / nb.max(1) as f64)
}

fn mean_cosine(a: &Tensor, b: &Tensor) -> f64 {
    let n = a.rows();
    (0..n).map(|i| lch_core::tensor::cosine(a.row(i), b.row(i))).sum::<f64>() / n.max(1) as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return f64::NAN;
    }
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn centroid_rows(mu: &Tensor, side: &[usize]) -> Vec<Vec<String>> {
    (0..mu.rows())
        .map(|i| {
            let r = mu.row(i);
            vec![i.to_string(), side[i].to_string(), r[0].to_string(), r[1].to_string()]
        })
        .collect()
}

/// Runs the full polygon pipeline and writes every artifact under `out`.
pub fn run_star(cfg: &StarConfig, out: &Path) -> Result<RunManifest> {
    let mut run = RunDir::create(out, &format!("polygon-{}", cfg.shape.name()), serde_json::to_value(cfg)?)?;
    run_polygon_into(cfg, &mut run, "")?;
    run.finish()
}

pub(crate) fn run_polygon_into(cfg: &StarConfig, run: &mut RunDir, prefix: &str) -> Result<()> {
    let name = |s: &str| format!("{prefix}{s}");
    let key = |s: &str| format!("{prefix}{s}");
    run.seed(&key("seed"), cfg.seed);

    let t0 = Instant::now();
    let trained = train_polygon(cfg)?;
    run.metric(&key("train_seconds"), t0.elapsed().as_secs_f64());
    let TrainedPolygon {
        task,
        net,
        losses,
        train_accuracy,
        snapshots,
    } = &trained;
    let (test_pts, test_labels) = task.sample(4000, cfg.seed.wrapping_add(1));
    let test_accuracy = binary_accuracy(net, &points_tensor(&test_pts), &test_labels)?;
    run.metric(&key("train_accuracy"), train_accuracy);
    run.metric(&key("test_accuracy"), test_accuracy);
    run.write_csv(
        &name("losses.csv"),
        &["epoch", "loss"],
        losses.iter().enumerate().map(|(e, l)| vec![(e + 1).to_string(), l.to_string()]),
    )?;
    run.write_text(&name("network.json"), &net.to_json())?;

    // (a) edge centroids and their PCA
    let span = (1, net.num_layers());
    let (edge_pts, side) = task.edge_samples(cfg.per_side, cfg.edge_jitter, cfg.seed);
    let xs = points_tensor(&edge_pts);
    let t1 = Instant::now();
    let mu = centroid_batch(net, &xs, span.0, span.1)?;
    run.metric(&key("centroid_seconds"), t1.elapsed().as_secs_f64());
    let mut rows = centroid_rows(&mu, &side);
    for (r, p) in rows.iter_mut().zip(&edge_pts) {
        r.splice(2..2, [p[0].to_string(), p[1].to_string()]);
    }
    run.write_csv(&name("edge_centroids.csv"), &["id", "side", "x0", "x1", "mu0", "mu1"], rows)?;
    let aniso = per_side_anisotropy(&mu, &side, task.sides.len())?;
    run.write_csv(
        &name("edge_anisotropy.csv"),
        &["side", "anisotropy"],
        aniso.iter().enumerate().map(|(s, a)| vec![s.to_string(), a.to_string()]),
    )?;
    run.metric(&key("anisotropy_min"), min(&aniso));
    run.metric(&key("anisotropy_median"), median(&aniso));
    let probe_acc = edge_probe_accuracy(&mu, &side, &cfg.probe, cfg.seed)?;
    run.metric(&key("edge_probe_accuracy"), probe_acc);
    let pca = pca_fit(&mu, 2)?;
    let proj = pca_project(&pca, &mu)?;
    let mut buf = Vec::new();
    lch_core::probes::write_projection_csv(&proj, &side, &mut buf)?;
    run.write_bytes(&name("edge_centroids_pca.csv"), &buf)?;
    run.metric(&key("pca_explained_variance"), pca.explained_variance.clone());

    // (b, c) exact partition and per-layer level sets
    if !cfg.skip_geometry {
        let t2 = Instant::now();
        let part: Partition = enumerate_regions(net, Rect::default())?;
        run.metric(&key("regions_seconds"), t2.elapsed().as_secs_f64());
        run.metric(&key("regions"), part.regions.len());
        run.write_text(&name("partition.svg"), &partition_svg(&part, 512.0, Some(&task.vertices)))?;
        run.write_json(&name("partition.json"), &part.to_json())?;
        let mut conc_rows = Vec::new();
        for &k in &cfg.levelset_layers {
            let layer = net.hidden_layer(k).expect("validated");
            let segs = part.layer_segments(layer);
            let c = boundary_concentration(&segs, task, cfg.boundary_band);
            let total: f64 = segs.iter().map(|s| s.segment.length()).sum();
            run.write_text(
                &name(&format!("levelset_layer{k}.svg")),
                &levelset_svg(&segs, part.domain, 512.0, Some(&task.vertices)),
            )?;
            run.metric(&key(&format!("levelset_concentration_layer{k}")), c);
            conc_rows.push(vec![k.to_string(), layer.to_string(), total.to_string(), c.to_string()]);
        }
        run.write_csv(
            &name("levelset_concentration.csv"),
            &["hidden_layer", "network_layer", "length", "fraction_near_boundary"],
            conc_rows,
        )?;
    }

    // (d) attribution heatmaps
    for &k in &cfg.heatmap_layers {
        let layer = net.hidden_layer(k).expect("validated");
        let (grid, zero) = attribution_heatmap(
            net,
            layer,
            cfg.heatmap_grid,
            cfg.heatmap_samples,
            cfg.heatmap_radius,
            cfg.seed,
        )?;
        run.write_text(&name(&format!("attribution_layer{k}.svg")), &heatmap_svg(&grid, 16.0)?)?;
        let g = cfg.heatmap_grid;
        let rows = (0..g * g).map(|idx| {
            let (i, j) = (idx / g, idx % g);
            vec![i.to_string(), j.to_string(), grid.data()[idx].to_string()]
        });
        run.write_csv(&name(&format!("attribution_layer{k}.csv")), &["row", "col", "mean_score"], rows)?;
        run.metric(&key(&format!("attribution_layer{k}_zero_baseline_points")), zero);
        run.metric(
            &key(&format!("attribution_layer{k}_boundary_ratio")),
            heatmap_boundary_ratio(&grid, task, 0.05, 0.3),
        );
    }

    // extraction cost relative to a plain forward pass
    let (bench, _) = task.sample(10_000, cfg.seed.wrapping_add(2));
    let bench = points_tensor(&bench);
    let t3 = Instant::now();
    net.forward(&bench)?;
    let fwd = t3.elapsed().as_secs_f64();
    let t4 = Instant::now();
    centroid_batch(net, &bench, span.0, span.1)?;
    let ext = t4.elapsed().as_secs_f64();
    run.metric(&key("forward_seconds_10k"), fwd);
    run.metric(&key("centroid_seconds_10k"), ext);
    run.metric(&key("centroid_over_forward"), ext / fwd.max(1e-9));

    // (e) centroid snapshots through training
    let mut snap_rows = Vec::new();
    let mut snap_stats = Vec::new();
    for (&epoch, snap) in snapshots {
        let m = centroid_batch(snap, &xs, span.0, span.1)?;
        let a = per_side_anisotropy(&m, &side, task.sides.len())?;
        snap_stats.push(vec![epoch.to_string(), median(&a).to_string(), min(&a).to_string()]);
        for mut r in centroid_rows(&m, &side) {
            r.insert(0, epoch.to_string());
            snap_rows.push(r);
        }
    }
    run.write_csv(&name("snapshots.csv"), &["epoch", "id", "side", "mu0", "mu1"], snap_rows)?;
    run.write_csv(
        &name("snapshot_anisotropy.csv"),
        &["epoch", "anisotropy_median", "anisotropy_min"],
        snap_stats,
    )?;

    // (f) GELU variant of the same weights
    let gelu = net.with_activation(Layer::Gelu)?;
    let mu_g = centroid_batch(&gelu, &xs, span.0, span.1)?;
    run.write_csv(&name("gelu_centroids.csv"), &["id", "side", "mu0", "mu1"], centroid_rows(&mu_g, &side))?;
    run.metric(&key("gelu_mean_cosine"), mean_cosine(&mu, &mu_g));
    let gelu_acc = binary_accuracy(&gelu, &points_tensor(&test_pts), &test_labels)?;
    run.metric(&key("gelu_test_accuracy"), gelu_acc);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolygonSuiteConfig {
    pub shapes: Vec<Shape>,
    pub base: StarConfig,
}

impl Default for PolygonSuiteConfig {
    fn default() -> Self {
        Self {
            shapes: vec![Shape::Star, Shape::Bowtie, Shape::Reuleaux],
            base: StarConfig::default(),
        }
    }
}

/// Runs the polygon pipeline once per shape, prefixing each shape's files.
pub fn run_polygon_suite(cfg: &PolygonSuiteConfig, out: &Path) -> Result<RunManifest> {
    let mut run = RunDir::create(out, "polygon-suite", serde_json::to_value(cfg)?)?;
    for &shape in &cfg.shapes {
        let c = StarConfig { shape, ..cfg.base.clone() };
        run_polygon_into(&c, &mut run, &format!("{}/", shape.name()))?;
    }
    run.finish()
}
