// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact oracles: centroids against dense and finite-difference Jacobians,
//! region geometry against direct evaluation, parallel boundaries of
//! banded constructions, and the zero-readout separability witness.

use std::path::Path;

use lch_core::autodiff::Tape;
use lch_core::centroid::centroid_batch;
use lch_core::geometry::{activation_pattern, check_parallel_boundaries, enumerate_regions, Partition, Rect};
use lch_core::nets::ParamMode;
use lch_core::probes::{fit_logistic_probe, ProbeConfig};
use lch_core::{centroid, full_jacobian, Layer, Network, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::manifest::{RunDir, RunManifest};

/// Worst deviations of vjp centroids over random networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidOracle {
    pub networks: usize,
    /// Largest absolute gap to the dense-Jacobian row sum.
    pub max_dense_gap: f64,
    /// Largest relative gap `‖fd − μ‖ / max(‖μ‖, 1e-8)` to central differences.
    pub max_fd_relative: f64,
}

/// Dense Jacobian of `f^(l1←l2)` at `x`, one row per output.
pub fn dense_jacobian(net: &Network, x: &Tensor, l1: usize, l2: usize) -> Result<Tensor> {
    let at = if l1 == 1 {
        x.clone()
    } else {
        net.forward_span(x, 1, l1 - 1)?
    };
    let mut tape = Tape::new();
    let v = tape.input(at.reshape(&[1, at.len()])?);
    let rec = net.record(&mut tape, v, l1, l2, ParamMode::Frozen)?;
    tape.set_output(rec.output(v));
    Ok(full_jacobian(&tape)?)
}

fn column_sums(j: &Tensor) -> Vec<f64> {
    (0..j.row_len()).map(|k| (0..j.rows()).map(|i| j.get2(i, k)).sum()).collect()
}

/// Random MLP with 2 to 4 affine layers, widths up to 64, ReLU or GELU.
pub fn random_mlp(rng: &mut ChaCha8Rng, d_in: usize) -> Result<Network> {
    let depth = rng.random_range(2..=4);
    let hidden: Vec<usize> = (0..depth - 1).map(|_| rng.random_range(2..=64)).collect();
    let gelu = rng.random_bool(0.5);
    let out = rng.random_range(1..=4);
    Ok(Network::builder(&[d_in], rng.random()).mlp(&hidden, out, gelu).build()?)
}

pub fn centroid_oracle(networks: usize, seed: u64) -> Result<CentroidOracle> {
    const H: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dense_gap, mut fd_rel) = (0.0f64, 0.0f64);
    for _ in 0..networks {
        let d = rng.random_range(2..=8);
        let net = random_mlp(&mut rng, d)?;
        let x = Tensor::vector((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
        let l = net.num_layers();
        let mu = centroid(&net, &x, 1, l)?.centroid;
        let oracle = column_sums(&dense_jacobian(&net, &x, 1, l)?);
        for (a, b) in mu.iter().zip(&oracle) {
            dense_gap = dense_gap.max((a - b).abs());
        }
        // central differences of the summed output
        let total = |v: Vec<f64>| -> Result<f64> { Ok(net.forward(&Tensor::vector(v))?.data().iter().sum()) };
        let mut diff = 0.0;
        for i in 0..d {
            let mut p = x.data().to_vec();
            let mut m = x.data().to_vec();
            p[i] += H;
            m[i] -= H;
            let fd = (total(p)? - total(m)?) / (2.0 * H);
            diff += (fd - mu[i]).powi(2);
        }
        let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
        fd_rel = fd_rel.max(diff.sqrt() / norm.max(1e-8));
    }
    Ok(CentroidOracle {
        networks,
        max_dense_gap: dense_gap,
        max_fd_relative: fd_rel,
    })
}

/// Grid comparison between the enumerated partition and direct evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryOracle {
    pub points: usize,
    pub regions: usize,
    /// Grid points with no containing region or a different pattern.
    pub mismatches: usize,
    pub max_expert_gap: f64,
    pub max_centroid_gap: f64,
    pub area_gap: f64,
}

/// Checks a `side × side` cell-centered grid over `domain`.
pub fn geometry_oracle(net: &Network, domain: Rect, side: usize) -> Result<GeometryOracle> {
    let part: Partition = enumerate_regions(net, domain)?;
    let mut pts = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            pts.push([
                domain.x0 + (j as f64 + 0.5) * (domain.x1 - domain.x0) / side as f64,
                domain.y0 + (i as f64 + 0.5) * (domain.y1 - domain.y0) / side as f64,
            ]);
        }
    }
    let xs = Tensor::new(vec![pts.len(), 2], pts.iter().flat_map(|p| *p).collect())?;
    let ys = net.forward(&xs)?;
    let mus = centroid_batch(net, &xs, 1, net.num_layers())?;
    let (mut mismatches, mut expert, mut cgap) = (0, 0.0f64, 0.0f64);
    for (k, &p) in pts.iter().enumerate() {
        let pattern = activation_pattern(net, p)?;
        let Some(r) = part.locate(p, 1e-12).map(|i| &part.regions[i]) else {
            mismatches += 1;
            continue;
        };
        if r.pattern != pattern {
            // a point on a shared edge may be located in either neighbour
            let alt = part
                .regions
                .iter()
                .any(|q| q.pattern == pattern && q.polygon.contains(p, 1e-12));
            if !alt {
                mismatches += 1;
            }
            continue;
        }
        for (a, b) in r.apply(p).iter().zip(ys.row(k)) {
            expert = expert.max((a - b).abs());
        }
        for (a, b) in r.centroid.iter().zip(mus.row(k)) {
            cgap = cgap.max((a - b).abs());
        }
    }
    Ok(GeometryOracle {
        points: pts.len(),
        regions: part.regions.len(),
        mismatches,
        max_expert_gap: expert,
        max_centroid_gap: cgap,
        area_gap: (part.total_area() - domain.area()).abs(),
    })
}

/// Outcome of the randomized parallel-boundary constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelOracle {
    pub constructions: usize,
    /// Chains whose centroids were collinear.
    pub collinear: usize,
    /// Collinear chains whose boundaries were not parallel within tolerance.
    pub violations: usize,
    pub max_boundary_angle: f64,
}

/// One-hidden-layer net whose hidden weights all point along `dir`; its
/// regions are parallel bands and their centroids lie on a line.
pub fn banded_network(dir: [f64; 2], scales: &[f64], biases: &[f64]) -> Result<Network> {
    let h = scales.len();
    let w: Vec<f64> = scales.iter().flat_map(|a| [a * dir[0], a * dir[1]]).collect();
    Ok(Network::new(
        vec![2],
        vec![
            Layer::Affine {
                weight: Tensor::new(vec![h, 2], w)?,
                bias: Tensor::vector(biases.to_vec()),
            },
            Layer::Relu,
            Layer::Affine {
                weight: Tensor::ones(&[1, h]),
                bias: Tensor::zeros(&[1]),
            },
        ],
        0,
    )?)
}

pub fn parallel_oracle(constructions: usize, seed: u64, tol_angle: f64) -> Result<ParallelOracle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut collinear, mut violations, mut worst) = (0, 0, 0.0f64);
    let mut done = 0;
    while done < constructions {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let dir = [theta.cos(), theta.sin()];
        let h = rng.random_range(2..=6);
        let scales: Vec<f64> = (0..h)
            .map(|_| rng.random_range(0.3..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        // hyperplanes dir·x = -b/a spread across the domain
        let biases: Vec<f64> = scales.iter().map(|a| -a * rng.random_range(-0.8..0.8)).collect();
        let net = banded_network(dir, &scales, &biases)?;
        let part: Partition = enumerate_regions(&net, Rect::default())?;
        let chain = part.regions_along([-1.2 * dir[0], -1.2 * dir[1]], [1.2 * dir[0], 1.2 * dir[1]], 4000);
        if chain.len() < 2 {
            continue;
        }
        done += 1;
        let regions: Vec<_> = chain.iter().map(|&i| part.regions[i].clone()).collect();
        let v = check_parallel_boundaries(&regions, 1e-12, tol_angle)?;
        if v.collinear {
            collinear += 1;
            worst = worst.max(v.max_boundary_angle);
            if !v.parallel {
                violations += 1;
            }
        }
    }
    Ok(ParallelOracle {
        constructions,
        collinear,
        violations,
        max_boundary_angle: worst,
    })
}

/// Zero-readout network whose hidden layer separates two clusters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityWitness {
    pub probe_accuracy: f64,
    pub identical_outputs: bool,
    pub samples: usize,
}

pub fn separability_witness(samples: usize, seed: u64) -> Result<SeparabilityWitness> {
    let net: Network = Network::new(
        vec![2],
        vec![
            Layer::Affine {
                weight: Tensor::identity(2),
                bias: Tensor::zeros(&[2]),
            },
            Layer::Relu,
            Layer::Affine {
                weight: Tensor::zeros(&[1, 2]),
                bias: Tensor::vector(vec![0.75]),
            },
        ],
        0,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let c = if i % 2 == 0 { [1.0, 3.0] } else { [3.0, 1.0] };
        rows.push(vec![c[0] + rng.random_range(-0.5..0.5), c[1] + rng.random_range(-0.5..0.5)]);
        labels.push(i % 2);
    }
    let x = Tensor::from_rows(&rows)?;
    let hidden = net.forward_span(&x, 1, 2)?;
    let probe = fit_logistic_probe(&hidden, &labels, &ProbeConfig::default())?;
    let out = net.forward(&x)?;
    let first = out.data()[0].to_le_bytes();
    Ok(SeparabilityWitness {
        probe_accuracy: probe.accuracy(&hidden, &labels)?,
        identical_outputs: out.data().iter().all(|v| v.to_le_bytes() == first),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub seed: u64,
    pub networks: usize,
    pub constructions: usize,
    pub angle_tolerance: f64,
    pub witness_samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            networks: 50,
            constructions: 100,
            angle_tolerance: 1e-9,
            witness_samples: 200,
        }
    }
}

/// Runs the random-network, parallel-boundary and witness checks.
pub fn run_oracles(cfg: &OracleConfig, out: &Path) -> Result<RunManifest> {
    let mut run = RunDir::create(out, "oracles", serde_json::to_value(cfg)?)?;
    run.seed("main", cfg.seed);
    let c = centroid_oracle(cfg.networks, cfg.seed)?;
    let p = parallel_oracle(cfg.constructions, cfg.seed, cfg.angle_tolerance)?;
    let w = separability_witness(cfg.witness_samples, cfg.seed)?;
    run.write_csv(
        "oracles.csv",
        &["check", "quantity", "value"],
        [
            ("centroid", "max_dense_gap", c.max_dense_gap.to_string()),
            ("centroid", "max_fd_relative", c.max_fd_relative.to_string()),
            ("parallel", "collinear", p.collinear.to_string()),
            ("parallel", "violations", p.violations.to_string()),
            ("parallel", "max_boundary_angle", p.max_boundary_angle.to_string()),
            ("witness", "probe_accuracy", w.probe_accuracy.to_string()),
            ("witness", "identical_outputs", w.identical_outputs.to_string()),
        ]
        .into_iter()
        .map(|(a, b, c)| [a.to_string(), b.to_string(), c]),
    )?;
    run.metric("centroid", &c);
    run.metric("parallel", &p);
    run.metric("witness", &w);
    run.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_oracle_runs_pass() {
        let c = centroid_oracle(5, 1).unwrap();
        assert!(c.max_dense_gap <= 1e-12 && c.max_fd_relative <= 1e-4, "{c:?}");
        let p = parallel_oracle(5, 1, 1e-9).unwrap();
        assert_eq!(p.violations, 0);
        assert_eq!(p.collinear, 5);
        let w = separability_witness(40, 1).unwrap();
        assert_eq!(w.probe_accuracy, 1.0);
        assert!(w.identical_outputs);
    }

    #[test]
    fn geometry_oracle_on_small_net() {
        let net: Network = Network::builder(&[2], 4).mlp(&[8, 8], 1, false).build().unwrap();
        let g = geometry_oracle(&net, Rect::default(), 50).unwrap();
        assert_eq!(g.mismatches, 0);
        assert!(g.max_expert_gap <= 1e-8 && g.max_centroid_gap <= 1e-10);
    }
}
