// SPDX-License-Identifier: MIT OR Apache-2.0

use lch_core::autodiff::Tape;
use lch_core::centroid::{attribution_scores, centroid_batch};
use lch_core::geometry::{activation_pattern, enumerate_regions, Rect};
use lch_core::nets::ParamMode;
use lch_core::probes::{fit_logistic_probe, ProbeConfig};
use lch_core::{centroid, full_jacobian, local_centroid, AblationMask, Layer, Neighborhood, Network, Tensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn affine(w: &[f64], out: usize, b: &[f64]) -> Layer {
    Layer::Affine {
        weight: Tensor::from_f64(&[out, w.len() / out], w).unwrap(),
        bias: Tensor::from_f64(&[out], b).unwrap(),
    }
}

fn random_net(rng: &mut ChaCha8Rng, d_in: usize, gelu: bool) -> Network {
    let depth = rng.random_range(2..=4);
    let hidden: Vec<usize> = (0..depth - 1).map(|_| rng.random_range(2..=32)).collect();
    Network::builder(&[d_in], rng.random())
        .mlp(&hidden, rng.random_range(1..4), gelu)
        .build()
        .unwrap()
}

fn dense_jacobian(net: &Network, x: &Tensor, l1: usize, l2: usize) -> Tensor {
    let at = if l1 == 1 {
        x.clone()
    } else {
        net.forward_span(x, 1, l1 - 1).unwrap()
    };
    let mut tape = Tape::new();
    let v = tape.input(at.reshape(&[1, at.len()]).unwrap());
    let rec = net.record(&mut tape, v, l1, l2, ParamMode::Frozen).unwrap();
    tape.set_output(rec.output(v));
    full_jacobian(&tape).unwrap()
}

fn row_sum(j: &Tensor) -> Vec<f64> {
    let (r, c) = (j.shape()[0], j.shape()[1]);
    (0..c).map(|k| (0..r).map(|i| j.get2(i, k)).sum()).collect()
}

#[test]
fn centroid_equals_jacobian_row_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..40 {
        let gelu = rng.random();
        let net = random_net(&mut rng, 5, gelu);
        let x = Tensor::new(vec![5], (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let l = net.num_layers();
        let l1 = rng.random_range(1..=l);
        let l2 = rng.random_range(l1..=l);
        let mu = centroid(&net, &x, l1, l2).unwrap();
        let oracle = row_sum(&dense_jacobian(&net, &x, l1, l2));
        assert_eq!(mu.centroid.len(), net.width_after(l1 - 1));
        for (a, b) in mu.centroid.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12);
        }
        // recomputation is bit-exact, and batching does not change rows
        assert_eq!(centroid(&net, &x, l1, l2).unwrap(), mu);
        let batch = Tensor::stack(&[x.clone(), x.clone()]).unwrap();
        assert_eq!(centroid_batch(&net, &batch, l1, l2).unwrap().row(1), mu.centroid.as_slice());
    }
}

#[test]
fn trivial_centroids() {
    let id: Network = Network::new(vec![3], vec![affine(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3, &[0.0; 3])], 0).unwrap();
    let x = Tensor::vector(vec![0.3, -7.0, 2.0]);
    assert_eq!(centroid(&id, &x, 1, 1).unwrap().centroid, vec![1.0, 1.0, 1.0]);

    let a: Network = Network::new(vec![2], vec![affine(&[1.0, 2.0, 3.0, 4.0, -5.0, 6.0], 3, &[1.0, 1.0, 1.0])], 0).unwrap();
    for x in [[0.0, 0.0], [5.0, -3.0]] {
        assert_eq!(centroid(&a, &Tensor::vector(x.to_vec()), 1, 1).unwrap().centroid, vec![-1.0, 12.0]);
    }
    let nb = Neighborhood::new(Tensor::vector(vec![0.2, 0.1]), 0.5, 16, 3);
    assert_eq!(local_centroid(&a, &nb, 1, 1).unwrap().data(), &[-1.0, 12.0]);
    assert!(centroid(&a, &Tensor::vector(vec![f64::NAN, 0.0]), 1, 1).is_err());
}

#[test]
fn jacobians_compose_across_a_split_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let net = random_net(&mut rng, 3, false);
        let x = Tensor::new(vec![3], (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let l = net.num_layers();
        let k = rng.random_range(1..l);
        let full = dense_jacobian(&net, &x, 1, l);
        let head = dense_jacobian(&net, &x, 1, k);
        let tail = dense_jacobian(&net, &x, k + 1, l);
        let chained = tail.matmul(&head).unwrap();
        assert!(full.max_abs_diff(&chained).unwrap() <= 1e-10);
        // spans compose exactly
        let mid = net.forward_span(&x, 1, k).unwrap();
        assert_eq!(net.forward_span(&mid, k + 1, l).unwrap(), net.forward(&x).unwrap());
    }
}

#[test]
fn geometry_agrees_with_autodiff() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let net: Network = Network::builder(&[2], rng.random()).mlp(&[10, 10], 1, false).build().unwrap();
        let part = enumerate_regions(&net, Rect::default()).unwrap();
        assert!((part.total_area() - 4.0).abs() <= 4.0 * 1e-6);
        for region in &part.regions {
            let bb = region.polygon.bbox();
            let mut probes = Vec::new();
            for _ in 0..2000 {
                if probes.len() == 5 {
                    break;
                }
                let p = [rng.random_range(bb[0]..=bb[2]), rng.random_range(bb[1]..=bb[3])];
                if region.polygon.contains(p, -1e-9) {
                    probes.push(p);
                }
            }
            if probes.is_empty() {
                probes.push(region.polygon.interior_point());
            }
            let mut first: Option<Vec<f64>> = None;
            for p in probes {
                let x = Tensor::vector(p.to_vec());
                assert_eq!(activation_pattern(&net, p).unwrap(), region.pattern);
                let y = net.forward(&x).unwrap().data()[0];
                assert!((region.apply(p)[0] - y).abs() <= 1e-8);
                let mu = centroid(&net, &x, 1, net.num_layers()).unwrap().centroid;
                for (a, b) in mu.iter().zip(&region.centroid) {
                    assert!((a - b).abs() <= 1e-10);
                }
                // constant across the region
                match &first {
                    None => first = Some(mu),
                    Some(f) => assert!(f.iter().zip(&mu).all(|(a, b)| (a - b).abs() <= 1e-10)),
                }
            }
        }
    }
}

#[test]
fn ablation_semantics() {
    let net: Network = Network::builder(&[3], 4).mlp(&[6, 5], 2, false).build().unwrap();
    let x = Tensor::vector(vec![0.4, -0.3, 0.9]);
    let relu = net.hidden_layer(1).unwrap();
    let once = net.ablate(AblationMask { layer: relu, neuron: 2 }).unwrap();
    let twice = once.ablate(AblationMask { layer: relu, neuron: 2 }).unwrap();
    assert_eq!(once, twice);
    assert_eq!(once.layer_outputs(&x).unwrap()[relu].data()[2], 0.0);
    assert!(net.ablate(AblationMask { layer: relu, neuron: 6 }).is_err());
    assert!(net.ablate(AblationMask { layer: 9, neuron: 0 }).is_err());

    // zero outgoing weights make the neuron irrelevant
    let mut layers = net.layers().to_vec();
    if let Layer::Affine { weight, .. } = &mut layers[relu] {
        for r in 0..weight.shape()[0] {
            weight.set2(r, 2, 0.0);
        }
    }
    let dead = Network::new(vec![3], layers, 4).unwrap();
    let dead_ablated = dead.ablate(AblationMask { layer: relu, neuron: 2 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let x = Tensor::vector((0..3).map(|_| rng.random_range(-2.0..2.0)).collect());
        assert_eq!(dead.forward(&x).unwrap(), dead_ablated.forward(&x).unwrap());
    }
}

#[test]
fn single_ablations_do_not_add_up() {
    let net: Network = Network::builder(&[2], 8).mlp(&[8, 8], 1, false).build().unwrap();
    let x = Tensor::vector(vec![0.5, -0.25]);
    let layer = net.hidden_layer(1).unwrap();
    let base = net.forward(&x).unwrap().data()[0];
    let mut joint = net.clone();
    let mut summed = 0.0;
    for i in 0..8 {
        let m = AblationMask { layer, neuron: i };
        summed += net.ablate(m).unwrap().forward(&x).unwrap().data()[0] - base;
        joint = joint.ablate(m).unwrap();
    }
    let joint_effect = joint.forward(&x).unwrap().data()[0] - base;
    assert!((joint_effect - summed).abs() > 1e-6, "{joint_effect} vs {summed}");
}

#[test]
fn attribution_is_invariant_to_sample_order() {
    let net: Network = Network::builder(&[2], 5).mlp(&[8, 8], 1, false).build().unwrap();
    let nb = Neighborhood::new(Tensor::vector(vec![0.1, 0.2]), 0.3, 32, 9);
    let samples = nb.samples().unwrap();
    let mut idx: Vec<usize> = (0..32).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
    let layer = net.hidden_layer(1).unwrap();
    let span = (1, net.num_layers());
    let a = attribution_scores(&net, &samples, layer, span).unwrap();
    let b = attribution_scores(&net, &samples.select_rows(&idx), layer, span).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn zero_final_layer_hides_separable_intermediates() {
    let net: Network = Network::new(
        vec![2],
        vec![
            affine(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, 0.0]),
            Layer::Relu,
            affine(&[0.0, 0.0], 1, &[0.75]),
        ],
        0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..100 {
        let c = if i % 2 == 0 { [1.0, 3.0] } else { [3.0, 1.0] };
        rows.push(vec![c[0] + rng.random_range(-0.5..0.5), c[1] + rng.random_range(-0.5..0.5)]);
        labels.push(i % 2);
    }
    let x = Tensor::from_rows(&rows).unwrap();
    let hidden = net.forward_span(&x, 1, 2).unwrap();
    let probe = fit_logistic_probe(&hidden, &labels, &ProbeConfig::default()).unwrap();
    assert_eq!(probe.accuracy(&hidden, &labels).unwrap(), 1.0);
    let out = net.forward(&x).unwrap();
    let bytes: Vec<[u8; 8]> = out.data().iter().map(|v| v.to_le_bytes()).collect();
    assert!(bytes.iter().all(|b| *b == bytes[0]));
}
