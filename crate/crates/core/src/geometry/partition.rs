// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact linear-region enumeration for ReLU networks on a 2-D domain.
//!
//! Cells are refined one ReLU layer at a time. Inside a cell every earlier
//! layer is affine, so each neuron of the next ReLU layer contributes a
//! straight line `a·x + c = 0`; cutting the cell by those lines in turn
//! yields the refined cells together with the chords that form the
//! layer's level sets.

use serde::{Deserialize, Serialize};

use super::polygon::{Point, Polygon, Rect, Segment};
use crate::error::{Error, Result};
use crate::nets::{Layer, Network};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const DEFAULT_NEURON_GUARD: usize = 256;

/// One linear region with its local affine map `x ↦ A x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region<S = f64> {
    pub polygon: Polygon<S>,
    /// Active (`true`) / inactive bits, ReLU layers in order.
    pub pattern: Vec<bool>,
    /// `(d_out, 2)`.
    pub affine_a: Tensor<S>,
    pub affine_b: Tensor<S>,
    /// Column sums of `affine_a`.
    pub centroid: Vec<S>,
    pub frobenius: S,
}

impl<S: Scalar> Region<S> {
    pub fn pattern_string(&self) -> String {
        self.pattern.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn apply(&self, p: Point<S>) -> Vec<S> {
        (0..self.affine_a.shape()[0])
            .map(|r| self.affine_a.get2(r, 0) * p[0] + self.affine_a.get2(r, 1) * p[1] + self.affine_b.data()[r])
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySegment<S = f64> {
    pub segment: Segment<S>,
    /// Network layer index of the ReLU that owns the neuron.
    pub layer: usize,
    pub neuron: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition<S = f64> {
    pub domain: Rect,
    pub regions: Vec<Region<S>>,
    pub boundary_segments: Vec<BoundarySegment<S>>,
    bboxes: Vec<[S; 4]>,
}

struct Cell<S> {
    polygon: Polygon<S>,
    pattern: Vec<bool>,
    /// Current representation as `rows × 2` map plus offset.
    a: Vec<[S; 2]>,
    b: Vec<S>,
}

/// Partitions `domain` into the linear regions of a ReLU network with a
/// 2-D input.
pub fn enumerate_regions<S: Scalar>(net: &Network<S>, domain: Rect) -> Result<Partition<S>> {
    enumerate_regions_with_guard(net, domain, DEFAULT_NEURON_GUARD)
}

pub fn enumerate_regions_with_guard<S: Scalar>(
    net: &Network<S>,
    domain: Rect,
    guard: usize,
) -> Result<Partition<S>> {
    if net.input_shape() != [2] {
        return Err(Error::invalid(format!(
            "region enumeration needs a 2-D input, got {:?}",
            net.input_shape()
        )));
    }
    if !domain.is_valid() {
        return Err(Error::invalid(format!("degenerate domain {domain:?}")));
    }
    let mut neurons = 0;
    for (i, layer) in net.layers().iter().enumerate() {
        match layer {
            Layer::Relu => neurons += net.width_after(i + 1),
            Layer::Affine { .. } | Layer::Flatten => {}
            Layer::Gelu | Layer::Conv2d { .. } => {
                return Err(Error::NotCpa {
                    layer: i + 1,
                    kind: layer.kind(),
                })
            }
        }
    }
    if neurons > guard {
        return Err(Error::NeuronGuard { neurons, guard });
    }

    let mut cells = vec![Cell {
        polygon: domain.polygon(),
        pattern: Vec::with_capacity(neurons),
        a: vec![[S::one(), S::zero()], [S::zero(), S::one()]],
        b: vec![S::zero(), S::zero()],
    }];
    let mut segments = Vec::new();

    for (i, layer) in net.layers().iter().enumerate() {
        let index = i + 1;
        match layer {
            Layer::Affine { weight, bias } => {
                for cell in &mut cells {
                    let (a, b) = compose(weight, bias, &cell.a, &cell.b);
                    cell.a = a;
                    cell.b = b;
                }
            }
            Layer::Relu => {
                let mut next = Vec::with_capacity(cells.len() * 2);
                for cell in cells {
                    refine(cell, index, &mut next, &mut segments);
                }
                cells = next;
            }
            _ => {}
        }
    }

    let regions: Vec<Region<S>> = cells
        .into_iter()
        .map(|c| {
            let rows = c.a.len();
            let mut data = Vec::with_capacity(rows * 2);
            for r in &c.a {
                data.extend_from_slice(r);
            }
            let centroid = vec![
                c.a.iter().map(|r| r[0]).sum(),
                c.a.iter().map(|r| r[1]).sum(),
            ];
            let frobenius = c.a.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum::<S>().sqrt();
            Region {
                polygon: c.polygon,
                pattern: c.pattern,
                affine_a: Tensor::new(vec![rows, 2], data).expect("rows × 2"),
                affine_b: Tensor::vector(c.b),
                centroid,
                frobenius,
            }
        })
        .collect();
    let bboxes = regions.iter().map(|r| r.polygon.bbox()).collect();
    Ok(Partition {
        domain,
        regions,
        boundary_segments: segments,
        bboxes,
    })
}

fn compose<S: Scalar>(w: &Tensor<S>, bias: &Tensor<S>, a: &[[S; 2]], b: &[S]) -> (Vec<[S; 2]>, Vec<S>) {
    let (out, inp) = (w.shape()[0], w.shape()[1]);
    let mut na = Vec::with_capacity(out);
    let mut nb = Vec::with_capacity(out);
    for r in 0..out {
        let row = &w.data()[r * inp..(r + 1) * inp];
        let mut acc = [S::zero(), S::zero()];
        let mut off = bias.data()[r];
        for k in 0..inp {
            acc[0] += row[k] * a[k][0];
            acc[1] += row[k] * a[k][1];
            off += row[k] * b[k];
        }
        na.push(acc);
        nb.push(off);
    }
    (na, nb)
}

fn refine<S: Scalar>(
    cell: Cell<S>,
    layer: usize,
    out: &mut Vec<Cell<S>>,
    segments: &mut Vec<BoundarySegment<S>>,
) {
    // pieces: (polygon, bits of this layer so far)
    let mut pieces: Vec<(Polygon<S>, Vec<bool>)> = vec![(cell.polygon, Vec::with_capacity(cell.a.len()))];
    for (j, (row, &off)) in cell.a.iter().zip(&cell.b).enumerate() {
        let mut next = Vec::with_capacity(pieces.len() + 1);
        for (poly, bits) in pieces {
            let split = poly.split(*row, off);
            if let Some(chord) = split.chord {
                if split.positive.is_some() && split.negative.is_some() {
                    segments.push(BoundarySegment {
                        segment: chord,
                        layer,
                        neuron: j,
                    });
                }
            }
            if let Some(p) = split.positive {
                let mut b = bits.clone();
                b.push(true);
                next.push((p, b));
            }
            if let Some(n) = split.negative {
                let mut b = bits;
                b.push(false);
                next.push((n, b));
            }
        }
        pieces = next;
    }
    for (polygon, bits) in pieces {
        let mut pattern = cell.pattern.clone();
        pattern.extend_from_slice(&bits);
        let a = cell
            .a
            .iter()
            .zip(&bits)
            .map(|(r, &on)| if on { *r } else { [S::zero(), S::zero()] })
            .collect();
        let b = cell
            .b
            .iter()
            .zip(&bits)
            .map(|(&v, &on)| if on { v } else { S::zero() })
            .collect();
        out.push(Cell {
            polygon,
            pattern,
            a,
            b,
        });
    }
}

impl<S: Scalar> Partition<S> {
    pub fn total_area(&self) -> S {
        self.regions.iter().map(|r| r.polygon.area()).sum()
    }

    /// Index of a region containing `p` (boundary within `eps` counts).
    pub fn locate(&self, p: Point<S>, eps: S) -> Option<usize> {
        self.regions.iter().zip(&self.bboxes).position(|(r, b)| {
            p[0] >= b[0] - eps
                && p[0] <= b[2] + eps
                && p[1] >= b[1] - eps
                && p[1] <= b[3] + eps
                && r.polygon.contains(p, eps)
        })
    }

    /// Boundary pieces contributed by one ReLU layer (network layer index).
    pub fn layer_segments(&self, layer: usize) -> Vec<BoundarySegment<S>> {
        self.boundary_segments
            .iter()
            .filter(|s| s.layer == layer)
            .cloned()
            .collect()
    }

    /// JSON document listing every region and boundary segment.
    pub fn to_json(&self) -> serde_json::Value {
        let f = |v: S| v.to_f64_lossy();
        let regions: Vec<serde_json::Value> = self
            .regions
            .iter()
            .map(|r| {
                let rows = r.affine_a.shape()[0];
                serde_json::json!({
                    "vertices": r.polygon.vertices().iter().map(|p| [f(p[0]), f(p[1])]).collect::<Vec<_>>(),
                    "pattern": r.pattern_string(),
                    "affine": {
                        "a": (0..rows).map(|i| [f(r.affine_a.get2(i, 0)), f(r.affine_a.get2(i, 1))]).collect::<Vec<_>>(),
                        "b": r.affine_b.data().iter().map(|&v| f(v)).collect::<Vec<_>>(),
                    },
                    "centroid": r.centroid.iter().map(|&v| f(v)).collect::<Vec<_>>(),
                    "frobenius": f(r.frobenius),
                })
            })
            .collect();
        let segments: Vec<serde_json::Value> = self
            .boundary_segments
            .iter()
            .map(|s| {
                serde_json::json!({
                    "a": [f(s.segment.a[0]), f(s.segment.a[1])],
                    "b": [f(s.segment.b[0]), f(s.segment.b[1])],
                    "layer": s.layer,
                    "neuron": s.neuron,
                })
            })
            .collect();
        serde_json::json!({
            "domain": self.domain,
            "regions": regions,
            "boundary_segments": segments,
        })
    }

    /// Regions met when walking from `from` to `to` in `steps` equal steps,
    /// with consecutive repeats removed.
    pub fn regions_along(&self, from: Point<S>, to: Point<S>, steps: usize) -> Vec<usize> {
        let seg = Segment { a: from, b: to };
        let mut out: Vec<usize> = Vec::new();
        for k in 0..=steps {
            let t = S::from_usize_lossy(k) / S::from_usize_lossy(steps.max(1));
            if let Some(r) = self.locate(seg.point_at(t), S::zero()) {
                if out.last() != Some(&r) {
                    out.push(r);
                }
            }
        }
        out
    }
}

/// Level sets of a single ReLU layer.
pub fn layer_levelsets<S: Scalar>(net: &Network<S>, domain: Rect, layer: usize) -> Result<Vec<BoundarySegment<S>>> {
    if !matches!(net.layer(layer), Some(Layer::Relu)) {
        return Err(Error::invalid(format!("layer {layer} is not a ReLU layer")));
    }
    Ok(enumerate_regions(net, domain)?.layer_segments(layer))
}

/// Active/inactive bits of every ReLU neuron at `x`, evaluated directly.
pub fn activation_pattern<S: Scalar>(net: &Network<S>, x: Point<S>) -> Result<Vec<bool>> {
    let outs = net.layer_outputs(&Tensor::vector(vec![x[0], x[1]]))?;
    let mut bits = Vec::new();
    for (i, layer) in net.layers().iter().enumerate() {
        if matches!(layer, Layer::Relu) {
            bits.extend(outs[i].data().iter().map(|&v| v > S::zero()));
        }
    }
    Ok(bits)
}
