// SPDX-License-Identifier: MIT OR Apache-2.0

//! Interior-classification tasks on planar polygons.

use std::f64::consts::PI;

use lch_core::nets::Dataset;
use lch_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Star,
    Bowtie,
    Reuleaux,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Star => "star",
            Shape::Bowtie => "bowtie",
            Shape::Reuleaux => "reuleaux",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Shape::Star),
            "bowtie" => Ok(Shape::Bowtie),
            "reuleaux" => Ok(Shape::Reuleaux),
            other => Err(Error::config(format!("unknown shape {other:?}"))),
        }
    }
}

/// Outer radius of every shape.
pub const OUTER_RADIUS: f64 = 0.9;
/// Star inner/outer radius ratio.
pub const STAR_INNER_RATIO: f64 = 0.5;
const REULEAUX_ARC_STEPS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonTask {
    pub shape: Shape,
    /// Closed boundary, last vertex joined to the first.
    pub vertices: Vec<[f64; 2]>,
    /// Boundary split into sides; each side is a polyline.
    pub sides: Vec<Vec<[f64; 2]>>,
    pub n_train: usize,
    pub seed: u64,
}

impl PolygonTask {
    pub fn new(shape: Shape, n_train: usize, seed: u64) -> Self {
        let (vertices, sides) = match shape {
            Shape::Star => star(),
            Shape::Bowtie => bowtie(),
            Shape::Reuleaux => reuleaux(),
        };
        Self {
            shape,
            vertices,
            sides,
            n_train,
            seed,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        winding_number(&self.vertices, p) != 0
    }

    /// Uniform points in `[-1, 1]²` with interior labels.
    pub fn sample(&self, n: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let labels = pts.iter().map(|&p| usize::from(self.contains(p))).collect();
        (pts, labels)
    }

    pub fn training_set(&self) -> Result<Dataset> {
        let (pts, labels) = self.sample(self.n_train, self.seed);
        Ok(Dataset::classification(points_tensor(&pts), labels)?)
    }

    /// `per_side` points on each side at arclength fractions spread over
    /// `[0.1, 0.9]`, each pushed off the side along its normal by an offset
    /// drawn uniformly from `[-jitter, jitter]`. Returns the points and their
    /// side index.
    pub fn edge_samples(&self, per_side: usize, jitter: f64, seed: u64) -> (Vec<[f64; 2]>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(per_side * self.sides.len());
        let mut side = Vec::with_capacity(pts.capacity());
        for (s, poly) in self.sides.iter().enumerate() {
            for i in 0..per_side {
                let t = if per_side == 1 {
                    0.5
                } else {
                    0.1 + 0.8 * i as f64 / (per_side - 1) as f64
                };
                let (p, n) = point_on_polyline(poly, t);
                let off = if jitter > 0.0 { rng.random_range(-jitter..=jitter) } else { 0.0 };
                pts.push([p[0] + off * n[0], p[1] + off * n[1]]);
                side.push(s);
            }
        }
        (pts, side)
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn points_tensor(pts: &[[f64; 2]]) -> Tensor {
    Tensor::new(vec![pts.len(), 2], pts.iter().flat_map(|p| [p[0], p[1]]).collect()).expect("n × 2")
}

fn star() -> (Vec<[f64; 2]>, Vec<Vec<[f64; 2]>>) {
    let r_in = OUTER_RADIUS * STAR_INNER_RATIO;
    let v: Vec<[f64; 2]> = (0..10)
        .map(|i| {
            let a = PI / 2.0 + i as f64 * PI / 5.0;
            let r = if i % 2 == 0 { OUTER_RADIUS } else { r_in };
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    let sides = (0..10).map(|i| vec![v[i], v[(i + 1) % 10]]).collect();
    (v, sides)
}

fn bowtie() -> (Vec<[f64; 2]>, Vec<Vec<[f64; 2]>>) {
    let (a, b) = (OUTER_RADIUS, 0.6 * OUTER_RADIUS);
    let v = vec![[-a, -b], [a, b], [a, -b], [-a, b]];
    let sides = (0..4).map(|i| vec![v[i], v[(i + 1) % 4]]).collect();
    (v, sides)
}

fn reuleaux() -> (Vec<[f64; 2]>, Vec<Vec<[f64; 2]>>) {
    let corners: Vec<[f64; 2]> = (0..3)
        .map(|i| {
            let a = PI / 2.0 + i as f64 * 2.0 * PI / 3.0;
            [OUTER_RADIUS * 0.85 * a.cos(), OUTER_RADIUS * 0.85 * a.sin()]
        })
        .collect();
    let width = ((corners[0][0] - corners[1][0]).powi(2) + (corners[0][1] - corners[1][1]).powi(2)).sqrt();
    let mut vertices = Vec::new();
    let mut sides = Vec::new();
    for i in 0..3 {
        // arc from corner i to corner i+1, centered on the opposite corner
        let (p, q, c) = (corners[i], corners[(i + 1) % 3], corners[(i + 2) % 3]);
        let a0 = (p[1] - c[1]).atan2(p[0] - c[0]);
        let mut a1 = (q[1] - c[1]).atan2(q[0] - c[0]);
        if a1 < a0 {
            a1 += 2.0 * PI;
        }
        let arc: Vec<[f64; 2]> = (0..=REULEAUX_ARC_STEPS)
            .map(|k| {
                let a = a0 + (a1 - a0) * k as f64 / REULEAUX_ARC_STEPS as f64;
                [c[0] + width * a.cos(), c[1] + width * a.sin()]
            })
            .collect();
        vertices.extend_from_slice(&arc[..REULEAUX_ARC_STEPS]);
        sides.push(arc);
    }
    (vertices, sides)
}

/// Point at arclength fraction `t` and the unit normal of the piece it lies on.
fn point_on_polyline(poly: &[[f64; 2]], t: f64) -> ([f64; 2], [f64; 2]) {
    let lens: Vec<f64> = poly
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .collect();
    let total: f64 = lens.iter().sum();
    let mut target = t * total;
    let last = lens.len() - 1;
    for (k, (w, &l)) in poly.windows(2).zip(&lens).enumerate() {
        if target <= l || k == last {
            let f = if l > 0.0 { (target / l).clamp(0.0, 1.0) } else { 0.0 };
            let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
            let n = if l > 0.0 { [-d[1] / l, d[0] / l] } else { [0.0, 0.0] };
            return ([w[0][0] + f * d[0], w[0][1] + f * d[1]], n);
        }
        target -= l;
    }
    unreachable!("polylines have at least one piece")
}

pub fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Winding number of the closed polygon around `p`.
pub fn winding_number(poly: &[[f64; 2]], p: [f64; 2]) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let side = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                w += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Even-odd test by casting a ray towards +x.
pub fn ray_cast_inside(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winding_agrees_with_ray_casting() {
        for shape in [Shape::Star, Shape::Bowtie, Shape::Reuleaux] {
            let task = PolygonTask::new(shape, 0, 0);
            let (pts, labels) = task.sample(10_000, 42);
            for (p, l) in pts.iter().zip(&labels) {
                assert_eq!(*l == 1, ray_cast_inside(&task.vertices, *p), "{shape:?} at {p:?}");
            }
            let frac = labels.iter().sum::<usize>() as f64 / 10_000.0;
            assert!(frac > 0.1 && frac < 0.9, "{shape:?}: {frac}");
        }
    }

    #[test]
    fn star_is_simple_and_centered() {
        let task = PolygonTask::new(Shape::Star, 0, 0);
        assert_eq!(task.vertices.len(), 10);
        assert!(task.contains([0.0, 0.0]));
        assert!(!task.contains([0.95, 0.95]));
        let (pts, side) = task.edge_samples(5, 0.0, 0);
        assert_eq!(pts.len(), 50);
        assert_eq!(side[49], 9);
        for p in pts {
            assert!(task.boundary_distance(p) < 1e-12);
        }
        let (pts, _) = task.edge_samples(5, 0.05, 3);
        assert!(pts.iter().all(|&p| task.boundary_distance(p) <= 0.05 + 1e-12));
        assert!(pts.iter().any(|&p| task.boundary_distance(p) > 1e-3));
    }

    #[test]
    fn bowtie_lobes_are_inside() {
        let task = PolygonTask::new(Shape::Bowtie, 0, 0);
        assert!(task.contains([0.6, 0.0]));
        assert!(task.contains([-0.6, 0.0]));
        assert!(!task.contains([0.0, 0.4]));
    }

    #[test]
    fn reuleaux_samples_lie_on_arcs() {
        let task = PolygonTask::new(Shape::Reuleaux, 0, 0);
        let (pts, _) = task.edge_samples(4, 0.0, 0);
        for p in pts {
            assert!(task.boundary_distance(p) < 0.01);
        }
        assert!(task.contains([0.0, 0.0]));
    }
}
