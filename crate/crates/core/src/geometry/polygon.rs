// SPDX-License-Identifier: MIT OR Apache-2.0

//! Convex polygons and half-plane clipping.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Signed distances below this magnitude count as lying on the line.
pub const CLIP_EPS: f64 = 1e-10;

/// Polygons with smaller area are discarded as clipping slivers.
pub const SLIVER_AREA: f64 = 1e-12;

pub type Point<S> = [S; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn is_valid(&self) -> bool {
        self.x1 > self.x0 && self.y1 > self.y0 && self.area().is_finite()
    }

    pub fn polygon<S: Scalar>(&self) -> Polygon<S> {
        Polygon::new(vec![
            [S::c(self.x0), S::c(self.y0)],
            [S::c(self.x1), S::c(self.y0)],
            [S::c(self.x1), S::c(self.y1)],
            [S::c(self.x0), S::c(self.y1)],
        ])
    }
}

impl Default for Rect {
    fn default() -> Self {
        Self::new(-1.0, -1.0, 1.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment<S = f64> {
    pub a: Point<S>,
    pub b: Point<S>,
}

impl<S: Scalar> Segment<S> {
    pub fn length(&self) -> S {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    pub fn point_at(&self, t: S) -> Point<S> {
        [
            self.a[0] + t * (self.b[0] - self.a[0]),
            self.a[1] + t * (self.b[1] - self.a[1]),
        ]
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon<S = f64> {
    vertices: Vec<Point<S>>,
}

/// Result of cutting a polygon with the line `n·x + c = 0`.
pub struct Split<S> {
    /// Part where `n·x + c > 0`.
    pub positive: Option<Polygon<S>>,
    /// Part where `n·x + c ≤ 0`.
    pub negative: Option<Polygon<S>>,
    /// Portion of the line inside the polygon, when the line crosses it.
    pub chord: Option<Segment<S>>,
}

impl<S: Scalar> Polygon<S> {
    /// Wraps vertices, reversing clockwise input.
    pub fn new(mut vertices: Vec<Point<S>>) -> Self {
        if signed_area(&vertices) < S::zero() {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point<S>] {
        &self.vertices
    }

    pub fn area(&self) -> S {
        signed_area(&self.vertices).abs()
    }

    /// Vertex average; strictly interior for a non-degenerate convex polygon.
    pub fn interior_point(&self) -> Point<S> {
        let n = S::from_usize_lossy(self.vertices.len());
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((S::zero(), S::zero()), |(x, y), p| (x + p[0], y + p[1]));
        [sx / n, sy / n]
    }

    pub fn bbox(&self) -> [S; 4] {
        self.vertices.iter().fold(
            [S::infinity(), S::infinity(), S::neg_infinity(), S::neg_infinity()],
            |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
        )
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment<S>> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment {
            a: self.vertices[i],
            b: self.vertices[(i + 1) % n],
        })
    }

    /// True when `p` is inside or within `eps` of the boundary.
    pub fn contains(&self, p: Point<S>, eps: S) -> bool {
        self.edges().all(|e| {
            let ex = e.b[0] - e.a[0];
            let ey = e.b[1] - e.a[1];
            let len = ex.hypot(ey);
            if len == S::zero() {
                return true;
            }
            let cross = ex * (p[1] - e.a[1]) - ey * (p[0] - e.a[0]);
            cross / len >= -eps
        })
    }

    /// Both sides of the line `n·x + c = 0`; a side is `None` when empty or
    /// a sliver. Vertices within [`CLIP_EPS`] of the line are snapped onto it.
    pub fn split(&self, normal: Point<S>, offset: S) -> Split<S> {
        let len = normal[0].hypot(normal[1]);
        let dist: Vec<S> = if len == S::zero() {
            vec![offset.signum() * S::infinity(); self.vertices.len()]
        } else {
            self.vertices
                .iter()
                .map(|p| (normal[0] * p[0] + normal[1] * p[1] + offset) / len)
                .collect()
        };
        let eps = S::c(CLIP_EPS);
        let hi = dist.iter().copied().fold(S::neg_infinity(), S::max);
        let lo = dist.iter().copied().fold(S::infinity(), S::min);
        if hi <= eps && lo >= -eps {
            // the whole polygon hugs the line: decide by the interior point
            let c = self.interior_point();
            let side = if len == S::zero() {
                offset
            } else {
                normal[0] * c[0] + normal[1] * c[1] + offset
            };
            return self.whole(side > S::zero());
        }
        if lo >= -eps {
            return self.whole(true);
        }
        if hi <= eps {
            return self.whole(false);
        }

        let n = self.vertices.len();
        let mut pos = Vec::with_capacity(n + 2);
        let mut neg = Vec::with_capacity(n + 2);
        let mut cut = Vec::with_capacity(2);
        for i in 0..n {
            let (p, dp) = (self.vertices[i], dist[i]);
            let (q, dq) = (self.vertices[(i + 1) % n], dist[(i + 1) % n]);
            let side_p = classify(dp, eps);
            match side_p {
                0 => {
                    pos.push(p);
                    neg.push(p);
                    cut.push(p);
                }
                1 => pos.push(p),
                _ => neg.push(p),
            }
            let side_q = classify(dq, eps);
            if side_p != 0 && side_q != 0 && side_p != side_q {
                let t = dp / (dp - dq);
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                pos.push(x);
                neg.push(x);
                cut.push(x);
            }
        }
        let keep = |v: Vec<Point<S>>| {
            let poly = Polygon { vertices: dedup(v) };
            (poly.vertices.len() >= 3 && poly.area() >= S::c(SLIVER_AREA)).then_some(poly)
        };
        let chord = (cut.len() >= 2).then(|| Segment {
            a: cut[0],
            b: cut[cut.len() - 1],
        });
        Split {
            positive: keep(pos),
            negative: keep(neg),
            chord,
        }
    }

    fn whole(&self, positive: bool) -> Split<S> {
        let me = Some(self.clone());
        if positive {
            Split {
                positive: me,
                negative: None,
                chord: None,
            }
        } else {
            Split {
                positive: None,
                negative: me,
                chord: None,
            }
        }
    }
}

fn classify<S: Scalar>(d: S, eps: S) -> i8 {
    if d > eps {
        1
    } else if d < -eps {
        -1
    } else {
        0
    }
}

fn dedup<S: Scalar>(v: Vec<Point<S>>) -> Vec<Point<S>> {
    let mut out: Vec<Point<S>> = Vec::with_capacity(v.len());
    for p in v {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn signed_area<S: Scalar>(v: &[Point<S>]) -> S {
    let n = v.len();
    let mut s = S::zero();
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    s * S::c(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Rect::default().polygon()
    }

    #[test]
    fn square_area_and_containment() {
        let sq = square();
        assert_eq!(sq.area(), 4.0);
        assert!(sq.contains([0.0, 0.0], 0.0));
        assert!(sq.contains([1.0, 0.5], 1e-12));
        assert!(!sq.contains([1.1, 0.0], 1e-12));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let p = Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        assert!(signed_area(p.vertices()) > 0.0);
    }

    #[test]
    fn split_through_middle() {
        let s = square().split([1.0, 0.0], -0.25);
        let pos = s.positive.unwrap();
        let neg = s.negative.unwrap();
        assert!((pos.area() - 1.5).abs() < 1e-15);
        assert!((neg.area() - 2.5).abs() < 1e-15);
        let chord = s.chord.unwrap();
        assert!((chord.length() - 2.0).abs() < 1e-15);
        assert!(pos.contains([0.9, 0.0], 0.0) && !pos.contains([0.0, 0.0], 0.0));
    }

    #[test]
    fn split_missing_line_keeps_polygon() {
        let s = square().split([1.0, 1.0], 5.0);
        assert!(s.negative.is_none() && s.chord.is_none());
        assert_eq!(s.positive.unwrap(), square());
    }

    #[test]
    fn split_along_edge_does_not_create_sliver() {
        let s = square().split([1.0, 0.0], -1.0);
        assert!(s.positive.is_none());
        assert_eq!(s.negative.unwrap().area(), 4.0);
    }

    #[test]
    fn split_through_vertex() {
        let s = square().split([1.0, -1.0], 0.0);
        assert!((s.positive.unwrap().area() - 2.0).abs() < 1e-15);
        assert!((s.negative.unwrap().area() - 2.0).abs() < 1e-15);
        assert!((s.chord.unwrap().length() - 8f64.sqrt()).abs() < 1e-15);
    }
}
