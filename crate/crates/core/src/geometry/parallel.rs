// SPDX-License-Identifier: MIT OR Apache-2.0

//! Collinear centroids and parallel region boundaries.
//!
//! Along a chain of adjacent regions, the difference of neighbouring
//! centroids is normal to the boundary they share. If the centroids lie on
//! one line, all those boundaries are therefore parallel.

use serde::Serialize;

use super::partition::Region;
use super::polygon::Point;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Distance within which two edges count as lying on the same line.
pub const SHARED_EDGE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelVerdict {
    /// Largest distance of a centroid from the centroids' principal line.
    pub collinearity_residual: f64,
    /// Largest angle (radians) between any two shared-edge normals.
    pub max_boundary_angle: f64,
    /// Largest angle between a shared-edge normal and the matching
    /// centroid difference.
    pub max_centroid_normal_angle: f64,
    pub boundary_normals: Vec<[f64; 2]>,
    pub centroid_normals: Vec<[f64; 2]>,
    pub collinear: bool,
    pub parallel: bool,
}

impl ParallelVerdict {
    /// Collinear centroids imply parallel boundaries.
    pub fn implication_holds(&self) -> bool {
        !self.collinear || self.parallel
    }
}

/// Angle between two lines through the origin, in `[0, π/2]`.
pub fn line_angle(u: [f64; 2], v: [f64; 2]) -> f64 {
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot.abs())
}

/// Checks a chain of regions, each adjacent to the next.
pub fn check_parallel_boundaries<S: Scalar>(
    regions: &[Region<S>],
    tol_collinear: f64,
    tol_angle: f64,
) -> Result<ParallelVerdict> {
    if regions.len() < 2 {
        return Err(Error::invalid("need at least two regions"));
    }
    let mut boundary_normals = Vec::with_capacity(regions.len() - 1);
    let mut centroid_normals = Vec::with_capacity(regions.len() - 1);
    for (i, pair) in regions.windows(2).enumerate() {
        let edge = shared_edge(&pair[0], &pair[1]).ok_or(Error::NotAdjacent {
            first: i,
            second: i + 1,
        })?;
        boundary_normals.push([-edge[1], edge[0]]);
        let (a, b) = (&pair[0].centroid, &pair[1].centroid);
        centroid_normals.push([
            (a[0] - b[0]).to_f64_lossy(),
            (a[1] - b[1]).to_f64_lossy(),
        ]);
    }

    let mut max_boundary_angle = 0f64;
    for i in 0..boundary_normals.len() {
        for j in i + 1..boundary_normals.len() {
            max_boundary_angle = max_boundary_angle.max(line_angle(boundary_normals[i], boundary_normals[j]));
        }
    }
    let max_centroid_normal_angle = boundary_normals
        .iter()
        .zip(&centroid_normals)
        .map(|(&g, &c)| line_angle(g, c))
        .fold(0f64, f64::max);

    let points: Vec<[f64; 2]> = regions
        .iter()
        .map(|r| [r.centroid[0].to_f64_lossy(), r.centroid[1].to_f64_lossy()])
        .collect();
    let collinearity_residual = line_residual(&points);
    Ok(ParallelVerdict {
        collinearity_residual,
        max_boundary_angle,
        max_centroid_normal_angle,
        boundary_normals,
        centroid_normals,
        collinear: collinearity_residual <= tol_collinear,
        parallel: max_boundary_angle <= tol_angle,
    })
}

/// Direction of an edge of `a` that overlaps an edge of `b` with positive length.
fn shared_edge<S: Scalar>(a: &Region<S>, b: &Region<S>) -> Option<[f64; 2]> {
    let f = |p: Point<S>| [p[0].to_f64_lossy(), p[1].to_f64_lossy()];
    for ea in a.polygon.edges() {
        let (p, q) = (f(ea.a), f(ea.b));
        let d = [q[0] - p[0], q[1] - p[1]];
        let len = d[0].hypot(d[1]);
        if len == 0.0 {
            continue;
        }
        let u = [d[0] / len, d[1] / len];
        for eb in b.polygon.edges() {
            let (r, s) = (f(eb.a), f(eb.b));
            let off = |x: [f64; 2]| (u[0] * (x[1] - p[1]) - u[1] * (x[0] - p[0])).abs();
            if off(r) > SHARED_EDGE_TOL || off(s) > SHARED_EDGE_TOL {
                continue;
            }
            let t = |x: [f64; 2]| u[0] * (x[0] - p[0]) + u[1] * (x[1] - p[1]);
            let (t0, t1) = (t(r).min(t(s)), t(r).max(t(s)));
            if t1.min(len) - t0.max(0.0) > SHARED_EDGE_TOL {
                return Some(u);
            }
        }
    }
    None
}

/// Largest distance from the points to their total-least-squares line.
fn line_residual(points: &[[f64; 2]]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // principal direction of the 2×2 scatter matrix
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (c, s) = (theta.cos(), theta.sin());
    points
        .iter()
        .map(|p| (-s * (p[0] - mx) + c * (p[1] - my)).abs())
        .fold(0.0, f64::max)
}
