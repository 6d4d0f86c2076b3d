// SPDX-License-Identifier: MIT OR Apache-2.0

//! Plain SVG and PGM emitters for partitions, level sets and heatmaps.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{BoundarySegment, Partition, Point, Rect};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Maps `t ∈ [0, 1]` to a dark-blue → yellow ramp.
pub fn ramp(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

struct Frame {
    domain: Rect,
    size: f64,
}

impl Frame {
    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let d = &self.domain;
        (
            (p[0] - d.x0) / (d.x1 - d.x0) * self.size,
            (d.y1 - p[1]) / (d.y1 - d.y0) * self.size,
        )
    }

    fn open(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
            s = self.size
        )
    }
}

fn pt<S: Scalar>(p: Point<S>) -> [f64; 2] {
    [p[0].to_f64_lossy(), p[1].to_f64_lossy()]
}

fn segment_lines<S: Scalar>(out: &mut String, frame: &Frame, segments: &[BoundarySegment<S>], stroke: &str) {
    for s in segments {
        let (x1, y1) = frame.map(pt(s.segment.a));
        let (x2, y2) = frame.map(pt(s.segment.b));
        let _ = writeln!(
            out,
            "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"{stroke}\" stroke-width=\"0.6\"/>"
        );
    }
}

fn outline(out: &mut String, frame: &Frame, polygon: &[[f64; 2]], stroke: &str) {
    let pts: Vec<String> = polygon
        .iter()
        .map(|&p| {
            let (x, y) = frame.map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        "<polygon points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
        pts.join(" ")
    );
}

/// Regions filled by the Frobenius norm of their affine map, boundaries in white.
pub fn partition_svg<S: Scalar>(partition: &Partition<S>, size: f64, overlay: Option<&[[f64; 2]]>) -> String {
    let frame = Frame {
        domain: partition.domain,
        size,
    };
    let norms: Vec<f64> = partition.regions.iter().map(|r| r.frobenius.to_f64_lossy()).collect();
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = frame.open();
    for (r, &n) in partition.regions.iter().zip(&norms) {
        let t = if hi > lo { (n - lo) / (hi - lo) } else { 0.0 };
        let pts: Vec<String> = r
            .polygon
            .vertices()
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(pt(p));
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{}\" stroke=\"none\"/>",
            pts.join(" "),
            ramp(t)
        );
    }
    segment_lines(&mut out, &frame, &partition.boundary_segments, "#ffffff");
    if let Some(poly) = overlay {
        outline(&mut out, &frame, poly, "#e4572e");
    }
    out.push_str("</svg>\n");
    out
}

/// Level-set segments in black on white, with an optional reference outline.
pub fn levelset_svg<S: Scalar>(
    segments: &[BoundarySegment<S>],
    domain: Rect,
    size: f64,
    overlay: Option<&[[f64; 2]]>,
) -> String {
    let frame = Frame { domain, size };
    let mut out = frame.open();
    let _ = writeln!(out, "<rect width=\"{size}\" height=\"{size}\" fill=\"#ffffff\"/>");
    segment_lines(&mut out, &frame, segments, "#000000");
    if let Some(poly) = overlay {
        outline(&mut out, &frame, poly, "#e4572e");
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap of a `(rows, cols)` grid; row 0 is drawn at the top.
pub fn heatmap_svg<S: Scalar>(grid: &Tensor<S>, cell: f64) -> Result<String> {
    if grid.rank() != 2 {
        return Err(Error::invalid(format!("heatmap needs a matrix, got {:?}", grid.shape())));
    }
    let (rows, cols) = (grid.shape()[0], grid.shape()[1]);
    let vals = normalize(grid.data());
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" shape-rendering=\"crispEdges\">\n",
        w = cols as f64 * cell,
        h = rows as f64 * cell
    );
    for i in 0..rows {
        for j in 0..cols {
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"/>",
                j as f64 * cell,
                i as f64 * cell,
                ramp(vals[i * cols + j])
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn normalize<S: Scalar>(data: &[S]) -> Vec<f64> {
    let v: Vec<f64> = data.iter().map(|x| x.to_f64_lossy()).collect();
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v.iter()
        .map(|&x| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

/// Min-max scales each channel of a `(c, h, w)` map to `[0, 1]` independently.
/// A constant channel maps to zeros.
pub fn normalize_channels<S: Scalar>(map: &Tensor<S>) -> Result<Tensor<S>> {
    if map.rank() != 3 {
        return Err(Error::invalid(format!(
            "per-channel normalization needs (c, h, w), got {:?}",
            map.shape()
        )));
    }
    let plane = map.shape()[1] * map.shape()[2];
    let mut data = Vec::with_capacity(map.len());
    for ch in map.data().chunks(plane.max(1)) {
        data.extend(normalize(ch).into_iter().map(S::c));
    }
    Tensor::new(map.shape().to_vec(), data)
}

/// Binary (P5) PGM bytes of a `(h, w)` map, min-max scaled to 0..=255.
pub fn pgm_bytes<S: Scalar>(map: &Tensor<S>) -> Result<Vec<u8>> {
    if map.rank() != 2 {
        return Err(Error::invalid(format!("PGM needs (h, w), got {:?}", map.shape())));
    }
    let (h, w) = (map.shape()[0], map.shape()[1]);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(normalize(map.data()).into_iter().map(|v| (v * 255.0).round() as u8));
    Ok(out)
}

pub fn write_pgm<S: Scalar>(map: &Tensor<S>, path: &Path) -> Result<()> {
    let bytes = pgm_bytes(map)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
