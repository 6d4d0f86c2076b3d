// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact geometry of 2-D piecewise-affine networks.

mod parallel;
mod partition;
mod polygon;
mod power;

pub use parallel::{check_parallel_boundaries, line_angle, ParallelVerdict, SHARED_EDGE_TOL};
pub use partition::{
    activation_pattern, enumerate_regions, enumerate_regions_with_guard, layer_levelsets, BoundarySegment,
    Partition, Region, DEFAULT_NEURON_GUARD,
};
pub use polygon::{Point, Polygon, Rect, Segment, Split, CLIP_EPS, SLIVER_AREA};
pub use power::{laguerre_assign, PowerDiagram, Site};
