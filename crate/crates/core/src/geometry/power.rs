// SPDX-License-Identifier: MIT OR Apache-2.0

//! Power diagrams (weighted Voronoi tessellations).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site<S = f64> {
    pub centroid: Vec<S>,
    pub radius: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerDiagram<S = f64> {
    sites: Vec<Site<S>>,
}

impl<S: Scalar> PowerDiagram<S> {
    pub fn new(sites: Vec<Site<S>>) -> Result<Self> {
        let Some(first) = sites.first() else {
            return Err(Error::invalid("a power diagram needs at least one site"));
        };
        let d = first.centroid.len();
        if let Some((q, s)) = sites.iter().enumerate().find(|(_, s)| s.centroid.len() != d) {
            return Err(Error::invalid(format!(
                "site {q} has dimension {}, expected {d}",
                s.centroid.len()
            )));
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &[Site<S>] {
        &self.sites
    }

    pub fn dim(&self) -> usize {
        self.sites[0].centroid.len()
    }

    /// `‖x − μ_q‖² − τ_q`.
    pub fn laguerre_distance(&self, q: usize, x: &[S]) -> S {
        let s = &self.sites[q];
        let d2: S = s.centroid.iter().zip(x).map(|(&m, &v)| (v - m) * (v - m)).sum();
        d2 - s.radius
    }
}

/// Index of the site minimizing the Laguerre distance; the lowest index wins ties.
pub fn laguerre_assign<S: Scalar>(pd: &PowerDiagram<S>, x: &[S]) -> Result<usize> {
    if x.len() != pd.dim() {
        return Err(Error::Shape {
            op: "laguerre_assign",
            lhs: vec![x.len()],
            rhs: vec![pd.dim()],
        });
    }
    let mut best = 0;
    let mut best_d = pd.laguerre_distance(0, x);
    for q in 1..pd.sites.len() {
        let d = pd.laguerre_distance(q, x);
        if d < best_d {
            best = q;
            best_d = d;
        }
    }
    Ok(best)
}
