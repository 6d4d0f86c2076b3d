// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("layer span ({l1}, {l2}) out of range for a network with {layers} layers")]
    Span { l1: usize, l2: usize, layers: usize },

    #[error("jacobian has {rows} rows, above the guard of {guard}; use vjp with a chosen cotangent instead")]
    JacobianGuard { rows: usize, guard: usize },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("baseline centroid has zero norm at sample {sample}")]
    ZeroNormBaseline { sample: usize },

    #[error("network is not continuous piecewise-affine: layer {layer} is {kind}")]
    NotCpa { layer: usize, kind: &'static str },

    #[error("network has {neurons} nonlinear neurons, above the guard of {guard}")]
    NeuronGuard { neurons: usize, guard: usize },

    #[error("regions {first} and {second} do not share a boundary edge")]
    NotAdjacent { first: usize, second: usize },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Shape {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by numerics rather than bad configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::Divergence { .. } | Error::ZeroNormBaseline { .. }
        )
    }
}
