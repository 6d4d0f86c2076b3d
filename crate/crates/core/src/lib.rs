// SPDX-License-Identifier: MIT OR Apache-2.0

//! Centroids of small networks and the analyses built on them.
//!
//! A network's *centroid* at an input over a span of layers is the row-sum
//! of that span's input-output Jacobian, `μ = Jᵀ𝟙`, computed with a single
//! vector-Jacobian product. This crate provides the tensor and tape
//! machinery for those products, a small network substrate, exact linear
//! region enumeration for 2-D piecewise-affine networks, TopK sparse
//! dictionaries, and linear probes.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` and `*F32` aliases below name the concrete instantiations.

pub mod autodiff;
pub mod centroid;
pub mod dictionary;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nets;
mod optim;
pub mod probes;
pub mod render;
pub mod scalar;
pub mod tensor;

pub use autodiff::{forward_record, full_jacobian, vjp, Tape, Var};
pub use centroid::{centroid, local_centroid, neuron_attribution, CentroidRecord, Neighborhood};
pub use dictionary::{FeatureCode, FeatureDictionary};
pub use error::{Error, Result};
pub use geometry::{enumerate_regions, Partition, PowerDiagram, Region};
pub use nets::{AblationMask, Layer, Network, NetworkBuilder};
pub use probes::{LinearProbe, PcaModel};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type TensorF64 = Tensor<f64>;
pub type TensorF32 = Tensor<f32>;
pub type TapeF64 = Tape<f64>;
pub type TapeF32 = Tape<f32>;
pub type NetworkF64 = Network<f64>;
pub type NetworkF32 = Network<f32>;
pub type RegionF64 = Region<f64>;
pub type FeatureDictionaryF64 = FeatureDictionary<f64>;
pub type FeatureDictionaryF32 = FeatureDictionary<f32>;
