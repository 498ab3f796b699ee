//! Training and compression of small feedforward classifiers.
//!
//! The pipeline: parse a LIBSVM dataset, train a ReLU MLP under a hinge
//! objective with optional weight penalties and a pre-activation penalty,
//! then shrink the result by magnitude pruning and fixed-point weight
//! quantization. Every stage is deterministic under a root seed.

pub mod dataio;
pub mod error;
pub mod experiment;
pub mod mat;
pub mod model_io;
pub mod network;
pub mod objective;
pub mod pruner;
pub mod quantizer;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Concrete aliases for the common case. The whole crate is generic over
/// [`Scalar`]; these pin f64, which the CLI and the test suite use.
pub type Dataset64 = dataio::Dataset<f64>;
pub type Mlp64 = network::Mlp<f64>;
pub type Layer64 = network::Layer<f64>;
pub type RegularizerSpec64 = objective::RegularizerSpec<f64>;

/// f32 variants for embedders that want the smaller footprint.
pub type Dataset32 = dataio::Dataset<f32>;
pub type Mlp32 = network::Mlp<f32>;
