//! Kernels, forward variance curves and parameter bundles.

pub mod config;
pub mod curve;
pub mod kernel;
pub mod params;

pub use config::{ConfigMap, ModelConfig};
pub use curve::{CurveKind, ForwardVarianceCurve};
pub use kernel::{Kernel, KernelKind};
pub use params::ModelParams;
