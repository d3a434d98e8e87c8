//! Skew-stickiness ratio engine for affine forward variance models.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Oracle digits in unit tests are kept as computed.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod charfn;
pub mod discreteness;
pub mod error;
pub mod forest;
pub mod model;
pub mod numerics;
pub mod riccati;
pub mod smile;
pub mod ssr;

pub use error::{Error, Result};
