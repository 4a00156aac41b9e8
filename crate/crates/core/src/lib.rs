//! Projected estimation for matrix factor models.

// Guards like `!(x > 0.0)` are written to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod estimators;
pub mod evaluation;
pub mod io;
pub mod linalg;
pub mod replicate;
mod scalar;
pub mod selection;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
