// `!(x > 0.0)` is used on purpose so that NaN fails validation; the
// quadrature tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asymptotics;
pub mod bandwidth;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod numerics;
pub mod simulation;
mod par;

pub use error::{Error, Result};
