//! Special functions and quadrature used throughout the crate.

mod quadrature;
mod special;

pub use quadrature::{
    integrate_from_zero, integrate_interval, integrate_semiaxis, integrate_semiaxis_split,
    QuadratureSpec,
};
pub use special::{digamma, log_gamma};

pub(crate) use special::{digamma_unchecked, ln_gamma_unchecked};
