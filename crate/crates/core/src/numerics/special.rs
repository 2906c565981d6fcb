//! Log-gamma and digamma for positive real arguments.
//!
//! Both functions shift small arguments upward with the functional
//! recurrence and then apply the asymptotic (Stirling / de Moivre) series,
//! which is accurate to full double precision once the argument is large
//! enough.

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

const LN_GAMMA_SHIFT: f64 = 15.0;
const DIGAMMA_SHIFT: f64 = 10.0;

// B_{2k} / (2k (2k - 1)), k = 1..=8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2k} / (2k), k = 1..=7
const DE_MOIVRE: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

fn check_argument(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "special-function argument",
            requirement: "positive and finite",
            value: x,
        })
    }
}

/// ln Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_argument(x)?;
    Ok(ln_gamma_unchecked(x))
}

/// Ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_argument(x)?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut product = 1.0;
    while z < LN_GAMMA_SHIFT {
        product *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in STIRLING.iter().rev() {
        series = series * inv2 + c;
    }
    let stirling = (z - 0.5) * z.ln() - z + HALF_LN_2PI + series * inv;
    if product == 1.0 {
        stirling
    } else {
        stirling - product.ln()
    }
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut shift = 0.0;
    while z < DIGAMMA_SHIFT {
        shift += 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut series = 0.0;
    for c in DE_MOIVRE.iter().rev() {
        series = series * inv2 + c;
    }
    z.ln() - 0.5 / z - series * inv2 - shift
}
