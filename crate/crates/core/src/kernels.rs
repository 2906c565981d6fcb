//! Gamma kernel `K_{ρ_b(x),b}(t)` and its derivative with respect to the
//! evaluation point `x`.
//!
//! The shape switches at `x = 2b`: `ρ₁ = x/b` in the interior and
//! `ρ₂ = (x/2b)² + 1` on the boundary strip `[0, 2b)`. Both branches give
//! `ρ = 2` and `dρ/dx = 1/b` at the seam, so the kernel and its derivative
//! are continuous there.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_positive, Result};
use crate::numerics::{digamma_unchecked, ln_gamma_unchecked};

/// Shape and scale of a gamma density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaShape {
    pub rho: f64,
    pub b: f64,
}

impl GammaShape {
    pub fn new(rho: f64, b: f64) -> Result<Self> {
        check_positive("gamma shape ρ", rho)?;
        check_positive("gamma scale b", b)?;
        Ok(Self { rho, b })
    }

    /// ln of the gamma density at `t > 0`.
    pub fn ln_pdf(&self, t: f64) -> f64 {
        (self.rho - 1.0) * t.ln() - t / self.b - self.rho * self.b.ln() - ln_gamma_unchecked(self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelRegion {
    Interior,
    Boundary,
}

/// Shape `ρ_b(x)` and the region it was taken from.
pub fn shape_at(x: f64, b: f64) -> Result<(GammaShape, KernelRegion)> {
    check_nonnegative("evaluation point x", x)?;
    check_positive("bandwidth b", b)?;
    Ok(shape_unchecked(x, b))
}

fn shape_unchecked(x: f64, b: f64) -> (GammaShape, KernelRegion) {
    if x >= 2.0 * b {
        (GammaShape { rho: x / b, b }, KernelRegion::Interior)
    } else {
        let r = x / (2.0 * b);
        (GammaShape { rho: r * r + 1.0, b }, KernelRegion::Boundary)
    }
}

/// Everything about the kernel that depends only on `(x, b)`, so a sum over
/// observations costs one `exp` per term.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint {
    pub x: f64,
    pub shape: GammaShape,
    pub region: KernelRegion,
    ln_norm: f64,
    ln_b: f64,
    digamma_rho: f64,
    /// dρ/dx: 1/b in the interior, x/(2b²) on the boundary strip.
    slope: f64,
}

impl KernelPoint {
    pub fn new(x: f64, b: f64) -> Result<Self> {
        check_nonnegative("evaluation point x", x)?;
        check_positive("bandwidth b", b)?;
        Ok(Self::new_unchecked(x, b))
    }

    pub(crate) fn new_unchecked(x: f64, b: f64) -> Self {
        let (shape, region) = shape_unchecked(x, b);
        let ln_b = b.ln();
        let slope = match region {
            KernelRegion::Interior => 1.0 / b,
            KernelRegion::Boundary => x / (2.0 * b * b),
        };
        Self {
            x,
            shape,
            region,
            ln_norm: -shape.rho * ln_b - ln_gamma_unchecked(shape.rho),
            ln_b,
            digamma_rho: digamma_unchecked(shape.rho),
            slope,
        }
    }

    /// Kernel value at `t`, given `ln_t = ln t`.
    #[inline]
    pub fn value_ln(&self, t: f64, ln_t: f64) -> f64 {
        ((self.shape.rho - 1.0) * ln_t - t / self.shape.b + self.ln_norm).exp()
    }

    /// Derivative kernel at `t`, given `ln_t = ln t`.
    #[inline]
    pub fn derivative_ln(&self, t: f64, ln_t: f64) -> f64 {
        if self.slope == 0.0 {
            return 0.0;
        }
        self.slope * self.value_ln(t, ln_t) * (ln_t - self.ln_b - self.digamma_rho)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        check_positive("observation t", t)?;
        Ok(self.value_ln(t, t.ln()))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        check_positive("observation t", t)?;
        Ok(self.derivative_ln(t, t.ln()))
    }
}

/// `K_{ρ_b(x),b}(t)`.
pub fn kernel(x: f64, b: f64, t: f64) -> Result<f64> {
    KernelPoint::new(x, b)?.value(t)
}

/// `∂/∂x K_{ρ_b(x),b}(t)`; exactly zero at `x = 0`.
pub fn kernel_derivative(x: f64, b: f64, t: f64) -> Result<f64> {
    KernelPoint::new(x, b)?.derivative(t)
}
