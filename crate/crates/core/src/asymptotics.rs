//! Leading-order bias, variance and MISE of the derivative estimator for a
//! known law.
//!
//! The MISE is linear in three functionals of the law:
//!
//! ```text
//! A = ∫ (f/(3x²) + f″)² dx
//! C = ∫ x^{-3/2} f dx
//! D = ∫ x^{-3/2} (f/x - f′) dx
//!
//! MISE(b, n) = b² A / 16 + (C + b D / 2) / (4√π n b^{3/2})
//! ```
//!
//! Dropping the `b D / 2` correction leaves the leading terms, whose exact
//! minimiser is `(3C / (√π A))^{2/7} n^{-2/7}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bandwidth::divergent;
use crate::distributions::ParametricModel;
use crate::error::{check_positive, Error, Result};
use crate::kernels::KernelRegion;
use crate::numerics::{integrate_semiaxis_split, QuadratureSpec};

/// Which terms of a variance expansion to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    /// The `n⁻¹ b^{-3/2}` term only.
    Leading,
    /// Leading term plus the `O(b)` correction.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceValue {
    pub value: f64,
    /// The raw expansion was negative and has been replaced by 0.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPointReport {
    pub x: f64,
    pub b: f64,
    pub n: usize,
    pub region: KernelRegion,
    pub bias: f64,
    pub variance: f64,
    pub variance_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiseReport {
    pub b: f64,
    pub n: usize,
    pub integrated_sq_bias: f64,
    pub integrated_variance: f64,
    pub mise: f64,
    pub variance_clamped: bool,
}

fn check_inputs(x: f64, b: f64) -> Result<()> {
    check_positive("evaluation point x", x)?;
    check_positive("bandwidth b", b)?;
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidConfig("sample size must be positive".into()))
    } else {
        Ok(())
    }
}

/// Bias when `x/b → ∞`: `b (f/(12x²) + f″/4)`.
pub fn interior_bias(model: &ParametricModel, x: f64, b: f64) -> Result<f64> {
    check_inputs(x, b)?;
    let f = model.pdf(x)?;
    let f2 = model.pdf_d2(x)?;
    Ok(b * (f / (12.0 * x * x) + f2 / 4.0))
}

/// Coefficient of `f′(x)` in the boundary bias, `(3κ² - 6κ - 1) / (6κ)`.
pub fn boundary_bias_coefficient(kappa: f64) -> f64 {
    (3.0 * kappa * kappa - 6.0 * kappa - 1.0) / (6.0 * kappa)
}

/// Bias when `x/b → κ`:
/// `f′(x)(3κ² - 6κ - 1)/(6κ) + b f″(x)(7κ/48 + κ²/2)` with `κ = x/b`.
pub fn boundary_bias(model: &ParametricModel, x: f64, b: f64) -> Result<f64> {
    check_inputs(x, b)?;
    let kappa = x / b;
    let f1 = model.pdf_d1(x)?;
    let f2 = model.pdf_d2(x)?;
    Ok(f1 * boundary_bias_coefficient(kappa) + b * f2 * (7.0 * kappa / 48.0 + kappa * kappa / 2.0))
}

/// `n⁻¹ b^{-3/2} x^{-1/2} / (2√π) · (f/(2x) + b (f/(4x²) - f′/(4x)))`.
/// Negative evaluations are clamped to 0 and flagged.
pub fn pointwise_variance(
    model: &ParametricModel,
    x: f64,
    b: f64,
    n: usize,
    expansion: Expansion,
) -> Result<VarianceValue> {
    check_inputs(x, b)?;
    check_n(n)?;
    let f = model.pdf(x)?;
    let mut bracket = f / (2.0 * x);
    if expansion == Expansion::Full {
        let f1 = model.pdf_d1(x)?;
        bracket += b * (f / (4.0 * x * x) - f1 / (4.0 * x));
    }
    let value = bracket / (n as f64 * b.powf(1.5) * x.sqrt() * 2.0 * PI.sqrt());
    Ok(clamp(value))
}

fn clamp(value: f64) -> VarianceValue {
    if value < 0.0 {
        VarianceValue {
            value: 0.0,
            clamped: true,
        }
    } else {
        VarianceValue {
            value,
            clamped: false,
        }
    }
}

/// Bias and variance at a point; the interior bias applies for `x ≥ 2b`,
/// the boundary form below.
pub fn point_report(
    model: &ParametricModel,
    x: f64,
    b: f64,
    n: usize,
) -> Result<AsymptoticPointReport> {
    check_inputs(x, b)?;
    let region = if x >= 2.0 * b {
        KernelRegion::Interior
    } else {
        KernelRegion::Boundary
    };
    let bias = match region {
        KernelRegion::Interior => interior_bias(model, x, b)?,
        KernelRegion::Boundary => boundary_bias(model, x, b)?,
    };
    let var = pointwise_variance(model, x, b, n, Expansion::Full)?;
    Ok(AsymptoticPointReport {
        x,
        b,
        n,
        region,
        bias,
        variance: var.value,
        variance_clamped: var.clamped,
    })
}

/// The integrals `A`, `C`, `D` that the MISE depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiseFunctionals {
    pub bias_integral: f64,
    pub variance_integral: f64,
    pub correction_integral: f64,
}

impl MiseFunctionals {
    pub fn for_model(model: &ParametricModel) -> Result<Self> {
        model.validate()?;
        let spec = QuadratureSpec {
            relative_tolerance: 1e-11,
            absolute_tolerance: 0.0,
            max_subdivisions: 400,
        };
        let split = model.scale();
        let integrate = |what: &str, g: &dyn Fn(f64) -> f64| {
            integrate_semiaxis_split(g, split, &spec).map_err(|e| divergent(what, model, e))
        };
        let bias_integral = integrate("∫ (f/(3x²) + f″)² dx", &|x| {
            let g = model.pdf_unchecked(x) / (3.0 * x * x) + model.pdf_d2_unchecked(x);
            g * g
        })?;
        let variance_integral = integrate("∫ x^(-3/2) f dx", &|x| {
            model.pdf_unchecked(x) / (x * x.sqrt())
        })?;
        let correction_integral = integrate("∫ x^(-3/2) (f/x - f′) dx", &|x| {
            (model.pdf_unchecked(x) / x - model.pdf_d1_unchecked(x)) / (x * x.sqrt())
        })?;
        if !(bias_integral > 0.0) {
            return Err(Error::Integrability(format!(
                "∫ (f/(3x²) + f″)² dx vanishes for {model}"
            )));
        }
        Ok(Self {
            bias_integral,
            variance_integral,
            correction_integral,
        })
    }

    pub fn evaluate(&self, b: f64, n: usize, expansion: Expansion) -> Result<MiseReport> {
        check_positive("bandwidth b", b)?;
        check_n(n)?;
        let integrated_sq_bias = b * b * self.bias_integral / 16.0;
        let mut numerator = self.variance_integral;
        if expansion == Expansion::Full {
            numerator += 0.5 * b * self.correction_integral;
        }
        let var = clamp(numerator / (4.0 * PI.sqrt() * n as f64 * b.powf(1.5)));
        Ok(MiseReport {
            b,
            n,
            integrated_sq_bias,
            integrated_variance: var.value,
            mise: integrated_sq_bias + var.value,
            variance_clamped: var.clamped,
        })
    }

    /// Exact minimiser of the leading terms.
    pub fn optimal_bandwidth(&self, n: usize) -> f64 {
        (3.0 * self.variance_integral / (PI.sqrt() * self.bias_integral)).powf(2.0 / 7.0)
            * (n as f64).powf(-2.0 / 7.0)
    }

    /// Numerical minimiser: scan `points` log-spaced bandwidths on
    /// `[lo, hi]`, then golden-section refinement around the best one.
    pub fn minimize(
        &self,
        n: usize,
        expansion: Expansion,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Result<f64> {
        check_positive("lower bandwidth", lo)?;
        check_positive("upper bandwidth", hi)?;
        check_n(n)?;
        if !(lo < hi) || points < 3 {
            return Err(Error::InvalidConfig(
                "bandwidth search needs lo < hi and at least 3 points".into(),
            ));
        }
        let objective = |ln_b: f64| self.evaluate(ln_b.exp(), n, expansion).map(|r| r.mise);
        let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
        let step = (ln_hi - ln_lo) / (points - 1) as f64;
        let mut best = (0, f64::INFINITY);
        for k in 0..points {
            let v = objective(ln_lo + k as f64 * step)?;
            if v < best.1 {
                best = (k, v);
            }
        }
        let mut a = ln_lo + best.0.saturating_sub(1) as f64 * step;
        let mut c = ln_lo + (best.0 + 1).min(points - 1) as f64 * step;
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = c - ratio * (c - a);
        let mut x2 = a + ratio * (c - a);
        let (mut f1, mut f2) = (objective(x1)?, objective(x2)?);
        for _ in 0..200 {
            if (c - a).abs() < 1e-13 {
                break;
            }
            if f1 < f2 {
                c = x2;
                x2 = x1;
                f2 = f1;
                x1 = c - ratio * (c - a);
                f1 = objective(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (c - a);
                f2 = objective(x2)?;
            }
        }
        Ok((0.5 * (a + c)).exp())
    }
}

/// MISE with the `O(b)` variance correction retained.
pub fn mise(model: &ParametricModel, b: f64, n: usize) -> Result<MiseReport> {
    MiseFunctionals::for_model(model)?.evaluate(b, n, Expansion::Full)
}

/// Argmin of the MISE over `[0.01, 1]` (200-point log grid, then
/// golden-section).
pub fn minimize_mise(model: &ParametricModel, n: usize, expansion: Expansion) -> Result<f64> {
    MiseFunctionals::for_model(model)?.minimize(n, expansion, 0.01, 1.0, 200)
}
