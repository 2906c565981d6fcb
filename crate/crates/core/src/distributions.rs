//! Known laws on `(0, ∞)`: Maxwell, Weibull (unit scale) and gamma, with
//! closed-form first and second derivatives and seeded samplers.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::estimators::Sample;
use crate::kernels::GammaShape;
use crate::numerics::{integrate_from_zero, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ParametricModel {
    /// `√2 x² exp(-x²/2σ²) / (σ³ √π)`
    Maxwell { sigma: f64 },
    /// `s x^{s-1} exp(-x^s)`
    Weibull { shape: f64 },
    /// `x^{ρ-1} exp(-x/b) / (b^ρ Γ(ρ))`
    Gamma { rho: f64, b: f64 },
}

impl ParametricModel {
    pub fn maxwell(sigma: f64) -> Result<Self> {
        check_positive("Maxwell σ", sigma)?;
        Ok(Self::Maxwell { sigma })
    }

    pub fn weibull(shape: f64) -> Result<Self> {
        check_positive("Weibull shape s", shape)?;
        Ok(Self::Weibull { shape })
    }

    pub fn gamma(rho: f64, b: f64) -> Result<Self> {
        GammaShape::new(rho, b)?;
        Ok(Self::Gamma { rho, b })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Maxwell { sigma } => check_positive("Maxwell σ", sigma).map(drop),
            Self::Weibull { shape } => check_positive("Weibull shape s", shape).map(drop),
            Self::Gamma { rho, b } => GammaShape::new(rho, b).map(drop),
        }
    }

    /// A length scale of the bulk of the law; used to place quadrature splits.
    pub fn scale(&self) -> f64 {
        match *self {
            Self::Maxwell { sigma } => sigma,
            Self::Weibull { .. } => 1.0,
            Self::Gamma { rho, b } => rho * b,
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_positive("density argument x", x)?;
        Ok(self.pdf_unchecked(x))
    }

    pub fn pdf_d1(&self, x: f64) -> Result<f64> {
        check_positive("density argument x", x)?;
        Ok(self.pdf_d1_unchecked(x))
    }

    pub fn pdf_d2(&self, x: f64) -> Result<f64> {
        check_positive("density argument x", x)?;
        Ok(self.pdf_d2_unchecked(x))
    }

    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        match *self {
            Self::Maxwell { sigma } => maxwell_norm(sigma) * x * x * maxwell_exp(x, sigma),
            Self::Weibull { shape } => {
                shape * ((shape - 1.0) * x.ln() - x.powf(shape)).exp()
            }
            Self::Gamma { rho, b } => GammaShape { rho, b }.ln_pdf(x).exp(),
        }
    }

    pub(crate) fn pdf_d1_unchecked(&self, x: f64) -> f64 {
        match *self {
            Self::Maxwell { sigma } => {
                let s2 = sigma * sigma;
                maxwell_norm(sigma) * x * maxwell_exp(x, sigma) * (2.0 - x * x / s2)
            }
            Self::Weibull { shape } => self.pdf_unchecked(x) * weibull_log_slope(x, shape).0,
            Self::Gamma { rho, b } => self.pdf_unchecked(x) * ((rho - 1.0) / x - 1.0 / b),
        }
    }

    pub(crate) fn pdf_d2_unchecked(&self, x: f64) -> f64 {
        match *self {
            Self::Maxwell { sigma } => {
                let u = x * x / (sigma * sigma);
                maxwell_norm(sigma) * maxwell_exp(x, sigma) * (2.0 - 5.0 * u + u * u)
            }
            Self::Weibull { shape } => {
                let (g, dg) = weibull_log_slope(x, shape);
                self.pdf_unchecked(x) * (g * g + dg)
            }
            Self::Gamma { rho, b } => {
                let g = (rho - 1.0) / x - 1.0 / b;
                self.pdf_unchecked(x) * (g * g - (rho - 1.0) / (x * x))
            }
        }
    }

    /// Distribution function by quadrature of the density.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_positive("distribution argument x", x)?;
        let spec = QuadratureSpec {
            relative_tolerance: 1e-11,
            absolute_tolerance: 1e-14,
            max_subdivisions: 400,
        };
        let v = integrate_from_zero(|t| self.pdf_unchecked(t), x, &spec)?;
        Ok(v.clamp(0.0, 1.0))
    }

    /// Quantile by bisection on the numerical distribution function.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain {
                name: "probability p",
                requirement: "in (0, 1)",
                value: p,
            });
        }
        let mut hi = self.scale();
        while self.cdf(hi)? < p {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NonConvergence {
                    estimate: hi,
                    error_estimate: f64::INFINITY,
                    subdivisions: 0,
                });
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Draws `count` observations using `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let values = match *self {
            Self::Maxwell { sigma } => (0..count)
                .map(|_| {
                    let z: [f64; 3] = [
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                    ];
                    sigma * (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt()
                })
                .collect(),
            Self::Weibull { shape } => (0..count)
                .map(|_| {
                    let u: f64 = rng.sample(Open01);
                    (-u.ln()).powf(1.0 / shape)
                })
                .collect(),
            Self::Gamma { rho, b } => {
                let law = Gamma::new(rho, b)
                    .map_err(|e| Error::InvalidConfig(format!("gamma sampler: {e}")))?;
                (0..count).map(|_| law.sample(rng)).collect()
            }
        };
        Ok(values)
    }

    /// Reproducible sample: identical `(model, count, seed)` always yields
    /// the same observations.
    pub fn sampler(&self, count: usize, seed: u64) -> Result<Sample> {
        if count == 0 {
            return Err(Error::InvalidConfig("sample count must be at least 1".into()));
        }
        let mut rng = stream_rng(seed, 0);
        Sample::new(self.draw(&mut rng, count)?)
    }
}

/// Independent random stream `stream` under base seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn maxwell_norm(sigma: f64) -> f64 {
    std::f64::consts::SQRT_2 / (sigma.powi(3) * std::f64::consts::PI.sqrt())
}

fn maxwell_exp(x: f64, sigma: f64) -> f64 {
    (-x * x / (2.0 * sigma * sigma)).exp()
}

/// (d/dx ln f, d²/dx² ln f) for the unit-scale Weibull density.
fn weibull_log_slope(x: f64, s: f64) -> (f64, f64) {
    let xs1 = x.powf(s - 1.0);
    let g = (s - 1.0) / x - s * xs1;
    let dg = -(s - 1.0) / (x * x) - s * (s - 1.0) * xs1 / x;
    (g, dg)
}

impl fmt::Display for ParametricModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Maxwell { sigma } => write!(f, "maxwell:{sigma}"),
            Self::Weibull { shape } => write!(f, "weibull:{shape}"),
            Self::Gamma { rho, b } => write!(f, "gamma:{rho},{b}"),
        }
    }
}

impl FromStr for ParametricModel {
    type Err = Error;

    /// `maxwell:<σ>`, `weibull:<s>` or `gamma:<ρ>,<b>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidConfig(format!(
                "unknown distribution `{s}` (expected maxwell:<σ>, weibull:<s> or gamma:<ρ>,<b>)"
            ))
        };
        let (family, params) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = params
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (family.to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("maxwell", [sigma]) => Self::maxwell(*sigma),
            ("weibull", [shape]) => Self::weibull(*shape),
            ("gamma", [rho, b]) => Self::gamma(*rho, *b),
            _ => Err(bad()),
        }
    }
}
