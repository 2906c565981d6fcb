//! Sample-based gamma kernel estimators of `f` and `f′`, their
//! leave-one-out variants, and the plug-in sample mean built on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::kernels::KernelPoint;
use crate::par;

/// Strictly positive, finite observations. Logarithms are cached since every
/// kernel evaluation needs `ln Xᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    logs: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("no observations".into()));
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain {
                name: "observation",
                requirement: "positive and finite",
                value: bad,
            });
        }
        let logs = values.iter().map(|v| v.ln()).collect();
        Ok(Self { values, logs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: a sample holds at least one observation.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn sum_with<F: Fn(f64, f64) -> f64>(&self, skip: Option<usize>, term: F) -> f64 {
        self.values
            .iter()
            .zip(&self.logs)
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, (&t, &ln_t))| term(t, ln_t))
            .sum()
    }
}

/// What a curve estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Density,
    Derivative,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Density => "density",
            Target::Derivative => "derivative",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "density" | "0" => Ok(Target::Density),
            "derivative" | "1" => Ok(Target::Derivative),
            other => Err(Error::InvalidConfig(format!(
                "unknown target `{other}` (expected density or derivative)"
            ))),
        }
    }
}

/// Equispaced abscissae `x_min + k·step`, `k = 0..points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl EvaluationGrid {
    pub fn new(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        check_positive("grid x_min", x_min)?;
        check_positive("grid x_max", x_max)?;
        if x_min >= x_max {
            return Err(Error::InvalidConfig(format!(
                "grid requires x_min < x_max, got {x_min} and {x_max}"
            )));
        }
        if points < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 points".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            points,
        })
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.x_max
        } else {
            self.x_min + k as f64 * self.step()
        }
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.point(k)).collect()
    }
}

impl FromStr for EvaluationGrid {
    type Err = Error;

    /// Parses `min:max:points`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::InvalidConfig(format!("grid `{s}` is not of the form min:max:points"));
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        Self::new(lo, hi, n)
    }
}

/// Estimated curve on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub grid: EvaluationGrid,
    pub values: Vec<f64>,
    pub target: Target,
    pub bandwidth: f64,
}

/// `f̂(x) = n⁻¹ Σ K_{ρ_b(x),b}(Xᵢ)`.
pub fn estimate_density(sample: &Sample, b: f64, x: f64) -> Result<f64> {
    estimate_at(sample, b, x, Target::Density)
}

/// `f̂′(x) = n⁻¹ Σ K′_{ρ_b(x),b}(Xᵢ)`; exactly zero at `x = 0`.
pub fn estimate_derivative(sample: &Sample, b: f64, x: f64) -> Result<f64> {
    estimate_at(sample, b, x, Target::Derivative)
}

pub fn estimate_at(sample: &Sample, b: f64, x: f64, target: Target) -> Result<f64> {
    let point = KernelPoint::new(x, b)?;
    Ok(sum_at(sample, &point, target, None) / sample.len() as f64)
}

fn sum_at(sample: &Sample, point: &KernelPoint, target: Target, skip: Option<usize>) -> f64 {
    match target {
        Target::Density => sample.sum_with(skip, |t, ln_t| point.value_ln(t, ln_t)),
        Target::Derivative => sample.sum_with(skip, |t, ln_t| point.derivative_ln(t, ln_t)),
    }
}

/// Pointwise estimator applied at every grid abscissa. Grid points are
/// evaluated in parallel when the `parallel` feature is on.
pub fn estimate_curve(
    sample: &Sample,
    b: f64,
    grid: &EvaluationGrid,
    target: Target,
) -> Result<CurveEstimate> {
    check_positive("bandwidth b", b)?;
    let n = sample.len() as f64;
    let values = par::map_indices(grid.points, |k| {
        let point = KernelPoint::new_unchecked(grid.point(k), b);
        sum_at(sample, &point, target, None) / n
    });
    Ok(CurveEstimate {
        grid: *grid,
        values,
        target,
        bandwidth: b,
    })
}

/// Leave-one-out estimate `f̂ᵢ^{(α)}(Xᵢ)`: the kernel (or derivative kernel)
/// centred at `x = Xᵢ`, averaged over the other `n - 1` observations.
/// `index` is zero-based.
pub fn loo_estimate(sample: &Sample, b: f64, index: usize, order: Target) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "leave-one-out estimates need at least 2 observations".into(),
        ));
    }
    if index >= n {
        return Err(Error::InvalidConfig(format!(
            "observation index {index} out of range for a sample of {n}"
        )));
    }
    let x = sample.values[index];
    let point = KernelPoint::new(x, b)?;
    Ok(sum_at(sample, &point, order, Some(index)) / (n - 1) as f64)
}

/// `n⁻¹ Σ φ(Xᵢ, f̂ᵢ^{(α)}(Xᵢ))`, the sample-mean approximation of
/// `E φ(X, f^{(α)}(X))` with leave-one-out plug-ins.
pub fn plugin_expectation<F>(sample: &Sample, b: f64, order: Target, phi: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "plug-in expectation needs at least 2 observations".into(),
        ));
    }
    check_positive("bandwidth b", b)?;
    let terms = par::map_indices(n, |i| {
        let x = sample.values[i];
        let point = KernelPoint::new_unchecked(x, b);
        let plug = sum_at(sample, &point, order, Some(i)) / (n - 1) as f64;
        phi(x, plug)
    });
    if let Some(pos) = terms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            at: sample.values[pos],
        });
    }
    Ok(terms.iter().sum::<f64>() / n as f64)
}
