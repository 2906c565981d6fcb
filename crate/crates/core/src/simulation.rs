//! Monte Carlo study engine: draw from a known law, pick a bandwidth,
//! estimate a curve and score it with the discretised squared error
//! `κ = h Σ (f - f̂)²`.
//!
//! Every replication owns an independent random stream derived from the base
//! seed, the sample size and the replication index, so results do not
//! depend on scheduling or on how many replications are requested.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandwidth::{oracle_bandwidth, rule_of_thumb_bandwidth};
use crate::distributions::{stream_rng, ParametricModel};
use crate::error::{check_positive, Error, Result};
use crate::estimators::{estimate_curve, CurveEstimate, EvaluationGrid, Sample, Target};
use crate::par;

/// Points on the automatic grid.
pub const AUTO_GRID_POINTS: usize = 500;
/// Upper end of the automatic grid as a quantile of the true law.
pub const AUTO_GRID_QUANTILE: f64 = 0.999;
/// Lower end of the automatic grid relative to the upper end.
pub const AUTO_GRID_LOWER_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPolicy {
    Auto,
    Explicit(EvaluationGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    RuleOfThumb,
    Oracle,
    Fixed(f64),
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::RuleOfThumb => f.write_str("rot"),
            Selector::Oracle => f.write_str("oracle"),
            Selector::Fixed(b) => write!(f, "fixed:{b}"),
        }
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "rot" | "rule_of_thumb" => return Ok(Selector::RuleOfThumb),
            "oracle" => return Ok(Selector::Oracle),
            _ => {}
        }
        let bad = || Error::InvalidConfig(format!("selector must be rot, oracle or fixed:<b>, got {s:?}"));
        let b: f64 = s
            .strip_prefix("fixed:")
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        check_positive("fixed bandwidth", b)?;
        Ok(Selector::Fixed(b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: ParametricModel,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub grid: GridPolicy,
    pub selector: Selector,
    pub target: Target,
}

impl StudyConfig {
    /// Rule-of-thumb derivative study on the automatic grid.
    pub fn new(model: ParametricModel, sample_sizes: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            model,
            sample_sizes,
            replications,
            seed,
            grid: GridPolicy::Auto,
            selector: Selector::RuleOfThumb,
            target: Target::Derivative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::InvalidConfig("no sample sizes given".into()));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidConfig(format!("sample size must be at least 2, got {n}")));
        }
        if self.sample_sizes.iter().any(|&n| n as u64 > u32::MAX as u64)
            || self.replications as u64 > u32::MAX as u64
        {
            return Err(Error::InvalidConfig("sample sizes and replications must fit in 32 bits".into()));
        }
        if let Selector::Fixed(b) = self.selector {
            check_positive("fixed bandwidth", b)?;
        }
        Ok(())
    }

    pub fn resolve_grid(&self) -> Result<EvaluationGrid> {
        match self.grid {
            GridPolicy::Auto => auto_grid(&self.model),
            GridPolicy::Explicit(grid) => Ok(grid),
        }
    }
}

/// `AUTO_GRID_POINTS` equispaced points on `[0.01 q, q]`, `q` the 0.999
/// quantile of `model`.
pub fn auto_grid(model: &ParametricModel) -> Result<EvaluationGrid> {
    let hi = model.quantile(AUTO_GRID_QUANTILE)?;
    EvaluationGrid::new(AUTO_GRID_LOWER_FRACTION * hi, hi, AUTO_GRID_POINTS)
}

/// The model's density or derivative at every grid point.
pub fn truth_curve(model: &ParametricModel, grid: &EvaluationGrid, target: Target) -> Result<Vec<f64>> {
    grid.abscissae()
        .into_iter()
        .map(|x| match target {
            Target::Density => model.pdf(x),
            Target::Derivative => model.pdf_d1(x),
        })
        .collect()
}

/// `h Σ (truth - estimate)²` over the estimate's grid.
pub fn kappa_error(truth: &[f64], estimate: &CurveEstimate) -> Result<f64> {
    if truth.len() != estimate.values.len() || estimate.grid.points != estimate.values.len() {
        return Err(Error::GridMismatch(format!(
            "truth has {} values, estimate has {} on a {}-point grid",
            truth.len(),
            estimate.values.len(),
            estimate.grid.points
        )));
    }
    let sum: f64 = truth
        .iter()
        .zip(&estimate.values)
        .map(|(t, e)| (t - e) * (t - e))
        .sum();
    let kappa = estimate.grid.step() * sum;
    if !kappa.is_finite() {
        return Err(Error::NonFinite { at: f64::NAN });
    }
    Ok(kappa)
}

/// Random stream of replication `rep` at sample size `n`.
fn replication_stream(n: usize, rep: usize) -> u64 {
    ((n as u64) << 32) | rep as u64
}

/// The observations used by replication `rep` at sample size `n`.
pub fn replication_sample(config: &StudyConfig, n: usize, rep: usize) -> Result<Sample> {
    let mut rng = stream_rng(config.seed, replication_stream(n, rep));
    Sample::new(config.model.draw(&mut rng, n)?)
}

/// Everything a replication needs that does not depend on its sample.
struct Prepared {
    grid: EvaluationGrid,
    truth: Vec<f64>,
}

impl Prepared {
    fn new(config: &StudyConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.resolve_grid()?;
        let truth = truth_curve(&config.model, &grid, config.target)?;
        Ok(Self { grid, truth })
    }

    fn replicate(&self, config: &StudyConfig, n: usize, rep: usize, oracle: Option<f64>) -> Result<(f64, f64)> {
        let sample = replication_sample(config, n, rep)?;
        let b = match config.selector {
            Selector::RuleOfThumb => rule_of_thumb_bandwidth(&sample)?.b,
            Selector::Oracle => match oracle {
                Some(b) => b,
                None => oracle_bandwidth(&config.model, n)?.b,
            },
            Selector::Fixed(b) => b,
        };
        let curve = estimate_curve(&sample, b, &self.grid, config.target)?;
        Ok((kappa_error(&self.truth, &curve)?, b))
    }
}

/// `(κ, b)` for one replication.
pub fn run_replication(config: &StudyConfig, size: usize, replication_index: usize) -> Result<(f64, f64)> {
    Prepared::new(config)?.replicate(config, size, replication_index, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub replication: usize,
    pub kappa: Option<f64>,
    pub bandwidth: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    /// Mean κ over successful replications.
    pub kappa_mean: f64,
    /// Sample standard deviation (divisor `M - 1`), 0 for a single success.
    pub kappa_std: f64,
    pub bandwidth_mean: f64,
    pub failures: usize,
    pub replications: Vec<ReplicationOutcome>,
}

impl StudyRow {
    pub fn kappas(&self) -> Vec<f64> {
        self.replications.iter().filter_map(|r| r.kappa).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub grid: EvaluationGrid,
    pub rows: Vec<StudyRow>,
}

/// Runs every replication of every sample size. Replications run in
/// parallel when the `parallel` feature is on; outcomes are stored in
/// replication order either way.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    let prepared = Prepared::new(config)?;
    let mut rows = Vec::with_capacity(config.sample_sizes.len());
    for &n in &config.sample_sizes {
        let oracle = match config.selector {
            Selector::Oracle => Some(oracle_bandwidth(&config.model, n)?.b),
            _ => None,
        };
        let outcomes = par::map_indices(config.replications, |rep| {
            match prepared.replicate(config, n, rep, oracle) {
                Ok((kappa, b)) => ReplicationOutcome {
                    replication: rep,
                    kappa: Some(kappa),
                    bandwidth: Some(b),
                    error: None,
                },
                Err(e) => ReplicationOutcome {
                    replication: rep,
                    kappa: None,
                    bandwidth: None,
                    error: Some(e.to_string()),
                },
            }
        });
        rows.push(aggregate(n, outcomes)?);
    }
    Ok(StudyResult {
        config: config.clone(),
        grid: prepared.grid,
        rows,
    })
}

fn aggregate(n: usize, replications: Vec<ReplicationOutcome>) -> Result<StudyRow> {
    let kappas: Vec<f64> = replications.iter().filter_map(|r| r.kappa).collect();
    let failures = replications.len() - kappas.len();
    if kappas.is_empty() {
        let last = replications
            .iter()
            .rev()
            .find_map(|r| r.error.clone())
            .unwrap_or_default();
        return Err(Error::AllReplicationsFailed {
            n,
            replications: replications.len(),
            last,
        });
    }
    let m = kappas.len() as f64;
    let kappa_mean = kappas.iter().sum::<f64>() / m;
    let kappa_std = if kappas.len() > 1 {
        (kappas.iter().map(|k| (k - kappa_mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let bandwidth_mean = replications.iter().filter_map(|r| r.bandwidth).sum::<f64>() / m;
    Ok(StudyRow {
        n,
        kappa_mean,
        kappa_std,
        bandwidth_mean,
        failures,
        replications,
    })
}
