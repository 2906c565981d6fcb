//! `gkde`: gamma kernel estimation of densities and density derivatives
//! from the command line.

pub mod io;

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gamma_kde::asymptotics::{Expansion, MiseFunctionals};
use gamma_kde::bandwidth::{rule_of_thumb_bandwidth, BandwidthSelection};
use gamma_kde::distributions::ParametricModel;
use gamma_kde::estimators::{estimate_curve, EvaluationGrid, Sample, Target};
use gamma_kde::simulation::{auto_grid, run_study, truth_curve, GridPolicy, Selector, StudyConfig};
use gamma_kde::Error;

use crate::io::{curve_csv, fmt_f64, parse_sample, provenance_line, study_csv};

/// Grid points used by `estimate` when no grid or model is given.
pub const SAMPLE_GRID_POINTS: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "gkde", version, about = "Gamma kernel density and density-derivative estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a density or derivative curve from a sample.
    Estimate(EstimateArgs),
    /// Report the rule-of-thumb bandwidth and its ingredients.
    Bandwidth(BandwidthArgs),
    /// Run a seeded Monte Carlo study against a known law.
    Simulate(SimulateArgs),
    /// Leading-order MISE of the derivative estimator for a known law.
    Asymptotics(AsymptoticsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample file; standard input when omitted or -.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "density")]
    pub target: Target,
    /// auto (rule of thumb) or a positive value.
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,
    /// Used when the rule of thumb fails on a numerical precondition.
    #[arg(long)]
    pub fallback_bandwidth: Option<f64>,
    /// min:max:points or auto.
    #[arg(long, default_value = "auto")]
    pub grid: String,
    /// Known law (maxwell:σ, weibull:s, gamma:ρ,b) to add a truth column.
    #[arg(long)]
    pub model: Option<ParametricModel>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// Sample file; standard input when omitted or -.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// maxwell:σ, weibull:s or gamma:ρ,b.
    #[arg(long)]
    pub dist: ParametricModel,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    /// Replications per sample size.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Base seed; every replication stream derives from it.
    #[arg(long)]
    pub seed: u64,
    /// rot, oracle or fixed:<b>.
    #[arg(long, default_value = "rot")]
    pub selector: Selector,
    /// Worker threads; 1 runs serially.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "derivative")]
    pub target: Target,
    /// min:max:points or auto.
    #[arg(long, default_value = "auto")]
    pub grid: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    #[arg(long)]
    pub dist: ParametricModel,
    #[arg(long)]
    pub n: usize,
    /// Bandwidth at which to report the MISE; the optimum when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

/// Output of a successful command: what goes to stdout (or `--output`) and
/// any warnings for stderr.
#[derive(Debug, Default)]
pub struct Report {
    pub body: String,
    pub warnings: Vec<String>,
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Bandwidth(a) => bandwidth(a),
        Command::Simulate(a) => simulate(a),
        Command::Asymptotics(a) => asymptotics(a),
    }
}

fn read_input(path: Option<&PathBuf>) -> Result<Sample, CliError> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => fs::read_to_string(p)
            .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    Ok(Sample::new(parse_sample(&text)?)?)
}

fn parse_grid(spec: &str) -> Result<Option<EvaluationGrid>, CliError> {
    if spec.trim() == "auto" {
        Ok(None)
    } else {
        Ok(Some(spec.parse()?))
    }
}

fn closed_form_warning(sel: &BandwidthSelection) -> Option<String> {
    let d = sel.diagnostics?;
    d.closed_form_warning().then(|| {
        format!(
            "warning: printed closed form of I_d ({}) differs from quadrature ({}) by {:.2}%; quadrature is used",
            fmt_f64(d.i_d_printed_closed_form.unwrap_or(f64::NAN)),
            fmt_f64(d.i_d),
            100.0 * d.i_d_closed_form_disagreement.unwrap_or(f64::NAN)
        )
    })
}

fn estimate(a: EstimateArgs) -> Result<Report, CliError> {
    let sample = read_input(a.input.as_ref())?;
    let mut warnings = Vec::new();
    let (selection, fallback) = if a.bandwidth.trim() == "auto" {
        match rule_of_thumb_bandwidth(&sample) {
            Ok(sel) => (sel, false),
            Err(e) if e.is_numerical() || matches!(e, Error::Degenerate(_)) => match a.fallback_bandwidth {
                Some(b) => {
                    warnings.push(format!("warning: rule of thumb failed ({e}); using fallback bandwidth {b}"));
                    (BandwidthSelection::fixed(b)?, true)
                }
                None => {
                    let mut err = CliError::from(e);
                    err.message.push_str("; pass --bandwidth <value> or --fallback-bandwidth <value>");
                    return Err(err);
                }
            },
            Err(e) => return Err(e.into()),
        }
    } else {
        let b: f64 = a
            .bandwidth
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("--bandwidth must be auto or a number, got {:?}", a.bandwidth)))?;
        (BandwidthSelection::fixed(b)?, false)
    };
    warnings.extend(closed_form_warning(&selection));

    let grid = match (parse_grid(&a.grid)?, &a.model) {
        (Some(g), _) => g,
        (None, Some(m)) => auto_grid(m)?,
        (None, None) => {
            let hi = sample.values().iter().copied().fold(0.0, f64::max);
            EvaluationGrid::new(0.01 * hi, hi, SAMPLE_GRID_POINTS)?
        }
    };
    let curve = estimate_curve(&sample, selection.b, &grid, a.target)?;
    let truth = a
        .model
        .as_ref()
        .map(|m| truth_curve(m, &grid, a.target))
        .transpose()?;

    let body = match a.format {
        Format::Csv => curve_csv(&curve, truth.as_deref(), &provenance_line(&selection, fallback)),
        Format::Json => {
            let points: Vec<_> = (0..grid.points)
                .map(|k| {
                    let mut p = json!({ "x": grid.point(k), "value": curve.values[k] });
                    if let Some(t) = &truth {
                        p["true_value"] = json!(t[k]);
                    }
                    p
                })
                .collect();
            let doc = json!({
                "target": a.target,
                "model": a.model,
                "fallback": fallback,
                "bandwidth": selection,
                "grid": grid,
                "curve": points,
            });
            pretty(&doc)
        }
    };
    Ok(Report {
        body,
        warnings,
        output: a.output,
    })
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn bandwidth(a: BandwidthArgs) -> Result<Report, CliError> {
    let sample = read_input(a.input.as_ref())?;
    let sel = rule_of_thumb_bandwidth(&sample)?;
    let warnings = closed_form_warning(&sel).into_iter().collect();
    let d = sel.diagnostics.expect("rule of thumb always reports diagnostics");
    let (m, r) = (
        d.moments.expect("moments are recorded"),
        d.reference.expect("reference is recorded"),
    );
    let fields = [
        ("m_bar", m.mean),
        ("d_bar", m.variance),
        ("rho_m", r.rho_m),
        ("b_m", r.b_m),
        ("i_n", d.i_n),
        ("i_d", d.i_d),
        ("b_0g", sel.b),
    ];
    let body = if a.json {
        let obj: serde_json::Map<_, _> = fields.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        pretty(&serde_json::Value::Object(obj))
    } else {
        fields
            .iter()
            .map(|(k, v)| format!("{k:<6} {}\n", fmt_f64(*v)))
            .collect()
    };
    Ok(Report {
        body,
        warnings,
        output: None,
    })
}

fn simulate(a: SimulateArgs) -> Result<Report, CliError> {
    let mut config = StudyConfig::new(a.dist, a.sizes, a.reps, a.seed);
    config.selector = a.selector;
    config.target = a.target;
    if let Some(g) = parse_grid(&a.grid)? {
        config.grid = GridPolicy::Explicit(g);
    }
    let result = with_threads(a.threads, || run_study(&config))??;
    let warnings = result
        .rows
        .iter()
        .filter(|r| r.failures > 0)
        .map(|r| format!("warning: {} of {} replications failed at n = {}", r.failures, r.replications.len(), r.n))
        .collect();
    let body = match a.format {
        Format::Csv => study_csv(&result),
        Format::Json => pretty(&serde_json::to_value(&result).expect("study results serialize")),
    };
    Ok(Report {
        body,
        warnings,
        output: a.output,
    })
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::input("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(0) => Err(CliError::input("--threads must be at least 1")),
        _ => Ok(f()),
    }
}

fn asymptotics(a: AsymptoticsArgs) -> Result<Report, CliError> {
    let fun = MiseFunctionals::for_model(&a.dist)?;
    let leading_opt = fun.optimal_bandwidth(a.n.max(1));
    let full_opt = fun.minimize(a.n, Expansion::Full, 0.01 * leading_opt, 100.0 * leading_opt, 200)?;
    let b = a.bandwidth.unwrap_or(leading_opt);
    let report = fun.evaluate(b, a.n, Expansion::Full)?;
    let body = if a.json {
        pretty(&json!({
            "model": a.dist,
            "functionals": fun,
            "optimal_bandwidth_leading": leading_opt,
            "optimal_bandwidth_full": full_opt,
            "mise": report,
        }))
    } else {
        [
            ("bias_integral", fun.bias_integral),
            ("variance_integral", fun.variance_integral),
            ("correction_integral", fun.correction_integral),
            ("b_opt_leading", leading_opt),
            ("b_opt_full", full_opt),
            ("b", b),
            ("integrated_sq_bias", report.integrated_sq_bias),
            ("integrated_variance", report.integrated_variance),
            ("mise", report.mise),
        ]
        .iter()
        .map(|(k, v)| format!("{k:<20} {}\n", fmt_f64(*v)))
        .collect()
    };
    Ok(Report {
        body,
        warnings: Vec::new(),
        output: None,
    })
}

/// Writes a report to its destination; warnings go to stderr.
pub fn emit(report: &Report) -> Result<(), CliError> {
    for w in &report.warnings {
        eprintln!("{w}");
    }
    match &report.output {
        Some(p) => fs::write(p, &report.body).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.body.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}
