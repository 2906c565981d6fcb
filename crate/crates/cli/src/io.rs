//! Text formats: samples in, curves and study tables out.

use std::fmt::Write as _;

use gamma_kde::bandwidth::BandwidthSelection;
use gamma_kde::estimators::CurveEstimate;
use gamma_kde::simulation::StudyResult;
use gamma_kde::{Error, Result};

/// Shortest decimal that parses back to exactly `v`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Observations separated by whitespace, commas or newlines. `#` starts a
/// comment; a non-numeric first line is taken as a header.
pub fn parse_sample(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let first = !seen_content;
        seen_content = true;
        if first && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a number: {f:?}"),
            })?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("observations must be positive and finite, got {f}"),
                });
            }
            values.push(v);
        }
    }
    Ok(values)
}

/// `# bandwidth=... method=...` provenance line for a curve file.
pub fn provenance_line(selection: &BandwidthSelection, fallback: bool) -> String {
    let method = if fallback {
        "fallback".to_string()
    } else {
        serde_json::to_value(selection.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    };
    let mut line = format!("# bandwidth={} method={method}", fmt_f64(selection.b));
    if let Some(r) = selection.diagnostics.and_then(|d| d.reference) {
        let _ = write!(line, " rho_m={} b_m={}", fmt_f64(r.rho_m), fmt_f64(r.b_m));
    }
    line
}

pub fn curve_csv(curve: &CurveEstimate, truth: Option<&[f64]>, provenance: &str) -> String {
    let mut out = String::new();
    out.push_str(provenance);
    out.push('\n');
    out.push_str(if truth.is_some() { "x,true_value,value\n" } else { "x,value\n" });
    for (k, v) in curve.values.iter().enumerate() {
        let x = fmt_f64(curve.grid.point(k));
        match truth {
            Some(t) => writeln!(out, "{x},{},{}", fmt_f64(t[k]), fmt_f64(*v)),
            None => writeln!(out, "{x},{}", fmt_f64(*v)),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

/// A curve file read back: abscissae, optional truth column, estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub x: Vec<f64>,
    pub true_value: Option<Vec<f64>>,
    pub value: Vec<f64>,
    pub comments: Vec<String>,
}

pub fn read_curve(text: &str) -> Result<CurveTable> {
    let mut comments = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let (mut x, mut truth, mut value) = (Vec::new(), Vec::new(), Vec::new());
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(cols) = &header else {
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        };
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let num = |f: &str| {
            f.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a number: {f:?}"),
            })
        };
        x.push(num(fields[0])?);
        if cols.len() == 3 {
            truth.push(num(fields[1])?);
        }
        value.push(num(fields[cols.len() - 1])?);
    }
    match header.as_deref().map(|h| h.join(",")) {
        Some(h) if h == "x,value" || h == "x,true_value,value" => {}
        other => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected curve header {other:?}"),
            })
        }
    }
    let true_value = (!truth.is_empty() || header.as_ref().is_some_and(|h| h.len() == 3)).then_some(truth);
    Ok(CurveTable {
        x,
        true_value,
        value,
        comments,
    })
}

pub fn study_csv(result: &StudyResult) -> String {
    let mut out = String::from("n,kappa_mean,kappa_std,bandwidth_mean,failures\n");
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            fmt_f64(r.kappa_mean),
            fmt_f64(r.kappa_std),
            fmt_f64(r.bandwidth_mean),
            r.failures
        )
        .expect("writing to a String cannot fail");
    }
    out
}
