use std::io::Write;
use std::process::{Command, Output, Stdio};

use gamma_kde::distributions::ParametricModel;
use gamma_kde::estimators::{estimate_curve, EvaluationGrid, Target};
use gamma_kde::simulation::{kappa_error, truth_curve};
use gamma_kde_cli::io::read_curve;

fn gkde(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_gkde"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn maxwell_text(n: usize, seed: u64) -> String {
    let s = ParametricModel::maxwell(1.0).unwrap().sampler(n, seed).unwrap();
    s.values().iter().map(|v| format!("{v}\n")).collect()
}

#[test]
fn fixed_bandwidth_curve_shape() {
    let o = gkde(
        &["estimate", "--target", "derivative", "--bandwidth", "0.2", "--grid", "0.1:5:50"],
        &maxwell_text(200, 1),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# bandwidth=0.2 method=fixed");
    assert_eq!(lines[1], "x,value");
    assert_eq!(lines.len(), 52);
}

#[test]
fn auto_bandwidth_provenance() {
    let o = gkde(&["estimate", "--grid", "0.1:4:10"], &maxwell_text(500, 2));
    assert!(o.status.success(), "{}", stderr(&o));
    let first = stdout(&o).lines().next().unwrap().to_string();
    let fields: Vec<&str> = first.trim_start_matches("# ").split(' ').collect();
    assert_eq!(fields.len(), 4, "{first}");
    assert!(fields[0].starts_with("bandwidth="));
    assert_eq!(fields[1], "method=rule_of_thumb");
    assert!(fields[2].starts_with("rho_m=") && fields[3].starts_with("b_m="));
    for f in [fields[0], fields[2], fields[3]] {
        let v: f64 = f.split('=').nth(1).unwrap().parse().unwrap();
        assert!(v > 0.0);
    }
}

#[test]
fn empty_input_is_an_input_error() {
    let o = gkde(&["estimate"], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no observations"));
}

#[test]
fn bad_values_report_line_numbers() {
    let o = gkde(&["estimate", "--bandwidth", "0.1"], "1.0\n2.0\n-3\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn bandwidth_report() {
    let o = gkde(&["bandwidth"], "1\n2\n3\n");
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("m_bar  2\n"), "{text}");
    assert!(text.contains("d_bar  0.6666666666666666\n"), "{text}");

    let o = gkde(&["bandwidth", "--json"], "1\n2\n3\n");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let obj = v.as_object().unwrap();
    assert_eq!(obj.len(), 7);
    for k in ["m_bar", "d_bar", "rho_m", "b_m", "i_n", "i_d", "b_0g"] {
        assert!(obj[k].as_f64().unwrap() > 0.0, "{k}");
    }
    assert_eq!(obj["m_bar"].as_f64(), Some(2.0));
    // ρ_m = 6 here and the printed closed form disagrees with quadrature
    assert!(stderr(&o).contains("warning: printed closed form"));
}

#[test]
fn constant_sample_is_degenerate() {
    let o = gkde(&["bandwidth"], "2\n2\n2\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("variance is zero"));
}

#[test]
fn dispersed_sample_fails_with_exit_two_and_fallback_recovers() {
    let data = "0.01\n0.02\n0.05\n5\n10\n";
    let o = gkde(&["estimate"], data);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bandwidth <value>"));
    let o = gkde(&["estimate", "--fallback-bandwidth", "0.3", "--grid", "0.1:2:5"], data);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("# bandwidth=0.3 method=fallback\n"));
    assert!(stderr(&o).contains("fallback"));
}

#[test]
fn simulate_table_shape() {
    let o = gkde(
        &["simulate", "--dist", "weibull:3", "--sizes", "100,1000,2000", "--reps", "10", "--seed", "7", "--selector", "rot"],
        "",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,kappa_mean,kappa_std,bandwidth_mean,failures");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2000,"));
    assert!(lines[1..].iter().all(|l| l.ends_with(",0")));
}

#[test]
fn simulate_requires_a_seed() {
    let o = gkde(&["simulate", "--dist", "maxwell:1", "--sizes", "100"], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn oracle_study_is_finite() {
    let o = gkde(
        &["simulate", "--dist", "maxwell:1", "--sizes", "200", "--reps", "5", "--seed", "1", "--selector", "oracle", "--format", "json"],
        "",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = &v["rows"][0];
    assert!(row["kappa_mean"].as_f64().unwrap().is_finite());
    assert_eq!(row["replications"].as_array().unwrap().len(), 5);
}

#[test]
fn divergent_oracle_exits_two() {
    let o = gkde(
        &["simulate", "--dist", "weibull:2", "--sizes", "100", "--reps", "2", "--seed", "1", "--selector", "oracle"],
        "",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not finite"));
}

#[test]
fn thread_count_does_not_change_output() {
    let base = ["simulate", "--dist", "maxwell:1", "--sizes", "100,300", "--reps", "12", "--seed", "5", "--format", "json"];
    let run = |threads: &str| {
        let mut a = base.to_vec();
        a.extend(["--threads", threads]);
        gkde(&a, "").stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn curve_round_trip_reproduces_kappa() {
    let model = ParametricModel::maxwell(1.0).unwrap();
    let sample = model.sampler(400, 33).unwrap();
    let text: String = sample.values().iter().map(|v| format!("{v}\n")).collect();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sample.txt");
    let output = dir.path().join("curve.csv");
    std::fs::write(&input, text).unwrap();
    let o = gkde(
        &[
            "estimate", "--input", input.to_str().unwrap(), "--target", "derivative", "--bandwidth", "0.15",
            "--grid", "0.05:4:120", "--model", "maxwell:1", "--output", output.to_str().unwrap(),
        ],
        "",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_curve(&std::fs::read_to_string(&output).unwrap()).unwrap();

    let grid = EvaluationGrid::new(0.05, 4.0, 120).unwrap();
    let curve = estimate_curve(&sample, 0.15, &grid, Target::Derivative).unwrap();
    let truth = truth_curve(&model, &grid, Target::Derivative).unwrap();
    let in_process = kappa_error(&truth, &curve).unwrap();

    assert_eq!(table.x, grid.abscissae());
    assert_eq!(table.true_value.as_deref(), Some(&truth[..]));
    let reparsed = gamma_kde::estimators::CurveEstimate {
        values: table.value.clone(),
        ..curve.clone()
    };
    let k = kappa_error(table.true_value.as_ref().unwrap(), &reparsed).unwrap();
    assert_eq!(k, in_process);
}

#[test]
fn json_curve_output() {
    let o = gkde(
        &["estimate", "--bandwidth", "0.2", "--grid", "0.5:2:4", "--format", "json", "--model", "weibull:3"],
        "0.5\n0.9\n1.1\n1.4\n",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let pts = v["curve"].as_array().unwrap();
    assert_eq!(pts.len(), 4);
    assert!(pts[0]["true_value"].is_number());
    assert_eq!(v["bandwidth"]["method"], "fixed");
}

#[test]
fn asymptotics_report() {
    let o = gkde(&["asymptotics", "--dist", "maxwell:1", "--n", "1000", "--json"], "");
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lead = v["optimal_bandwidth_leading"].as_f64().unwrap();
    let full = v["optimal_bandwidth_full"].as_f64().unwrap();
    assert!((full / lead - 1.0).abs() < 0.02);
    let m = &v["mise"];
    let sum = m["integrated_sq_bias"].as_f64().unwrap() + m["integrated_variance"].as_f64().unwrap();
    assert_eq!(m["mise"].as_f64().unwrap(), sum);
}
