use approx::assert_relative_eq;
use gamma_kde::bandwidth::{fit_gamma_reference, moment_summary, rule_of_thumb_bandwidth};
use gamma_kde::distributions::ParametricModel;
use gamma_kde::estimators::Sample;
use rand::seq::SliceRandom;

fn maxwell_sample(n: usize, seed: u64) -> Sample {
    ParametricModel::maxwell(1.0).unwrap().sampler(n, seed).unwrap()
}

#[test]
fn pipeline_is_scale_equivariant() {
    let s = maxwell_sample(1000, 21);
    let base = rule_of_thumb_bandwidth(&s).unwrap();
    let bd = base.diagnostics.as_ref().unwrap();
    for c in [0.01, 0.3, 7.0, 250.0] {
        let scaled = Sample::new(s.values().iter().map(|v| c * v).collect()).unwrap();
        let sel = rule_of_thumb_bandwidth(&scaled).unwrap();
        let d = sel.diagnostics.as_ref().unwrap();
        let (m0, m1) = (bd.moments.unwrap(), d.moments.unwrap());
        let (r0, r1) = (bd.reference.unwrap(), d.reference.unwrap());
        assert_relative_eq!(m1.mean, c * m0.mean, max_relative = 1e-12);
        assert_relative_eq!(m1.variance, c * c * m0.variance, max_relative = 1e-12);
        assert_relative_eq!(r1.b_m, c * r0.b_m, max_relative = 1e-12);
        assert_relative_eq!(r1.rho_m, r0.rho_m, max_relative = 1e-12);
        assert_relative_eq!(d.i_n, bd.i_n * c.powf(-1.5), max_relative = 1e-10);
        assert_relative_eq!(d.i_d, bd.i_d * c.powi(-5), max_relative = 1e-10);
        assert_relative_eq!(sel.b, c * base.b, max_relative = 1e-10);
    }
}

#[test]
fn rule_of_thumb_ignores_order() {
    let s = maxwell_sample(500, 4);
    let b = rule_of_thumb_bandwidth(&s).unwrap().b;
    let mut v = s.into_values();
    let mut rng = gamma_kde::distributions::stream_rng(99, 0);
    for _ in 0..5 {
        v.shuffle(&mut rng);
        let shuffled = Sample::new(v.clone()).unwrap();
        assert_eq!(rule_of_thumb_bandwidth(&shuffled).unwrap().b, b);
    }
}

#[test]
fn moment_matching_identities() {
    let s = maxwell_sample(800, 6);
    let m = moment_summary(&s).unwrap();
    let r = fit_gamma_reference(&m).unwrap();
    assert_relative_eq!(r.rho_m * r.b_m, m.mean, max_relative = 1e-12);
    assert_relative_eq!(r.rho_m * r.b_m * r.b_m, m.variance, max_relative = 1e-12);
}

#[test]
fn maxwell_regression_fixture() {
    let sel = rule_of_thumb_bandwidth(&maxwell_sample(1000, 2024)).unwrap();
    println!("fixture b = {:e}", sel.b);
    assert_relative_eq!(sel.b, FIXTURE, max_relative = 1e-12);
}

const FIXTURE: f64 = 9.898505035437269e-2;
