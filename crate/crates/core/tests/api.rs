use lpball::distributions::{draw_sample, sphere_directions};
use lpball::{empirical_hat_q, empirical_p_mean, project_abs, psi, DistributionSpec, Exact, Law, Sample, TrimSpec};
use num_bigint::BigInt;

fn rat(n: i64, d: i64) -> Exact {
    Exact::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn exact_rational_psi() {
    // |z| = 5, 4, 3, 2, 1 (nonincreasing); theta = 2/5 keeps ranks 2..5
    let z: Vec<Exact> = [3, 1, 5, 2, 4].iter().map(|&k| rat(k, 1)).collect();
    let spec = TrimSpec::new(2.0, 0.4).unwrap();
    assert_eq!(psi(&z, &spec).unwrap(), rat(16 + 9 + 4 + 1, 5));
    assert_eq!(empirical_p_mean(&z, 2.0).unwrap(), rat(55, 5));
    assert_eq!(empirical_hat_q(&z, 0.4).unwrap(), rat(4, 1));
}

#[test]
fn f32_and_f64_agree_on_small_integers() {
    let z64: Vec<f64> = (1..=16).map(f64::from).collect();
    let z32: Vec<f32> = (1..=16).map(|k| k as f32).collect();
    let spec = TrimSpec::new(3.0, 0.25).unwrap();
    let a = psi(&z64, &spec).unwrap();
    let b = psi(&z32, &spec).unwrap();
    assert_eq!(a, f64::from(b));
    // ranks 4..16 of 16..1 are 13..1
    assert_eq!(a, (1..=13).map(|k| f64::from(k).powi(3)).sum::<f64>() / 16.0);
}

#[test]
fn projected_sample_through_public_api() {
    let spec = DistributionSpec::new(Law::ProductLaplace, 4).unwrap();
    let sample: Sample = draw_sample(&spec, 2000, 11).unwrap();
    let dirs = sphere_directions(4, 3, 12).unwrap();
    for v in &dirs {
        let z = project_abs(&sample, v).unwrap();
        assert_eq!(z.len(), 2000);
        let est = psi(&z, &TrimSpec::new(2.0, 0.01).unwrap()).unwrap();
        let mean = empirical_p_mean(&z, 2.0).unwrap();
        assert!(est <= mean && est > 0.7 && mean < 1.3, "{est} {mean}");
    }
    assert_eq!(draw_sample(&spec, 2000, 11).unwrap().as_flat(), sample.as_flat());
}
