use std::sync::Arc;

use ddlab::poly::{BlockGrading, FloatPoly};
use ddlab::projgeom::{random_unit, GroupElement, C64};
use ddlab::quadrature::*;

fn ratio0(x: &[Vec<C64>]) -> f64 {
    let v = &x[0];
    v[0].norm_sqr() / v.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

fn curve(s: &str) -> PlaneCurve {
    PlaneCurve::smooth(&FloatPoly::parse(BlockGrading::single("x", 3), s).unwrap()).unwrap()
}

fn within(e: &Estimate, expected: f64, k: f64) {
    assert!((e.value - expected).abs() <= k * e.stderr, "{} ± {} vs {expected}", e.value, e.stderr);
}

#[test]
fn coordinate_moments_on_projective_space() {
    // E|z0|² = 1/(N+1) for the FS measure
    for (n, expected) in [(1, 0.5), (2, 1.0 / 3.0)] {
        let e = integrate_projective(ratio0, &SpaceSpec::Projective(n), 200_000, 7).unwrap();
        within(&e, expected, 4.0);
    }
}

#[test]
fn log_coordinate_integrals() {
    // ∫ log(|z0|²/‖z‖²) = -H_N
    for (n, expected) in [(1, -1.0), (2, -1.5)] {
        let e = integrate_projective(|x| ratio0(x).ln(), &SpaceSpec::Projective(n), 200_000, 8).unwrap();
        within(&e, expected, 4.0);
    }
}

#[test]
fn unitary_invariance_of_the_measure() {
    let mut rng = chunk_rng(9, 0);
    let u = GroupElement::random_unitary(3, &mut rng);
    let f = |x: &[Vec<C64>]| ratio0(x).sqrt();
    let a = integrate_projective(f, &SpaceSpec::Projective(2), 200_000, 10).unwrap();
    let b = integrate_projective(|x| f(&[u.apply(&x[0])]), &SpaceSpec::Projective(2), 200_000, 11).unwrap();
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.value - b.value).abs() <= 4.0 * se);
}

#[test]
fn stderr_scales_as_inverse_root_budget() {
    let space = SpaceSpec::Projective(2);
    let a = integrate_projective(ratio0, &space, 50_000, 12).unwrap();
    let b = integrate_projective(ratio0, &space, 100_000, 13).unwrap();
    let r = a.stderr / b.stderr;
    assert!((r / 2f64.sqrt() - 1.0).abs() <= 0.2, "ratio {r}");
}

#[test]
fn same_seed_is_bitwise_deterministic() {
    let space = SpaceSpec::Product(vec![1, 2]);
    let f = |x: &[Vec<C64>]| ratio0(x) * x[1][2].norm();
    let a = integrate_projective(f, &space, 30_000, 14).unwrap();
    let b = integrate_projective(f, &space, 30_000, 14).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let s1 = sample_fs(&space, 100, 14).unwrap();
    let s2 = sample_fs(&space, 100, 14).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn invalid_spaces_are_rejected() {
    assert!(integrate_projective(ratio0, &SpaceSpec::Projective(0), 10, 1).is_err());
    assert!(integrate_projective(ratio0, &SpaceSpec::Product(vec![]), 10, 1).is_err());
}

#[test]
fn curve_area_is_the_degree() {
    let mut rng = chunk_rng(15, 0);
    for (s, d) in [("x0*x2 - x1^2", 2.0), ("x0^3 + x1^3 + x2^3", 3.0), ("x0^4 + x1^4 + x2^4 - x0*x1*x2^2", 4.0)] {
        let c = curve(s);
        let base = curve_integral(&c, |_| 1.0, &CurveMeasure::Base, 2_000, 16).unwrap();
        assert!((base.value - d).abs() < 1e-12, "{s}");
        // the class of ω_φ does not depend on φ
        let phi = GroupElement::random(3, 0.6, &mut rng).bergman_potential();
        let e = curve_integral(&c, |_| 1.0, &CurveMeasure::Deformed(phi), 100_000, 17).unwrap();
        within(&e, d, 4.0);
    }
}

#[test]
fn fermat_curve_coordinate_moment() {
    // symmetric in the coordinates, so ∫_X |x0|²/‖x‖² ω = d/3
    let c = curve("x0^3 + x1^3 + x2^3");
    let e = curve_integral(&c, |x| ratio0(&[x.to_vec()]), &CurveMeasure::Base, 200_000, 18).unwrap();
    within(&e, 1.0, 4.0);
    assert_eq!(SpaceSpec::PlaneCurve(Arc::new(c)).volume_factor(), 3.0);
}

#[test]
fn paired_log_ratio_of_coordinates() {
    // ∫ log|z0|² - log|z1|² vanishes by symmetry and the pairing keeps it tight
    let space = SpaceSpec::Projective(2);
    let e = paired_log_ratio(|x| x[0][0].norm_sqr(), |x| x[0][1].norm_sqr(), &space, 100_000, 19).unwrap();
    within(&e, 0.0, 4.0);
    let g = GroupElement::diagonal(&[C64::new(2.0, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.0)]).unwrap();
    let e = paired_log_ratio(|x| g.apply(&x[0])[0].norm_sqr(), |x| x[0][0].norm_sqr(), &space, 10_000, 20).unwrap();
    // the ratio is the constant |2|² after normalization
    assert!((e.value - 4f64.ln()).abs() < 1e-12 && e.stderr < 1e-12);
}

#[test]
fn singular_curves_are_detected() {
    let f = FloatPoly::parse(BlockGrading::single("x", 3), "x0*x2").unwrap();
    assert!(PlaneCurve::smooth(&f).is_err());
    let f = FloatPoly::parse(BlockGrading::single("x", 3), "x1^2*x2 - x0^3 - x0^2*x2").unwrap();
    assert!(PlaneCurve::smooth(&f).is_err());
    let mut rng = chunk_rng(21, 0);
    let u = random_unit(3, &mut rng);
    assert_eq!(curve("x0^2 + x1^2 + x2^2").line_points(&u).unwrap().len(), 2);
}
