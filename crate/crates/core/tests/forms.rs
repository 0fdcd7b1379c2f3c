use ddlab::coeff::{CRat, Coeff};
use ddlab::forms::*;
use ddlab::poly::{AnyPoly, BlockGrading, ExactPoly, FloatPoly, MultiPoly};
use ddlab::projgeom::{random_unit, FormRole, GroupElement};
use ddlab::quadrature::{chunk_rng, PlaneCurve};
use num_complex::Complex64;
use rand::Rng;

fn curve(s: &str) -> ExactPoly {
    MultiPoly::parse(BlockGrading::single("x", 3), s).unwrap()
}

fn cr(v: i64) -> CRat {
    CRat::from_i64(v)
}

fn cross(a: &[CRat], b: &[CRat]) -> Vec<CRat> {
    vec![
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

#[test]
fn chow_of_conic_vanishes_on_incident_pairs() {
    let f = curve("x0*x2 - x1^2");
    let c = chow_form_hypersurface(&f, 2).unwrap();
    assert_eq!(c.poly.multidegree().unwrap(), vec![2, 2]);
    let mut rng = chunk_rng(17, 0);
    let mut r = |lo: i64, hi: i64| rng.random_range(lo..=hi);
    for _ in 0..100 {
        // rational point (1 : t : t²) on the conic and two lines through it
        let t = CRat::from_ratio(r(-9, 9), r(1, 7));
        let x = vec![cr(1), t.clone(), t.clone() * t];
        let a: Vec<CRat> = (0..3).map(|_| cr(r(-5, 5))).collect();
        let b: Vec<CRat> = (0..3).map(|_| cr(r(-5, 5))).collect();
        let (h1, h2) = (cross(&a, &x), cross(&b, &x));
        let v = c.poly.eval(&[h1, h2]).unwrap();
        assert_eq!(v, CRat::from_i64(0));
    }
}

#[test]
fn chow_detects_incidence_on_random_tuples() {
    let f = curve("x0^3 + x1^3 + x2^3 - x0*x1*x2");
    let c = chow_form_hypersurface(&f, 2).unwrap();
    assert_eq!(c.poly.multidegree().unwrap(), vec![3, 3]);
    let cf = c.poly.to_float();
    let pc = PlaneCurve::new(&f).unwrap();
    let mut rng = chunk_rng(5, 0);
    let mut agree = 0;
    for i in 0..1000 {
        let (h1, h2) = if i % 2 == 0 {
            // two random lines through a point of the curve
            let u = random_unit(3, &mut rng);
            let x = pc.line_points(&u).unwrap()[0];
            let w = random_unit(3, &mut rng);
            let h2 = vec![x[1] * w[2] - x[2] * w[1], x[2] * w[0] - x[0] * w[2], x[0] * w[1] - x[1] * w[0]];
            (u, h2)
        } else {
            (random_unit(3, &mut rng), random_unit(3, &mut rng))
        };
        let p = generalized_cross(&[h1.clone(), h2.clone()]).unwrap().coords;
        let pn = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let on_curve = pc.eval(&p.iter().map(|z| z / pn).collect::<Vec<_>>()).norm() < 1e-9;
        let hn: f64 = [&h1, &h2].iter().map(|h| h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).product();
        let vanishes = cf.eval_c64(&[h1, h2]).unwrap().norm() / hn.powi(3) < 1e-9;
        if on_curve == vanishes && on_curve == (i % 2 == 0) {
            agree += 1;
        }
    }
    assert_eq!(agree, 1000);
}

#[test]
fn chow_equivariance() {
    let f = curve("x0^2 + 2*x1^2 - x2^2 + x0*x1");
    let c = chow_form_hypersurface(&f, 2).unwrap();
    let mut rng = chunk_rng(23, 0);
    let sigma = GroupElement::random(3, 0.7, &mut rng);
    let moved_curve = sigma.act_form(&f, FormRole::Points).unwrap();
    let c_moved = chow_form_hypersurface(&moved_curve, 2).unwrap().poly;
    let c_acted = sigma.act_form(&c.poly, FormRole::Hyperplanes).unwrap();
    let mut ratios = vec![];
    for _ in 0..100 {
        let pts = vec![random_unit(3, &mut rng), random_unit(3, &mut rng)];
        ratios.push(c_moved.eval_c64(&pts).unwrap() / c_acted.eval_c64(&pts).unwrap());
    }
    let r0 = ratios[0];
    for r in &ratios {
        assert!((r - r0).norm() <= 1e-9 * r0.norm(), "{r} vs {r0}");
    }
}

#[test]
fn chow_exact_equivariance_under_integer_sigma() {
    // σ = [[1,1,0],[0,1,0],[0,0,1]] has an integer inverse
    let f = curve("x0*x2 - x1^2");
    let sigma_inv = vec![vec![cr(1), cr(-1), cr(0)], vec![cr(0), cr(1), cr(0)], vec![cr(0), cr(0), cr(1)]];
    let sigma_t = vec![vec![cr(1), cr(0), cr(0)], vec![cr(1), cr(1), cr(0)], vec![cr(0), cr(0), cr(1)]];
    let moved = f.compose_linear(0, &sigma_inv).unwrap();
    let lhs = chow_form_hypersurface(&moved, 2).unwrap().poly;
    let c = chow_form_hypersurface(&f, 2).unwrap().poly;
    let rhs = c.compose_linear(0, &sigma_t).unwrap().compose_linear(1, &sigma_t).unwrap();
    assert_eq!(lhs, rhs);
}

fn ratio_spread(a: &FloatPoly, b: &FloatPoly, seed: u64) -> f64 {
    let mut rng = chunk_rng(seed, 0);
    let ratios: Vec<Complex64> = (0..100)
        .map(|_| {
            let u = random_unit(3, &mut rng);
            a.eval_c64(&[u.clone()]).unwrap() / b.eval_c64(&[u]).unwrap()
        })
        .collect();
    let mean: Complex64 = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    ratios.iter().map(|r| (r - mean).norm() / mean.norm()).fold(0.0, f64::max)
}

#[test]
fn eliminate_and_interpolate_agree() {
    for s in ["x0*x2 - x1^2", "x0^2 + x1^2 + x2^2 - 3*x0*x1", "x0^3 + x1^3 + x2^3", "x0^3 + 2*x1^3 - x2^3 + x0*x1*x2"] {
        let f = curve(s);
        let e = discriminant_eliminate(&f).unwrap();
        let i = discriminant_interpolate(&f, 99).unwrap();
        assert_eq!(e.computed_degree, e.claimed_degree, "{s}");
        let spread = ratio_spread(&e.to_float(), &i.to_float(), 3);
        assert!(spread <= 1e-6, "{s}: spread {spread:e}");
    }
}

#[test]
fn fermat_cubic_dual_by_interpolation() {
    let f = curve("x0^3 + x1^3 + x2^3");
    let d = discriminant_interpolate(&f, 4).unwrap();
    assert_eq!(d.computed_degree, 6);
    let AnyPoly::Float(p) = &d.poly else { panic!("float form expected") };
    assert_eq!(p.multidegree().unwrap(), vec![6]);
    let pc = PlaneCurve::new(&f).unwrap();
    for h in sample_tangent_lines(&pc, 20, 1234).unwrap() {
        assert!(p.eval_c64(&[h]).unwrap().norm() <= 1e-8);
    }
    // normalization: unit max coefficient, leading coefficient real positive
    let maxc = p.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    assert!((maxc - 1.0).abs() < 1e-12);
    let (_, lead) = p.terms().next().unwrap();
    assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
}

#[test]
fn dual_matches_adjugate_oracle() {
    for s in ["x0^2 + x1^2 + x2^2", "x0^2 + 2*x1^2 + 3*x2^2", "x0*x2 - x1^2", "x0^2 - x0*x1 + 5*x1*x2 + (1/2)*x2^2"] {
        let f = curve(s);
        let e = discriminant_eliminate(&f).unwrap();
        let a = dual_conic_adjugate(&conic_matrix(&f).unwrap()).unwrap();
        let AnyPoly::Exact(a) = a.poly else { unreachable!() };
        let AnyPoly::Exact(e) = e.poly else { unreachable!() };
        assert_eq!(integer_normalize(&a), e, "{s}");
    }
}

#[test]
fn quartic_dual_degree() {
    let f = curve("x0^4 + x1^4 + x2^4");
    let d = discriminant_interpolate(&f, 8).unwrap();
    assert_eq!(d.computed_degree, 12);
}

#[test]
fn singular_conic_adjugate_is_rejected() {
    let a = vec![vec![cr(1), cr(0), cr(0)], vec![cr(0), cr(1), cr(0)], vec![cr(0), cr(0), cr(0)]];
    assert!(dual_conic_adjugate(&a).is_err());
}
