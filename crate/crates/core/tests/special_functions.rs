use std::f64::consts::PI;

use hqe::geometry::{GroupElement, PlanePoint};
use hqe::quadrature::QuadratureSpec;
use hqe::special_functions::*;
use hqe::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pt(x: f64, y: f64) -> PlanePoint {
    PlanePoint::new(x, y).unwrap()
}

#[test]
fn p_n_two_factor_product() {
    let r = 1.0;
    let got = eval_p_n(Complex64::i() * (2.0 * r), 2);
    assert!((got - c(0.5, 1.0) * c(1.5, 1.0)).norm() < 1e-15);
    assert_eq!(eval_p_n(c(3.0, 0.0), -1), c(2.0, 0.0));
}

#[test]
fn spherical_at_the_base_point() {
    for r in [0.0, 0.7, 5.0, 40.0] {
        for n in -2..=2 {
            let v = spherical(c(r, 0.0), n, PlanePoint::i());
            let want = if n == 0 { 1.0 } else { 0.0 };
            assert!((v - c(want, 0.0)).norm() < 1e-10, "r={r} n={n}: {v}");
        }
    }
}

#[test]
fn spherical_matches_refined_quadrature() {
    // 30-digit adaptive quadrature of (1/pi) int Im(k^{-1} z)^s e^{2in theta}
    let v = spherical(c(2.0, 0.0), 0, pt(0.0, 2.0));
    assert!((v - c(0.559_410_489_368_625_3, 0.0)).norm() < 1e-12, "{v}");
    let v = spherical(c(1.0, 0.0), 1, pt(1.0, 2.0));
    assert!((v - c(0.344_865_277_475_085_5, 0.258_648_958_106_314_1)).norm() < 1e-12, "{v}");
}

#[test]
fn gauss_and_trapezoid_rules_agree() {
    let z = pt(0.3, 1.7);
    let a = eval_spherical(c(3.0, 0.0), 1, z, QuadratureSpec::trapezoid(512)).unwrap();
    let b = eval_spherical(c(3.0, 0.0), 1, z, QuadratureSpec::gauss(256)).unwrap();
    assert!((a - b).norm() < 1e-12);
}

#[test]
fn low_resolution_is_an_error() {
    let r = eval_spherical(c(200.0, 0.0), 0, pt(0.0, 5.0), QuadratureSpec::trapezoid(64));
    assert!(matches!(r, Err(SpecialError::ResolutionTooLow { .. })));
}

#[test]
fn symmetry_examples() {
    assert!(spherical_symmetry_residual(1.0, 1, pt(0.0, 2.0)).unwrap() < 1e-8);
    assert!(spherical_symmetry_residual(3.0, 2, pt(1.0, 1.0)).unwrap() < 1e-8);
    assert!(spherical_symmetry_residual(4.5, 0, pt(-0.5, 0.4)).unwrap() < 1e-13);
}

#[test]
fn symmetry_grid() {
    let zs = [pt(0.0, 2.0), pt(1.0, 1.0), pt(-0.4, 0.6), pt(2.0, 3.0)];
    for r in [0.5, 1.0, 3.0, 10.0, 30.0] {
        for n in [0, 1, 2] {
            for z in zs {
                let res = spherical_symmetry_residual(r, n, z).unwrap();
                assert!(res < 1e-8, "r={r} n={n} z={z:?}: {res:.3e}");
            }
        }
    }
}

#[test]
fn p_n_ratio_pole_is_reported() {
    // P_1(-2ir) vanishes at ir = 1/2
    assert!(matches!(p_n_ratio(c(0.0, -0.5), 1), Err(SpecialError::Pole(_))));
    assert_eq!(p_n_ratio(c(0.0, 0.0), 3).unwrap(), c(1.0, 0.0));
}

#[test]
fn exceptional_points_are_validated() {
    assert!(SpectralPoint::new(vec![c(0.0, 0.3)]).is_ok());
    assert!(SpectralPoint::new(vec![c(0.0, 0.5)]).is_err());
    assert!(SpectralPoint::new(vec![c(1.0, 0.1)]).is_err());
    let sp = SpectralPoint::new(vec![c(0.0, 0.3), c(2.0, 0.0)]).unwrap();
    assert!(sp.is_exceptional());
    let lam = sp.lambda();
    assert!((lam[0] - (0.25 - 0.09)).abs() < 1e-15 && (lam[1] - 4.25).abs() < 1e-15);
}

#[test]
fn decay_slope_is_minus_one_half() {
    let grid: Vec<f64> = (0..8).map(|k| 50.0 * 2f64.powf(3.0 * k as f64 / 7.0)).collect();
    for (n, z) in [(0, pt(0.0, 2.0)), (1, pt(0.0, 3.0)), (1, pt(1.0, 1.0))] {
        let slope = decay_exponent_fit(n, z, &grid).unwrap();
        assert!((slope + 0.5).abs() < 0.05, "n={n} z={z:?}: {slope}");
    }
}

#[test]
fn decay_fit_preconditions() {
    let grid = [50.0, 100.0];
    assert!(matches!(decay_exponent_fit(0, PlanePoint::i(), &grid), Err(SpecialError::PointAtOrigin(_))));
    assert!(matches!(decay_exponent_fit(0, pt(0.0, 2.0), &[10.0, 20.0]), Err(SpecialError::BadGrid)));
    assert!(matches!(decay_exponent_fit(0, pt(0.0, 2.0), &[100.0, 50.0]), Err(SpecialError::BadGrid)));
}

#[test]
fn spherical_functions_are_laplace_eigenfunctions() {
    let h = 1e-3;
    for (r, n, z) in [(1.5, 0, pt(0.2, 1.4)), (2.0, 1, pt(-0.3, 0.9)), (0.8, 2, pt(0.5, 2.0))] {
        let f = |x: f64, y: f64| spherical(c(r, 0.0), n, pt(x, y));
        let lap = (f(z.x + h, z.y) + f(z.x - h, z.y) + f(z.x, z.y + h) + f(z.x, z.y - h) - f(z.x, z.y) * 4.0)
            * (z.y * z.y / (h * h));
        let want = -f(z.x, z.y) * (r * r + 0.25);
        assert!((lap - want).norm() < 1e-5 * want.norm().max(1.0), "r={r} n={n}: {lap} vs {want}");
    }
}

fn arb_point() -> impl Strategy<Value = PlanePoint> {
    (-2.0..2.0f64, 0.2..4.0f64).prop_map(|(x, y)| pt(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn k_equivariance(r in 0.0..30.0f64, n in -3i64..=3, z in arb_point(), alpha in 0.0..PI) {
        let rot = GroupElement::k(alpha).act(z);
        let lhs = spherical(c(r, 0.0), n, rot);
        let rhs = spherical(c(r, 0.0), n, z) * Complex64::from_polar(1.0, 2.0 * n as f64 * alpha);
        prop_assert!((lhs - rhs).norm() < 1e-8, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn even_in_r_at_n_zero(r in 0.0..30.0f64, z in arb_point()) {
        let a = spherical(c(r, 0.0), 0, z);
        let b = spherical(c(-r, 0.0), 0, z);
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn phi_r_modulus(r in -5.0..5.0f64, im in -0.45..0.45f64, z in arb_point()) {
        let v = eval_phi_r(c(r, im), z);
        prop_assert!((v.norm() - z.y.powf(0.5 - im)).abs() < 1e-12 * v.norm().max(1.0));
    }
}
