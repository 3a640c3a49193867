use std::f64::consts::PI;

use hqe::geometry::{GroupElement, PlanePoint};
use hqe::lie_operators::{build_lift, Domain, ModelEigenfunction, PlaneWave, RegionResolution, SmoothObservable};
use hqe::quadrature::Rule;
use hqe::special_functions::{KType, SpectralPoint};
use hqe::transforms::*;
use hqe::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// int f phi_r dz in polar coordinates, written out independently of the library.
fn polar_oracle(f: &KTypeFunction, r: f64) -> Complex64 {
    let s = Complex64::new(0.5, r);
    let radial = Rule::composite_gauss(0.0, f.support_radius, 40, 20);
    let m = 400;
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, wt) in radial.nodes.iter().zip(&radial.weights) {
        for q in 0..m {
            let th = PI * q as f64 / m as f64;
            let (sn, cs) = th.sin_cos();
            // Im(k_theta (i e^t)) = e^t / (cos^2 + e^{2t} sin^2)
            let y = t.exp() / (cs * cs + (2.0 * t).exp() * sn * sn);
            acc += f.eval_polar(*t, th) * (s * y.ln()).exp() * (2.0 * t.sinh() * wt * PI / m as f64);
        }
    }
    acc
}

#[test]
fn zero_function_transforms_to_zero() {
    let f = KTypeFunction::from_radial(0, 1.0, |_| c(0.0));
    assert_eq!(spherical_transform(&f, c(2.0)).unwrap(), c(0.0));
    let h = WindowFunction::generic(0, 1.0, |_| c(0.0));
    assert_eq!(inverse_spherical_transform(&h, PlanePoint::new(0.1, 1.2).unwrap(), 40.0).unwrap(), c(0.0));
}

#[test]
fn radial_transform_is_even() {
    let f = KTypeFunction::bump(0, 1.0);
    for r in [0.5, 3.0, 7.5] {
        let a = spherical_transform(&f, c(r)).unwrap();
        let b = spherical_transform(&f, c(-r)).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm(), "r = {r}: {a} vs {b}");
    }
}

#[test]
fn definition_route_matches_polar_oracle() {
    let f = KTypeFunction::bump(0, 1.0);
    let got = spherical_transform(&f, c(1.0)).unwrap();
    let want = polar_oracle(&f, 1.0);
    assert!((got - want).norm() < 1e-9 * want.norm(), "{got} vs {want}");
    // frozen oracle value
    assert!((want.re - 1.219_014_306_4).abs() < 1e-9, "{want}");
}

#[test]
fn horocyclic_table_matches_definition_route() {
    for n in [0i64, 1, -2] {
        let f = KTypeFunction::bump(n, 0.9);
        let table = TransformTable::new(&f, 60.0).unwrap();
        for r in [0.7, 4.0, Complex64::new(2.0, 0.3).re] {
            let a = table.eval(c(r));
            let b = spherical_transform(&f, c(r)).unwrap();
            assert!((a - b).norm() < 1e-9 * b.norm().max(1e-3), "n={n} r={r}: {a} vs {b}");
        }
        let z = Complex64::new(2.0, 0.3);
        let a = table.eval(z);
        let b = spherical_transform(&f, z).unwrap();
        assert!((a - b).norm() < 1e-9 * b.norm().max(1e-3), "n={n} complex r: {a} vs {b}");
    }
}

#[test]
fn transformed_bumps_satisfy_the_functional_equation() {
    for n in [1i64, 2] {
        let h = TransformTable::new(&KTypeFunction::bump(n, 1.0), 60.0).unwrap().into_window();
        let grid: Vec<Complex64> = (1..20).map(|k| Complex64::new(0.6 * k as f64, 0.2 * (k % 3) as f64)).collect();
        let res = h.functional_equation_residual(&grid).unwrap();
        assert!(res < 1e-9, "n={n}: {res:e}");
    }
}

#[test]
fn profile_that_does_not_vanish_escapes_support() {
    let f = KTypeFunction::from_radial(0, 1.0, |t| c(1.0 - 0.5 * t));
    assert!(matches!(spherical_transform(&f, c(1.0)), Err(TransformError::SupportEscape { .. })));
}

#[test]
fn round_trip_on_bumps() {
    let zs: Vec<PlanePoint> = (0..12).map(|k| PlanePoint::polar(0.08 * k as f64, 0.9 * k as f64 + 0.2)).collect();
    for n in [0i64, 1, 2] {
        let f = KTypeFunction::bump(n, 1.0);
        let h = TransformTable::new(&f, 2000.0).unwrap().into_window();
        let r_max = choose_r_max(&h, 1.0).unwrap();
        let back = inverse_spherical_transform_many(&h, &zs, r_max).unwrap();
        let peak = zs.iter().map(|z| f.eval(*z).norm()).fold(0.0, f64::max);
        let err = zs.iter().zip(&back).map(|(z, v)| (f.eval(*z) - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6 * peak, "n={n}: {err:e} against {peak:e}");
    }
}

#[test]
fn inverse_of_type_one_window_vanishes_beyond_the_disc() {
    let h = TransformTable::new(&KTypeFunction::bump(0, 1.0), 2000.0).unwrap().into_window();
    let r_max = choose_r_max(&h, 1.3).unwrap();
    let peak = inverse_spherical_transform(&h, PlanePoint::i(), r_max).unwrap().norm();
    for th in [0.0, 0.8, 2.1] {
        let v = inverse_spherical_transform(&h, PlanePoint::polar(1.3, th), r_max).unwrap().norm();
        assert!(v < 1e-6 * peak, "{v:e} vs {peak:e}");
    }
}

#[test]
fn slow_decay_fails_the_tail_estimate() {
    // 1/(1 + r^2) is not of exponential type and decays too slowly
    let h = WindowFunction::generic(0, 1.0, |r| 1.0 / (r * r + 1.0));
    assert!(matches!(inverse_spherical_transform(&h, PlanePoint::i(), 50.0), Err(TransformError::TailEstimate { .. })));
    assert!(choose_r_max(&h, 0.5).is_err());
}

#[test]
fn helgason_fourier_equivariance() {
    let radial = KTypeFunction::bump(0, 0.8);
    let fr = |z: PlanePoint| radial.eval(z);
    let r = c(2.5);
    let base = helgason_fourier(&fr, 0.8, r, 0.0).unwrap();
    for alpha in [0.4, 1.3, 2.9] {
        let v = helgason_fourier(&fr, 0.8, r, alpha).unwrap();
        assert!((v - base).norm() < 1e-9 * base.norm());
    }
    let one = KTypeFunction::bump(1, 0.8);
    let f1 = |z: PlanePoint| one.eval(z);
    let s_minus = TransformTable::new(&one, 40.0).unwrap().eval(-r);
    let mut first = None;
    for alpha in [0.0, 0.5, 1.7, 2.6] {
        let v = helgason_fourier(&f1, 0.8, r, alpha).unwrap();
        let unrotated = v * Complex64::from_polar(1.0, -2.0 * alpha);
        let reference = *first.get_or_insert(unrotated);
        assert!((unrotated - reference).norm() < 1e-9 * reference.norm());
        let identity = v - Complex64::from_polar(1.0, 2.0 * alpha) * s_minus;
        assert!(identity.norm() < 1e-8, "alpha {alpha}: {identity}");
    }
}

#[test]
fn mollifier_examples() {
    let h = make_mollifier(0.05).unwrap();
    assert!((h.eval_real(0.0).unwrap().re - 1.0).abs() < 0.05);
    assert!(h.eval_real(3.0).unwrap().norm() < 1e-6);
    for x in [0.1, 0.49, 0.8, 2.0] {
        assert!((h.eval_real(x).unwrap() - h.eval_real(-x).unwrap()).norm() < 1e-12);
        let z = Complex64::new(x, 0.0);
        assert!((h.eval_real(x).unwrap() - h.eval_complex_route(z).unwrap()).norm() < 1e-12);
    }
    for x in [0.0, 1.0, 5.0, 40.0] {
        assert!(mollifier_density(x) >= 0.0);
    }
    assert!(make_mollifier(1.5).is_err());
}

#[test]
fn mollifier_has_unit_mass() {
    let rule = Rule::composite_gauss(0.0, 200.0, 400, 20);
    let mass = 2.0 * rule.integrate(mollifier_density);
    assert!((mass - 1.0).abs() < 1e-12, "{mass}");
    // rho-hat(0) = 1, rho-hat vanishes at the edge of [-1, 1]
    assert!((mollifier_hat(0.0) - 1.0).abs() < 1e-12);
    assert!(mollifier_hat(0.999).abs() < 1e-12);
}

#[test]
fn correction_interpolates_and_is_small() {
    for n in [1i64, 2, 3] {
        for delta in [0.1, 0.01] {
            let f = make_correction(delta, n).unwrap();
            for m in 1..=n {
                for sign in [-1.0, 1.0] {
                    let v = f.eval(Complex64::new(0.0, sign * m as f64 / 2.0));
                    assert!((v - 1.0).norm() < 1e-10, "n={n} m={m} delta={delta}: {v}");
                }
            }
        }
    }
    let sup = |delta: f64| {
        let f = make_correction(delta, 1).unwrap();
        (0..=4000).map(|k| f.eval(c(-20.0 + 0.01 * k as f64)).norm()).fold(0.0, f64::max)
    };
    let (c1, c2) = (sup(0.1) / 0.1, sup(0.01) / 0.01);
    assert!(c2 <= c1, "C grows: {c1:e} -> {c2:e}");
    let f = make_correction(0.01, 1).unwrap();
    assert!(f.eval(c(5.0)).norm() <= c1 * 0.01);
}

#[test]
fn correction_reflection_matches_direct_evaluation() {
    // F is built from real-coefficient pieces symmetric under x -> -conj(x)
    let f = make_correction(0.2, 2).unwrap();
    for x in [0.3, 1.7, 4.2] {
        let a = f.eval(c(-x));
        let b = f.eval(c(x)).conj();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1e-300), "{a} vs {b}");
    }
}

#[test]
fn windows_satisfy_the_functional_equation() {
    let grid: Vec<Complex64> = (0..100).map(|k| c(0.25 * k as f64 - 12.3)).collect();
    for n in [0i64, 1, 2, 3] {
        for delta in [0.1, 0.05] {
            let h = make_window(6.0, delta, n).unwrap();
            let res = h.functional_equation_residual(&grid).unwrap();
            assert!(res < 1e-8, "n={n} delta={delta}: {res:e}");
        }
    }
}

#[test]
fn window_poles_cancel_only_with_the_completed_set() {
    let h = make_window(3.0, 0.1, 2).unwrap();
    // h is analytic there: its value is the mean of four points just outside
    let p = Complex64::new(0.0, -1.5);
    let at = h.eval(p).unwrap();
    let e = 0.012;
    let ring: Complex64 = [c(e), c(-e), Complex64::new(0.0, e), Complex64::new(0.0, -e)]
        .iter()
        .map(|d| h.eval(p + d).unwrap())
        .sum::<Complex64>()
        / 4.0;
    assert!((at - ring).norm() < 1e-2 * at.norm(), "{at} vs {ring}");
    let literal = make_window_with(3.0, 0.1, 2, IndexSet::Literal).unwrap();
    assert!(matches!(literal.eval(Complex64::new(0.0, -1.5)), Err(TransformError::PoleProximity(_))));
}

#[test]
fn window_regimes() {
    let h = make_window(10.0, 0.01, 0).unwrap();
    assert!((h.eval_real(10.0).unwrap().re - 1.0).abs() < 0.05);
    let far = h.eval_real(12.0).unwrap().norm();
    assert!(far < 1e-6, "{far:e}");
}

#[test]
fn window_parameters_are_validated() {
    assert!(make_window(0.2, 0.1, 0).is_err());
    assert!(make_window(2.0, 1.0, 1).is_err());
    assert!(make_correction(0.1, 0).is_err());
}

#[test]
fn convolution_examples() {
    let g = GroupElement::new(PlanePoint::new(0.3, 0.8).unwrap(), 1.1);
    // radial f with mean zero against u = 1
    let f = KTypeFunction::from_radial(0, 1.0, |t| {
        let s = t / 1.0;
        if s >= 1.0 {
            c(0.0)
        } else {
            c((1.0 - 1.0 / (1.0 - s * s)).exp() * (1.0 - 3.0 * s * s))
        }
    });
    let mean = convolution_operator(&f, &|_| c(1.0), &g, ConvolutionRule::for_frequency(1.0, 0.0, 0)).unwrap();
    let mass = convolution_operator(
        &KTypeFunction::bump(0, 1.0),
        &|_| c(1.0),
        &g,
        ConvolutionRule::for_frequency(1.0, 0.0, 0),
    )
    .unwrap();
    let f_zero = f.combine(c(1.0), &KTypeFunction::bump(0, 1.0), -(mean / mass));
    let v = convolution_operator(&f_zero, &|_| c(1.0), &g, ConvolutionRule::for_frequency(1.0, 0.0, 0)).unwrap();
    assert!(v.norm() < 1e-12, "{v}");

    let r = 3.0;
    let s = Complex64::new(0.5, r);
    let bump = KTypeFunction::bump(0, 1.0);
    let at_identity = convolution_operator(
        &bump,
        &|w: PlanePoint| (s * w.y.ln()).exp(),
        &GroupElement::identity(),
        ConvolutionRule::for_frequency(1.0, r, 0),
    )
    .unwrap();
    let want = spherical_transform(&bump, c(r)).unwrap();
    assert!((at_identity - want).norm() < 1e-9, "{at_identity} vs {want}");
}

#[test]
fn convolution_of_a_rotated_wave_matches_the_lift() {
    let r = 2.0;
    let beta = PI / 3.0;
    let base = ModelEigenfunction::new(SpectralPoint::real(&[r]), vec![PlaneWave::new(c(1.0), vec![beta])]).unwrap();
    let lift = build_lift(&base, 1).unwrap();
    let f = KTypeFunction::bump(1, 1.0);
    let sf = TransformTable::new(&f, 40.0).unwrap().eval(c(r));
    let u = |w: PlanePoint| base.eval(&[w]);
    for k in 0..5 {
        let g = GroupElement::new(PlanePoint::new(0.2 * k as f64 - 0.3, 0.7 + 0.2 * k as f64).unwrap(), 0.6 * k as f64);
        let lhs = convolution_operator(&f, &u, &g, ConvolutionRule::for_frequency(1.0, r, 1)).unwrap();
        let rhs = sf * lift.eval(&KType(vec![-1]), &hqe::geometry::ProductGroupElement::single(g)).unwrap();
        assert!((lhs - rhs).norm() < 1e-6, "{lhs} vs {rhs}");
    }
}

#[test]
fn non_finite_integrand_is_a_coverage_error() {
    let f = KTypeFunction::bump(0, 1.0);
    let u = |w: PlanePoint| if w.y < 0.5 { c(f64::NAN) } else { c(1.0) };
    let r = convolution_operator(&f, &u, &GroupElement::identity(), ConvolutionRule::for_frequency(1.0, 1.0, 0));
    assert!(matches!(r, Err(TransformError::DomainCoverage(_))));
}

#[test]
fn zero_symbol_quantizes_to_zero() {
    let z0 = PlanePoint::new(0.0, 1.1).unwrap();
    let a = SmoothObservable::zero(vec![hqe::lie_operators::Disc { center: z0, radius: 0.4 }]);
    let sym = ProductSymbol::new(a, vec![make_window(3.0, 0.5, 0).unwrap()]).unwrap();
    let base = ModelEigenfunction::plane_wave(SpectralPoint::real(&[3.0]));
    let res = QuantizeResolution {
        domain: Domain::disc(z0, 0.4, RegionResolution { panels: 2, per_panel: 8, angular: 16 }),
        convolution: None,
    };
    let (l, r) = quantize_expectation(&sym, &base, &res, 0).unwrap();
    assert_eq!((l, r), (c(0.0), c(0.0)));
}

#[test]
fn symbol_ktype_must_match_windows() {
    let z0 = PlanePoint::new(0.0, 1.1).unwrap();
    let a = SmoothObservable::bump(vec![z0], 0.4, KType(vec![1]));
    let r = ProductSymbol::new(a, vec![make_window(3.0, 0.5, 0).unwrap()]);
    assert!(matches!(r, Err(TransformError::KTypeMismatch { .. })));
}

#[test]
fn lequiv_single_factor() {
    let r = 5.0;
    let base = ModelEigenfunction::plane_wave(SpectralPoint::real(&[r]));
    let z0 = PlanePoint::new(0.1, 1.2).unwrap();
    let a = SmoothObservable::bump(vec![z0], 0.6, KType(vec![0]));
    let sym = ProductSymbol::new(a, vec![make_window(r, 0.5, 0).unwrap()]).unwrap();
    let res = QuantizeResolution {
        domain: Domain::disc(z0, 0.6, RegionResolution { panels: 4, per_panel: 16, angular: 96 }),
        convolution: None,
    };
    let (lhs, rhs) = quantize_expectation(&sym, &base, &res, 1).unwrap();
    assert!((lhs / rhs - 1.0).norm() < 1e-4, "{lhs} vs {rhs}");
}

#[test]
fn parameter_records_round_trip_through_toml() {
    let w = WindowSpec::Window { l: 4.0, delta: 0.1, n: 1 };
    let text = toml::to_string(&w).unwrap();
    assert_eq!(toml::from_str::<WindowSpec>(&text).unwrap(), w);
    let f = KTypeFunctionSpec::Bump { n: 2, radius: 0.8 };
    let text = toml::to_string(&f).unwrap();
    assert_eq!(toml::from_str::<KTypeFunctionSpec>(&text).unwrap(), f);
    assert!(toml::from_str::<WindowSpec>("kind = \"window\"\nl = 1.0\ndelta = 0.1\nn = 0\nextra = 1").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn transforms_are_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, r in 0.2f64..6.0, n in 0i64..3) {
        let f = KTypeFunction::bump(n, 0.9);
        let g = KTypeFunction::from_radial(n, 0.9, move |t| {
            let s = t / 0.9;
            if s >= 1.0 { c(0.0) } else { c((0.5 * t).tanh().powi(n as i32) * (1.0 - 1.0 / (1.0 - s * s)).exp() * (1.0 + t)) }
        });
        let combo = f.combine(c(a), &g, c(b));
        let lhs = spherical_transform(&combo, c(r)).unwrap();
        let rhs = spherical_transform(&f, c(r)).unwrap() * a + spherical_transform(&g, c(r)).unwrap() * b;
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        let u = move |w: PlanePoint| Complex64::new(0.5, r) .mul_add_free(w);
        let id = GroupElement::identity();
        let rule = ConvolutionRule::for_frequency(0.9, r, n);
        let lc = convolution_operator(&combo, &u, &id, rule).unwrap();
        let rc = convolution_operator(&f, &u, &id, rule).unwrap() * a + convolution_operator(&g, &u, &id, rule).unwrap() * b;
        prop_assert!((lc - rc).norm() < 1e-10 * (1.0 + rc.norm()));
    }

    #[test]
    fn windows_are_even_for_trivial_ktype(x in 0.0f64..30.0, l in 0.5f64..20.0, delta in 0.01f64..0.5) {
        let h = make_window(l, delta, 0).unwrap();
        let d = (h.eval_real(x).unwrap() - h.eval_real(-x).unwrap()).norm();
        prop_assert!(d < 1e-13);
    }
}

trait PhiAt {
    fn mul_add_free(self, w: PlanePoint) -> Complex64;
}

impl PhiAt for Complex64 {
    /// y^s for the exponent s = self.
    fn mul_add_free(self, w: PlanePoint) -> Complex64 {
        (self * w.y.ln()).exp()
    }
}
