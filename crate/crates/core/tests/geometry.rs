use std::f64::consts::{E, PI};

use hqe::geometry::*;
use hqe::lie_operators::{bump_profile, Domain, RegionResolution};
use proptest::prelude::*;

fn pt(x: f64, y: f64) -> PlanePoint {
    PlanePoint::new(x, y).unwrap()
}

fn close(a: PlanePoint, b: PlanePoint, tol: f64) -> bool {
    (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
}

#[test]
fn mobius_examples() {
    assert_eq!(GroupElement::identity().act(PlanePoint::i()), PlanePoint::i());
    let w = mobius_act(&GroupElement::p(pt(1.0, 4.0)), PlanePoint::i());
    assert!(close(w, pt(1.0, 4.0), 1e-15));
    // (cos * 2i + sin) / (-sin * 2i + cos) at pi/4, by hand
    let w = mobius_act(&GroupElement::k(PI / 4.0), pt(0.0, 2.0));
    assert!(close(w, pt(-0.6, 0.8), 1e-15), "{w:?}");
}

#[test]
fn distance_examples() {
    assert_eq!(hyperbolic_distance(PlanePoint::i(), PlanePoint::i()), 0.0);
    assert!((hyperbolic_distance(PlanePoint::i(), pt(0.0, E)) - 1.0).abs() < 1e-15);
    // arccosh(1.5), 30-digit reference
    let d = hyperbolic_distance(pt(1.0, 1.0), pt(0.0, 2.0));
    assert!((d - 0.962_423_650_119_206_9).abs() < 1e-14, "{d}");
}

#[test]
fn decompose_examples() {
    let g = decompose_pk(&Mat2::new(1.0, 0.0, 0.0, 1.0)).unwrap();
    assert_eq!(g, GroupElement::identity());
    let g = decompose_pk(&Mat2::k(1.1)).unwrap();
    assert!(close(g.z, PlanePoint::i(), 1e-15));
    assert!((g.theta - 1.1).abs() < 1e-15);
    assert!(matches!(decompose_pk(&Mat2::new(1.0, 2.0, 3.0, 4.0)), Err(GeometryError::NotUnimodular { .. })));
}

#[test]
fn projective_sign_is_absorbed() {
    let m = Mat2::new(2.0, 1.0, 3.0, 2.0);
    let g = decompose_pk(&m).unwrap();
    let h = decompose_pk(&Mat2::new(-2.0, -1.0, -3.0, -2.0)).unwrap();
    assert!(close(g.z, h.z, 1e-14));
    assert!((g.theta - h.theta).abs() < 1e-14);
    assert!(g.theta >= 0.0 && g.theta < PI);
}

#[test]
fn invalid_points_are_rejected() {
    assert!(PlanePoint::new(0.0, 0.0).is_err());
    assert!(PlanePoint::new(f64::NAN, 1.0).is_err());
    assert!(PlanePoint::new(0.0, -1.0).is_err());
    assert!(EnergyVector::new(vec![0.5, -0.1]).is_err());
}

#[test]
fn flow_examples() {
    let e = EnergyVector::new(vec![1.0]).unwrap();
    let g = ProductGroupElement::identity(1);
    assert_eq!(geodesic_flow(&g, &e, 0.0).unwrap(), g);
    let h = geodesic_flow(&g, &e, 1.0).unwrap();
    assert!(close(h.factors[0].z, pt(0.0, E * E), 1e-13));
    assert_eq!(h.factors[0].theta, 0.0);

    let e2 = EnergyVector::new(vec![1.0, 0.0]).unwrap();
    let g2 =
        ProductGroupElement::new(vec![GroupElement::new(pt(0.3, 0.7), 0.4), GroupElement::new(pt(-1.0, 2.0), 2.9)]);
    let h2 = geodesic_flow(&g2, &e2, 2.3).unwrap();
    assert_eq!(h2.factors[1], g2.factors[1]);
    assert!(geodesic_flow(&g2, &e, 1.0).is_err());
}

#[test]
fn energy_shell() {
    assert!(EnergyVector::new(vec![0.25, 0.75]).unwrap().on_shell(1e-12));
    assert!(!EnergyVector::new(vec![0.25, 0.5]).unwrap().on_shell(1e-12));
}

#[test]
fn haar_measure_is_left_invariant() {
    // int f(g0 z) dmu = int f(z) dmu for f a bump about c; the translate is a
    // bump about g0^{-1} c and each side gets its own disc rule
    let c = pt(0.4, 1.5);
    let g0 = GroupElement::new(pt(-0.7, 0.6), 1.2);
    let res = RegionResolution { panels: 6, per_panel: 16, angular: 128 };
    let f = |z: PlanePoint| bump_profile(hyperbolic_distance(z, c) / 0.8);
    let integrate = |center: PlanePoint, h: &dyn Fn(PlanePoint) -> f64| {
        let (nodes, weights) = Domain::disc(center, 0.8, res).factor_nodes().remove(0);
        nodes.iter().zip(&weights).map(|(z, w)| h(*z) * w).sum::<f64>()
    };
    let plain = integrate(c, &f);
    let moved = integrate(g0.inverse().act(c), &|z| f(g0.act(z)));
    assert!(plain > 0.1);
    assert!((plain - moved).abs() < 1e-10 * plain, "{plain} vs {moved}");
}

fn arb_point() -> impl Strategy<Value = PlanePoint> {
    (-3.0..3.0f64, 0.05..5.0f64).prop_map(|(x, y)| pt(x, y))
}

fn arb_element() -> impl Strategy<Value = GroupElement> {
    (arb_point(), 0.0..PI).prop_map(|(z, t)| GroupElement::new(z, t))
}

proptest! {
    #[test]
    fn decompose_round_trip(g in arb_element()) {
        let m = g.matrix();
        let back = decompose_pk(&m).unwrap().matrix();
        // equal up to the projective sign
        let same = (back.a - m.a).abs().max((back.b - m.b).abs()).max((back.c - m.c).abs()).max((back.d - m.d).abs());
        let flip = (back.a + m.a).abs().max((back.b + m.b).abs()).max((back.c + m.c).abs()).max((back.d + m.d).abs());
        prop_assert!(same.min(flip) < 1e-12 * m.max_abs().max(1.0));
    }

    #[test]
    fn group_law_matches_actions(g1 in arb_element(), g2 in arb_element(), w in arb_point()) {
        let lhs = g1.compose(&g2).act(w);
        let rhs = g1.act(g2.act(w));
        let scale = lhs.x.abs().max(lhs.y).max(1.0);
        prop_assert!(close(lhs, rhs, 1e-10 * scale), "{:?} vs {:?}", lhs, rhs);
    }

    #[test]
    fn distance_is_invariant(g in arb_element(), z1 in arb_point(), z2 in arb_point()) {
        let d0 = hyperbolic_distance(z1, z2);
        let d1 = hyperbolic_distance(g.act(z1), g.act(z2));
        prop_assert!((d0 - d1).abs() < 1e-10 * d0.max(1.0));
        prop_assert!((d0 - hyperbolic_distance(z2, z1)).abs() < 1e-15);
    }

    #[test]
    fn flow_is_a_one_parameter_group(
        g in arb_element(),
        h in arb_element(),
        e1 in 0.0..1.0f64,
        s in -2.5..2.5f64,
        t in -2.5..2.5f64,
    ) {
        let e = EnergyVector::new(vec![e1, 1.0 - e1]).unwrap();
        let p = ProductGroupElement::new(vec![g, h]);
        let two_steps = geodesic_flow(&geodesic_flow(&p, &e, s).unwrap(), &e, t).unwrap();
        let one_step = geodesic_flow(&p, &e, s + t).unwrap();
        for (a, b) in two_steps.factors.iter().zip(&one_step.factors) {
            let scale = a.z.x.abs().max(a.z.y).max(1.0 / a.z.y).max(1.0);
            prop_assert!(close(a.z, b.z, 1e-10 * scale), "{:?} vs {:?}", a, b);
            let dt = (a.theta - b.theta).abs();
            prop_assert!(dt.min(PI - dt) < 1e-10 * scale);
        }
    }
}
