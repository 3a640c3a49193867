use std::f64::consts::PI;

use hqe::ergodicity_lab::*;
use hqe::geometry::*;
use hqe::lie_operators::{bump_profile, Disc, Domain, RegionResolution, SmoothObservable};
use hqe::special_functions::KType;
use num_complex::Complex64;
use proptest::prelude::*;

fn pt(x: f64, y: f64) -> PlanePoint {
    PlanePoint::new(x, y).unwrap()
}

fn energy(e: &[f64]) -> EnergyVector {
    EnergyVector::new(e.to_vec()).unwrap()
}

fn constant(c: Complex64, d: usize) -> SmoothObservable {
    let support = vec![Disc { center: PlanePoint::i(), radius: f64::INFINITY }; d];
    SmoothObservable::new(move |_| c, Some(0), support, None)
}

fn schema_path(err: LabError) -> String {
    match err {
        LabError::Schema { path, .. } => path,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn constant_averages_to_itself() {
    let c = Complex64::new(0.7, -1.3);
    let g = ProductGroupElement::from_points(&[pt(0.3, 0.8), pt(-1.0, 2.0)], &[0.4, 2.0]);
    let quad = OrbitQuadrature { panels: 3, per_panel: 8 };
    let v = time_average(&constant(c, 2), &energy(&[0.3, 0.7]), 2.5, &g, quad).unwrap();
    assert!((v - c).norm() < 1e-14, "{v}");
}

#[test]
fn time_average_matches_direct_orbit_quadrature() {
    // orbit of p_z k_theta through exp(tH): z_t = p_z k_theta (e^{2t} i), by matrices
    let a = test_observable();
    let z = pt(0.2, 1.1);
    let theta = 0.35;
    let t_end = 0.7;
    let g = ProductGroupElement::single(GroupElement::new(z, theta));
    let quad = OrbitQuadrature::for_observable(&a, &energy(&[1.0]), t_end);
    let v = time_average(&a, &energy(&[1.0]), t_end, &g, quad).unwrap();

    let base = Mat2::p(z).mul(&Mat2::k(theta));
    let n = 20000;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        let s = t_end * k as f64 / n as f64;
        let m = base.mul(&Mat2::exp_h(s));
        let h = ProductGroupElement::single(GroupElement::from_matrix(&m).unwrap());
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += a.eval(&h) * w;
    }
    let direct = acc / n as f64;
    assert!((v - direct).norm() < 1e-7, "{v} vs {direct}");
}

#[test]
fn untouched_factor_is_invariant() {
    // a depends only on factor 1 and carries a theta-character there; E moves factor 0 only
    let b = SmoothObservable::bump(vec![pt(0.4, 1.3)], 0.8, KType(vec![2]));
    let support = vec![Disc { center: PlanePoint::i(), radius: f64::INFINITY }, b.support[0]];
    let inner = b.clone();
    let a = SmoothObservable::new(
        move |g: &ProductGroupElement| inner.eval(&ProductGroupElement::single(g.factors[1])),
        None,
        support,
        None,
    );
    let quad = OrbitQuadrature { panels: 4, per_panel: 16 };
    for (z, th) in [(pt(0.1, 1.2), 0.3), (pt(0.5, 1.6), 2.2), (pt(-0.2, 0.9), -1.0)] {
        let g = ProductGroupElement::from_points(&[pt(3.0, 0.2), z], &[1.1, th]);
        let v = time_average(&a, &energy(&[1.0, 0.0]), 3.0, &g, quad).unwrap();
        assert!((v - a.eval(&g)).norm() < 1e-13);
    }
}

#[test]
fn averaging_errors() {
    let a = test_observable();
    let g = ProductGroupElement::single(GroupElement::new(pt(0.1, 1.2), 0.0));
    let quad = OrbitQuadrature { panels: 2, per_panel: 8 };
    for t in [0.0, -1.0, f64::NAN] {
        assert!(matches!(time_average(&a, &energy(&[1.0]), t, &g, quad), Err(LabError::BadArgument(_))));
    }
    let empty = OrbitQuadrature { panels: 0, per_panel: 8 };
    assert!(matches!(time_average(&a, &energy(&[1.0]), 1.0, &g, empty), Err(LabError::BadArgument(_))));
    assert!(matches!(time_average(&a, &energy(&[0.5, 0.5]), 1.0, &g, quad), Err(LabError::BadArgument(_))));
    // e^{2t} overflows long before t = 2000
    let far = time_average(&constant(Complex64::new(1.0, 0.0), 1), &energy(&[1.0]), 2000.0, &g, quad);
    assert!(matches!(far, Err(LabError::OrbitEscape { .. })), "{far:?}");
    let nan = SmoothObservable::new(|_| Complex64::new(f64::NAN, 0.0), None, a.support.clone(), None);
    assert!(matches!(time_average(&nan, &energy(&[1.0]), 1.0, &g, quad), Err(LabError::OrbitEscape { .. })));
}

#[test]
fn averaged_l2_norm_matches_direct_integration() {
    let a = test_observable();
    let e = energy(&[1.0]);
    let t = 0.5;
    let res = RegionResolution { panels: 6, per_panel: 12, angular: 64 };
    let via_autocorrelation = averaged_l2_norm_sq(&[a.clone()], &e, t, res).unwrap();

    // ||<a>^T||^2 straight from time averages on the flowed support
    let quad = OrbitQuadrature { panels: 4, per_panel: 16 };
    let avg = averaged_observable(&a, &e, t, quad).unwrap();
    let disc = avg.support[0];
    let fine = RegionResolution { panels: 10, per_panel: 16, angular: 96 };
    let (nodes, weights) = Domain::disc(disc.center, disc.radius, fine).factor_nodes().remove(0);
    let n_theta = 16;
    let mut direct = 0.0;
    for (z, w) in nodes.iter().zip(&weights) {
        for q in 0..n_theta {
            let g = ProductGroupElement::single(GroupElement::new(*z, PI * q as f64 / n_theta as f64));
            direct += avg.eval(&g).norm_sqr() * w;
        }
    }
    direct /= n_theta as f64;
    let rel = (via_autocorrelation - direct).abs() / direct;
    assert!(rel < 1e-4, "{via_autocorrelation} vs {direct}");
}

#[test]
fn autocorrelation_at_zero_is_the_squared_norm() {
    let b = SmoothObservable::bump(vec![PlanePoint::i()], 0.6, KType(vec![0]));
    let res = RegionResolution { panels: 8, per_panel: 16, angular: 8 };
    let c0 = autocorrelation(&b, 0.0, res, 4).unwrap();
    // ||b||^2 = 2 pi int_0^R bump(s/R)^2 sinh s ds for a radial bump, theta average 1
    let n = 20000;
    let mut acc = 0.0;
    for k in 0..n {
        let s = 0.6 * (k as f64 + 0.5) / n as f64;
        acc += bump_profile(s / 0.6).powi(2) * s.sinh();
    }
    let want = 2.0 * PI * acc * 0.6 / n as f64;
    assert!(c0.im.abs() < 1e-14 && (c0.re - want).abs() < 1e-6 * want, "{c0} vs {want}");
    // c vanishes once the shift exceeds the support diameter
    assert_eq!(autocorrelation(&b, 0.7, res, 4).unwrap(), Complex64::new(0.0, 0.0));
}

#[test]
fn unknown_kind_names_the_field() {
    let err = ExperimentConfig::from_toml("kind = \"bogus\"\n").unwrap_err();
    assert_eq!(schema_path(err), "kind");
}

#[test]
fn unknown_key_is_located() {
    let text = "kind = \"decay-fit\"\n\n[grid]\nr = [50.0, 100.0]\nbogus = [1.0]\n";
    assert_eq!(schema_path(ExperimentConfig::from_toml(text).unwrap_err()), "grid.bogus");
    let text = "kind = \"decay-fit\"\nseeed = 3\n";
    assert_eq!(schema_path(ExperimentConfig::from_toml(text).unwrap_err()), "seeed");
}

#[test]
fn invalid_grids_are_rejected() {
    let cases = [
        ("kind = \"decay-fit\"\n[grid]\nr = []\n", "grid.r"),
        ("kind = \"decay-fit\"\n[grid]\nl = [20.0]\n", "grid.l"),
        ("kind = \"variance-skeleton\"\n[grid]\ne = [[0.5, 0.6]]\n", "grid.e[0]"),
        ("kind = \"variance-skeleton\"\n[grid]\ne = [[1.5, -0.5]]\n", "grid.e[0]"),
        ("kind = \"weyl-bands\"\n[grid]\nd = [2, 3]\n", "grid.d[1]"),
        ("kind = \"smoothing-defect\"\n[grid]\ndelta = [0.04, 1.5]\n", "grid.delta[1]"),
        ("kind = \"lequiv\"\n[tolerances]\nslope-deviation = 0.1\n", "tolerances.slope-deviation"),
        ("kind = \"lequiv\"\n[tolerances]\nrel-error-d1 = -1.0\n", "tolerances.rel-error-d1"),
        ("kind = \"lequiv\"\n[quadrature]\npanels = 0\nper_panel = 4\nangular = 8\n", "quadrature"),
    ];
    for (text, path) in cases {
        let err = ExperimentConfig::from_toml(text).unwrap_err();
        assert_eq!(schema_path(err), path, "{text}");
    }
}

#[test]
fn config_hash_ignores_output_paths() {
    let text = "kind = \"weyl-bands\"\nseed = 3\n[grid]\nl = [20.0]\n";
    let a = ExperimentConfig::from_toml(text).unwrap();
    let b = ExperimentConfig::from_toml(&format!("{text}[output]\njson = \"x.json\"\n")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = ExperimentConfig::from_toml(&text.replace("seed = 3", "seed = 4")).unwrap();
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn roundtrip_run_passes() {
    let mut cfg = ExperimentConfig::default_for(ExperimentKind::TransformRoundtrip);
    cfg.grid.n = Some(vec![1]);
    let report = run_experiment(&cfg).unwrap();
    assert!(report.passed(), "{}", report.to_csv());
    assert_eq!(report.records.len(), 1);
    for rec in &report.records {
        assert_eq!(rec.config_hash, cfg.hash());
        assert_eq!(rec.metric("roundtrip-error").unwrap().verification, Verification::Oracle);
    }
}

#[test]
fn seeded_runs_are_reproducible() {
    let text = "kind = \"weyl-bands\"\nseed = 11\n[grid]\nl = [20.0, 24.0]\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.data_json(), b.data_json());
    assert!(a.records.iter().all(|r| r.seed == 11));
    let other = ExperimentConfig::from_toml(&text.replace("seed = 11", "seed = 12")).unwrap();
    assert_ne!(run_experiment(&other).unwrap().data_json(), a.data_json());
}

#[test]
fn report_extracts() {
    let cfg = ExperimentConfig::from_toml("kind = \"decay-fit\"\nid = \"slopes\"\n[grid]\nn = [0]\n").unwrap();
    let report = run_experiment(&cfg).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("experiment_id,params_json,metric,value,tolerance,pass"));
    let rows: Vec<&str> = lines.collect();
    // two points, each a reported slope and a checked deviation
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.starts_with("slopes,")));
    assert!(rows.iter().filter(|r| r.contains(",slope-deviation,")).all(|r| r.ends_with(",true")));

    let back = ExperimentReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
    let bumped = report.to_json().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(matches!(ExperimentReport::from_json(&bumped), Err(LabError::Report(_))));
}

#[test]
fn failed_points_still_report() {
    // the fit needs r >= 20, so every point errors and the report is still emitted
    let cfg = ExperimentConfig::from_toml("kind = \"decay-fit\"\n[grid]\nn = [0]\nr = [0.5, 400.0]\n").unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.records.len(), 2);
    assert!(!report.passed());
    assert!(report.records.iter().all(|r| r.error.is_some() && r.metrics.is_empty()));
    let csv = report.to_csv();
    assert_eq!(csv.lines().skip(1).filter(|l| l.contains(",error,,,false")).count(), 2);
}

#[test]
fn single_averaging_time_has_no_trend() {
    let text = "kind = \"variance-skeleton\"\n[grid]\nr = [50.0]\nt = [1.0]\n\
                [quadrature]\npanels = 4\nper_panel = 8\nangular = 48\n";
    let report = run_variance_skeleton(&ExperimentConfig::from_toml(text).unwrap()).unwrap();
    assert!(report.records.iter().all(|r| r.metric("l2-ratio").is_none()));
    assert!(report.records.iter().any(|r| r.metric("l2-norm").is_some()));
    assert!(report.notes.iter().any(|n| n.contains("no L2 trend")));
    // every Cauchy-Schwarz sample holds
    let cs: Vec<_> = report.records.iter().filter_map(|r| r.metric("cauchy-schwarz")).collect();
    assert!(!cs.is_empty() && cs.iter().all(|m| m.pass == Some(true) && m.value.unwrap() <= 1.0));

    let wrong = ExperimentConfig::default_for(ExperimentKind::DecayFit);
    assert!(matches!(run_variance_skeleton(&wrong), Err(LabError::Schema { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_average_is_additive(
        x0 in -0.5f64..0.5, y0 in 0.7f64..1.6, th0 in 0.0f64..3.0,
        x1 in -0.5f64..0.5, y1 in 0.7f64..1.6, th1 in 0.0f64..3.0,
        e0 in 0.0f64..1.0, t in 0.05f64..1.5, panels in 1usize..4,
    ) {
        let a0 = test_observable();
        let b = SmoothObservable::bump(vec![pt(0.0, 1.1)], 0.9, KType(vec![1]));
        let support = vec![a0.support[0], b.support[0]];
        let a = SmoothObservable::new(
            move |g: &ProductGroupElement| {
                a0.eval(&ProductGroupElement::single(g.factors[0]))
                    * b.eval(&ProductGroupElement::single(g.factors[1]))
            },
            None,
            support,
            None,
        );
        let e = energy(&[e0, 1.0 - e0]);
        let g = ProductGroupElement::from_points(&[pt(x0, y0), pt(x1, y1)], &[th0, th1]);
        let half = OrbitQuadrature { panels, per_panel: 12 };
        let whole = OrbitQuadrature { panels: 2 * panels, per_panel: 12 };
        let lhs = time_average(&a, &e, 2.0 * t, &g, whole).unwrap();
        let moved = geodesic_flow(&g, &e, t).unwrap();
        let rhs = 0.5 * (time_average(&a, &e, t, &g, half).unwrap() + time_average(&a, &e, t, &moved, half).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-9, "{} vs {}", lhs, rhs);
    }
}
