use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::report::{params, Check, Metric, Recorder, Verification};
use super::LabError;
use crate::geometry::PlanePoint;
use crate::lie_operators::{
    build_lift, differential_equation_residual, invariance_defect, pairing, positivity_gap as gap_of,
    positivity_window, Disc, Domain, FactorRegion, ModelEigenfunction, PlaneWave, RegionResolution, SmoothObservable,
    Truncation,
};
use crate::special_functions::{decay_exponent_fit, KType, SpectralPoint};
use crate::trace_spectra::{
    count_window, exceptional_weighted_sum, generate_spectrum, smoothing_defect, CountWindow, ExceptionalProfile,
    Intensity, Sampling, SpectrumSpec,
};
use crate::transforms::{
    choose_r_max, inverse_spherical_transform_many, make_window, quantize_expectation, KTypeFunction, ProductSymbol,
    QuantizeResolution, TransformTable, WindowFunction,
};

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn center() -> PlanePoint {
    PlanePoint { x: 0.1, y: 1.2 }
}

/// The single reflected wave y^{1/2 - ir}: its limit distribution is not
/// flow-invariant, the defect is of exact order 1/r.
pub(crate) fn reflected_wave(r: f64) -> ModelEigenfunction {
    ModelEigenfunction::new(
        SpectralPoint::real(&[r]),
        vec![PlaneWave { coefficient: c(1.0, 0.0), rotation: vec![0.0], reflected: vec![true] }],
    )
    .expect("one term on one factor")
}

pub(crate) fn mixed_observable() -> SmoothObservable {
    SmoothObservable::mixed_bump(center(), 0.6, vec![c(0.3, 0.1), c(1.0, 0.0), c(0.2, -0.4)])
}

pub(crate) fn resolution(cfg: &ExperimentConfig, default: RegionResolution) -> RegionResolution {
    cfg.quadrature.map(Into::into).unwrap_or(default)
}

fn failed_dependency() -> LabError {
    LabError::BadArgument("depends on a failed grid point".into())
}

fn value(rec: Option<&super::Record>, name: &str) -> Option<f64> {
    rec.and_then(|r| r.metric(name)).and_then(|m| m.value)
}

/// |ratio / expected - 1| for consecutive grid values, one trend record each.
#[allow(clippy::too_many_arguments)]
fn pair_trend(
    rec: &mut Recorder,
    key: &str,
    grid: &[f64],
    vals: &[Option<f64>],
    expected: impl Fn(f64, f64) -> f64,
    metric: &str,
    tol: f64,
    extra: &[(&str, serde_json::Value)],
) {
    for k in 0..grid.len().saturating_sub(1) {
        let mut p = params! { format!("{key}_from") => grid[k], format!("{key}_to") => grid[k + 1] };
        for (name, v) in extra {
            p.insert(name.to_string(), v.clone());
        }
        let (a, b) = (vals[k], vals[k + 1]);
        rec.point(p, || {
            let (a, b) = a.zip(b).ok_or_else(failed_dependency)?;
            let ratio = a / b;
            let want = expected(grid[k], grid[k + 1]);
            Ok(vec![
                Metric::reported("ratio", ratio),
                Metric::reported("expected-ratio", want),
                Metric::checked(metric, (ratio / want - 1.0).abs(), Check::AtMost, tol, Verification::Trend),
            ])
        });
    }
}

pub(crate) fn transform_roundtrip(cfg: &ExperimentConfig, rec: &mut Recorder) {
    let ns = cfg.grid.n.clone().unwrap_or(vec![0, 1, 2]);
    let tol_rt = cfg.tolerance("roundtrip-error", 1e-6);
    let tol_leak = cfg.tolerance("support-leak", 1e-6);
    let radius = 1.0;
    let margin = 0.3;
    for n in ns {
        rec.point(params! { "n" => n, "radius" => radius, "margin" => margin }, || {
            let f = KTypeFunction::bump(n, radius);
            let h = TransformTable::new(&f, 2000.0)?.into_window();
            let inside: Vec<PlanePoint> =
                (0..12).map(|k| PlanePoint::polar(0.08 * k as f64, 0.9 * k as f64 + 0.2)).collect();
            let back = inverse_spherical_transform_many(&h, &inside, choose_r_max(&h, radius)?)?;
            let peak = inside.iter().map(|z| f.eval(*z).norm()).fold(0.0, f64::max);
            let err = inside.iter().zip(&back).map(|(z, v)| (f.eval(*z) - v).norm()).fold(0.0, f64::max);
            // each radius gets its own inversion cutoff: the tail budget tightens with distance
            let mut leak = 0.0f64;
            for t in [radius + 0.5 * margin, radius + margin] {
                let ring: Vec<PlanePoint> = [0.0, 0.8, 1.7, 2.6].iter().map(|th| PlanePoint::polar(t, *th)).collect();
                for v in inverse_spherical_transform_many(&h, &ring, choose_r_max(&h, t)?)? {
                    leak = leak.max(v.norm());
                }
            }
            Ok(vec![
                Metric::checked("roundtrip-error", err / peak, Check::AtMost, tol_rt, Verification::Oracle),
                Metric::checked("support-leak", leak / peak, Check::AtMost, tol_leak, Verification::Oracle),
            ])
        });
    }
}

pub(crate) fn decay_fit(cfg: &ExperimentConfig, rec: &mut Recorder) {
    let grid = cfg.grid.r.clone().unwrap_or_else(|| (0..8).map(|k| 50.0 * 2f64.powf(3.0 * k as f64 / 7.0)).collect());
    let ns = cfg.grid.n.clone().unwrap_or(vec![0, 1]);
    let tol = cfg.tolerance("slope-deviation", 0.05);
    for n in ns {
        for z in [PlanePoint { x: 0.0, y: 2.0 }, PlanePoint { x: 1.0, y: 1.0 }] {
            rec.point(params! { "n" => n, "z" => [z.x, z.y], "r" => grid.clone() }, || {
                let slope = decay_exponent_fit(n, z, &grid)?;
                Ok(vec![
                    Metric::reported("slope", slope),
                    Metric::checked("slope-deviation", (slope + 0.5).abs(), Check::AtMost, tol, Verification::Trend),
                ])
            });
        }
    }
}

pub(crate) fn lift_invariance(cfg: &ExperimentConfig, rec: &mut Recorder) {
    let rs = cfg.grid.r.clone().unwrap_or(vec![50.0, 100.0, 200.0]);
    let ts = cfg.grid.t.clone().unwrap_or(vec![0.4]);
    let res = resolution(cfg, RegionResolution { panels: 12, per_panel: 16, angular: 160 });
    let tol_de = cfg.tolerance("de-residual", 1e-5);
    let tol_half = cfg.tolerance("halving-deviation", 0.3);
    let a = mixed_observable();
    let de_domain = Domain::disc(center(), 0.61, res);
    for t in ts {
        let domain = Domain::disc(center(), 0.61 + 2.0 * t, res);
        let mut defects = Vec::new();
        for r in &rs {
            let p = params! { "r" => r, "t" => t, "base" => "reflected-wave", "observable" => "mixed-bump" };
            let out = rec.point(p, || {
                let base = reflected_wave(*r);
                let d = invariance_defect(&build_lift(&base, 0)?, &a, 0, t, &domain, Truncation::Limit)?;
                let de =
                    differential_equation_residual(&build_lift(&base, 3)?, &a, 0, &de_domain, Truncation::Band(3))?;
                Ok(vec![
                    Metric::reported("defect", d),
                    Metric::reported("scaled-defect", r * d),
                    Metric::checked("de-residual", de.norm(), Check::AtMost, tol_de, Verification::Identity),
                ])
            });
            defects.push(value(out, "defect"));
        }
        let extra = [("t", serde_json::json!(t))];
        pair_trend(rec, "r", &rs, &defects, |r0, r1| r1 / r0, "halving-deviation", tol_half, &extra);
    }
}

pub(crate) fn positivity_gap(cfg: &ExperimentConfig, rec: &mut Recorder) {
    let rs = cfg.grid.r.clone().unwrap_or(vec![40.0, 80.0, 160.0]);
    let res = resolution(cfg, RegionResolution { panels: 8, per_panel: 16, angular: 96 });
    let tol_cs = cfg.tolerance("cauchy-schwarz", 1.0 + 1e-12);
    let tol_gap = cfg.tolerance("gap-ratio", 1.0);
    let a = mixed_observable();
    let domain = Domain::disc(center(), 0.61, res);
    let mut gaps = Vec::new();
    for r in &rs {
        let n = r.cbrt().round() as u32;
        let out = rec.point(params! { "r" => r, "N" => n, "base" => "reflected-wave" }, || {
            let base = reflected_wave(*r).normalized_on(&domain);
            let lift = build_lift(&base, n)?;
            let gap = gap_of(&lift, &a, &[0], n, &domain)?;
            let window = positivity_window(&lift, &[0], n)?;
            let mut worst = 0.0f64;
            for b in [a.clone(), SmoothObservable::bump(vec![center()], 0.6, KType(vec![0]))] {
                let p = pairing(&b, &window, &domain, 4 * n as usize + 8)?;
                worst = worst.max(p.cross.norm_sqr() / (p.b_squared * p.mass));
            }
            Ok(vec![
                Metric::reported("gap", gap),
                Metric::checked("cauchy-schwarz", worst, Check::AtMost, tol_cs, Verification::Identity),
            ])
        });
        gaps.push(value(out, "gap"));
    }
    for k in 0..rs.len().saturating_sub(1) {
        let (g0, g1) = (gaps[k], gaps[k + 1]);
        rec.point(params! { "r_from" => rs[k], "r_to" => rs[k + 1] }, || {
            let (g0, g1) = g0.zip(g1).ok_or_else(failed_dependency)?;
            Ok(vec![Metric::checked("gap-ratio", g1 / g0, Check::LessThan, tol_gap, Verification::Trend)])
        });
    }
}

pub(crate) fn lequiv(cfg: &ExperimentConfig, rec: &mut Recorder) {
    let ds = cfg.grid.d.clone().unwrap_or(vec![1, 2]);
    let rs = cfg.grid.r.clone().unwrap_or(vec![5.0]);
    let ns = cfg.grid.n.clone().unwrap_or(vec![0]);
    let tol1 = cfg.tolerance("rel-error-d1", 1e-4);
    let tol2 = cfg.tolerance("rel-error-d2", 1e-3);
    for d in ds {
        if d == 1 {
            let res = resolution(cfg, RegionResolution { panels: 4, per_panel: 16, angular: 96 });
            for r in &rs {
                for n in &ns {
                    rec.point(params! { "d" => 1, "r" => r, "n" => n, "window" => [*r, 0.5] }, || {
                        let base = ModelEigenfunction::plane_wave(SpectralPoint::real(&[*r]));
                        let a = SmoothObservable::bump(vec![center()], 0.6, KType(vec![*n]));
                        let sym = ProductSymbol::new(a, vec![make_window(*r, 0.5, *n)?])?;
                        let q = QuantizeResolution { domain: Domain::disc(center(), 0.6, res), convolution: None };
                        let (lhs, rhs) = quantize_expectation(&sym, &base, &q, n.unsigned_abs().max(1) as u32)?;
                        let rel = (lhs / rhs - 1.0).norm();
                        Ok(vec![Metric::checked("rel-error-d1", rel, Check::AtMost, tol1, Verification::Oracle)])
                    });
                }
            }
        } else {
            let res = resolution(cfg, RegionResolution { panels: 3, per_panel: 12, angular: 48 });
            let p = params! { "d" => 2, "r" => [3.0, 4.0], "n" => [1, 0], "windows" => [[3.0, 0.8], [4.0, 0.5]] };
            rec.point(p, || {
                let base = ModelEigenfunction::new(
                    SpectralPoint::real(&[3.0, 4.0]),
                    vec![PlaneWave::new(c(1.0, 0.0), vec![0.0, 0.0]), PlaneWave::new(c(0.5, 0.2), vec![0.7, 1.9])],
                )?;
                let (z1, z2) = (center(), PlanePoint { x: -0.2, y: 0.9 });
                let a = SmoothObservable::bump(vec![z1, z2], 0.5, KType(vec![1, 0]));
                let sym = ProductSymbol::new(a, vec![make_window(3.0, 0.8, 1)?, make_window(4.0, 0.5, 0)?])?;
                let domain = Domain::new(
                    vec![
                        FactorRegion::Disc(Disc { center: z1, radius: 0.5 }),
                        FactorRegion::Disc(Disc { center: z2, radius: 0.5 }),
                    ],
                    vec![res, res],
                );
                let (lhs, rhs) =
                    quantize_expectation(&sym, &base, &QuantizeResolution { domain, convolution: None }, 1)?;
                let rel = (lhs / rhs - 1.0).norm();
                Ok(vec![Metric::checked("rel-error-d2", rel, Check::AtMost, tol2, Verification::Oracle)])
            });
        }
    }
}

fn weyl_spec(c: f64, d: usize, r_max: f64, seed: u64) -> SpectrumSpec {
    SpectrumSpec {
        c,
        d,
        r_max,
        seed,
        sampling: Sampling::Poisson,
        intensity: Intensity::Weyl,
        exceptional: ExceptionalProfile::None,
    }
}

pub(crate) fn weyl_bands(cfg: &ExperimentConfig, rec: &mut Recorder) {
    let ds = cfg.grid.d.clone().unwrap_or(vec![2]);
    let ls = cfg.grid.l.clone().unwrap_or(vec![20.0, 30.0, 40.0]);
    let tol_band = cfg.tolerance("band-log2-deviation", 1.0);
    let tol_z = cfg.tolerance("epsilon-scaling-z", 4.0);
    let tol_exc = cfg.tolerance("exceptional-final-fraction", 0.1);
    let density = 1.0;
    let l_max = ls.iter().cloned().fold(0.0, f64::max);
    let l_min = ls.iter().cloned().fold(f64::INFINITY, f64::min);
    for d in ds {
        let spectrum = generate_spectrum(&weyl_spec(density, d, l_max + 5.0, cfg.seed));
        for l in &ls {
            rec.point(params! { "d" => d, "L" => l, "c" => density }, || {
                let s = spectrum.as_ref().map_err(|e| LabError::Trace(e.clone()))?;
                let n = count_window(s, &CountWindow::unit(vec![*l; d])?) as f64;
                let ratio = n / (density * l.powi(d as i32));
                Ok(vec![
                    Metric::reported("count", n),
                    Metric::reported("ratio", ratio),
                    Metric::checked(
                        "band-log2-deviation",
                        ratio.log2().abs(),
                        Check::AtMost,
                        tol_band,
                        Verification::Trend,
                    ),
                ])
            });
        }
        // N(L, eps) / N(L, 1) against eps^d over random centers
        for eps in [0.5f64, 0.25] {
            rec.point(params! { "d" => d, "epsilon" => eps, "centers" => 300, "L_range" => [l_min, l_max] }, || {
                let s = spectrum.as_ref().map_err(|e| LabError::Trace(e.clone()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
                let hi = l_max.max(l_min + 1.0);
                let centers: Vec<Vec<f64>> =
                    (0..300).map(|_| (0..d).map(|_| rng.random_range(l_min..hi)).collect()).collect();
                let total = |e: f64| -> Result<f64, LabError> {
                    let mut acc = 0.0;
                    for l in &centers {
                        acc += count_window(s, &CountWindow::new(l.clone(), e)?) as f64;
                    }
                    Ok(acc)
                };
                let full = total(1.0)?;
                let p = eps.powi(d as i32);
                let got = total(eps)? / full;
                let z = (got - p).abs() / (p * (1.0 - p) / full).sqrt();
                Ok(vec![
                    Metric::reported("fraction", got),
                    Metric::reported("expected-fraction", p),
                    Metric::checked("epsilon-scaling-z", z, Check::AtMost, tol_z, Verification::Trend),
                ])
            });
        }
        let seq = [2.0, 4.0, 8.0, 16.0];
        rec.point(params! { "d" => d, "L" => seq, "slab_density" => 1.0 }, || {
            let spec = SpectrumSpec {
                exceptional: ExceptionalProfile::Slabs { density: 1.0 },
                ..weyl_spec(density, d, 20.0, cfg.seed.wrapping_add(2))
            };
            let s = generate_spectrum(&spec)?;
            let h = WindowFunction::generic(0, f64::INFINITY, |r| 1.0 / ((r * r + 1.0) * (r * r + 1.0)));
            let hs = vec![h; d];
            let mut vals = Vec::new();
            for l in seq {
                vals.push(exceptional_weighted_sum(&s, &hs, &vec![l; d])?);
            }
            let step = vals.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            Ok(vec![
                Metric::reported("initial-sum", vals[0]),
                Metric::checked("exceptional-max-step-ratio", step, Check::LessThan, 1.0, Verification::Trend),
                Metric::checked(
                    "exceptional-final-fraction",
                    vals[vals.len() - 1] / vals[0],
                    Check::LessThan,
                    tol_exc,
                    Verification::Trend,
                ),
            ])
        });
    }
}

pub(crate) fn smoothing(cfg: &ExperimentConfig, rec: &mut Recorder, notes: &mut Vec<String>) {
    let ls = cfg.grid.l.clone().unwrap_or(vec![300.0]);
    let deltas = cfg.grid.delta.clone().unwrap_or(vec![0.04, 0.01]);
    let tol = cfg.tolerance("sqrt-scaling-deviation", 0.4);
    let density = 10.0;
    notes.push(
        "sqrt(delta) is an upper bound for the smoothing defect; fitted-exponent records the measured rate".into(),
    );
    for l in &ls {
        let spectrum = generate_spectrum(&weyl_spec(density, 1, l + 100.0, cfg.seed));
        let mut vals = Vec::new();
        for delta in &deltas {
            let out = rec.point(params! { "L" => l, "delta" => delta, "c" => density, "d" => 1 }, || {
                let s = spectrum.as_ref().map_err(|e| LabError::Trace(e.clone()))?;
                let v = smoothing_defect(s, &[*l], *delta, &KType(vec![0]))?;
                Ok(vec![
                    Metric::reported("defect", v),
                    Metric::reported("defect-over-delta", v / delta),
                    Metric::reported("defect-over-sqrt-delta", v / delta.sqrt()),
                ])
            });
            vals.push(value(out, "defect"));
        }
        for k in 0..deltas.len().saturating_sub(1) {
            let (a, b) = (vals[k], vals[k + 1]);
            let (d0, d1) = (deltas[k], deltas[k + 1]);
            rec.point(params! { "L" => l, "delta_from" => d0, "delta_to" => d1 }, || {
                let (a, b) = a.zip(b).ok_or_else(failed_dependency)?;
                let ratio = a / b;
                let want = (d0 / d1).sqrt();
                Ok(vec![
                    Metric::reported("ratio", ratio),
                    Metric::reported("expected-ratio", want),
                    Metric::reported("fitted-exponent", ratio.ln() / (d0 / d1).ln()),
                    Metric::checked(
                        "sqrt-scaling-deviation",
                        (ratio / want - 1.0).abs(),
                        Check::AtMost,
                        tol,
                        Verification::Trend,
                    ),
                ])
            });
        }
    }
}
