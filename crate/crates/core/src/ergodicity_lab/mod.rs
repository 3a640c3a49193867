//! Experiment orchestration: geodesic-flow time averages, the suites behind
//! each experiment kind, the variance skeleton, configs and reports.
//!
//! The asymptotic statements about a genuine lattice spectrum are out of
//! reach; every suite checks a mechanism on model eigenfunctions or synthetic
//! spectra, and reports label each assertion as identity-, oracle- or
//! trend-verified.

mod config;
mod report;
mod skeleton;
mod suites;

pub use config::{ExperimentConfig, ExperimentKind, Grids, OutputPaths, QuadratureConfig};
pub use report::{Check, Environment, ExperimentReport, Metric, Record, Verification, REPORT_SCHEMA_VERSION};
pub use skeleton::{autocorrelation, averaged_l2_norm_sq, run_variance_skeleton, test_observable};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{geodesic_flow, EnergyVector, GeometryError, ProductGroupElement};
use crate::lie_operators::{LieError, SmoothObservable};
use crate::quadrature::Rule;
use crate::special_functions::SpecialError;
use crate::trace_spectra::TraceError;
use crate::transforms::TransformError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("flow orbit leaves the evaluable region at t = {t}: {reason}")]
    OrbitEscape { t: f64, reason: String },
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("report: {0}")]
    Report(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Composite Gauss rule on [0, T].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitQuadrature {
    pub panels: usize,
    pub per_panel: usize,
}

impl OrbitQuadrature {
    /// Four panels per crossing of the smallest support disc; the orbit moves
    /// at hyperbolic speed 2 sqrt(E_j) in factor j.
    pub fn for_observable(a: &SmoothObservable, e: &EnergyVector, t: f64) -> Self {
        let speed = 2.0 * e.components().iter().fold(0.0f64, |m, v| m.max(v.sqrt()));
        let scale = a.support.iter().map(|d| d.radius).fold(f64::INFINITY, f64::min);
        let crossings = if scale.is_finite() && scale > 0.0 { t.abs() * speed / scale } else { 0.0 };
        OrbitQuadrature { panels: ((4.0 * crossings).ceil() as usize).max(1), per_panel: 16 }
    }
}

fn representable(g: &ProductGroupElement) -> bool {
    g.factors.iter().all(|f| f.z.x.is_finite() && f.z.y.is_finite() && f.z.y > 0.0 && f.theta.is_finite())
}

/// <a>_E^T(g) = (1/T) int_0^T a(g A_E(t)) dt.
pub fn time_average(
    a: &SmoothObservable,
    e: &EnergyVector,
    t: f64,
    g: &ProductGroupElement,
    quad: OrbitQuadrature,
) -> Result<Complex64, LabError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(LabError::BadArgument(format!("averaging time T = {t} must be positive")));
    }
    if quad.panels == 0 || quad.per_panel == 0 {
        return Err(LabError::BadArgument("orbit rule has no nodes".into()));
    }
    if a.dim() != g.dim() || e.dim() != g.dim() {
        return Err(LabError::BadArgument(format!(
            "observable on {} factors, energy on {}, point on {}",
            a.dim(),
            e.dim(),
            g.dim()
        )));
    }
    let rule = Rule::composite_gauss(0.0, t, quad.panels, quad.per_panel);
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, w) in rule.nodes.iter().zip(&rule.weights) {
        let h = geodesic_flow(g, e, *s).map_err(|err| LabError::OrbitEscape { t: *s, reason: err.to_string() })?;
        if !representable(&h) {
            return Err(LabError::OrbitEscape { t: *s, reason: "coordinates overflow".into() });
        }
        let v = a.eval(&h);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(LabError::OrbitEscape { t: *s, reason: format!("observable returned {v}") });
        }
        acc += v * *w;
    }
    Ok(acc / t)
}

/// The observable g -> <a>_E^T(g), supported in the flowed support discs.
pub fn averaged_observable(
    a: &SmoothObservable,
    e: &EnergyVector,
    t: f64,
    quad: OrbitQuadrature,
) -> Result<SmoothObservable, LabError> {
    if !(t > 0.0 && t.is_finite()) || e.dim() != a.dim() {
        return Err(LabError::BadArgument(format!("T = {t} with {} energies on {} factors", e.dim(), a.dim())));
    }
    let mut support = a.support.clone();
    for (disc, ej) in support.iter_mut().zip(e.components()) {
        disc.radius += 2.0 * ej.sqrt() * t;
    }
    let inner = a.clone();
    let e = e.clone();
    Ok(SmoothObservable::new(
        move |g| time_average(&inner, &e, t, g, quad).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        None,
        support,
        None,
    ))
}

/// Validates and dispatches to the suite of the config's kind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut rec = report::Recorder::new(hash.clone(), cfg.seed);
    let mut notes = Vec::new();
    match cfg.kind {
        ExperimentKind::TransformRoundtrip => suites::transform_roundtrip(cfg, &mut rec),
        ExperimentKind::DecayFit => suites::decay_fit(cfg, &mut rec),
        ExperimentKind::LiftInvariance => suites::lift_invariance(cfg, &mut rec),
        ExperimentKind::PositivityGap => suites::positivity_gap(cfg, &mut rec),
        ExperimentKind::Lequiv => suites::lequiv(cfg, &mut rec),
        ExperimentKind::WeylBands => suites::weyl_bands(cfg, &mut rec),
        ExperimentKind::SmoothingDefect => suites::smoothing(cfg, &mut rec, &mut notes),
        ExperimentKind::VarianceSkeleton => skeleton::skeleton(cfg, &mut rec, &mut notes),
    }
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment_id: cfg.experiment_id(),
        kind: cfg.kind,
        config_hash: hash,
        seed: cfg.seed,
        environment: Environment::current(),
        records: rec.records,
        notes,
    })
}
