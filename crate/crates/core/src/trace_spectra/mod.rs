//! Geometric-side terms of the Selberg trace formula on a product of planes,
//! element classification, and synthetic spectra for the counting harness.
//!
//! Fourier convention throughout: h-hat(t) = (1/2 pi) int h(r) e^{-irt} dr.

mod spectrum;

pub use spectrum::{
    check_cubic_decay, count_exceptional, count_window, exceptional_weighted_sum, generate_spectrum, smoothing_defect,
    window_sum, CountWindow, ExceptionalProfile, Intensity, Sampling, SpectrumSpec, SyntheticSpectrum,
    SPECTRUM_FORMAT_VERSION,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::Rule;
use crate::transforms::{TransformError, WindowFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("|trace| = {0} is parabolic; irreducible co-compact lattices have no parabolic elements")]
    Parabolic(f64),
    #[error("invalid conjugacy class: {0}")]
    BadDatum(String),
    #[error("window violates its decay hypothesis: {0}")]
    DecayViolation(String),
    #[error("window must be even and real on the line: {0}")]
    NotEven(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("spectrum file: {0}")]
    Format(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Classification of one factor gamma_j.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FactorClass {
    /// Conjugate to diag(e^{l/2}, e^{-l/2}).
    Hyperbolic { l: f64 },
    /// Conjugate to the rotation k_theta, theta in (0, pi).
    Elliptic { theta: f64 },
}

impl FactorClass {
    fn validate(&self) -> Result<(), TraceError> {
        match *self {
            FactorClass::Hyperbolic { l } if !(l > 0.0 && l.is_finite()) => {
                Err(TraceError::BadDatum(format!("length l = {l} must be positive")))
            }
            FactorClass::Elliptic { theta } if !(theta > 0.0 && theta < PI) => {
                Err(TraceError::BadDatum(format!("angle theta = {theta} outside (0, pi)")))
            }
            _ => Ok(()),
        }
    }
}

/// Classify a factor by its trace: |tr| > 2 hyperbolic with l = 2 arccosh(|tr|/2),
/// |tr| < 2 elliptic with theta = arccos(|tr|/2).
pub fn classify_element(trace: f64) -> Result<FactorClass, TraceError> {
    let t = trace.abs();
    if !t.is_finite() {
        return Err(TraceError::BadParameter(format!("trace {trace} is not finite")));
    }
    if (t - 2.0).abs() <= 1e-12 {
        return Err(TraceError::Parabolic(t));
    }
    Ok(if t > 2.0 {
        FactorClass::Hyperbolic { l: 2.0 * (0.5 * t).acosh() }
    } else {
        FactorClass::Elliptic { theta: (0.5 * t).acos() }
    })
}

/// A nontrivial conjugacy class {gamma}: one classification per factor and the
/// centralizer covolume c_gamma, which is supplied by the caller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugacyClassDatum {
    pub factors: Vec<FactorClass>,
    pub c_gamma: f64,
}

impl ConjugacyClassDatum {
    pub fn new(factors: Vec<FactorClass>, c_gamma: f64) -> Result<Self, TraceError> {
        let d = ConjugacyClassDatum { factors, c_gamma };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.factors.is_empty() {
            return Err(TraceError::BadDatum("no factors".into()));
        }
        if !(self.c_gamma > 0.0 && self.c_gamma.is_finite()) {
            return Err(TraceError::BadDatum(format!("c_gamma = {} must be positive", self.c_gamma)));
        }
        self.factors.iter().try_for_each(FactorClass::validate)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFile {
    #[serde(rename = "class", default)]
    classes: Vec<ConjugacyClassDatum>,
}

/// Reads `[[class]]` tables, each with `c_gamma` and a `factors` list.
pub fn load_classes(text: &str) -> Result<Vec<ConjugacyClassDatum>, TraceError> {
    let file: ClassFile = toml::from_str(text).map_err(|e| TraceError::BadDatum(e.to_string()))?;
    for c in &file.classes {
        c.validate()?;
    }
    Ok(file.classes)
}

const EXTENT_CAP: f64 = 1e5;

/// Step resolving the finest feature of h on the line.
fn feature_step(h: &WindowFunction) -> f64 {
    h.meta.delta.map_or(0.25, |d| d.min(0.25))
}

/// R such that |h(r)| < 1e-16 sup|h| for |r| > R. Windows vanish numerically
/// near the origin, so the scan always passes their center.
fn extent(h: &WindowFunction) -> Result<f64, TraceError> {
    let s = feature_step(h);
    let gap = (50.0 * s).max(2.0);
    let floor = h.meta.l.map_or(0.0, |l| l + 0.5);
    let mut peak = 0.0f64;
    let mut last = 0.0f64;
    let mut k = 0usize;
    loop {
        let r = k as f64 * s;
        if r > EXTENT_CAP {
            return Err(TraceError::DecayViolation(format!("|h| still above 1e-16 of its peak at r = {last:.1}")));
        }
        let v = h.eval_real(r)?.norm().max(h.eval_real(-r)?.norm());
        if !v.is_finite() {
            return Err(TraceError::DecayViolation(format!("h({r}) is not finite")));
        }
        peak = peak.max(v);
        if v >= 1e-16 * peak && v > 0.0 {
            last = r;
        } else if r > last + gap && r > floor {
            return Ok(last + s);
        }
        k += 1;
    }
}

fn check_even_real(h: &WindowFunction, extent: f64) -> Result<(), TraceError> {
    let samples = 37;
    let mut peak = 0.0f64;
    let mut worst = 0.0f64;
    for k in 0..samples {
        let r = extent * (k as f64 + 0.31) / samples as f64;
        let (a, b) = (h.eval_real(r)?, h.eval_real(-r)?);
        peak = peak.max(a.norm());
        worst = worst.max((a - b).norm()).max(a.im.abs());
    }
    if worst > 1e-10 * peak.max(1e-300) {
        return Err(TraceError::NotEven(format!("defect {worst:.3e} against peak {peak:.3e}")));
    }
    Ok(())
}

/// Composite Gauss rule on [0, b] with panels of width at most `width`.
fn half_line_rule(b: f64, width: f64) -> Rule {
    let panels = ((b / width).ceil() as usize).max(1);
    Rule::composite_gauss(0.0, b, panels, 24)
}

/// h-hat(t) = (1/2 pi) int_R h(r) e^{-irt} dr.
pub fn hat_transform(h: &WindowFunction, t: f64) -> Result<Complex64, TraceError> {
    let b = extent(h)?;
    let width = (4.0 * feature_step(h)).min(1.0).min(2.0 * PI / (t.abs() + 1.0));
    let rule = half_line_rule(b, width);
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, w) in rule.nodes.iter().zip(&rule.weights) {
        let e = Complex64::from_polar(1.0, -r * t);
        acc += (h.eval_real(*r)? * e + h.eval_real(-r)? * e.conj()) * *w;
    }
    Ok(acc / (2.0 * PI))
}

/// prod_j (1/4 pi) int_R h_j(r) r tanh(pi r) dr.
pub fn identity_term(h_list: &[WindowFunction]) -> Result<f64, TraceError> {
    let mut total = 1.0;
    for h in h_list {
        let b = extent(h)?;
        check_even_real(h, b)?;
        let rule = half_line_rule(b, (4.0 * feature_step(h)).min(1.0));
        let mut acc = 0.0;
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            acc += w * h.eval_real(*r)?.re * r * (PI * r).tanh();
        }
        total *= 2.0 * acc / (4.0 * PI);
    }
    Ok(total)
}

/// cosh(a r)/cosh(pi r) for |a| < pi, without overflow.
fn cosh_ratio(a: f64, r: f64) -> f64 {
    let r = r.abs();
    ((a.abs() - PI) * r).exp() * (1.0 + (-2.0 * a.abs() * r).exp()) / (1.0 + (-2.0 * PI * r).exp())
}

/// The factor h-tilde(gamma_j).
pub fn orbital_factor(class: FactorClass, h: &WindowFunction) -> Result<f64, TraceError> {
    class.validate()?;
    match class {
        FactorClass::Hyperbolic { l } => {
            check_even_real(h, extent(h)?)?;
            Ok(hat_transform(h, l)?.re / (0.5 * l).sinh())
        }
        FactorClass::Elliptic { theta } => {
            let a = PI - 2.0 * theta;
            let margin = theta.min(PI - theta);
            if margin < 0.05 {
                log::warn!("theta = {theta} is close to an endpoint; the orbital integral converges slowly");
            }
            // cosh(a r)/cosh(pi r) <= 2 e^{-(pi - |a|) r} < 1e-14 beyond this
            let weight_range = (2e14f64).ln() / (PI - a.abs());
            let b = match extent(h) {
                Ok(e) => e.min(weight_range),
                Err(_) => weight_range,
            };
            check_even_real(h, b)?;
            let rule = half_line_rule(b, (4.0 * feature_step(h)).min(1.0));
            let mut acc = 0.0;
            for (r, w) in rule.nodes.iter().zip(&rule.weights) {
                acc += w * cosh_ratio(a, *r) * h.eval_real(*r)?.re;
            }
            Ok(2.0 * acc / theta.sin())
        }
    }
}

/// c_gamma prod_j h-tilde_j(gamma_j).
pub fn orbital_term(datum: &ConjugacyClassDatum, h_list: &[WindowFunction]) -> Result<f64, TraceError> {
    datum.validate()?;
    if datum.factors.len() != h_list.len() {
        return Err(TraceError::BadParameter(format!(
            "{} factors against {} windows",
            datum.factors.len(),
            h_list.len()
        )));
    }
    let mut v = datum.c_gamma;
    for (class, h) in datum.factors.iter().zip(h_list) {
        v *= orbital_factor(*class, h)?;
    }
    Ok(v)
}

/// Geometric side for a ≡ 1: identity term plus the listed classes.
pub fn geometric_side(classes: &[ConjugacyClassDatum], h_list: &[WindowFunction]) -> Result<f64, TraceError> {
    let mut v = identity_term(h_list)?;
    for c in classes {
        v += orbital_term(c, h_list)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosh_ratio_is_stable() {
        for (a, r) in [(0.3, 2.0), (-1.2, 0.7), (2.5, 5.0)] {
            let direct = (a * r as f64).cosh() / (PI * r).cosh();
            assert!((cosh_ratio(a, r) - direct).abs() < 1e-14 * direct);
        }
        assert!(cosh_ratio(3.0, 1e4) >= 0.0);
    }

    #[test]
    fn extent_of_gaussian() {
        let e = extent(&WindowFunction::gaussian(1.0)).unwrap();
        // e^{-r^2/2} = 1e-16 at r = 8.58
        assert!(e > 8.5 && e < 9.0, "{e}");
    }
}
