//! The correction F_delta and the windows h_{L, delta} in PW_n.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mollifier::{smoothed_indicator, smoothed_indicator_complex};
use super::{TransformError, WindowFunction, WindowKind, WindowMeta};

/// Which points im/2 the correction interpolates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexSet {
    /// 1 <= |m| <= |n| only.
    Literal,
    /// 1 <= |m| <= |n| together with every odd |m| <= 2|n| - 1. The poles of
    /// P_n(2ix)/P_n(-2ix) sit at x = -i(2k+1)/2 for k < |n|, so these are
    /// the points where 1 - F_delta must vanish.
    Completed,
}

impl IndexSet {
    pub fn indices(self, n: i64) -> Vec<i64> {
        let n = n.abs();
        let mut ms: Vec<i64> = (1..=n).collect();
        if self == IndexSet::Completed {
            ms.extend((1..2 * n).step_by(2).filter(|m| *m > n));
        }
        ms.sort_unstable();
        ms.iter().flat_map(|m| [-m, *m]).collect()
    }
}

/// F_delta(x) = sum_m G(x) / (G'(im/2)(x - im/2)) with
/// G(x) = sin(x/delta) prod_m (2x - im)/(x/delta - m pi).
#[derive(Clone, Debug)]
pub struct Correction {
    pub delta: f64,
    pub indices: Vec<i64>,
    /// prod_{m' != m} (im - im')/((im/2)/delta - m' pi), per index m.
    norms: Vec<Complex64>,
}

/// sin(a) / (i sinh(b)), overflow-free for large |Im a| and b.
fn sin_over_i_sinh(a: Complex64, b: f64) -> Complex64 {
    if b < 0.0 {
        return -sin_over_i_sinh(a, -b);
    }
    let i = Complex64::i();
    let num = (i * a - b).exp() - (-i * a - b).exp();
    -num / (1.0 - (-2.0 * b).exp())
}

impl Correction {
    pub fn new(delta: f64, indices: Vec<i64>) -> Result<Self, TransformError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(TransformError::BadParameter(format!("delta = {delta} outside (0, 1)")));
        }
        if indices.is_empty() || indices.contains(&0) {
            return Err(TransformError::BadParameter("correction needs nonzero indices".into()));
        }
        let i = Complex64::i();
        let norms = indices
            .iter()
            .map(|&m| {
                let xm = i * (m as f64 * 0.5);
                indices
                    .iter()
                    .filter(|&&k| k != m)
                    .map(|&k| (xm * 2.0 - i * k as f64) / (xm / delta - k as f64 * PI))
                    .product()
            })
            .collect();
        Ok(Correction { delta, indices, norms })
    }

    fn direct(&self, x: Complex64) -> Complex64 {
        let i = Complex64::i();
        let d = self.delta;
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &m) in self.indices.iter().enumerate() {
            let xm = i * (m as f64 * 0.5);
            let mut rest = Complex64::new(1.0, 0.0);
            for &k in self.indices.iter().filter(|&&k| k != m) {
                rest *= (x * 2.0 - i * k as f64) / (x / d - k as f64 * PI);
            }
            let own = (xm / d - m as f64 * PI) / (x / d - m as f64 * PI);
            acc += sin_over_i_sinh(x / d, m as f64 / (2.0 * d)) * rest / self.norms[idx] * own;
        }
        acc
    }

    /// F_delta(x). Near the removable singularities x = m pi delta the value is the
    /// mean over a small circle, exact for entire functions up to aliasing.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let d = self.delta;
        let near = self.indices.iter().any(|&m| (x / d - m as f64 * PI).norm() < 1e-3);
        if !near {
            return self.direct(x);
        }
        circle_mean(|w| self.direct(w), x, 0.3 * PI * d)
    }
}

fn circle_mean<F: Fn(Complex64) -> Complex64>(f: F, x: Complex64, radius: f64) -> Complex64 {
    const K: usize = 32;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..K {
        acc += f(x + Complex64::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / K as f64));
    }
    acc / K as f64
}

/// F_delta for K-type n over the completed index set.
pub fn make_correction(delta: f64, n: i64) -> Result<Correction, TransformError> {
    if n == 0 {
        return Err(TransformError::BadParameter("the correction is only defined for n != 0".into()));
    }
    Correction::new(delta, IndexSet::Completed.indices(n))
}

/// Poles of P_n(2ix)/P_n(-2ix): x = -i(k + 1/2), k < |n|.
fn ratio_poles(n: i64) -> Vec<Complex64> {
    (0..n.unsigned_abs()).map(|k| Complex64::new(0.0, -(k as f64 + 0.5))).collect()
}

fn ratio(x: Complex64, n: i64) -> Complex64 {
    let ix = Complex64::i() * x;
    (0..n.unsigned_abs()).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (ix + 0.5 + k as f64) / (-ix + 0.5 + k as f64))
}

struct CorrectedWindow {
    l: f64,
    delta: f64,
    n: i64,
    correction: Correction,
    /// Poles whose factor 1 - F(-x) does not vanish.
    open_poles: Vec<Complex64>,
}

impl CorrectedWindow {
    fn indicator(&self, x: Complex64) -> Complex64 {
        if x.im == 0.0 {
            Complex64::new(smoothed_indicator(x.re, self.delta), 0.0)
        } else {
            smoothed_indicator_complex(x, self.delta)
        }
    }

    /// R_n(x)(1 - F(-x)): analytic at the cancelled poles.
    fn mirrored_factor(&self, x: Complex64) -> Complex64 {
        ratio(x, self.n) * (1.0 - self.correction.eval(-x))
    }

    fn eval(&self, x: Complex64) -> Result<Complex64, TransformError> {
        if let Some(p) = self.open_poles.iter().find(|p| (x - **p).norm() < 1e-10) {
            return Err(TransformError::PoleProximity(*p));
        }
        let first = (1.0 - self.correction.eval(x)) * self.indicator(x - self.l);
        let near_pole = ratio_poles(self.n).into_iter().find(|p| (x - p).norm() < 1e-2);
        let mirrored = match near_pole {
            Some(p) if !self.open_poles.contains(&p) => circle_mean(|w| self.mirrored_factor(w), x, 0.05),
            _ => self.mirrored_factor(x),
        };
        Ok(first + mirrored * self.indicator(-x - self.l))
    }
}

fn check_window_args(l: f64, delta: f64) -> Result<(), TransformError> {
    if !(l >= 0.5 && l.is_finite()) {
        return Err(TransformError::BadParameter(format!("L = {l} must be at least 1/2")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(TransformError::BadParameter(format!("delta = {delta} outside (0, 1)")));
    }
    Ok(())
}

/// h_{L, delta} over an explicit index set (the completed one is the default).
pub fn make_window_with(l: f64, delta: f64, n: i64, set: IndexSet) -> Result<WindowFunction, TransformError> {
    check_window_args(l, delta)?;
    if n == 0 {
        let meta = WindowMeta { l: Some(l), delta: Some(delta), kind: WindowKind::MollifiedIndicator };
        return Ok(WindowFunction::with_evaluators(
            0,
            1.0 / delta,
            meta,
            Arc::new(move |x| Ok(smoothed_indicator_complex(-x - l, delta) + smoothed_indicator_complex(x - l, delta))),
            Some(Arc::new(move |x| {
                Ok(Complex64::new(smoothed_indicator(-x - l, delta) + smoothed_indicator(x - l, delta), 0.0))
            })),
        ));
    }
    let correction = Correction::new(delta, set.indices(n))?;
    let open_poles = ratio_poles(n).into_iter().filter(|p| (1.0 - correction.eval(-*p)).norm() > 1e-8).collect();
    let w = Arc::new(CorrectedWindow { l, delta, n, correction, open_poles });
    let meta = WindowMeta { l: Some(l), delta: Some(delta), kind: WindowKind::Corrected };
    let wc = w.clone();
    Ok(WindowFunction::with_evaluators(
        n,
        2.0 / delta,
        meta,
        Arc::new(move |x| wc.eval(x)),
        Some(Arc::new(move |x| w.eval(Complex64::new(x, 0.0)))),
    ))
}

/// h_{L, delta} in PW_n: 1_delta(-x-L) + 1_delta(x-L) for n = 0, otherwise
/// (1 - F(x)) 1_delta(x-L) + R_n(x)(1 - F(-x)) 1_delta(-x-L) with
/// R_n(x) = P_n(2ix)/P_n(-2ix).
pub fn make_window(l: f64, delta: f64, n: i64) -> Result<WindowFunction, TransformError> {
    make_window_with(l, delta, n, IndexSet::Completed)
}

/// Fitted constants of the three regimes in the delta-approximation bound, over
/// real x > 0 with u = |x - L|: C_1 = sup |h - 1|/delta for u <= 1/2 - sqrt(delta),
/// C_2 = sup |h - 1_box| in between, C_3 = sup |h| (u - 1/2)^N / delta for u > 1/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeConstants {
    pub inner: f64,
    pub transition: f64,
    pub outer: f64,
}

/// Samples per unit length; resolves features of width delta.
fn regime_step(delta: f64) -> f64 {
    (delta / 8.0).min(1e-3)
}

pub fn regime_constants(h: &WindowFunction, l: f64, delta: f64, power: i32) -> Result<RegimeConstants, TransformError> {
    check_window_args(l, delta)?;
    let step = regime_step(delta);
    let edge = 0.5 - delta.sqrt();
    let hi = l + 0.5 + 6.0;
    let count = (hi / step).ceil() as usize;
    let mut c = RegimeConstants { inner: 0.0, transition: 0.0, outer: 0.0 };
    for k in 1..=count {
        let x = k as f64 * step;
        let v = h.eval_real(x)?;
        let u = (x - l).abs();
        if u <= edge {
            c.inner = c.inner.max((v - 1.0).norm() / delta);
        } else if u <= 0.5 {
            c.transition = c.transition.max((v - 1.0).norm());
        } else {
            c.outer = c.outer.max(v.norm() * (u - 0.5).powi(power) / delta);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completed_index_sets() {
        assert_eq!(IndexSet::Completed.indices(1), vec![-1, 1]);
        assert_eq!(IndexSet::Completed.indices(2), vec![-1, 1, -2, 2, -3, 3]);
        assert_eq!(IndexSet::Literal.indices(2), vec![-1, 1, -2, 2]);
    }

    #[test]
    fn sin_ratio_matches_direct_formula() {
        let a = Complex64::new(0.7, 2.0);
        let b: f64 = 1.3;
        let direct = a.sin() / (Complex64::i() * b.sinh());
        assert!((sin_over_i_sinh(a, b) - direct).norm() < 1e-14);
        assert!((sin_over_i_sinh(a, -b) + direct).norm() < 1e-14);
    }

    #[test]
    fn removable_points_are_smooth() {
        let c = make_correction(0.1, 1).unwrap();
        let x0 = PI * 0.1;
        let at = c.eval(Complex64::new(x0, 0.0));
        let off = c.direct(Complex64::new(x0 + 1e-2, 0.0));
        assert!((at - off).norm() < 1e-1 * off.norm().max(1e-3));
        assert!(at.re.is_finite());
    }
}
