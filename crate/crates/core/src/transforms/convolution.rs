//! L[f]u(g) = int_H f(g^{-1} w) u(w) dw = int_H f(w) u(g w) dw.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{KTypeFunction, TransformError};
use crate::geometry::{GroupElement, PlanePoint};
use crate::quadrature::Rule;

/// Polar rule on the support disc of f: Gauss in the radius, trapezoid in theta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvolutionRule {
    pub radial_panels: usize,
    pub per_panel: usize,
    pub angular: usize,
}

impl ConvolutionRule {
    /// Resolves u of spectral parameter r (oscillation r sinh R around the circle of radius R)
    /// against f of K-type n.
    pub fn for_frequency(radius: f64, r: f64, n: i64) -> Self {
        let band = r.abs() * radius.sinh() + n.abs() as f64 + 0.5 * radius;
        ConvolutionRule {
            radial_panels: 4 + (r.abs() * radius / 3.0).ceil() as usize,
            per_panel: 16,
            angular: 64.max((1.5 * band).ceil() as usize + 64),
        }
    }

    /// Nodes w = k_theta(i e^t) with f(w) folded into the weight.
    pub(crate) fn weighted_nodes(&self, f: &KTypeFunction) -> Vec<(PlanePoint, Complex64)> {
        let radial = Rule::composite_gauss(0.0, f.support_radius, self.radial_panels, self.per_panel);
        let mut out = Vec::with_capacity(radial.len() * self.angular);
        for (t, wt) in radial.nodes.iter().zip(&radial.weights) {
            let ft = f.profile(*t);
            if ft == Complex64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..self.angular {
                let theta = PI * q as f64 / self.angular as f64;
                let w = 2.0 * t.sinh() * wt * PI / self.angular as f64;
                let fw = ft * Complex64::from_polar(w, 2.0 * f.n as f64 * theta);
                out.push((PlanePoint::polar(*t, theta), fw));
            }
        }
        out
    }
}

/// L[f]u(g) by polar quadrature over the support of f.
pub fn convolution_operator(
    f: &KTypeFunction,
    u: &dyn Fn(PlanePoint) -> Complex64,
    g: &GroupElement,
    rule: ConvolutionRule,
) -> Result<Complex64, TransformError> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (w, fw) in rule.weighted_nodes(f) {
        let v = u(g.act(w));
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(TransformError::DomainCoverage(g.act(w)));
        }
        acc += fw * v;
    }
    Ok(acc)
}
