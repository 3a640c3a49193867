//! phi_r, characters, the generalized spherical functions Phi_{r,n} and P_n.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{hyperbolic_distance, PlanePoint};
use crate::quadrature::{gauss_legendre, QuadratureSpec, Scheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("spectral component {0} must be real or purely imaginary with 0 < |Im| < 1/2")]
    BadSpectralComponent(Complex64),
    #[error("K-integral needs at least {required} nodes for this (r, n, z), rule has {given}")]
    ResolutionTooLow { required: usize, given: usize },
    #[error("P_n ratio has a pole at r = {0}")]
    Pole(Complex64),
    #[error("decay fit needs z away from i (distance {0} too small)")]
    PointAtOrigin(f64),
    #[error("decay fit grid must be increasing, have at least two points and start at r >= 20")]
    BadGrid,
    #[error("decay fit degenerate: |Phi| underflowed at r = {0}")]
    FitDegenerate(f64),
}

/// Spectral parameters r_j with lambda_j = 1/4 + r_j^2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub r: Vec<Complex64>,
}

impl SpectralPoint {
    pub fn new(r: Vec<Complex64>) -> Result<Self, SpecialError> {
        for c in &r {
            let real = c.im == 0.0 && c.re.is_finite();
            let exceptional = c.re == 0.0 && c.im.abs() > 0.0 && c.im.abs() < 0.5;
            if !(real || exceptional) {
                return Err(SpecialError::BadSpectralComponent(*c));
            }
        }
        Ok(SpectralPoint { r })
    }

    pub fn real(r: &[f64]) -> Self {
        SpectralPoint { r: r.iter().map(|v| Complex64::new(*v, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.r.iter().map(|c| 0.25 + (c * c).re).collect()
    }

    pub fn is_exceptional(&self) -> bool {
        self.r.iter().any(|c| c.im != 0.0)
    }
}

/// Integer K-type vector n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KType(pub Vec<i64>);

impl KType {
    pub fn zero(d: usize) -> Self {
        KType(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    /// chi_n(k_theta) = e^{2i n.theta}.
    pub fn character(&self, theta: &[f64]) -> Complex64 {
        let phase: f64 = self.0.iter().zip(theta).map(|(n, t)| 2.0 * *n as f64 * t).sum();
        Complex64::from_polar(1.0, phase)
    }

    pub fn neg(&self) -> KType {
        KType(self.0.iter().map(|v| -v).collect())
    }
}

/// y^{ir + 1/2}.
pub fn eval_phi_r(r: Complex64, z: PlanePoint) -> Complex64 {
    ((Complex64::i() * r + 0.5) * z.y.ln()).exp()
}

/// Rising product ((x+1)/2)((x+1)/2 + 1)...((x+1)/2 + |n| - 1).
pub fn eval_p_n(x: Complex64, n: i64) -> Complex64 {
    let h = (x + 1.0) * 0.5;
    (0..n.unsigned_abs()).fold(Complex64::new(1.0, 0.0), |acc, k| acc * (h + k as f64))
}

/// P_n(2ir)/P_n(-2ir), formed factor by factor so that no factor pair is divided twice.
pub fn p_n_ratio(r: Complex64, n: i64) -> Result<Complex64, SpecialError> {
    let ir = Complex64::i() * r;
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 0..n.unsigned_abs() {
        let den = -ir + 0.5 + k as f64;
        if den.norm() < 1e-14 {
            return Err(SpecialError::Pole(r));
        }
        acc *= (ir + 0.5 + k as f64) / den;
    }
    Ok(acc)
}

/// Bandwidth of theta -> phi_r(k_theta^{-1} z) chi_n(k_theta), in units of e^{2i theta}.
fn k_bandwidth(r: Complex64, n: i64, z: PlanePoint) -> f64 {
    let d = hyperbolic_distance(z, PlanePoint::i());
    r.norm() * d.sinh() + n.abs() as f64 + 0.5 * d
}

/// Smallest node count that resolves the K-integral at all.
pub fn minimum_k_nodes(r: Complex64, n: i64, z: PlanePoint) -> usize {
    k_bandwidth(r, n, z).ceil() as usize + 8
}

/// Default node count: max(256, 16 ceil|r|) raised to a Nyquist margin when z is far from i.
pub fn default_k_nodes(r: Complex64, n: i64, z: PlanePoint) -> usize {
    let base = 256usize.max(16 * r.norm().ceil() as usize);
    let nyq = (1.5 * k_bandwidth(r, n, z)).ceil() as usize + 64;
    base.max(nyq)
}

pub fn default_k_spec(r: Complex64, n: i64, z: PlanePoint) -> QuadratureSpec {
    QuadratureSpec::trapezoid(default_k_nodes(r, n, z))
}

#[inline]
fn rotated_height(z: PlanePoint, theta: f64) -> f64 {
    // Im(k_theta^{-1} z) with k_theta^{-1} = [[c, -s], [s, c]].
    let (s, c) = theta.sin_cos();
    let u = s * z.x + c;
    let v = s * z.y;
    z.y / (u * u + v * v)
}

/// Phi_{r,n}(z) = int_K phi_r(k^{-1} z) chi_n(k) dk with dk = dtheta/pi.
pub fn eval_spherical(r: Complex64, n: i64, z: PlanePoint, quad: QuadratureSpec) -> Result<Complex64, SpecialError> {
    let required = minimum_k_nodes(r, n, z);
    if quad.node_count < required {
        return Err(SpecialError::ResolutionTooLow { required, given: quad.node_count });
    }
    let s = Complex64::i() * r + 0.5;
    let nf = 2.0 * n as f64;
    let term = |theta: f64| (s * rotated_height(z, theta).ln() + Complex64::i() * (nf * theta)).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    match quad.scheme_id {
        Scheme::Trapezoid => {
            let m = quad.node_count;
            let h = PI / m as f64;
            for k in 0..m {
                acc += term(k as f64 * h);
            }
            acc /= m as f64;
        }
        Scheme::GaussLegendre => {
            let rule = gauss_legendre(quad.node_count);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                acc += term(0.5 * PI * (x + 1.0)) * *w;
            }
            acc *= 0.5;
        }
    }
    Ok(acc)
}

/// Phi_{r,n}(z) at the default resolution.
pub fn spherical(r: Complex64, n: i64, z: PlanePoint) -> Complex64 {
    eval_spherical(r, n, z, default_k_spec(r, n, z)).expect("default rule meets the minimum")
}

/// |Phi_{r,n}(z) - (P_n(2ir)/P_n(-2ir)) Phi_{-r,n}(z)|.
pub fn spherical_symmetry_residual(r: f64, n: i64, z: PlanePoint) -> Result<f64, SpecialError> {
    let rc = Complex64::new(r, 0.0);
    let ratio = p_n_ratio(rc, n)?;
    let spec = default_k_spec(rc, n, z);
    let plus = eval_spherical(rc, n, z, spec)?;
    let minus = eval_spherical(-rc, n, z, spec)?;
    Ok((plus - ratio * minus).norm())
}

/// Log-log slope of |Phi_{r,n}(z)| against r.
///
/// |Phi| beats between two stationary-point contributions with period pi/d(z,i)
/// in r, so each grid value is the envelope: the largest modulus over one such
/// period starting at r.
pub fn decay_exponent_fit(n: i64, z: PlanePoint, r_grid: &[f64]) -> Result<f64, SpecialError> {
    let d = hyperbolic_distance(z, PlanePoint::i());
    if d < 0.05 {
        return Err(SpecialError::PointAtOrigin(d));
    }
    if r_grid.len() < 2 || r_grid[0] < 20.0 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpecialError::BadGrid);
    }
    let period = PI / d;
    let samples = 16;
    let mut xs = Vec::with_capacity(r_grid.len());
    let mut ys = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let mut env = 0.0f64;
        for k in 0..samples {
            let rr = r + period * k as f64 / samples as f64;
            env = env.max(spherical(Complex64::new(rr, 0.0), n, z).norm());
        }
        if !(env > 0.0) || !env.ln().is_finite() {
            return Err(SpecialError::FitDegenerate(r));
        }
        xs.push(r.ln());
        ys.push(env.ln());
    }
    Ok(ols_slope(&xs, &ys))
}

pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
