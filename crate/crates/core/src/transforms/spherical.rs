//! S_n f(r) = int_H f(z) Phi_{r,-n}(z) dz and its inverse
//! S_n^{-1} h(z) = (1/2 pi) int_0^infty h(r) Phi_{-r,n}(z) r tanh(pi r) dr.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{KTypeFunction, TransformError, WindowFunction, WindowKind, WindowMeta};
use crate::geometry::{hyperbolic_distance, Mat2, PlanePoint};
use crate::quadrature::QuadratureSpec;
use crate::quadrature::{ChebTable, Rule};
use crate::special_functions::eval_spherical;

/// Tensor Gauss-Legendre rule in (x, log y) on the rectangle circumscribing the
/// disc d(z, i) <= R: |x| <= sinh R, |log y| <= R.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HRule {
    pub panels: usize,
    pub per_panel: usize,
}

impl HRule {
    /// Enough panels that no panel spans more than about two oscillations of Phi_{r,n}.
    pub fn for_frequency(radius: f64, r: Complex64) -> Self {
        HRule { panels: 8 + (r.norm() * radius.sinh().max(radius) / 2.0).ceil() as usize, per_panel: 16 }
    }

    /// Nodes with weights for dx dy / y^2, restricted to d(z, i) <= radius.
    pub fn nodes(&self, radius: f64) -> Vec<(PlanePoint, f64)> {
        let xr = Rule::composite_gauss(-radius.sinh(), radius.sinh(), self.panels, self.per_panel);
        let ur = Rule::composite_gauss(-radius, radius, self.panels, self.per_panel);
        let mut out = Vec::new();
        for (x, wx) in xr.nodes.iter().zip(&xr.weights) {
            for (u, wu) in ur.nodes.iter().zip(&ur.weights) {
                let z = PlanePoint { x: *x, y: u.exp() };
                if hyperbolic_distance(z, PlanePoint::i()) <= radius {
                    out.push((z, wx * wu / z.y));
                }
            }
        }
        out
    }
}

fn check_profile_support(f: &KTypeFunction) -> Result<(), TransformError> {
    let r = f.support_radius;
    let peak = (0..=64).map(|k| f.profile(r * k as f64 / 64.0).norm()).fold(0.0, f64::max);
    let boundary = f.profile(r).norm();
    if boundary > 1e-12 * peak {
        return Err(TransformError::SupportEscape { boundary, peak });
    }
    Ok(())
}

/// S_n f(r) by 2D quadrature against Phi_{r,-n} (the definition route).
pub fn spherical_transform(f: &KTypeFunction, r: Complex64) -> Result<Complex64, TransformError> {
    spherical_transform_with(f, r, HRule::for_frequency(f.support_radius, r))
}

pub fn spherical_transform_with(f: &KTypeFunction, r: Complex64, rule: HRule) -> Result<Complex64, TransformError> {
    check_profile_support(f)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (z, w) in rule.nodes(f.support_radius) {
        let fz = f.eval(z);
        if fz == Complex64::new(0.0, 0.0) {
            continue;
        }
        let spec = QuadratureSpec::trapezoid(crate::special_functions::default_k_nodes(r, -f.n, z));
        acc += fz * eval_spherical(r, -f.n, z, spec)? * w;
    }
    Ok(acc)
}

/// Helgason-Fourier transform int_H f(z) phi_{-r}(k_alpha^{-1} z) dz for f supported in d(z, i) <= radius.
pub fn helgason_fourier(
    f: &dyn Fn(PlanePoint) -> Complex64,
    radius: f64,
    r: Complex64,
    alpha: f64,
) -> Result<Complex64, TransformError> {
    let rule = HRule::for_frequency(radius, r);
    // boundary of the circumscribing rectangle
    let (sx, n_edge) = (radius.sinh(), 64);
    let mut boundary = 0.0f64;
    for k in 0..=n_edge {
        let s = k as f64 / n_edge as f64;
        let x = -sx + 2.0 * sx * s;
        let u = -radius + 2.0 * radius * s;
        for z in [
            PlanePoint { x, y: (-radius).exp() },
            PlanePoint { x, y: radius.exp() },
            PlanePoint { x: -sx, y: u.exp() },
            PlanePoint { x: sx, y: u.exp() },
        ] {
            boundary = boundary.max(f(z).norm());
        }
    }
    let kinv = Mat2::k(alpha).inverse();
    let s = Complex64::new(0.5, -r.re) + Complex64::new(r.im, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut peak = 0.0f64;
    for (z, w) in rule.nodes(radius) {
        let fz = f(z);
        peak = peak.max(fz.norm());
        if fz == Complex64::new(0.0, 0.0) {
            continue;
        }
        acc += fz * (s * kinv.act(z).y.ln()).exp() * w;
    }
    if boundary > 1e-12 * peak {
        return Err(TransformError::SupportEscape { boundary, peak });
    }
    Ok(acc)
}

/// The horocyclic route: S_n f(r) = int f(z) phi_r(z) dz = int A(u) e^{(ir - 1/2)u} du with
/// A(u) = int f(x + i e^u) dx. One table serves every r up to `r_max`.
#[derive(Clone, Debug)]
pub struct TransformTable {
    pub n: i64,
    pub radius: f64,
    pub r_max: f64,
    u: Vec<f64>,
    weighted_marginal: Vec<Complex64>,
}

impl TransformTable {
    pub fn new(f: &KTypeFunction, r_max: f64) -> Result<Self, TransformError> {
        check_profile_support(f)?;
        let radius = f.support_radius;
        let panels = 8 + (r_max * 2.0 * radius / 12.0).ceil() as usize;
        let ur = Rule::composite_gauss(-radius, radius, panels, 24);
        let (ch, sh) = (radius.cosh(), radius.sinh());
        let mut weighted_marginal = Vec::with_capacity(ur.len());
        for (u, wu) in ur.nodes.iter().zip(&ur.weights) {
            let y = u.exp();
            let half_sq = sh * sh - (y - ch) * (y - ch);
            if half_sq <= 0.0 {
                weighted_marginal.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let half = half_sq.sqrt();
            let xr = Rule::composite_gauss(-half, half, 6, 24);
            let a: Complex64 = xr.integrate(|x| f.eval(PlanePoint { x, y }));
            weighted_marginal.push(a * *wu);
        }
        Ok(TransformTable { n: f.n, radius, r_max, u: ur.nodes, weighted_marginal })
    }

    pub fn eval(&self, r: Complex64) -> Complex64 {
        let s = Complex64::i() * r - 0.5;
        self.u.iter().zip(&self.weighted_marginal).map(|(u, a)| a * (s * *u).exp()).sum()
    }

    /// S(k step) for k = 0..count, marching the phase e^{i step u} at each node.
    pub fn eval_grid(&self, step: f64, count: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); count];
        for (u, a) in self.u.iter().zip(&self.weighted_marginal) {
            let rot = Complex64::from_polar(1.0, step * u);
            let mut term = a * (-0.5 * u).exp();
            for (k, o) in out.iter_mut().enumerate() {
                if k % 256 == 0 {
                    term = a * Complex64::from_polar((-0.5 * u).exp(), k as f64 * step * u);
                }
                *o += term;
                term *= rot;
            }
        }
        out
    }

    /// The transform as a window of type R (the support theorem).
    pub fn into_window(self) -> WindowFunction {
        let (n, radius) = (self.n, self.radius);
        let meta = WindowMeta { l: None, delta: None, kind: WindowKind::Generic };
        let t = Arc::new(self);
        let tg = t.clone();
        WindowFunction::with_evaluators(n, radius, meta, Arc::new(move |r| Ok(t.eval(r))), None)
            .with_grid(Arc::new(move |step, count| tg.eval_grid(step, count)))
    }
}

/// Effective bandwidth used for the r step: h's type capped, plus a margin.
fn r_step(h: &WindowFunction, d: f64) -> f64 {
    let b = if h.exponential_type.is_finite() { h.exponential_type.min(400.0) } else { 12.0 };
    (PI / (b + d + 1.0)).min(0.05)
}

/// Upper bound for the neglected tail int_{r_max}^infty |h(r) Phi| r dr / 2 pi from the
/// type-6 decay |h(r)| <= C_6 (1 + r)^{-6}, with C_6 measured on [4 r_max / 5, r_max].
fn tail_bound(h: &WindowFunction, r_max: f64, d: f64) -> Result<f64, TransformError> {
    let mut c6 = 0.0f64;
    for k in 0..=64 {
        let r = r_max * (0.8 + 0.2 * k as f64 / 64.0);
        c6 = c6.max(h.eval_real(r)?.norm() * (1.0 + r).powi(6));
    }
    Ok((0.5 * d).exp() * c6 * (1.0 + r_max).powi(-4) / (4.0 * 2.0 * PI))
}

fn sup_on_line(h: &WindowFunction, r_max: f64) -> Result<f64, TransformError> {
    let mut m = 0.0f64;
    for k in 0..=400 {
        m = m.max(h.eval_real(r_max * k as f64 / 400.0)?.norm());
    }
    Ok(m)
}

/// Tail budget in units of max(1, sup |h|).
const TAIL_BUDGET: f64 = 1e-10;

/// Smallest r_max on a geometric grid whose tail estimate meets the budget at distance d from i.
pub fn choose_r_max(h: &WindowFunction, d: f64) -> Result<f64, TransformError> {
    let mut r_max = 20.0;
    loop {
        let scale = sup_on_line(h, r_max)?.max(1.0);
        let tail = tail_bound(h, r_max, d)?;
        if tail <= TAIL_BUDGET * scale {
            return Ok(r_max);
        }
        if r_max > 4000.0 {
            return Err(TransformError::TailEstimate { r_max, tail });
        }
        r_max *= 1.1;
    }
}

struct RGrid {
    step: f64,
    /// h(r_k) r_k tanh(pi r_k) dr
    coeff: Vec<Complex64>,
}

fn r_grid(h: &WindowFunction, r_max: f64, d_max: f64) -> Result<RGrid, TransformError> {
    let scale = sup_on_line(h, r_max)?.max(1.0);
    let tail = tail_bound(h, r_max, d_max)?;
    if tail > TAIL_BUDGET * scale {
        return Err(TransformError::TailEstimate { r_max, tail });
    }
    let step = r_step(h, d_max);
    let count = (r_max / step).ceil() as usize + 1;
    let coeff = h
        .eval_real_grid(step, count)?
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            // r = 0 contributes nothing, so the trapezoid end weight does not matter
            let r = k as f64 * step;
            v * (r * (PI * r).tanh() * step)
        })
        .collect();
    Ok(RGrid { step, coeff })
}

fn invert_at(grid: &RGrid, n: i64, z: PlanePoint) -> Complex64 {
    let d = hyperbolic_distance(z, PlanePoint::i());
    let r_max = grid.step * (grid.coeff.len() - 1) as f64;
    let band = r_max * d.sinh() + n.abs() as f64 + 0.5 * d;
    let k_nodes = (1.5 * band).ceil() as usize + 64;
    let mut acc = Complex64::new(0.0, 0.0);
    for q in 0..k_nodes {
        let theta = PI * q as f64 / k_nodes as f64;
        let y = Mat2::k(theta).inverse().act(z).y;
        let psi = y.ln();
        // sum_k c_k e^{-i r_k psi}, marching the phase and resynchronising every 256 steps
        let rot = Complex64::from_polar(1.0, -grid.step * psi);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut inner = Complex64::new(0.0, 0.0);
        for (k, c) in grid.coeff.iter().enumerate() {
            if k % 256 == 0 {
                phase = Complex64::from_polar(1.0, -(k as f64) * grid.step * psi);
            }
            inner += c * phase;
            phase *= rot;
        }
        acc += inner * Complex64::from_polar(y.sqrt(), 2.0 * n as f64 * theta);
    }
    acc / (k_nodes as f64 * 2.0 * PI)
}

/// S_n^{-1} h(z) truncated at r_max.
pub fn inverse_spherical_transform(h: &WindowFunction, z: PlanePoint, r_max: f64) -> Result<Complex64, TransformError> {
    let d = hyperbolic_distance(z, PlanePoint::i());
    let grid = r_grid(h, r_max, d)?;
    Ok(invert_at(&grid, h.n, z))
}

/// S_n^{-1} h at many points, sharing the r-grid.
pub fn inverse_spherical_transform_many(
    h: &WindowFunction,
    zs: &[PlanePoint],
    r_max: f64,
) -> Result<Vec<Complex64>, TransformError> {
    let d_max = zs.iter().map(|z| hyperbolic_distance(*z, PlanePoint::i())).fold(0.0, f64::max);
    let grid = r_grid(h, r_max, d_max)?;
    Ok(zs.iter().map(|z| invert_at(&grid, h.n, *z)).collect())
}

/// Bandwidth beyond which |h| stays below 1e-14 of its peak on [0, r_max].
fn effective_band(h: &WindowFunction, r_max: f64) -> Result<f64, TransformError> {
    let samples = 800;
    let vals: Vec<f64> = (0..=samples)
        .map(|k| h.eval_real(r_max * k as f64 / samples as f64).map(|v| v.norm()))
        .collect::<Result<_, _>>()?;
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    let last = vals.iter().rposition(|v| *v > 1e-14 * peak).unwrap_or(0);
    Ok(r_max * (last + 1) as f64 / samples as f64)
}

/// f = S_n^{-1} h as a KTypeFunction with a Chebyshev profile on [0, R], R the type of h.
pub fn tabulate_inverse(h: &WindowFunction, r_max: f64) -> Result<KTypeFunction, TransformError> {
    let radius = h.exponential_type;
    if !radius.is_finite() {
        return Err(TransformError::BadParameter("inverse tables need a window of finite type".into()));
    }
    let band = effective_band(h, r_max)?;
    let panels = 4 + (radius * band / 6.0).ceil() as usize;
    let degree = 24;
    let ts = ChebTable::nodes(0.0, radius, panels, degree);
    let zs: Vec<PlanePoint> = ts.iter().map(|t| PlanePoint { x: 0.0, y: t.exp() }).collect();
    let vals = inverse_spherical_transform_many(h, &zs, r_max)?;
    let re: Vec<f64> = vals.iter().map(|v| v.re).collect();
    let im: Vec<f64> = vals.iter().map(|v| v.im).collect();
    let re = ChebTable::from_values(0.0, radius, panels, degree, &re);
    let im = ChebTable::from_values(0.0, radius, panels, degree, &im);
    Ok(KTypeFunction::from_table(h.n, radius, re, im))
}
