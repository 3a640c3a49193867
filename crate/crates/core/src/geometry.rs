//! Points of the upper half plane, PSL(2,R) in p_z k_theta coordinates,
//! distance, and the geodesic flow on products.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) is not in the upper half plane (need finite x and y > 1e-300)")]
    NotInUpperHalfPlane { x: f64, y: f64 },
    #[error("matrix is not in SL(2,R): det = {det}")]
    NotUnimodular { det: f64 },
    #[error("energy vector has a negative or non-finite component: {0:?}")]
    BadEnergy(Vec<f64>),
    #[error("factor count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub const MIN_HEIGHT: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() || !y.is_finite() || y <= MIN_HEIGHT {
            return Err(GeometryError::NotInUpperHalfPlane { x, y });
        }
        Ok(PlanePoint { x, y })
    }

    /// The base point i.
    pub fn i() -> Self {
        PlanePoint { x: 0.0, y: 1.0 }
    }

    pub fn from_complex(z: Complex64) -> Result<Self, GeometryError> {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    /// Cayley image (z - i)/(z + i) in the unit disc.
    pub fn to_disc(self) -> Complex64 {
        let z = self.to_complex();
        (z - Complex64::i()) / (z + Complex64::i())
    }

    /// Point k_theta(i e^t): geodesic polar coordinates about i.
    pub fn polar(t: f64, theta: f64) -> Self {
        let w = Complex64::from_polar((0.5 * t).tanh(), 2.0 * theta);
        let z = Complex64::i() * (Complex64::new(1.0, 0.0) + w) / (Complex64::new(1.0, 0.0) - w);
        PlanePoint { x: z.re, y: z.im.max(f64::MIN_POSITIVE) }
    }
}

/// A real 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Inverse of a unimodular matrix.
    pub fn inverse(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Moebius action (aw+b)/(cw+d); the height is computed as y/|cw+d|^2.
    pub fn act(&self, w: PlanePoint) -> PlanePoint {
        let wc = w.to_complex();
        let num = wc * self.a + self.b;
        let den = wc * self.c + self.d;
        let q = num / den;
        let y = w.y * self.det() / den.norm_sqr();
        PlanePoint { x: q.re, y }
    }

    pub fn p(z: PlanePoint) -> Mat2 {
        let s = z.y.sqrt();
        Mat2 { a: s, b: z.x / s, c: 0.0, d: 1.0 / s }
    }

    pub fn k(theta: f64) -> Mat2 {
        let (s, c) = theta.sin_cos();
        Mat2 { a: c, b: s, c: -s, d: c }
    }

    /// exp(tH) = diag(e^t, e^-t).
    pub fn exp_h(t: f64) -> Mat2 {
        Mat2 { a: t.exp(), b: 0.0, c: 0.0, d: (-t).exp() }
    }

    /// exp(tX), the upper unipotent subgroup.
    pub fn exp_x(t: f64) -> Mat2 {
        Mat2 { a: 1.0, b: t, c: 0.0, d: 1.0 }
    }

    /// exp(tW) = k_t.
    pub fn exp_w(t: f64) -> Mat2 {
        Mat2::k(t)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }
}

pub fn reduce_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// g = p_z k_theta with theta reduced to [0, pi).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub z: PlanePoint,
    pub theta: f64,
}

const DET_TOL: f64 = 1e-9;

impl GroupElement {
    pub fn new(z: PlanePoint, theta: f64) -> Self {
        GroupElement { z, theta: reduce_angle(theta) }
    }

    pub fn identity() -> Self {
        GroupElement { z: PlanePoint::i(), theta: 0.0 }
    }

    pub fn p(z: PlanePoint) -> Self {
        GroupElement { z, theta: 0.0 }
    }

    pub fn k(theta: f64) -> Self {
        GroupElement::new(PlanePoint::i(), theta)
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2::p(self.z).mul(&Mat2::k(self.theta))
    }

    /// Factorization of a unimodular matrix into p_z k_theta.
    pub fn from_matrix(m: &Mat2) -> Result<Self, GeometryError> {
        let det = m.det();
        let scale = 1.0f64.max((m.a * m.d).abs() + (m.b * m.c).abs());
        if !det.is_finite() || (det - 1.0).abs() > DET_TOL * scale {
            return Err(GeometryError::NotUnimodular { det });
        }
        let n2 = m.c * m.c + m.d * m.d;
        let y = det / n2;
        let x = (m.a * m.c + m.b * m.d) / n2;
        let z = PlanePoint::new(x, y)?;
        let theta = (-m.c).atan2(m.d);
        Ok(GroupElement::new(z, theta))
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        self.right_mul(&other.matrix())
    }

    /// g m, for unimodular m.
    pub fn right_mul(&self, m: &Mat2) -> GroupElement {
        GroupElement::from_matrix(&self.matrix().mul(m)).expect("product of unimodular matrices is unimodular")
    }

    /// m g, for unimodular m.
    pub fn left_mul(&self, m: &Mat2) -> GroupElement {
        GroupElement::from_matrix(&m.mul(&self.matrix())).expect("product of unimodular matrices is unimodular")
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement::from_matrix(&self.matrix().inverse()).expect("inverse is unimodular")
    }

    /// g(w).
    pub fn act(&self, w: PlanePoint) -> PlanePoint {
        mobius_act(self, w)
    }
}

pub fn mobius_act(g: &GroupElement, w: PlanePoint) -> PlanePoint {
    g.matrix().act(w)
}

pub fn decompose_pk(m: &Mat2) -> Result<GroupElement, GeometryError> {
    GroupElement::from_matrix(m)
}

pub fn hyperbolic_distance(z1: PlanePoint, z2: PlanePoint) -> f64 {
    let dx = z1.x - z2.x;
    let dy = z1.y - z2.y;
    let chord = (dx * dx + dy * dy).sqrt() / (2.0 * (z1.y * z2.y).sqrt());
    2.0 * chord.asinh()
}

/// An element of the d-fold product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductGroupElement {
    pub factors: Vec<GroupElement>,
}

impl ProductGroupElement {
    pub fn new(factors: Vec<GroupElement>) -> Self {
        assert!(!factors.is_empty(), "a product element needs at least one factor");
        ProductGroupElement { factors }
    }

    pub fn single(g: GroupElement) -> Self {
        ProductGroupElement { factors: vec![g] }
    }

    pub fn identity(d: usize) -> Self {
        ProductGroupElement::new(vec![GroupElement::identity(); d])
    }

    pub fn from_points(z: &[PlanePoint], theta: &[f64]) -> Self {
        ProductGroupElement::new(z.iter().zip(theta).map(|(z, t)| GroupElement::new(*z, *t)).collect())
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn points(&self) -> Vec<PlanePoint> {
        self.factors.iter().map(|g| g.z).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.factors.iter().map(|g| g.theta).collect()
    }

    /// Right multiplication of factor j by m.
    pub fn right_mul_factor(&self, j: usize, m: &Mat2) -> Self {
        let mut out = self.clone();
        out.factors[j] = self.factors[j].right_mul(m);
        out
    }

    pub fn with_factor(&self, j: usize, g: GroupElement) -> Self {
        let mut out = self.clone();
        out.factors[j] = g;
        out
    }
}

/// Energy components E_j >= 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyVector(Vec<f64>);

impl EnergyVector {
    pub fn new(e: Vec<f64>) -> Result<Self, GeometryError> {
        if e.is_empty() || e.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(GeometryError::BadEnergy(e));
        }
        Ok(EnergyVector(e))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn on_shell(&self, tol: f64) -> bool {
        (self.0.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Right action of A_E(t) = prod_j exp(sqrt(E_j) t H_j).
pub fn geodesic_flow(g: &ProductGroupElement, e: &EnergyVector, t: f64) -> Result<ProductGroupElement, GeometryError> {
    if e.dim() != g.dim() {
        return Err(GeometryError::DimensionMismatch { expected: g.dim(), got: e.dim() });
    }
    let factors = g
        .factors
        .iter()
        .zip(e.components())
        .map(|(gj, ej)| {
            if *ej == 0.0 || t == 0.0 {
                Ok(*gj)
            } else {
                // fails once e^{sqrt(E_j) t} overflows
                GroupElement::from_matrix(&gj.matrix().mul(&Mat2::exp_h(ej.sqrt() * t)))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(ProductGroupElement::new(factors))
}
