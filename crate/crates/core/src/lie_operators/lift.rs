use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::symbolic::{SymTerm, SymbolicFunction};
use super::{Generator, LieError, LieOperator};
use crate::geometry::{GroupElement, PlanePoint, ProductGroupElement};
use crate::special_functions::{KType, SpectralPoint};

/// c * prod_j y_j'^{s_j} with k_{alpha_j} z_j = z_j'. Factor j uses 1 - s_j in
/// place of s_j when `reflected[j]` is set; an empty list reflects nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub coefficient: Complex64,
    pub rotation: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reflected: Vec<bool>,
}

impl PlaneWave {
    pub fn new(coefficient: Complex64, rotation: Vec<f64>) -> Self {
        PlaneWave { coefficient, rotation, reflected: Vec::new() }
    }

    pub fn is_reflected(&self, j: usize) -> bool {
        self.reflected.get(j).copied().unwrap_or(false)
    }

    /// The exponents of this term given the spectral exponents s.
    pub fn exponents(&self, s: &[Complex64]) -> Vec<Complex64> {
        s.iter().enumerate().map(|(j, sj)| if self.is_reflected(j) { 1.0 - sj } else { *sj }).collect()
    }
}

/// A finite superposition of rotated plane waves sharing the spectral point r.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEigenfunction {
    pub r: SpectralPoint,
    pub terms: Vec<PlaneWave>,
}

impl ModelEigenfunction {
    pub fn new(r: SpectralPoint, terms: Vec<PlaneWave>) -> Result<Self, LieError> {
        let d = r.dim();
        if terms.is_empty()
            || terms.iter().any(|t| t.rotation.len() != d || !(t.reflected.is_empty() || t.reflected.len() == d))
        {
            return Err(LieError::BadBase);
        }
        Ok(ModelEigenfunction { r, terms })
    }

    /// phi_r(z) in every factor, unrotated.
    pub fn plane_wave(r: SpectralPoint) -> Self {
        let d = r.dim();
        ModelEigenfunction { r, terms: vec![PlaneWave::new(Complex64::new(1.0, 0.0), vec![0.0; d])] }
    }

    /// prod_j y_j^{1/2} cos(r_j ln y_j) for real r: the product of the two plane
    /// waves y^s and y^{1-s} in every factor, all 2^d combinations.
    pub fn standing_wave(r: SpectralPoint) -> Self {
        let d = r.dim();
        let c = Complex64::new(0.5f64.powi(d as i32), 0.0);
        let terms = (0..1usize << d)
            .map(|mask| PlaneWave {
                coefficient: c,
                rotation: vec![0.0; d],
                reflected: (0..d).map(|j| mask >> j & 1 == 1).collect(),
            })
            .collect();
        ModelEigenfunction { r, terms }
    }

    /// Equal-weight average of phi_r over m equally spaced rotations: a discretized
    /// spherical function about i.
    pub fn rotation_average(r: f64, m: usize) -> Self {
        let terms = (0..m)
            .map(|k| PlaneWave::new(Complex64::new(1.0 / m as f64, 0.0), vec![PI * k as f64 / m as f64]))
            .collect();
        ModelEigenfunction { r: SpectralPoint::real(&[r]), terms }
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn s(&self) -> Vec<Complex64> {
        self.r.r.iter().map(|r| Complex64::i() * r + 0.5).collect()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coefficient *= c;
        }
        out
    }

    pub fn eval(&self, z: &[PlanePoint]) -> Complex64 {
        let s = self.s();
        let mut total = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let e = t.exponents(&s);
            let mut expo = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                let (ln_y, _) = super::symbolic::rotated_frame(t.rotation[j], &GroupElement::p(*zj));
                expo += e[j] * ln_y;
            }
            total += t.coefficient * expo.exp();
        }
        total
    }

    pub fn to_symbolic(&self) -> SymbolicFunction {
        let zero = vec![0i64; self.dim()];
        let s = self.s();
        SymbolicFunction {
            s: s.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| SymTerm {
                    rotation: t.rotation.clone(),
                    s: t.exponents(&s),
                    coeffs: BTreeMap::from([(zero.clone(), t.coefficient)]),
                })
                .collect(),
        }
    }
}

/// The components phi_n, ||n||_inf <= n_max, of the lift of a base eigenfunction.
#[derive(Clone, Debug)]
pub struct LiftSequence {
    pub base: ModelEigenfunction,
    pub n_max: u32,
    components: BTreeMap<KType, SymbolicFunction>,
}

impl LiftSequence {
    pub fn get(&self, n: &KType) -> Option<&SymbolicFunction> {
        self.components.get(n)
    }

    pub fn component(&self, n: &KType) -> Result<&SymbolicFunction, LieError> {
        self.get(n).ok_or_else(|| LieError::MissingComponent(n.0.clone()))
    }

    pub fn eval(&self, n: &KType, g: &ProductGroupElement) -> Result<Complex64, LieError> {
        Ok(self.component(n)?.eval(g))
    }

    pub fn ktypes(&self) -> impl Iterator<Item = &KType> {
        self.components.keys()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// Every n in Z^d with ||n||_inf <= n_max, ordered by l1 norm.
pub(crate) fn ktype_box(d: usize, n_max: u32) -> Vec<KType> {
    let side = 2 * n_max as i64 + 1;
    let total = (side as usize).pow(d as u32);
    let mut out: Vec<KType> = (0..total)
        .map(|mut idx| {
            let mut v = vec![0i64; d];
            for slot in v.iter_mut() {
                *slot = (idx % side as usize) as i64 - n_max as i64;
                idx /= side as usize;
            }
            KType(v)
        })
        .collect();
    out.sort_by_key(|n| (n.0.iter().map(|v| v.abs()).sum::<i64>(), n.clone()));
    out
}

pub const POLE_GUARD: f64 = 1e-8;

/// phi_0 = base, phi_{n +- e_j} = E_j^{+-} phi_n / (2ir_j + 1 +- 2n_j).
pub fn build_lift(base: &ModelEigenfunction, n_max: u32) -> Result<LiftSequence, LieError> {
    let d = base.dim();
    let mut components: BTreeMap<KType, SymbolicFunction> = BTreeMap::new();
    for n in ktype_box(d, n_max) {
        if n.sup_norm() == 0 {
            components.insert(n, base.to_symbolic());
            continue;
        }
        let j = n.0.iter().position(|v| *v != 0).expect("nonzero K-type");
        let sign = n.0[j].signum();
        let mut prev = n.clone();
        prev.0[j] -= sign;
        let (gen, sgn_char) = if sign > 0 { (Generator::EPlus, '+') } else { (Generator::EMinus, '-') };
        let den = Complex64::i() * base.r.r[j] * 2.0 + 1.0 + 2.0 * sign as f64 * prev.0[j] as f64;
        if den.norm() < POLE_GUARD {
            return Err(LieError::Pole { factor: j, n: prev.0[j], sign: sgn_char, modulus: den.norm() });
        }
        let phi = components[&prev].apply(LieOperator::new(gen, j)).scale(1.0 / den);
        components.insert(n, phi);
    }
    let lift = LiftSequence { base: base.clone(), n_max, components };
    verify_ktypes(&lift)?;
    Ok(lift)
}

fn verify_ktypes(lift: &LiftSequence) -> Result<(), LieError> {
    let d = lift.dim();
    let zs = [PlanePoint { x: 0.17, y: 1.21 }, PlanePoint { x: -0.43, y: 0.83 }];
    let thetas = [0.0, 0.91, 2.13];
    for (n, phi) in &lift.components {
        for z in zs {
            let base_g = ProductGroupElement::new(vec![GroupElement::p(z); d]);
            let v0 = phi.eval(&base_g);
            for t in thetas {
                let g = ProductGroupElement::new(vec![GroupElement::new(z, t); d]);
                let th = g.thetas();
                let v = phi.eval(&g) * n.neg().character(&th);
                let dev = (v - v0).norm() / v0.norm().max(1.0);
                if dev > 1e-7 {
                    return Err(LieError::KTypeViolation(n.0.clone(), dev));
                }
            }
        }
    }
    Ok(())
}
