//! Exact operator calculus on sums of rotated plane waves.
//!
//! A term is prod_j y_j'^{s_j} e^{2i k_j theta_j'} where p_{z'} k_{theta'} = k_alpha g
//! factor by factor, and s_j is either s or its reflection 1 - s. On such monomials the generators act by
//!   W T_k = 2ik T_k,
//!   H T_k = (s+k) T_{k+1} + (s-k) T_{k-1},
//!   X T_k = ik T_k - (i/2)(s+k) T_{k+1} + (i/2)(s-k) T_{k-1},
//! which is the coordinate form of the operators rewritten in e^{2i theta}.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{Generator, LieOperator};
use crate::geometry::{GroupElement, ProductGroupElement};

/// One rotation alpha and the Fourier coefficients attached to it.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTerm {
    pub rotation: Vec<f64>,
    /// Exponent of y' in each factor.
    pub s: Vec<Complex64>,
    pub coeffs: BTreeMap<Vec<i64>, Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicFunction {
    /// s_j = i r_j + 1/2.
    pub s: Vec<Complex64>,
    pub terms: Vec<SymTerm>,
}

/// (ln y', beta) with k_alpha p_z = p_{z'} k_beta.
#[inline]
pub(crate) fn rotated_frame(alpha: f64, g: &GroupElement) -> (f64, f64) {
    let (s, c) = alpha.sin_cos();
    let (x, y) = (g.z.x, g.z.y);
    let sy = y.sqrt();
    // Bottom row of k_alpha p_z: (-s sqrt y, (c - s x)/sqrt y).
    let cc = -s * sy;
    let dd = (c - s * x) / sy;
    let ln_y = -(cc * cc + dd * dd).ln();
    (ln_y, (-cc).atan2(dd))
}

impl SymbolicFunction {
    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn eval(&self, g: &ProductGroupElement) -> Complex64 {
        let d = self.dim();
        let mut frames = vec![(0.0, 0.0); d];
        let mut total = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            for j in 0..d {
                let (ln_y, beta) = rotated_frame(term.rotation[j], &g.factors[j]);
                frames[j] = (ln_y, beta + g.factors[j].theta);
            }
            for (k, c) in &term.coeffs {
                let mut expo = Complex64::new(0.0, 0.0);
                for j in 0..d {
                    expo += term.s[j] * frames[j].0 + Complex64::new(0.0, 2.0 * k[j] as f64 * frames[j].1);
                }
                total += c * expo.exp();
            }
        }
        total
    }

    fn apply_real(&self, gen: Generator, j: usize, weight: Complex64, out: &mut [BTreeMap<Vec<i64>, Complex64>]) {
        let i = Complex64::i();
        for (t, term) in self.terms.iter().enumerate() {
            let s = term.s[j];
            let acc = &mut out[t];
            for (k, c) in &term.coeffs {
                let kj = k[j] as f64;
                let mut up = k.clone();
                up[j] += 1;
                let mut down = k.clone();
                down[j] -= 1;
                let c = c * weight;
                let mut push = |key: Vec<i64>, v: Complex64| *acc.entry(key).or_insert(Complex64::new(0.0, 0.0)) += v;
                match gen {
                    Generator::W => push(k.clone(), c * i * (2.0 * kj)),
                    Generator::H => {
                        push(up, c * (s + kj));
                        push(down, c * (s - kj));
                    }
                    Generator::X => {
                        push(k.clone(), c * i * kj);
                        push(up, -(c * (i * 0.5 * (s + kj))));
                        push(down, c * (i * 0.5 * (s - kj)));
                    }
                    _ => unreachable!("complex generators are expanded first"),
                }
            }
        }
    }

    /// The image of this function under `op`, again in closed form.
    pub fn apply(&self, op: LieOperator) -> SymbolicFunction {
        let mut maps = vec![BTreeMap::new(); self.terms.len()];
        for (gen, w) in op.real_parts() {
            self.apply_real(gen, op.factor, w, &mut maps);
        }
        let terms = self
            .terms
            .iter()
            .zip(maps)
            .map(|(t, mut m)| {
                m.retain(|_, v| *v != Complex64::new(0.0, 0.0));
                SymTerm { rotation: t.rotation.clone(), s: t.s.clone(), coeffs: m }
            })
            .collect();
        SymbolicFunction { s: self.s.clone(), terms }
    }

    pub fn scale(&self, c: Complex64) -> SymbolicFunction {
        let mut out = self.clone();
        for t in &mut out.terms {
            for v in t.coeffs.values_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Sum of two functions built on the same spectral parameters.
    pub fn add(&self, other: &SymbolicFunction) -> SymbolicFunction {
        assert_eq!(self.s, other.s, "symbolic sums need equal spectral parameters");
        let mut out = self.clone();
        for t in &other.terms {
            match out.terms.iter_mut().find(|u| u.rotation == t.rotation && u.s == t.s) {
                Some(u) => {
                    for (k, v) in &t.coeffs {
                        *u.coeffs.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += v;
                    }
                }
                None => out.terms.push(t.clone()),
            }
        }
        out
    }

    /// Every monomial index present in the function.
    pub fn ktypes(&self) -> Vec<Vec<i64>> {
        let mut keys: Vec<Vec<i64>> = self.terms.iter().flat_map(|t| t.coeffs.keys().cloned()).collect();
        keys.sort();
        keys.dedup();
        keys
    }
}
