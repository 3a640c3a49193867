//! The left-invariant operators W, H, X and E^{+-} = H +- i(2X - W), the
//! micro-local lift, and the distribution S_phi on a compact model region.

mod distribution;
mod domain;
mod lift;
mod observable;
mod symbolic;

pub use distribution::{
    differential_equation_residual, invariance_defect, l2_norm_sq, pairing, positivity_gap, positivity_window,
    wigner_distribution, PairingTriple, PositivityWindow, Truncation,
};
pub use domain::{Disc, Domain, FactorBox, FactorRegion, RegionResolution};
pub use lift::{build_lift, LiftSequence, ModelEigenfunction, PlaneWave};
pub use observable::{bump_profile, SmoothObservable};
pub use symbolic::{SymTerm, SymbolicFunction};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Mat2, ProductGroupElement};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("finite differences did not converge for {op:?} (successive estimates {a} and {b})")]
    StepSizeFailure { op: Generator, a: Complex64, b: Complex64 },
    #[error("recursion denominator 2ir+1{sign}2n vanishes (|.| = {modulus:.3e}) at factor {factor}, n = {n}")]
    Pole { factor: usize, n: i64, sign: char, modulus: f64 },
    #[error("lift component {0:?} is not of its K-type (deviation {1:.3e})")]
    KTypeViolation(Vec<i64>, f64),
    #[error("factor index {0} out of range for dimension {1}")]
    BadFactor(usize, usize),
    #[error("lift cache does not cover K-type {0:?}")]
    MissingComponent(Vec<i64>),
    #[error("integration domain does not cover the support of the observable in factor {0}")]
    DomainCoverage(usize),
    #[error("model eigenfunction needs at least one term and matching dimensions")]
    BadBase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    W,
    H,
    X,
    EPlus,
    EMinus,
}

/// A generator acting on factor `factor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LieOperator {
    pub generator: Generator,
    pub factor: usize,
}

impl LieOperator {
    pub fn new(generator: Generator, factor: usize) -> Self {
        LieOperator { generator, factor }
    }

    /// Expansion into the real generators W, H, X.
    pub fn real_parts(&self) -> Vec<(Generator, Complex64)> {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        match self.generator {
            Generator::W | Generator::H | Generator::X => vec![(self.generator, one)],
            Generator::EPlus => vec![(Generator::H, one), (Generator::X, 2.0 * i), (Generator::W, -i)],
            Generator::EMinus => vec![(Generator::H, one), (Generator::X, -2.0 * i), (Generator::W, i)],
        }
    }
}

fn one_parameter(generator: Generator, t: f64) -> Mat2 {
    match generator {
        Generator::W => Mat2::exp_w(t),
        Generator::H => Mat2::exp_h(t),
        Generator::X => Mat2::exp_x(t),
        _ => unreachable!("complex generators are expanded first"),
    }
}

/// Either a symbolic lift-derived function or an opaque evaluator.
pub enum Operand<'a> {
    Symbolic(&'a SymbolicFunction),
    Generic(&'a dyn Fn(&ProductGroupElement) -> Complex64),
}

/// Initial step and number of halvings for first derivatives.
pub const FD_STEP: f64 = 4e-3;
/// Initial step for second derivatives along one subgroup.
pub const FD2_STEP: f64 = 1.6e-2;
const FD_HALVINGS: usize = 7;
const FD_RTOL: f64 = 1e-6;

type Sampler<'a> = &'a mut dyn FnMut(f64) -> Result<Complex64, LieError>;

fn stencil(f: Sampler<'_>, h: f64) -> Result<Complex64, LieError> {
    let fm2 = f(-2.0 * h)?;
    let fm1 = f(-h)?;
    let fp1 = f(h)?;
    let fp2 = f(2.0 * h)?;
    Ok((fm2 - fp2 + (fp1 - fm1) * 8.0) / (12.0 * h))
}

fn stencil2(f: Sampler<'_>, h: f64) -> Result<Complex64, LieError> {
    let f0 = f(0.0)?;
    let fm2 = f(-2.0 * h)?;
    let fm1 = f(-h)?;
    let fp1 = f(h)?;
    let fp2 = f(2.0 * h)?;
    Ok(((fp1 + fm1) * 16.0 - fp2 - fm2 - f0 * 30.0) / (12.0 * h * h))
}

/// Fourth-order stencils at h, h/2, h/4, ...; Richardson-extrapolated pairs are
/// compared until two successive ones agree. Steep spots such as the rim of a
/// bump need the smaller steps.
fn adaptive(
    op: Generator,
    scale: f64,
    f: Sampler<'_>,
    h0: f64,
    rule: fn(Sampler<'_>, f64) -> Result<Complex64, LieError>,
) -> Result<Complex64, LieError> {
    let mut h = h0;
    let mut prev_d = rule(f, h)?;
    let mut prev_r: Option<Complex64> = None;
    for _ in 0..FD_HALVINGS {
        h *= 0.5;
        let d = rule(f, h)?;
        let r = (d * 16.0 - prev_d) / 15.0;
        if !r.re.is_finite() || !r.im.is_finite() {
            return Err(LieError::StepSizeFailure { op, a: prev_d, b: d });
        }
        if let Some(p) = prev_r {
            if (r - p).norm() <= FD_RTOL * scale.max(r.norm()).max(1.0) {
                return Ok(r);
            }
        }
        prev_d = d;
        prev_r = Some(r);
    }
    let last = prev_r.unwrap_or(prev_d);
    Err(LieError::StepSizeFailure { op, a: prev_d, b: last })
}

/// d/dt F(t) at 0.
fn derivative(op: Generator, scale: f64, f: Sampler<'_>) -> Result<Complex64, LieError> {
    adaptive(op, scale, f, FD_STEP, stencil)
}

/// d^2/dt^2 F(t) at 0.
fn second_derivative(op: Generator, scale: f64, f: Sampler<'_>) -> Result<Complex64, LieError> {
    adaptive(op, scale, f, FD2_STEP, stencil2)
}

/// (O_1 O_2 ... O_k f)(g), the rightmost operator applied first.
pub fn apply_word(
    word: &[LieOperator],
    f: &dyn Fn(&ProductGroupElement) -> Complex64,
    g: &ProductGroupElement,
) -> Result<Complex64, LieError> {
    let Some((first, rest)) = word.split_first() else {
        return Ok(f(g));
    };
    if first.factor >= g.dim() {
        return Err(LieError::BadFactor(first.factor, g.dim()));
    }
    let scale = f(g).norm();
    let mut total = Complex64::new(0.0, 0.0);
    // O^2 for a real generator is a second derivative along one subgroup;
    // nesting two first-derivative stencils would amplify the inner noise
    if let [second, tail @ ..] = rest {
        if second == first && matches!(first.generator, Generator::W | Generator::H | Generator::X) {
            let mut along =
                |t: f64| apply_word(tail, f, &g.right_mul_factor(first.factor, &one_parameter(first.generator, t)));
            return second_derivative(first.generator, scale, &mut along);
        }
    }
    for (gen, coef) in first.real_parts() {
        let mut along = |t: f64| apply_word(rest, f, &g.right_mul_factor(first.factor, &one_parameter(gen, t)));
        total += coef * derivative(gen, scale, &mut along)?;
    }
    Ok(total)
}

/// Applies one operator to `f` at `g`: symbolically for lift-derived functions,
/// otherwise by finite differences along the one-parameter subgroup.
pub fn apply_operator(op: LieOperator, f: Operand<'_>, g: &ProductGroupElement) -> Result<Complex64, LieError> {
    match f {
        Operand::Symbolic(sf) => {
            if op.factor >= sf.dim() {
                return Err(LieError::BadFactor(op.factor, sf.dim()));
            }
            Ok(sf.apply(op).eval(g))
        }
        Operand::Generic(func) => apply_word(&[op], func, g),
    }
}
