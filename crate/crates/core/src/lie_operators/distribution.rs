use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lift::{ktype_box, LiftSequence, ModelEigenfunction};
use super::observable::SmoothObservable;
use super::symbolic::{rotated_frame, SymbolicFunction};
use super::{Domain, LieError};
use crate::geometry::{GroupElement, PlanePoint, ProductGroupElement};
use crate::special_functions::KType;

/// How the sum over K-types in S_phi(a) is cut off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// Sum over ||n||_inf <= N; exact once N reaches the band of a.
    Band(u32),
    /// The N -> infinity limit. On a factor with exponent s the recursion leaves
    /// the coefficient of a plane wave unchanged, so the sum over n is a Dirichlet
    /// kernel in theta + beta_m and the limit evaluates a at theta = -beta_m. On a
    /// reflected factor the coefficients pick up the unimodular chirp
    /// c_n = prod_{k<|n|} (1 - s + k)/(s + k), and the limit is a convolution of a
    /// in theta with sum_n c_n e^{2in phi}, truncated at `LIMIT_MODES`.
    Limit,
}

type FlatEntries = Vec<(usize, Vec<i64>, Complex64)>;

fn flatten(sf: &SymbolicFunction) -> FlatEntries {
    sf.terms.iter().enumerate().flat_map(|(m, t)| t.coeffs.iter().map(move |(k, c)| (m, k.clone(), *c))).collect()
}

/// Per-term data of the base at one p-point.
struct Frames {
    amp: Vec<Complex64>,
    beta: Vec<Vec<f64>>,
}

fn frames(base: &ModelEigenfunction, s: &[Complex64], z: &[PlanePoint]) -> Frames {
    let mut amp = Vec::with_capacity(base.terms.len());
    let mut beta = Vec::with_capacity(base.terms.len());
    for t in &base.terms {
        let e = t.exponents(s);
        let mut expo = Complex64::new(0.0, 0.0);
        let mut b = Vec::with_capacity(z.len());
        for (j, zj) in z.iter().enumerate() {
            let (ln_y, bj) = rotated_frame(t.rotation[j], &GroupElement::p(*zj));
            expo += e[j] * ln_y;
            b.push(bj);
        }
        amp.push(expo.exp());
        beta.push(b);
    }
    Frames { amp, beta }
}

impl Frames {
    fn base_value(&self, base: &ModelEigenfunction) -> Complex64 {
        base.terms.iter().zip(&self.amp).map(|(t, a)| t.coefficient * a).sum()
    }

    fn eval(&self, entries: &FlatEntries) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, k, c) in entries {
            let phase: f64 = k.iter().zip(&self.beta[*m]).map(|(kj, bj)| 2.0 * *kj as f64 * bj).sum();
            acc += c * self.amp[*m] * Complex64::from_polar(1.0, phase);
        }
        acc
    }
}

fn for_each_node(domain: &Domain, mut f: impl FnMut(&[PlanePoint], f64)) {
    let lists = domain.factor_nodes();
    let d = lists.len();
    let sizes: Vec<usize> = lists.iter().map(|l| l.0.len()).collect();
    let total: usize = sizes.iter().product();
    let mut z = vec![PlanePoint::i(); d];
    for mut idx in 0..total {
        let mut w = 1.0;
        for j in 0..d {
            let i = idx % sizes[j];
            idx /= sizes[j];
            z[j] = lists[j].0[i];
            w *= lists[j].1[i];
        }
        f(&z, w);
    }
}

fn theta_grid(d: usize, n_theta: usize) -> Vec<Vec<f64>> {
    let total = n_theta.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let q = idx % n_theta;
                    idx /= n_theta;
                    PI * q as f64 / n_theta as f64
                })
                .collect()
        })
        .collect()
}

fn check_inputs(lift: &LiftSequence, a: &SmoothObservable, domain: &Domain) -> Result<(), LieError> {
    if a.dim() != lift.dim() || domain.dim() != lift.dim() {
        return Err(LieError::BadFactor(a.dim().max(domain.dim()), lift.dim()));
    }
    if let Some(j) = domain.covers(&a.support) {
        return Err(LieError::DomainCoverage(j));
    }
    Ok(())
}

fn finite(v: Complex64) -> Result<Complex64, LieError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(LieError::StepSizeFailure { op: super::Generator::H, a: v, b: v })
    }
}

fn band_sum(lift: &LiftSequence, a: &SmoothObservable, domain: &Domain, n: u32) -> Result<Complex64, LieError> {
    let d = lift.dim();
    let base = &lift.base;
    let s = base.s();
    let ks: Vec<KType> = match &a.ktype {
        Some(m) if m.sup_norm() as u32 > n => return Ok(Complex64::new(0.0, 0.0)),
        Some(m) => vec![m.neg()],
        None => ktype_box(d, n),
    };
    let comps: Vec<FlatEntries> = ks.iter().map(|k| lift.component(k).map(flatten)).collect::<Result<_, _>>()?;
    let band = a.band.unwrap_or(n + 8);
    let n_theta = 2 * (n + band) as usize + 2;
    let grid = if a.ktype.is_some() { Vec::new() } else { theta_grid(d, n_theta) };
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_node(domain, |z, w| {
        if !a.may_be_nonzero(z) {
            return;
        }
        let fr = frames(base, &s, z);
        let phi0 = fr.base_value(base).conj();
        if a.ktype.is_some() {
            let g = ProductGroupElement::new(z.iter().map(|p| GroupElement::p(*p)).collect());
            acc += a.eval(&g) * fr.eval(&comps[0]) * phi0 * w;
            return;
        }
        let samples: Vec<Complex64> = grid.iter().map(|th| a.eval(&ProductGroupElement::from_points(z, th))).collect();
        for (k, entries) in ks.iter().zip(&comps) {
            let mut coef = Complex64::new(0.0, 0.0);
            for (th, v) in grid.iter().zip(&samples) {
                coef += v * k.character(th);
            }
            coef /= grid.len() as f64;
            if coef != Complex64::new(0.0, 0.0) {
                acc += coef * fr.eval(entries) * phi0 * w;
            }
        }
    });
    finite(acc)
}

/// Modes kept in the chirp kernel of a reflected factor.
pub const LIMIT_MODES: usize = 48;
const LIMIT_SAMPLES: usize = 4 * LIMIT_MODES;

/// K(phi_q) = sum_{|n| <= LIMIT_MODES} c_n e^{2in phi_q} on phi_q = pi q / LIMIT_SAMPLES.
fn chirp_kernel(s: Complex64) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0); LIMIT_MODES + 1];
    for k in 0..LIMIT_MODES {
        c[k + 1] = c[k] * (1.0 - s + k as f64) / (s + k as f64);
    }
    (0..LIMIT_SAMPLES)
        .map(|q| {
            let phi = PI * q as f64 / LIMIT_SAMPLES as f64;
            let mut v = c[0];
            for (n, cn) in c.iter().enumerate().skip(1) {
                v += cn * 2.0 * (2.0 * n as f64 * phi).cos();
            }
            v / LIMIT_SAMPLES as f64
        })
        .collect()
}

fn limit_sum(lift: &LiftSequence, a: &SmoothObservable, domain: &Domain) -> Result<Complex64, LieError> {
    let base = &lift.base;
    let s = base.s();
    let d = lift.dim();
    // per term: the reflected factors and the product grid over them
    let kernels: Vec<Vec<Complex64>> = s.iter().map(|sj| chirp_kernel(*sj)).collect();
    let plans: Vec<(Vec<usize>, usize)> = base
        .terms
        .iter()
        .map(|t| {
            let refl: Vec<usize> = (0..d).filter(|j| t.is_reflected(*j)).collect();
            let count = LIMIT_SAMPLES.pow(refl.len() as u32);
            (refl, count)
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut thetas = vec![0.0; d];
    for_each_node(domain, |z, w| {
        if !a.may_be_nonzero(z) {
            return;
        }
        let fr = frames(base, &s, z);
        let phi0 = fr.base_value(base).conj();
        let mut inner = Complex64::new(0.0, 0.0);
        for (m, t) in base.terms.iter().enumerate() {
            let (refl, count) = &plans[m];
            let mut smeared = Complex64::new(0.0, 0.0);
            for mut idx in 0..*count {
                let mut weight = Complex64::new(1.0, 0.0);
                for (j, th) in thetas.iter_mut().enumerate() {
                    *th = -fr.beta[m][j];
                }
                for &j in refl {
                    let q = idx % LIMIT_SAMPLES;
                    idx /= LIMIT_SAMPLES;
                    thetas[j] += PI * q as f64 / LIMIT_SAMPLES as f64;
                    weight *= kernels[j][q];
                }
                smeared += weight * a.eval(&ProductGroupElement::from_points(z, &thetas));
            }
            inner += t.coefficient * fr.amp[m] * smeared;
        }
        acc += inner * phi0 * w;
    });
    finite(acc)
}

/// S_phi(a) = sum_n <a phi_n, phi_0> over the domain with Haar measure.
pub fn wigner_distribution(
    lift: &LiftSequence,
    a: &SmoothObservable,
    domain: &Domain,
    truncation: Truncation,
) -> Result<Complex64, LieError> {
    check_inputs(lift, a, domain)?;
    match truncation {
        Truncation::Limit => limit_sum(lift, a, domain),
        Truncation::Band(n) => {
            if n > lift.n_max {
                return Err(LieError::MissingComponent(vec![n as i64; lift.dim()]));
            }
            let v = band_sum(lift, a, domain, n)?;
            if a.band.is_none_or(|b| b > n) && n < lift.n_max {
                let v2 = band_sum(lift, a, domain, n + 1)?;
                if (v2 - v).norm() > 1e-8 * v.norm().max(1.0) {
                    log::warn!("S_phi not converged in the K-type cutoff: N={n} gives {v}, N+1 gives {v2}");
                }
            }
            Ok(v)
        }
    }
}

/// integral over the domain of |phi|^2.
pub fn l2_norm_sq(base: &ModelEigenfunction, domain: &Domain) -> f64 {
    let s = base.s();
    let mut acc = 0.0;
    for_each_node(domain, |z, w| {
        acc += frames(base, &s, z).base_value(base).norm_sqr() * w;
    });
    acc
}

impl ModelEigenfunction {
    /// The same superposition scaled to unit L^2 mass over `domain`.
    pub fn normalized_on(&self, domain: &Domain) -> Self {
        self.scaled(Complex64::new(1.0 / l2_norm_sq(self, domain).sqrt(), 0.0))
    }
}

/// |S_phi(a) - S_phi(a o A_j(t))|.
pub fn invariance_defect(
    lift: &LiftSequence,
    a: &SmoothObservable,
    j: usize,
    t: f64,
    domain: &Domain,
    truncation: Truncation,
) -> Result<f64, LieError> {
    if j >= lift.dim() {
        return Err(LieError::BadFactor(j, lift.dim()));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let s0 = wigner_distribution(lift, a, domain, truncation)?;
    let st = wigner_distribution(lift, &a.flowed(j, t), domain, truncation)?;
    Ok((s0 - st).norm())
}

/// S_phi((4 i r_j H_j + H_j^2 + 4 X_j^2) a), derivatives by finite differences.
pub fn differential_equation_residual(
    lift: &LiftSequence,
    a: &SmoothObservable,
    j: usize,
    domain: &Domain,
    truncation: Truncation,
) -> Result<Complex64, LieError> {
    if j >= lift.dim() {
        return Err(LieError::BadFactor(j, lift.dim()));
    }
    let r = lift.base.r.r[j].re;
    wigner_distribution(lift, &a.invariance_operator(j, r), domain, truncation)
}

/// Phi_{N,J} = (2N+1)^{-|J|/2} sum over n supported on J with |n_j| <= N of phi_n.
pub struct PositivityWindow {
    base: ModelEigenfunction,
    s: Vec<Complex64>,
    pub ktypes: Vec<KType>,
    comps: Vec<FlatEntries>,
    pub weight: f64,
}

pub fn positivity_window(lift: &LiftSequence, j_set: &[usize], n: u32) -> Result<PositivityWindow, LieError> {
    let d = lift.dim();
    if let Some(bad) = j_set.iter().find(|j| **j >= d) {
        return Err(LieError::BadFactor(*bad, d));
    }
    let ktypes: Vec<KType> = ktype_box(d, n)
        .into_iter()
        .filter(|k| k.0.iter().enumerate().all(|(j, v)| *v == 0 || j_set.contains(&j)))
        .collect();
    let comps = ktypes.iter().map(|k| lift.component(k).map(flatten)).collect::<Result<_, _>>()?;
    let weight = (2.0 * n as f64 + 1.0).powf(-(j_set.len() as f64) / 2.0);
    Ok(PositivityWindow { base: lift.base.clone(), s: lift.base.s(), ktypes, comps, weight })
}

impl PositivityWindow {
    /// phi_n(p_z) for every n in the window.
    fn fiber(&self, z: &[PlanePoint]) -> Vec<Complex64> {
        let fr = frames(&self.base, &self.s, z);
        self.comps.iter().map(|c| fr.eval(c)).collect()
    }

    pub fn eval(&self, g: &ProductGroupElement) -> Complex64 {
        let fib = self.fiber(&g.points());
        let th = g.thetas();
        let sum: Complex64 = self.ktypes.iter().zip(&fib).map(|(k, v)| v * k.character(&th)).sum();
        sum * self.weight
    }
}

/// <b Phi, Phi>, <|b|^2 Phi, Phi> and <Phi, Phi>, all from one positive-weight rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingTriple {
    pub cross: Complex64,
    pub b_squared: f64,
    pub mass: f64,
}

impl PairingTriple {
    /// |<b Phi,Phi>|^2 <= <|b|^2 Phi,Phi> <Phi,Phi>, with a round-off allowance.
    pub fn cauchy_schwarz_holds(&self) -> bool {
        let lhs = self.cross.norm_sqr();
        let rhs = self.b_squared * self.mass;
        lhs <= rhs * (1.0 + 1e-12) + 1e-300
    }
}

pub fn pairing(
    b: &SmoothObservable,
    window: &PositivityWindow,
    domain: &Domain,
    n_theta: usize,
) -> Result<PairingTriple, LieError> {
    let d = domain.dim();
    let grid = theta_grid(d, n_theta);
    let scale = 1.0 / grid.len() as f64;
    let chars: Vec<Vec<Complex64>> =
        grid.iter().map(|th| window.ktypes.iter().map(|k| k.character(th)).collect()).collect();
    let mut cross = Complex64::new(0.0, 0.0);
    let mut b2 = 0.0;
    let mut mass = 0.0;
    for_each_node(domain, |z, w| {
        let fib = window.fiber(z);
        let live = b.may_be_nonzero(z);
        for (th, ch) in grid.iter().zip(&chars) {
            let phi: Complex64 = fib.iter().zip(ch).map(|(v, c)| v * c).sum::<Complex64>() * window.weight;
            let p2 = phi.norm_sqr();
            mass += p2 * w * scale;
            if live {
                let bv = b.eval(&ProductGroupElement::from_points(z, th));
                cross += bv * p2 * w * scale;
                b2 += bv.norm_sqr() * p2 * w * scale;
            }
        }
    });
    finite(cross)?;
    Ok(PairingTriple { cross, b_squared: b2, mass })
}

/// |S_phi(a) - <a Phi_{N,J}, Phi_{N,J}>|.
pub fn positivity_gap(
    lift: &LiftSequence,
    a: &SmoothObservable,
    j_set: &[usize],
    n: u32,
    domain: &Domain,
) -> Result<f64, LieError> {
    let band = a.band.ok_or(LieError::MissingComponent(vec![]))?;
    let s = wigner_distribution(lift, a, domain, Truncation::Band(band))?;
    let window = positivity_window(lift, j_set, n)?;
    let n_theta = 2 * (2 * n + band) as usize + 4;
    let p = pairing(a, &window, domain, n_theta)?;
    Ok((s - p.cross).norm())
}
