//! <Op(a) phi, phi> for product symbols a(g, r) = a(g) h_1(r_1) ... h_d(r_d), where
//! Op(a) phi(z) = a(p_z) (L[f_1] x ... x L[f_d]) phi(p_z) with f_j = S_{n_j}^{-1} h_j.

use num_complex::Complex64;

use super::convolution::ConvolutionRule;
use super::spherical::{choose_r_max, tabulate_inverse};
use super::{KTypeFunction, TransformError, WindowFunction};
use crate::geometry::{GroupElement, PlanePoint, ProductGroupElement};
use crate::lie_operators::{build_lift, wigner_distribution, Domain, ModelEigenfunction, SmoothObservable, Truncation};
use crate::special_functions::KType;

/// a(g) h(r) with a of fixed K-type n and h_j in PW_{n_j}.
#[derive(Clone, Debug)]
pub struct ProductSymbol {
    pub a: SmoothObservable,
    pub h: Vec<WindowFunction>,
}

impl ProductSymbol {
    pub fn new(a: SmoothObservable, h: Vec<WindowFunction>) -> Result<Self, TransformError> {
        let windows: Vec<i64> = h.iter().map(|w| w.n).collect();
        let Some(n) = a.ktype.clone() else {
            return Err(TransformError::BadParameter("the symbol needs a fixed K-type".into()));
        };
        if n.0 != windows {
            return Err(TransformError::KTypeMismatch { symbol: n.0, windows });
        }
        let grid: Vec<Complex64> = (1..=12).map(|k| Complex64::new(0.37 * k as f64, 0.0)).collect();
        for w in &h {
            let res = w.functional_equation_residual(&grid)?;
            if res > 1e-8 {
                return Err(TransformError::BadParameter(format!(
                    "window of K-type {} violates its functional equation by {res:.3e}",
                    w.n
                )));
            }
        }
        Ok(ProductSymbol { a, h })
    }

    pub fn ktype(&self) -> KType {
        KType(self.h.iter().map(|w| w.n).collect())
    }

    /// h(r) = prod_j h_j(r_j).
    pub fn h_at(&self, r: &[Complex64]) -> Result<Complex64, TransformError> {
        let mut v = Complex64::new(1.0, 0.0);
        for (w, rj) in self.h.iter().zip(r) {
            v *= w.eval(*rj)?;
        }
        Ok(v)
    }
}

/// Quadrature settings for the convolution route.
#[derive(Clone, Debug)]
pub struct QuantizeResolution {
    pub domain: Domain,
    /// One rule per factor; `None` picks one from the support of f_j and r_j.
    pub convolution: Option<Vec<ConvolutionRule>>,
}

/// The pair (<Op(a) phi, phi>, h(r) <a phi_{-n}, phi_0>): the first through the
/// convolution operators, the second through the lift.
pub fn quantize_expectation(
    sym: &ProductSymbol,
    base: &ModelEigenfunction,
    res: &QuantizeResolution,
    n_max: u32,
) -> Result<(Complex64, Complex64), TransformError> {
    let d = base.dim();
    if sym.h.len() != d || sym.a.dim() != d || res.domain.dim() != d {
        return Err(TransformError::BadParameter("symbol, base and domain dimensions differ".into()));
    }
    if base.r.is_exceptional() || base.r.r.iter().any(|r| r.im != 0.0) {
        return Err(TransformError::BadParameter("quantization needs a nonexceptional real spectral point".into()));
    }
    let n = sym.ktype();
    if n.sup_norm() as u32 > n_max {
        return Err(TransformError::BadParameter(format!("N = {n_max} is below the K-type {:?}", n.0)));
    }
    let r: Vec<f64> = base.r.r.iter().map(|c| c.re).collect();
    let rc: Vec<Complex64> = base.r.r.clone();

    // rhs through the lift
    let lift = build_lift(base, n_max)?;
    let pairing = wigner_distribution(&lift, &sym.a, &res.domain, Truncation::Band(n_max))?;
    let rhs = sym.h_at(&rc)? * pairing;

    // lhs through L[f_j] per factor and term
    let fs: Vec<KTypeFunction> =
        sym.h.iter().map(|h| tabulate_inverse(h, choose_r_max(h, h.exponential_type)?)).collect::<Result<_, _>>()?;
    let rules: Vec<ConvolutionRule> = match &res.convolution {
        Some(rs) => rs.clone(),
        None => fs.iter().zip(&r).map(|(f, rj)| ConvolutionRule::for_frequency(f.support_radius, *rj, f.n)).collect(),
    };
    let lists = res.domain.factor_nodes();
    let s: Vec<Complex64> = base.s();
    // conv[j][m][i] = L[f_j] psi_{m j}(p_{z_i}), psi_{m j}(w) = phi_{r_j}(k_{beta_{m j}} w)
    let mut conv = Vec::with_capacity(d);
    for j in 0..d {
        let nodes = rules[j].weighted_nodes(&fs[j]);
        let disc = sym.a.support[j];
        let mut per_term = Vec::with_capacity(base.terms.len());
        for term in &base.terms {
            let e = term.exponents(&s)[j];
            let k = GroupElement::k(term.rotation[j]);
            let vals: Vec<Complex64> = lists[j]
                .0
                .iter()
                .map(|z| {
                    if crate::geometry::hyperbolic_distance(*z, disc.center) >= disc.radius {
                        return Complex64::new(0.0, 0.0);
                    }
                    let g = k.compose(&GroupElement::p(*z));
                    nodes.iter().map(|(w, fw)| fw * (e * g.act(*w).y.ln()).exp()).sum()
                })
                .collect();
            per_term.push(vals);
        }
        conv.push(per_term);
    }

    let sizes: Vec<usize> = lists.iter().map(|l| l.0.len()).collect();
    let total: usize = sizes.iter().product();
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut z = vec![PlanePoint::i(); d];
    let mut idx = vec![0usize; d];
    for flat in 0..total {
        let mut rest = flat;
        let mut w = 1.0;
        for j in 0..d {
            idx[j] = rest % sizes[j];
            rest /= sizes[j];
            z[j] = lists[j].0[idx[j]];
            w *= lists[j].1[idx[j]];
        }
        if !sym.a.may_be_nonzero(&z) {
            continue;
        }
        let a = sym.a.eval(&ProductGroupElement::new(z.iter().map(|p| GroupElement::p(*p)).collect()));
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut op_phi = Complex64::new(0.0, 0.0);
        for (m, term) in base.terms.iter().enumerate() {
            let mut prod = term.coefficient;
            for j in 0..d {
                prod *= conv[j][m][idx[j]];
            }
            op_phi += prod;
        }
        lhs += a * op_phi * base.eval(&z).conj() * w;
    }
    Ok((lhs, rhs))
}
