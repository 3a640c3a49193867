use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::domain::Disc;
use super::{apply_word, Generator, LieOperator};
use crate::geometry::{hyperbolic_distance, Mat2, PlanePoint, ProductGroupElement};
use crate::special_functions::KType;

type Evaluator = Arc<dyn Fn(&ProductGroupElement) -> Complex64 + Send + Sync>;

/// A smooth compactly supported function on the product group.
#[derive(Clone)]
pub struct SmoothObservable {
    evaluator: Evaluator,
    /// Components a_n vanish for ||n||_inf > band; `None` when no such bound is known.
    pub band: Option<u32>,
    /// Per factor, a geodesic disc containing the p-part of the support.
    pub support: Vec<Disc>,
    /// Set when a(p_z k) = a(p_z) chi_n(k).
    pub ktype: Option<KType>,
}

impl fmt::Debug for SmoothObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothObservable")
            .field("band", &self.band)
            .field("support", &self.support)
            .field("ktype", &self.ktype)
            .finish()
    }
}

/// exp(1 - 1/(1 - s^2)) on |s| < 1, peak value 1.
pub fn bump_profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl SmoothObservable {
    pub fn new<F>(f: F, band: Option<u32>, support: Vec<Disc>, ktype: Option<KType>) -> Self
    where
        F: Fn(&ProductGroupElement) -> Complex64 + Send + Sync + 'static,
    {
        SmoothObservable { evaluator: Arc::new(f), band, support, ktype }
    }

    pub fn eval(&self, g: &ProductGroupElement) -> Complex64 {
        (self.evaluator)(g)
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn zero(support: Vec<Disc>) -> Self {
        let d = support.len();
        Self::new(|_| Complex64::new(0.0, 0.0), Some(0), support, Some(KType::zero(d)))
    }

    /// prod_j bump(d(z_j, c_j)/R) times chi_n(k).
    pub fn bump(centers: Vec<PlanePoint>, radius: f64, n: KType) -> Self {
        assert_eq!(centers.len(), n.dim(), "one center per factor");
        let support = centers.iter().map(|c| Disc { center: *c, radius }).collect();
        let band = n.sup_norm() as u32;
        let ktype = n.clone();
        let f = move |g: &ProductGroupElement| {
            let mut v = 1.0;
            for (gj, c) in g.factors.iter().zip(&centers) {
                v *= bump_profile(hyperbolic_distance(gj.z, *c) / radius);
                if v == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
            }
            n.character(&g.thetas()) * v
        };
        Self::new(f, Some(band), support, Some(ktype))
    }

    /// The radial bump multiplied by a smooth non-radial factor, band `band`:
    /// sum over |m| <= band of weights[m] chi_m(theta) in factor 0, times a bump.
    pub fn mixed_bump(center: PlanePoint, radius: f64, weights: Vec<Complex64>) -> Self {
        let band = (weights.len() / 2) as u32;
        let support = vec![Disc { center, radius }];
        let f = move |g: &ProductGroupElement| {
            let gj = g.factors[0];
            let b = bump_profile(hyperbolic_distance(gj.z, center) / radius);
            if b == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, w) in weights.iter().enumerate() {
                let m = idx as f64 - band as f64;
                acc += w * Complex64::from_polar(1.0, 2.0 * m * gj.theta);
            }
            acc * b * (1.0 + 0.3 * (gj.z.x - center.x))
        };
        Self::new(f, Some(band), support, None)
    }

    /// a o A_j(t): g -> a(g exp(t H_j)).
    pub fn flowed(&self, j: usize, t: f64) -> Self {
        let inner = self.clone();
        let m = Mat2::exp_h(t);
        let mut support = self.support.clone();
        support[j].radius += 2.0 * t.abs();
        Self::new(move |g| inner.eval(&g.right_mul_factor(j, &m)), None, support, None)
    }

    /// |a|^2.
    pub fn abs2(&self) -> Self {
        let inner = self.clone();
        let band = self.band.map(|b| 2 * b);
        Self::new(move |g| Complex64::new(inner.eval(g).norm_sqr(), 0.0), band, self.support.clone(), None)
    }

    /// sum_i c_i (word_i a), derivatives by finite differences; failures surface as NaN.
    pub fn derived(&self, combination: Vec<(Complex64, Vec<LieOperator>)>) -> Self {
        let inner = self.clone();
        let extra = combination.iter().map(|(_, w)| w.len() as u32).max().unwrap_or(0);
        let band = self.band.map(|b| b + extra);
        let f = move |g: &ProductGroupElement| {
            let eval = |h: &ProductGroupElement| inner.eval(h);
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, word) in &combination {
                match apply_word(word, &eval, g) {
                    Ok(v) => acc += c * v,
                    Err(_) => return Complex64::new(f64::NAN, f64::NAN),
                }
            }
            acc
        };
        Self::new(f, band, self.support.clone(), None)
    }

    /// (4 i r H_j + H_j^2 + 4 X_j^2) a.
    pub fn invariance_operator(&self, j: usize, r: f64) -> Self {
        let h = LieOperator::new(Generator::H, j);
        let x = LieOperator::new(Generator::X, j);
        self.derived(vec![
            (Complex64::new(0.0, 4.0 * r), vec![h]),
            (Complex64::new(1.0, 0.0), vec![h, h]),
            (Complex64::new(4.0, 0.0), vec![x, x]),
        ])
    }

    /// Whether the p-part of g lies in the declared support.
    pub fn may_be_nonzero(&self, z: &[PlanePoint]) -> bool {
        z.iter().zip(&self.support).all(|(zj, disc)| hyperbolic_distance(*zj, disc.center) < disc.radius)
    }
}
