//! n-spherical transforms, Paley-Wiener windows, convolution operators L[f]
//! and the convolution quantization Op(a).

mod convolution;
mod mollifier;
mod quantize;
mod spherical;
mod windows;

pub use convolution::{convolution_operator, ConvolutionRule};
pub use mollifier::{cache_dir, make_mollifier, mollifier_density, mollifier_hat, smoothed_indicator, CACHE_ENV};
pub use quantize::{quantize_expectation, ProductSymbol, QuantizeResolution};
pub use spherical::{
    choose_r_max, helgason_fourier, inverse_spherical_transform, inverse_spherical_transform_many, spherical_transform,
    spherical_transform_with, tabulate_inverse, HRule, TransformTable,
};
pub use windows::{
    make_correction, make_window, make_window_with, regime_constants, Correction, IndexSet, RegimeConstants,
};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{hyperbolic_distance, PlanePoint};
use crate::lie_operators::LieError;
use crate::quadrature::ChebTable;
use crate::special_functions::{eval_p_n, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("function does not vanish on the quadrature boundary ({boundary:.3e} against peak {peak:.3e})")]
    SupportEscape { boundary: f64, peak: f64 },
    #[error("inversion tail estimate {tail:.3e} at r_max = {r_max} exceeds the budget")]
    TailEstimate { r_max: f64, tail: f64 },
    #[error("evaluation at {0} lies on an uncancelled pole")]
    PoleProximity(Complex64),
    #[error("the integrand is not evaluable at {0:?}")]
    DomainCoverage(PlanePoint),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("window violates its decay hypothesis: {0}")]
    DecayViolation(String),
    #[error("K-type mismatch: symbol has {symbol:?}, windows have {windows:?}")]
    KTypeMismatch { symbol: Vec<i64>, windows: Vec<i64> },
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

type Radial = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// f in C^infty_n(H): f(k_theta (i e^t)) = e^{2 i n theta} F(t), supported in d(z, i) <= R.
#[derive(Clone)]
pub struct KTypeFunction {
    pub n: i64,
    pub support_radius: f64,
    radial: Radial,
}

impl fmt::Debug for KTypeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KTypeFunction").field("n", &self.n).field("support_radius", &self.support_radius).finish()
    }
}

/// Serializable description of a KTypeFunction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KTypeFunctionSpec {
    Bump { n: i64, radius: f64 },
}

impl KTypeFunctionSpec {
    pub fn build(&self) -> KTypeFunction {
        match self {
            KTypeFunctionSpec::Bump { n, radius } => KTypeFunction::bump(*n, *radius),
        }
    }
}

impl KTypeFunction {
    /// From the profile F(t) = f(i e^t). F must vanish to order |n| at t = 0 for smoothness.
    pub fn from_radial<F>(n: i64, support_radius: f64, profile: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        KTypeFunction { n, support_radius, radial: Arc::new(profile) }
    }

    /// w^n exp(1 - 1/(1 - d^2/R^2)) in the disc coordinate w (conjugate w for n < 0).
    pub fn bump(n: i64, radius: f64) -> Self {
        let k = n.unsigned_abs() as i32;
        Self::from_radial(n, radius, move |t| {
            let s = t / radius;
            if s >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new((0.5 * t).tanh().powi(k) * (1.0 - 1.0 / (1.0 - s * s)).exp(), 0.0)
        })
    }

    /// Interpolated profile from samples of F at Chebyshev panels on [0, R].
    pub fn from_table(n: i64, support_radius: f64, re: ChebTable, im: ChebTable) -> Self {
        Self::from_radial(n, support_radius, move |t| {
            if t > re.b {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(re.eval(t), im.eval(t))
            }
        })
    }

    pub fn profile(&self, t: f64) -> Complex64 {
        (self.radial)(t)
    }

    pub fn eval(&self, z: PlanePoint) -> Complex64 {
        let t = hyperbolic_distance(z, PlanePoint::i());
        if t > self.support_radius {
            return Complex64::new(0.0, 0.0);
        }
        let v = self.profile(t);
        if self.n == 0 || v == Complex64::new(0.0, 0.0) {
            return v;
        }
        let w = z.to_disc();
        // arg w = 2 theta
        v * Complex64::from_polar(1.0, self.n as f64 * w.arg())
    }

    /// Polar form: f(k_theta (i e^t)).
    pub fn eval_polar(&self, t: f64, theta: f64) -> Complex64 {
        if t > self.support_radius {
            return Complex64::new(0.0, 0.0);
        }
        self.profile(t) * Complex64::from_polar(1.0, 2.0 * self.n as f64 * theta)
    }

    /// a f + b g; both must share n.
    pub fn combine(&self, a: Complex64, other: &KTypeFunction, b: Complex64) -> Self {
        assert_eq!(self.n, other.n, "combined functions must share a K-type");
        let (f, g) = (self.clone(), other.clone());
        Self::from_radial(self.n, self.support_radius.max(other.support_radius), move |t| {
            f.profile(t) * a + g.profile(t) * b
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    MollifiedIndicator,
    Corrected,
    Generic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowMeta {
    pub l: Option<f64>,
    pub delta: Option<f64>,
    pub kind: WindowKind,
}

type ComplexEval = Arc<dyn Fn(Complex64) -> Result<Complex64, TransformError> + Send + Sync>;
type RealEval = Arc<dyn Fn(f64) -> Result<Complex64, TransformError> + Send + Sync>;
type GridEval = Arc<dyn Fn(f64, usize) -> Vec<Complex64> + Send + Sync>;

/// A test function h in PW_n with its exponential type.
#[derive(Clone)]
pub struct WindowFunction {
    pub n: i64,
    pub exponential_type: f64,
    pub meta: WindowMeta,
    complex: ComplexEval,
    real: Option<RealEval>,
    grid: Option<GridEval>,
}

impl fmt::Debug for WindowFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WindowFunction")
            .field("n", &self.n)
            .field("exponential_type", &self.exponential_type)
            .field("meta", &self.meta)
            .finish()
    }
}

/// Serializable description of a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowSpec {
    /// h_{L, delta} for K-type n.
    Window { l: f64, delta: f64, n: i64 },
    /// The smoothed indicator 1_delta.
    Mollifier { delta: f64 },
    /// exp(-r^2 / (2 sigma^2)); K-type 0, not of finite type.
    Gaussian { sigma: f64 },
}

impl WindowSpec {
    pub fn build(&self) -> Result<WindowFunction, TransformError> {
        match *self {
            WindowSpec::Window { l, delta, n } => make_window(l, delta, n),
            WindowSpec::Mollifier { delta } => make_mollifier(delta),
            WindowSpec::Gaussian { sigma } => Ok(WindowFunction::gaussian(sigma)),
        }
    }
}

impl WindowFunction {
    pub fn generic<F>(n: i64, exponential_type: f64, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        WindowFunction {
            n,
            exponential_type,
            meta: WindowMeta { l: None, delta: None, kind: WindowKind::Generic },
            complex: Arc::new(move |z| Ok(f(z))),
            real: None,
            grid: None,
        }
    }

    /// Gaussian e^{-r^2/(2 sigma^2)}: even, entire, but of infinite type.
    pub fn gaussian(sigma: f64) -> Self {
        Self::generic(0, f64::INFINITY, move |r| (-(r * r) / (2.0 * sigma * sigma)).exp())
    }

    pub(crate) fn with_evaluators(
        n: i64,
        exponential_type: f64,
        meta: WindowMeta,
        complex: ComplexEval,
        real: Option<RealEval>,
    ) -> Self {
        WindowFunction { n, exponential_type, meta, complex, real, grid: None }
    }

    pub(crate) fn with_grid(mut self, grid: GridEval) -> Self {
        self.grid = Some(grid);
        self
    }

    /// h(k step) for k = 0..count.
    pub fn eval_real_grid(&self, step: f64, count: usize) -> Result<Vec<Complex64>, TransformError> {
        match &self.grid {
            Some(g) => Ok(g(step, count)),
            None => (0..count).map(|k| self.eval_real(k as f64 * step)).collect(),
        }
    }

    pub fn eval(&self, r: Complex64) -> Result<Complex64, TransformError> {
        if r.im == 0.0 {
            if let Some(real) = &self.real {
                return real(r.re);
            }
        }
        (self.complex)(r)
    }

    /// Evaluation on the real line, through the fast route when one exists.
    pub fn eval_real(&self, r: f64) -> Result<Complex64, TransformError> {
        match &self.real {
            Some(real) => real(r),
            None => (self.complex)(Complex64::new(r, 0.0)),
        }
    }

    /// Evaluation through the complex-argument route even on the real line.
    pub fn eval_complex_route(&self, r: Complex64) -> Result<Complex64, TransformError> {
        (self.complex)(r)
    }

    /// max |P_n(2ir) h(-r) - P_n(-2ir) h(r)| over the grid.
    pub fn functional_equation_residual(&self, grid: &[Complex64]) -> Result<f64, TransformError> {
        let mut worst = 0.0f64;
        for &r in grid {
            let i2r = Complex64::i() * r * 2.0;
            let lhs = eval_p_n(i2r, self.n) * self.eval(-r)?;
            let rhs = eval_p_n(-i2r, self.n) * self.eval(r)?;
            worst = worst.max((lhs - rhs).norm());
        }
        Ok(worst)
    }

    /// Largest |h(r)| e^{-R |Im r|} over the samples; bounded for h of type R.
    pub fn type_envelope(&self, samples: &[Complex64]) -> Result<f64, TransformError> {
        let mut worst = 0.0f64;
        for &r in samples {
            worst = worst.max(self.eval(r)?.norm() * (-self.exponential_type * r.im.abs()).exp());
        }
        Ok(worst)
    }
}
