//! Quadrature rules and piecewise Chebyshev tables.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Trapezoid,
    GaussLegendre,
}

/// Serializable description of a one-dimensional rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub scheme_id: Scheme,
}

impl QuadratureSpec {
    pub fn trapezoid(node_count: usize) -> Self {
        QuadratureSpec { node_count, scheme_id: Scheme::Trapezoid }
    }

    pub fn gauss(node_count: usize) -> Self {
        QuadratureSpec { node_count, scheme_id: Scheme::GaussLegendre }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    if n == 1 {
        return Rule { nodes: vec![0.0], weights: vec![2.0] };
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss-Legendre rule on [-1, 1]; cached per node count.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    cache.lock().expect("rule cache poisoned").insert(n, rule.clone());
    rule
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Composite Gauss-Legendre on [a, b] with equal panels.
    pub fn composite_gauss(a: f64, b: f64, panels: usize, per_panel: usize) -> Rule {
        let base = gauss_legendre(per_panel);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * per_panel);
        let mut weights = Vec::with_capacity(panels * per_panel);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(lo + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Rule { nodes, weights }
    }

    /// Trapezoid rule for a periodic integrand over one period starting at `a`.
    pub fn periodic_trapezoid(a: f64, period: f64, n: usize) -> Rule {
        let h = period / n as f64;
        Rule { nodes: (0..n).map(|k| a + k as f64 * h).collect(), weights: vec![h; n] }
    }

    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(*x) * *w;
        }
        acc
    }
}

/// Piecewise Chebyshev interpolant of a real function on [a, b].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChebTable {
    pub a: f64,
    pub b: f64,
    pub degree: usize,
    /// Chebyshev coefficients, `degree + 1` per panel.
    pub coeffs: Vec<Vec<f64>>,
}

impl ChebTable {
    /// Sample points of `build`, panel by panel.
    pub fn nodes(a: f64, b: f64, panels: usize, degree: usize) -> Vec<f64> {
        let m = degree + 1;
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * m);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for k in 0..m {
                let t = PI * (k as f64 + 0.5) / m as f64;
                out.push(lo + 0.5 * h * (1.0 - t.cos()));
            }
        }
        out
    }

    /// Interpolant from values at `nodes(a, b, panels, degree)`.
    pub fn from_values(a: f64, b: f64, panels: usize, degree: usize, vals: &[f64]) -> Self {
        let m = degree + 1;
        assert_eq!(vals.len(), panels * m, "one value per node");
        let theta: Vec<f64> = (0..m).map(|k| PI * (k as f64 + 0.5) / m as f64).collect();
        let coeffs = vals
            .chunks(m)
            .map(|panel| {
                let mut c: Vec<f64> = (0..m)
                    .map(|j| {
                        let s: f64 = panel.iter().zip(&theta).map(|(v, t)| v * (j as f64 * (PI - t)).cos()).sum();
                        2.0 * s / m as f64
                    })
                    .collect();
                c[0] *= 0.5;
                c
            })
            .collect();
        ChebTable { a, b, degree, coeffs }
    }

    pub fn build<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, degree: usize, f: F) -> Self {
        let vals: Vec<f64> = Self::nodes(a, b, panels, degree).into_iter().map(f).collect();
        Self::from_values(a, b, panels, degree, &vals)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// Evaluates the interpolant; callers keep `x` inside [a, b].
    pub fn eval(&self, x: f64) -> f64 {
        let panels = self.coeffs.len();
        let h = (self.b - self.a) / panels as f64;
        let p = (((x - self.a) / h).floor().max(0.0) as usize).min(panels - 1);
        let lo = self.a + p as f64 * h;
        let u = 2.0 * (x - lo) / h - 1.0;
        let c = &self.coeffs[p];
        let (mut b1, mut b2) = (0.0, 0.0);
        for cj in c.iter().skip(1).rev() {
            let b0 = cj + 2.0 * u * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + u * b1 - b2
    }

    /// Largest magnitude of the trailing coefficient over all panels.
    pub fn tail_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c[c.len() - 1].abs().max(c[c.len() - 2].abs())).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        let rule = gauss_legendre(12);
        for k in 0..24 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(|x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k={k} got={got}");
        }
    }

    #[test]
    fn large_rules_stay_accurate() {
        let rule = gauss_legendre(400);
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-13);
        let got = rule.integrate(|x| (40.0 * x).cos());
        assert!((got - 2.0 * 40f64.sin() / 40.0).abs() < 1e-13);
    }

    #[test]
    fn cheb_table_matches_function() {
        let t = ChebTable::build(0.0, 10.0, 10, 20, |x| (x * 1.3).sin() * (-0.1 * x).exp());
        for k in 0..200 {
            let x = k as f64 * 0.05;
            let exact = (x * 1.3).sin() * (-0.1 * x).exp();
            assert!((t.eval(x) - exact).abs() < 1e-13);
        }
    }
}
