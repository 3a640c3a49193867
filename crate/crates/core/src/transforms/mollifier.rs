//! The mollifier rho with rho-hat = (beta * beta)/(beta * beta)(0),
//! beta(t) = exp(-1/(1/4 - t^2)), and the smoothed indicator
//! 1_delta = rho_delta * 1_{[-1/2, 1/2]}.
//!
//! rho(x) = beta-check(x)^2 / (2 pi int beta^2) is nonnegative, even and of type 1.
//! Everything delta-dependent reduces to the universal tail T(v) = int_v^infty rho:
//! 1_delta(x) = C((x + 1/2)/delta) - C((x - 1/2)/delta) with C = 1 - T.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::{TransformError, WindowFunction, WindowKind, WindowMeta};
use crate::quadrature::{gauss_legendre, ChebTable, Rule};

/// Environment variable naming the directory for binary table caches.
pub const CACHE_ENV: &str = "HQE_CACHE_DIR";

const MAGIC: &[u8; 8] = b"HQEMOLL\0";
const VERSION: u32 = 1;
/// Tables cover [0, V_MAX]; the tail mass beyond is below 1e-16.
const V_MAX: f64 = 200.0;
const PANELS: usize = 100;
const DEGREE: usize = 24;
const HAT_PANELS: usize = 16;
const BETA_NODES: usize = 200;

fn beta(t: f64) -> f64 {
    let q = 0.25 - t * t;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

struct Tables {
    /// rho on [0, V_MAX].
    rho: ChebTable,
    /// T(v) = int_v^infty rho on [0, V_MAX].
    tail: ChebTable,
    /// rho-hat on [0, 1].
    hat: ChebTable,
}

fn build_tables() -> Tables {
    let rule = gauss_legendre(BETA_NODES);
    let nodes: Vec<(f64, f64)> = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| (0.5 * x, 0.5 * w)).collect();
    let beta_sq: f64 = nodes.iter().map(|(t, w)| w * beta(*t).powi(2)).sum();
    let beta_check = |x: f64| nodes.iter().map(|(t, w)| w * beta(*t) * (x * t).cos()).sum::<f64>();
    let norm = 2.0 * PI * beta_sq;
    let rho = ChebTable::build(0.0, V_MAX, PANELS, DEGREE, |x| beta_check(x).powi(2) / norm);

    // Integrate the rho table backwards panel by panel.
    let h = V_MAX / PANELS as f64;
    let gl = gauss_legendre(DEGREE);
    let panel_integral = |a: f64, b: f64| -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * rho.eval(mid + half * x)).sum::<f64>() * half
    };
    let mut ends = vec![0.0; PANELS + 1];
    for p in (0..PANELS).rev() {
        let lo = p as f64 * h;
        ends[p] = ends[p + 1] + panel_integral(lo, lo + h);
    }
    let tail = ChebTable::build(0.0, V_MAX, PANELS, DEGREE, |v| {
        let p = ((v / h).floor() as usize).min(PANELS - 1);
        let hi = (p + 1) as f64 * h;
        ends[p + 1] + panel_integral(v, hi)
    });

    let hat = ChebTable::build(0.0, 1.0, HAT_PANELS, DEGREE, |tau| {
        // (beta * beta)(tau) over t in [tau - 1/2, 1/2].
        let (a, b) = (tau - 0.5, 0.5);
        if b <= a {
            return 0.0;
        }
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let v: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| {
                let t = mid + half * x;
                w * beta(t) * beta(tau - t)
            })
            .sum();
        v * half / beta_sq
    });
    Tables { rho, tail, hat }
}

/// The cache directory, if configured.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

fn cache_path() -> Option<PathBuf> {
    cache_dir().map(|d| d.join(format!("mollifier-v{VERSION}-{V_MAX}-{PANELS}x{DEGREE}.bin")))
}

fn write_table(out: &mut Vec<u8>, t: &ChebTable) {
    out.extend_from_slice(&t.a.to_le_bytes());
    out.extend_from_slice(&t.b.to_le_bytes());
    out.extend_from_slice(&(t.degree as u32).to_le_bytes());
    out.extend_from_slice(&(t.coeffs.len() as u32).to_le_bytes());
    for c in t.coeffs.iter().flatten() {
        out.extend_from_slice(&c.to_le_bytes());
    }
}

fn read_table(buf: &mut &[u8]) -> Option<ChebTable> {
    fn take<'a>(buf: &mut &'a [u8], n: usize) -> Option<&'a [u8]> {
        if buf.len() < n {
            return None;
        }
        let (head, rest) = buf.split_at(n);
        *buf = rest;
        Some(head)
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    let u = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
    let a = f(take(buf, 8)?);
    let b = f(take(buf, 8)?);
    let degree = u(take(buf, 4)?);
    let panels = u(take(buf, 4)?);
    let mut coeffs = Vec::with_capacity(panels);
    for _ in 0..panels {
        let mut c = Vec::with_capacity(degree + 1);
        for _ in 0..=degree {
            c.push(f(take(buf, 8)?));
        }
        coeffs.push(c);
    }
    Some(ChebTable { a, b, degree, coeffs })
}

fn encode(t: &Tables) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for table in [&t.rho, &t.tail, &t.hat] {
        write_table(&mut out, table);
    }
    out
}

fn decode(bytes: &[u8]) -> Option<Tables> {
    let rest = bytes.strip_prefix(MAGIC.as_slice())?;
    let (version, mut rest) = rest.split_at_checked(4)?;
    if u32::from_le_bytes(version.try_into().ok()?) != VERSION {
        return None;
    }
    let rho = read_table(&mut rest)?;
    let tail = read_table(&mut rest)?;
    let hat = read_table(&mut rest)?;
    let shape_ok = rho.coeffs.len() == PANELS && rho.degree == DEGREE && rho.b == V_MAX;
    (shape_ok && rest.is_empty()).then_some(Tables { rho, tail, hat })
}

fn load_or_build() -> Tables {
    let Some(path) = cache_path() else {
        return build_tables();
    };
    let mut bytes = Vec::new();
    if std::fs::File::open(&path).and_then(|mut f| f.read_to_end(&mut bytes)).is_ok() {
        if let Some(t) = decode(&bytes) {
            return t;
        }
        log::warn!("ignoring stale mollifier cache {}", path.display());
    }
    let t = build_tables();
    let written = std::fs::create_dir_all(path.parent().unwrap_or(&path))
        .and_then(|_| std::fs::File::create(&path))
        .and_then(|mut f| f.write_all(&encode(&t)));
    if let Err(e) = written {
        log::warn!("could not write mollifier cache {}: {e}", path.display());
    }
    t
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(load_or_build)
}

/// rho(x).
pub fn mollifier_density(x: f64) -> f64 {
    let x = x.abs();
    if x >= V_MAX {
        0.0
    } else {
        tables().rho.eval(x).max(0.0)
    }
}

/// rho-hat(tau), supported in [-1, 1] with rho-hat(0) = 1.
pub fn mollifier_hat(tau: f64) -> f64 {
    let tau = tau.abs();
    if tau >= 1.0 {
        0.0
    } else {
        tables().hat.eval(tau)
    }
}

/// T(v) = int_v^infty rho for v >= 0.
fn tail(v: f64) -> f64 {
    if v >= V_MAX {
        0.0
    } else {
        tables().tail.eval(v).max(0.0)
    }
}

/// 1_delta(x) on the real line.
pub fn smoothed_indicator(x: f64, delta: f64) -> f64 {
    let x = x.abs();
    let lo = (x - 0.5) / delta;
    let hi = (x + 0.5) / delta;
    if lo >= 0.0 {
        // both edges to the left of x: difference of two tails
        tail(lo) - tail(hi)
    } else {
        1.0 - tail(-lo) - tail(hi)
    }
}

/// 1_delta(zeta) for complex zeta via its Fourier representation
/// (1/pi) int_{-1}^{1} rho-hat(tau) sin(tau/(2 delta))/tau e^{i zeta tau/delta} d tau.
pub fn smoothed_indicator_complex(zeta: Complex64, delta: f64) -> Complex64 {
    let phase = 2.0 * (zeta.re.abs() + 0.5) / delta;
    let panels = (phase / 4.0).ceil() as usize + 8;
    let rule = Rule::composite_gauss(0.0, 1.0, panels, 24);
    // Even in tau after pairing tau with -tau: e^{i a tau} + e^{-i a tau} = 2 cos(a tau).
    let a = zeta / delta;
    let mut acc = Complex64::new(0.0, 0.0);
    for (tau, w) in rule.nodes.iter().zip(&rule.weights) {
        let sinc = if *tau < 1e-12 { 0.5 / delta } else { (tau / (2.0 * delta)).sin() / tau };
        acc += (a * *tau).cos() * (2.0 * w * mollifier_hat(*tau) * sinc);
    }
    acc / PI
}

/// The smoothed indicator 1_delta as a window (type 1/delta, K-type 0).
pub fn make_mollifier(delta: f64) -> Result<WindowFunction, TransformError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(TransformError::BadParameter(format!("delta = {delta} outside (0, 1)")));
    }
    let meta = WindowMeta { l: None, delta: Some(delta), kind: WindowKind::MollifiedIndicator };
    Ok(WindowFunction::with_evaluators(
        0,
        1.0 / delta,
        meta,
        Arc::new(move |z| Ok(smoothed_indicator_complex(z, delta))),
        Some(Arc::new(move |x| Ok(Complex64::new(smoothed_indicator(x, delta), 0.0)))),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_resolved() {
        let t = tables();
        assert!(t.rho.tail_coefficient() < 1e-14, "{}", t.rho.tail_coefficient());
        assert!(t.hat.tail_coefficient() < 1e-10, "{}", t.hat.tail_coefficient());
        assert!((tail(0.0) - 0.5).abs() < 1e-13);
        assert!((mollifier_hat(0.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn cache_round_trip() {
        let t = tables();
        let back = decode(&encode(t)).unwrap();
        assert_eq!(back.tail.coeffs, t.tail.coeffs);
        let mut bad = encode(t);
        bad[8] ^= 1;
        assert!(decode(&bad).is_none());
    }
}
