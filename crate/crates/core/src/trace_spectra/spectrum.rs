//! Synthetic spectra with two-sided Weyl bounds, window counts, the smoothing
//! defect and exceptional sums.
//!
//! Points are generated in the coordinates u = (r^2 - 1/4)/2 (Weyl intensity,
//! where c prod r_j dr becomes c du) or u = r - 1/2 (flat intensity c dr), in
//! which the process is homogeneous with intensity c.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::TraceError;
use crate::special_functions::{KType, SpectralPoint};
use crate::transforms::{make_window, WindowFunction};

pub const SPECTRUM_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    #[default]
    Poisson,
    /// One point per cell of a lattice, uniformly placed inside the cell.
    Jittered,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Intensity {
    /// c prod_j r_j dr: unit windows around L hold about c L_1...L_d points.
    #[default]
    Weyl,
    /// c dr: unit windows hold about c points.
    Flat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExceptionalProfile {
    #[default]
    None,
    /// For every nonempty J, points with r_j in i(0, 1/2) for j in J and the
    /// other coordinates spread with intensity `density` (same law as the bulk).
    /// Counts in windows grow like prod_{j not in J} L_j.
    Slabs { density: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    pub c: f64,
    pub d: usize,
    /// The box is [1/2, r_max]^d.
    pub r_max: f64,
    pub seed: u64,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub intensity: Intensity,
    #[serde(default)]
    pub exceptional: ExceptionalProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpectrum {
    pub spec: SpectrumSpec,
    pub points: Vec<SpectralPoint>,
}

impl SyntheticSpectrum {
    pub fn empty(spec: SpectrumSpec) -> Self {
        SyntheticSpectrum { spec, points: Vec::new() }
    }

    pub fn real_points(&self) -> impl Iterator<Item = &SpectralPoint> {
        self.points.iter().filter(|p| !p.is_exceptional())
    }

    /// Versioned columnar text: a version line, the spec as JSON, a header, then one
    /// row per point with d (re, im) pairs and an exceptional flag.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        let io = |e: std::io::Error| TraceError::Format(e.to_string());
        writeln!(out, "hqe-spectrum {SPECTRUM_FORMAT_VERSION}").map_err(io)?;
        let spec = serde_json::to_string(&self.spec).map_err(|e| TraceError::Format(e.to_string()))?;
        writeln!(out, "{spec}").map_err(io)?;
        let header: Vec<String> = (1..=self.spec.d).map(|j| format!("re_{j},im_{j}")).collect();
        writeln!(out, "{},exceptional", header.join(",")).map_err(io)?;
        let mut line = String::new();
        for p in &self.points {
            line.clear();
            for c in &p.r {
                line.push_str(&format!("{},{},", c.re, c.im));
            }
            line.push(if p.is_exceptional() { '1' } else { '0' });
            writeln!(out, "{line}").map_err(io)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write_to(&mut v).expect("writing to memory");
        v
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let bad = |m: String| TraceError::Format(m);
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String, TraceError> {
            lines.next().ok_or_else(|| bad(format!("missing {what}")))?.map_err(|e| bad(e.to_string()))
        };
        let version = next("version line")?;
        if version != format!("hqe-spectrum {SPECTRUM_FORMAT_VERSION}") {
            return Err(bad(format!("unsupported version line {version:?}")));
        }
        let spec: SpectrumSpec = serde_json::from_str(&next("spec")?).map_err(|e| bad(e.to_string()))?;
        next("header")?;
        let mut points = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 2 * spec.d + 1 {
                return Err(bad(format!("row {row}: expected {} columns", 2 * spec.d + 1)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("row {row}: {e}")));
            let r = (0..spec.d)
                .map(|j| Ok(Complex64::new(num(cols[2 * j])?, num(cols[2 * j + 1])?)))
                .collect::<Result<Vec<_>, TraceError>>()?;
            let p = SpectralPoint::new(r).map_err(|e| bad(format!("row {row}: {e}")))?;
            if p.is_exceptional() != (cols[2 * spec.d] == "1") {
                return Err(bad(format!("row {row}: exceptional flag disagrees with coordinates")));
            }
            points.push(p);
        }
        Ok(SyntheticSpectrum { spec, points })
    }
}

/// The map u -> r and the u-extent of [1/2, r_max].
fn coordinate(intensity: Intensity, r_max: f64) -> (fn(f64) -> f64, f64) {
    match intensity {
        Intensity::Weyl => (|u| (0.25 + 2.0 * u).sqrt(), 0.5 * (r_max * r_max - 0.25)),
        Intensity::Flat => (|u| 0.5 + u, r_max - 0.5),
    }
}

/// Homogeneous points of intensity c in [0, extent]^m.
fn homogeneous(rng: &mut ChaCha8Rng, c: f64, m: usize, extent: f64, sampling: Sampling) -> Vec<Vec<f64>> {
    if c <= 0.0 {
        return Vec::new();
    }
    if m == 0 {
        let n = poisson(rng, c);
        return vec![Vec::new(); n];
    }
    match sampling {
        Sampling::Poisson => {
            let n = poisson(rng, c * extent.powi(m as i32));
            (0..n).map(|_| (0..m).map(|_| extent * rng.random::<f64>()).collect()).collect()
        }
        Sampling::Jittered => {
            let side = c.powf(-1.0 / m as f64);
            let cells = (extent / side).ceil() as usize;
            let mut out = Vec::new();
            let mut idx = vec![0usize; m];
            'cells: loop {
                let u: Vec<f64> = idx.iter().map(|&k| side * (k as f64 + rng.random::<f64>())).collect();
                if u.iter().all(|&v| v <= extent) {
                    out.push(u);
                }
                for k in idx.iter_mut() {
                    *k += 1;
                    if *k < cells {
                        continue 'cells;
                    }
                    *k = 0;
                }
                break;
            }
            out
        }
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// Reproducible synthetic spectrum on [1/2, r_max]^d.
pub fn generate_spectrum(spec: &SpectrumSpec) -> Result<SyntheticSpectrum, TraceError> {
    if !(spec.c >= 0.0 && spec.c.is_finite()) {
        return Err(TraceError::BadParameter(format!("density constant c = {} must be >= 0", spec.c)));
    }
    if !(spec.r_max >= 2.0 && spec.r_max.is_finite()) {
        return Err(TraceError::BadParameter(format!("r_max = {} must be at least 2", spec.r_max)));
    }
    if spec.d == 0 || spec.d > 16 {
        return Err(TraceError::BadParameter(format!("dimension d = {} outside 1..=16", spec.d)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (to_r, extent) = coordinate(spec.intensity, spec.r_max);
    let real = |u: &[f64]| u.iter().map(|&v| Complex64::new(to_r(v), 0.0)).collect::<Vec<_>>();
    let mut points: Vec<SpectralPoint> = homogeneous(&mut rng, spec.c, spec.d, extent, spec.sampling)
        .iter()
        .map(|u| SpectralPoint { r: real(u) })
        .collect();
    if let ExceptionalProfile::Slabs { density } = spec.exceptional {
        if !(density >= 0.0 && density.is_finite()) {
            return Err(TraceError::BadParameter(format!("slab density {density} must be >= 0")));
        }
        for mask in 1u32..(1 << spec.d) {
            let m = spec.d - mask.count_ones() as usize;
            for u in homogeneous(&mut rng, density, m, extent, spec.sampling) {
                let mut rest = u.iter();
                let r = (0..spec.d)
                    .map(|j| {
                        if mask & (1 << j) != 0 {
                            Complex64::new(0.0, small_imaginary(&mut rng))
                        } else {
                            Complex64::new(to_r(*rest.next().expect("one u per real coordinate")), 0.0)
                        }
                    })
                    .collect();
                points.push(SpectralPoint { r });
            }
        }
    }
    Ok(SyntheticSpectrum { spec: spec.clone(), points })
}

/// Uniform in the open interval (0, 1/2).
fn small_imaginary(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let t = 0.5 * rng.random::<f64>();
        if t > 0.0 {
            return t;
        }
    }
}

/// The window ||r - L||_inf <= epsilon/2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountWindow {
    pub l: Vec<f64>,
    pub epsilon: f64,
}

impl CountWindow {
    pub fn new(l: Vec<f64>, epsilon: f64) -> Result<Self, TraceError> {
        if l.is_empty() || l.iter().any(|v| !(*v >= 0.5 && v.is_finite())) {
            return Err(TraceError::BadParameter(format!("window center {l:?} must lie in [1/2, inf)^d")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(TraceError::BadParameter(format!("epsilon = {epsilon} outside (0, 1]")));
        }
        Ok(CountWindow { l, epsilon })
    }

    pub fn unit(l: Vec<f64>) -> Result<Self, TraceError> {
        Self::new(l, 1.0)
    }

    fn contains(&self, p: &SpectralPoint) -> bool {
        p.r.iter().zip(&self.l).all(|(r, l)| r.im == 0.0 && (r.re - l).abs() <= 0.5 * self.epsilon)
    }
}

/// N(L, epsilon): real points in the window.
pub fn count_window(spec: &SyntheticSpectrum, w: &CountWindow) -> usize {
    spec.points.iter().filter(|p| p.r.len() == w.l.len() && w.contains(p)).count()
}

/// N(J, L): points imaginary exactly on J and within 1/2 of L_j off J.
pub fn count_exceptional(spec: &SyntheticSpectrum, j_set: &[usize], l: &[f64]) -> usize {
    spec.points
        .iter()
        .filter(|p| {
            p.r.iter().enumerate().all(|(j, r)| {
                if j_set.contains(&j) {
                    r.im != 0.0
                } else {
                    r.im == 0.0 && (r.re - l[j]).abs() <= 0.5
                }
            })
        })
        .count()
}

fn check_center(l: &[f64], d: usize) -> Result<f64, TraceError> {
    if l.len() != d || l.iter().any(|v| !(*v >= 0.5 && v.is_finite())) {
        return Err(TraceError::BadParameter(format!("L = {l:?} must lie in [1/2, inf)^{d}")));
    }
    Ok(l.iter().product())
}

/// (1/L_1...L_d) sum over real points of |h_{L, delta}(r_k) - Theta(r_k - L)|.
pub fn smoothing_defect(spec: &SyntheticSpectrum, l: &[f64], delta: f64, n: &KType) -> Result<f64, TraceError> {
    let vol = check_center(l, spec.spec.d)?;
    if n.dim() != spec.spec.d {
        return Err(TraceError::BadParameter("K-type dimension differs from the spectrum".into()));
    }
    let windows: Vec<WindowFunction> =
        l.iter().zip(&n.0).map(|(lj, nj)| make_window(*lj, delta, *nj)).collect::<Result<_, _>>()?;
    let box_window = CountWindow::unit(l.to_vec())?;
    let mut acc = 0.0;
    for p in spec.real_points() {
        let mut h = Complex64::new(1.0, 0.0);
        for (w, r) in windows.iter().zip(&p.r) {
            h *= w.eval_real(r.re)?;
        }
        let theta = if box_window.contains(p) { 1.0 } else { 0.0 };
        acc += (h - theta).norm();
    }
    Ok(acc / vol)
}

/// sum over real points of prod_j h_j(r_{k,j}).
pub fn window_sum(spec: &SyntheticSpectrum, h_list: &[WindowFunction]) -> Result<Complex64, TraceError> {
    if h_list.len() != spec.spec.d {
        return Err(TraceError::BadParameter("one window per factor".into()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for p in spec.real_points() {
        let mut h = Complex64::new(1.0, 0.0);
        for (w, r) in h_list.iter().zip(&p.r) {
            h *= w.eval_real(r.re)?;
        }
        acc += h;
    }
    Ok(acc)
}

/// |h(r)| <~ |r|^{-3} on the strip |Im r| <= 1/2, tested on log-spaced samples:
/// the weighted envelope |h|(1 + |x|)^3 may not grow from [1, 25] to [25, 200].
pub fn check_cubic_decay(h: &WindowFunction) -> Result<(), TraceError> {
    let mut head = 0.0f64;
    let mut tail = 0.0f64;
    for k in 0..=64 {
        let x = 200f64.powf(k as f64 / 64.0);
        for sign in [-1.0, 1.0] {
            for y in [-0.5, 0.0, 0.5] {
                let v = h.eval(Complex64::new(sign * x, y))?.norm();
                if !v.is_finite() {
                    return Err(TraceError::DecayViolation(format!("h({}, {y}) is not finite", sign * x)));
                }
                let m = v * (1.0 + x).powi(3);
                if x <= 25.0 {
                    head = head.max(m);
                } else {
                    tail = tail.max(m);
                }
            }
        }
    }
    if tail > 2.0 * head {
        return Err(TraceError::DecayViolation(format!(
            "|h|(1+|r|)^3 grows on the strip: {head:.3e} on [1, 25], {tail:.3e} on [25, 200]"
        )));
    }
    Ok(())
}

/// (1/L_1...L_d) sum over exceptional points of |prod_j h_j(r_{k,j} - L_j)|.
pub fn exceptional_weighted_sum(
    spec: &SyntheticSpectrum,
    h_list: &[WindowFunction],
    l: &[f64],
) -> Result<f64, TraceError> {
    let vol = check_center(l, spec.spec.d)?;
    if h_list.len() != spec.spec.d {
        return Err(TraceError::BadParameter("one window per factor".into()));
    }
    for h in h_list {
        check_cubic_decay(h)?;
    }
    let mut acc = 0.0;
    for p in spec.points.iter().filter(|p| p.is_exceptional()) {
        let mut v = Complex64::new(1.0, 0.0);
        for ((h, r), lj) in h_list.iter().zip(&p.r).zip(l) {
            v *= h.eval(r - lj)?;
        }
        acc += v.norm();
    }
    Ok(acc / vol)
}
