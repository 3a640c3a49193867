use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LabError;
use crate::lie_operators::RegionResolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TransformRoundtrip,
    DecayFit,
    LiftInvariance,
    PositivityGap,
    Lequiv,
    WeylBands,
    SmoothingDefect,
    VarianceSkeleton,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::TransformRoundtrip,
        ExperimentKind::DecayFit,
        ExperimentKind::LiftInvariance,
        ExperimentKind::PositivityGap,
        ExperimentKind::Lequiv,
        ExperimentKind::WeylBands,
        ExperimentKind::SmoothingDefect,
        ExperimentKind::VarianceSkeleton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TransformRoundtrip => "transform-roundtrip",
            ExperimentKind::DecayFit => "decay-fit",
            ExperimentKind::LiftInvariance => "lift-invariance",
            ExperimentKind::PositivityGap => "positivity-gap",
            ExperimentKind::Lequiv => "lequiv",
            ExperimentKind::WeylBands => "weyl-bands",
            ExperimentKind::SmoothingDefect => "smoothing-defect",
            ExperimentKind::VarianceSkeleton => "variance-skeleton",
        }
    }

    /// Grid keys the kind reads.
    pub fn grids(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::TransformRoundtrip => &["n"],
            ExperimentKind::DecayFit => &["r", "n"],
            ExperimentKind::LiftInvariance => &["r", "t"],
            ExperimentKind::PositivityGap => &["r"],
            ExperimentKind::Lequiv => &["r", "n", "d"],
            ExperimentKind::WeylBands => &["l", "d"],
            ExperimentKind::SmoothingDefect => &["l", "delta"],
            ExperimentKind::VarianceSkeleton => &["r", "t", "e"],
        }
    }

    /// Metric names whose tolerance may be overridden.
    pub fn metrics(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::TransformRoundtrip => &["roundtrip-error", "support-leak"],
            ExperimentKind::DecayFit => &["slope-deviation"],
            ExperimentKind::LiftInvariance => &["de-residual", "halving-deviation"],
            ExperimentKind::PositivityGap => &["cauchy-schwarz", "gap-ratio"],
            ExperimentKind::Lequiv => &["rel-error-d1", "rel-error-d2"],
            ExperimentKind::WeylBands => &["band-log2-deviation", "epsilon-scaling-z", "exceptional-final-fraction"],
            ExperimentKind::SmoothingDefect => &["sqrt-scaling-deviation"],
            ExperimentKind::VarianceSkeleton => &["halving-deviation", "cauchy-schwarz", "l2-ratio"],
        }
    }

    /// Whether the kind draws random numbers.
    pub fn is_seeded(self) -> bool {
        matches!(self, ExperimentKind::WeylBands | ExperimentKind::SmoothingDefect)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter grids; a kind rejects grids it does not read.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    /// Window centers, one value per factor (the center is (l, ..., l)).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    /// K-types.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<i64>>,
    /// Number of factors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
    /// Energy vectors on the shell sum E_j = 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<f64>>>,
    /// Flow times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub panels: usize,
    pub per_panel: usize,
    pub angular: usize,
}

impl From<QuadratureConfig> for RegionResolution {
    fn from(q: QuadratureConfig) -> Self {
        RegionResolution { panels: q.panels, per_panel: q.per_panel, angular: q.angular }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: Grids,
    /// Region rule for the Haar integrals; each kind has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> LabError {
    LabError::Schema { path: path.into(), message: message.into() }
}

/// The dotted key at a byte offset: the innermost table header above it and
/// the key on its own line.
fn key_path_at(text: &str, offset: usize) -> String {
    let mut table = String::new();
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        let end = start + line.len();
        let trimmed = line.trim();
        if trimmed.starts_with('[') && offset >= end {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
        if offset < end || end == text.len() {
            if trimmed.starts_with('[') {
                return trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            }
            let key = trimmed.split('=').next().unwrap_or("").trim().trim_matches('"');
            return match (table.is_empty(), key.is_empty()) {
                (_, true) => table,
                (true, false) => key.to_string(),
                (false, false) => format!("{table}.{key}"),
            };
        }
        start = end;
    }
    table
}

fn check_finite(path: &str, v: &[f64], lo: f64) -> Result<(), LabError> {
    if v.is_empty() {
        return Err(schema(path, "grid is empty"));
    }
    for (i, x) in v.iter().enumerate() {
        if !(x.is_finite() && *x > lo) {
            return Err(schema(format!("{path}[{i}]"), format!("{x} must be finite and above {lo}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses and validates a TOML config.
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| key_path_at(text, s.start)).unwrap_or_default();
            schema(if path.is_empty() { "<root>".to_string() } else { path }, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The default config of a kind.
    pub fn default_for(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            id: None,
            seed: 0,
            grid: Grids::default(),
            quadrature: None,
            output: OutputPaths::default(),
            tolerances: BTreeMap::new(),
        }
    }

    pub fn experiment_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let g = &self.grid;
        let present: [(&str, bool); 7] = [
            ("r", g.r.is_some()),
            ("l", g.l.is_some()),
            ("delta", g.delta.is_some()),
            ("n", g.n.is_some()),
            ("d", g.d.is_some()),
            ("e", g.e.is_some()),
            ("t", g.t.is_some()),
        ];
        for (key, set) in present {
            if set && !self.kind.grids().contains(&key) {
                return Err(schema(format!("grid.{key}"), format!("not read by kind {}", self.kind)));
            }
        }
        if let Some(r) = &g.r {
            check_finite("grid.r", r, 0.0)?;
        }
        if let Some(l) = &g.l {
            check_finite("grid.l", l, 0.0)?;
            if let Some(i) = l.iter().position(|v| *v < 0.5) {
                return Err(schema(format!("grid.l[{i}]"), "window centers must be at least 1/2"));
            }
        }
        if let Some(delta) = &g.delta {
            check_finite("grid.delta", delta, 0.0)?;
            if let Some(i) = delta.iter().position(|v| *v >= 1.0) {
                return Err(schema(format!("grid.delta[{i}]"), "delta must lie in (0, 1)"));
            }
        }
        if let Some(t) = &g.t {
            check_finite("grid.t", t, 0.0)?;
        }
        if let Some(n) = &g.n {
            if n.is_empty() {
                return Err(schema("grid.n", "grid is empty"));
            }
        }
        if let Some(d) = &g.d {
            if d.is_empty() {
                return Err(schema("grid.d", "grid is empty"));
            }
            // lattice point counts in dimension 3 run to ~1e9 at the default band centers
            if let Some(i) = d.iter().position(|v| *v == 0 || *v > 2) {
                return Err(schema(format!("grid.d[{i}]"), "dimension must be 1 or 2"));
            }
        }
        if let Some(e) = &g.e {
            if e.is_empty() {
                return Err(schema("grid.e", "grid is empty"));
            }
            for (i, v) in e.iter().enumerate() {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(schema(format!("grid.e[{i}]"), "energies must be finite and nonnegative"));
                }
                if (v.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(schema(format!("grid.e[{i}]"), "energies must sum to 1"));
                }
            }
        }
        if let Some(q) = &self.quadrature {
            if q.panels == 0 || q.per_panel == 0 || q.angular == 0 {
                return Err(schema("quadrature", "node counts must be positive"));
            }
        }
        for (name, tol) in &self.tolerances {
            if !self.kind.metrics().contains(&name.as_str()) {
                return Err(schema(format!("tolerances.{name}"), format!("no such metric for kind {}", self.kind)));
            }
            if !(tol.is_finite() && *tol >= 0.0) {
                return Err(schema(format!("tolerances.{name}"), "tolerance must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output paths excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputPaths::default();
        let text = serde_json::to_string(&c).expect("configs serialize");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn tolerance(&self, metric: &str, default: f64) -> f64 {
        self.tolerances.get(metric).copied().unwrap_or(default)
    }
}
