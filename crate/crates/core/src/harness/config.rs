//! TOML sweep configuration.
//!
//! ```toml
//! [sweep]
//! epsilon_list = [0.08, 0.04, 0.02]   # strictly decreasing
//! beta = 0.6667                       # mobility m = m0 * eps^beta, 0 < beta < 2
//! m0 = 1.0
//! t_end = 0.02
//! nodes_per_epsilon = 6.0             # h = eps / nodes_per_epsilon
//! reports = 4                         # equally spaced report times after t = 0
//! snapshot_every = 1                  # write a snapshot every n-th report (0: never)
//! delta = 0.1                         # tube half-width of the diagnostics
//! output_dir = "out"
//! seed = 1
//! workers = 3
//!
//! [geometry]
//! kind = "shrinking_circle"           # | translating_circle | static_line
//! r0 = 0.25
//! center = [0.5, 0.5]
//! velocity = [0.0, 0.0]
//! offset = 0.25                       # static_line only
//!
//! [domain]
//! lx = 1.0
//! ly = 1.0
//! boundary = "periodic"               # | dirichlet
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fields::{Boundary, Grid};
use crate::reference::SharpKind;
use crate::{Error, Result, Vec2};

/// Overrides the parent directory of relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "NSAC_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    ShrinkingCircle,
    TranslatingCircle,
    StaticLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_center")]
    pub center: [f64; 2],
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default = "default_offset")]
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
    #[serde(default = "default_boundary")]
    pub boundary: String,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            boundary: default_boundary(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub epsilon_list: Vec<f64>,
    pub beta: f64,
    #[serde(default = "one")]
    pub m0: f64,
    pub t_end: f64,
    #[serde(default = "default_nodes_per_epsilon")]
    pub nodes_per_epsilon: f64,
    #[serde(default = "default_reports")]
    pub reports: usize,
    #[serde(default = "one_usize")]
    pub snapshot_every: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep: SweepSection,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub domain: DomainConfig,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn default_r0() -> f64 {
    0.25
}
fn default_center() -> [f64; 2] {
    [0.5, 0.5]
}
fn default_offset() -> f64 {
    0.25
}
fn default_boundary() -> String {
    Boundary::Periodic.tag().to_string()
}
fn default_nodes_per_epsilon() -> f64 {
    6.0
}
fn default_reports() -> usize {
    4
}
fn default_delta() -> f64 {
    0.1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("nsac-out")
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Effective configuration with all defaults filled in.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(s.beta > 0.0 && s.beta < 2.0) {
            return bad(format!(
                "beta = {} outside the admissible range (0, 2); for beta >= 2 the phase field is not expected to converge to the sharp-interface flow",
                s.beta
            ));
        }
        if s.epsilon_list.len() < 3 {
            return bad(format!("epsilon_list needs at least 3 entries, got {}", s.epsilon_list.len()));
        }
        if s.epsilon_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("epsilon_list entries must be positive".into());
        }
        if s.epsilon_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("epsilon_list must be strictly decreasing".into());
        }
        if !(s.m0 > 0.0 && s.m0.is_finite()) {
            return bad(format!("m0 must be positive, got {}", s.m0));
        }
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", s.t_end));
        }
        if !(s.nodes_per_epsilon >= crate::nsac::MIN_NODES_PER_EPSILON) {
            return bad(format!(
                "nodes_per_epsilon must be at least {}, got {}",
                crate::nsac::MIN_NODES_PER_EPSILON,
                s.nodes_per_epsilon
            ));
        }
        if s.reports == 0 {
            return bad("reports must be at least 1".into());
        }
        if !(s.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", s.delta));
        }
        if s.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        let d = &self.domain;
        if !(d.lx > 0.0 && d.ly > 0.0) {
            return bad(format!("domain lengths must be positive, got {} x {}", d.lx, d.ly));
        }
        if Boundary::from_tag(&d.boundary).is_none() {
            return bad(format!("unknown boundary {:?}; expected periodic or dirichlet", d.boundary));
        }
        let g = &self.geometry;
        if matches!(g.kind, GeometryKind::ShrinkingCircle | GeometryKind::TranslatingCircle) && !(g.r0 > 0.0) {
            return bad(format!("r0 must be positive, got {}", g.r0));
        }
        if g.kind == GeometryKind::TranslatingCircle && self.boundary() != Boundary::Periodic {
            return bad("translating_circle needs a periodic domain".into());
        }
        if g.kind == GeometryKind::StaticLine && self.boundary() != Boundary::Periodic {
            return bad("static_line needs a periodic domain; walls with phi = -1 would add a second interface".into());
        }
        Ok(())
    }

    pub fn boundary(&self) -> Boundary {
        Boundary::from_tag(&self.domain.boundary).expect("validated")
    }

    pub fn mobility(&self, epsilon: f64) -> f64 {
        self.sweep.m0 * epsilon.powf(self.sweep.beta)
    }

    /// Grid with `h <= eps / nodes_per_epsilon`.
    pub fn grid(&self, epsilon: f64) -> Result<Grid> {
        let h = epsilon / self.sweep.nodes_per_epsilon;
        let d = &self.domain;
        let nx = (d.lx / h - 1e-9).ceil() as usize;
        let ny = (d.ly / h - 1e-9).ceil() as usize;
        Grid::new(nx.max(1), ny.max(1), [0.0, 0.0], d.lx, d.ly, self.boundary())
    }

    /// Sharp-interface geometry. A static line becomes a slab.
    pub fn sharp_kind(&self) -> SharpKind {
        let g = &self.geometry;
        let center = Vec2::new(g.center[0], g.center[1]);
        match g.kind {
            GeometryKind::ShrinkingCircle => SharpKind::ShrinkingCircle { center, r0: g.r0 },
            GeometryKind::TranslatingCircle => SharpKind::TranslatingCircle {
                center0: center,
                r0: g.r0,
                velocity: Vec2::new(g.velocity[0], g.velocity[1]),
            },
            GeometryKind::StaticLine => SharpKind::StaticBand {
                lower: g.offset,
                upper: self.domain.lx - g.offset,
                normal: Vec2::new(1.0, 0.0),
            },
        }
    }

    /// Report times `t_end k / reports`, `k = 0..=reports`.
    pub fn report_times(&self) -> Vec<f64> {
        let n = self.sweep.reports;
        (0..=n).map(|k| self.sweep.t_end * k as f64 / n as f64).collect()
    }

    /// Output directory after applying [`OUTPUT_ROOT_ENV`].
    pub fn output_dir(&self) -> PathBuf {
        resolve_output_dir(&self.sweep.output_dir, std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
    }
}

pub fn resolve_output_dir(dir: &Path, root: Option<PathBuf>) -> PathBuf {
    match root {
        Some(root) if dir.is_relative() => root.join(dir),
        _ => dir.to_path_buf(),
    }
}
