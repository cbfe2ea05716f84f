//! TOML run configuration with human units (meters, degrees, reflectors per km²).
//!
//! ```toml
//! format_version = 1
//!
//! [link]
//! d_m = 350.0
//!
//! [model]
//! lambda_per_km2 = 60.0
//! widths_m = { min = 10.0, max = 40.0, n = 4 }
//! orientations_deg = { min = 10.0, max = 80.0, n = 8 }
//!
//! [grid]
//! points = 2000
//!
//! [simulation]
//! mode = "independent-blocking"
//! realizations = 100000
//! seed = 1
//! ```
//!
//! Every section except `[link]` and `[model]` is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::FitMethod;
use crate::blocking::{BooleanModelParams, DiscreteUniform};
use crate::error::{Error, Result};
use crate::geometry::TestLink;
use crate::montecarlo::{Mode, SimulationConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub d_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub lambda_per_km2: f64,
    pub widths_m: UniformSpec,
    pub orientations_deg: UniformSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_points")]
    pub points: usize,
    /// Upper end of the TOA grid; defaults to a high quantile of the TOA law.
    pub upper_m: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            points: default_points(),
            upper_m: None,
        }
    }
}

fn default_points() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    pub max_attempts: Option<u64>,
    pub s_window_m: Option<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            mode: default_mode(),
            realizations: default_realizations(),
            seed: 0,
            max_attempts: None,
            s_window_m: None,
        }
    }
}

fn default_mode() -> Mode {
    Mode::IndependentBlocking
}

fn default_realizations() -> usize {
    100_000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default)]
    pub method: FitMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AoaSection {
    /// Number of evenly spaced angles in `[0, 2π)` for the density CSV.
    #[serde(default = "default_angles")]
    pub points: usize,
    /// Histogram bin width for the simulated AOA, in degrees.
    #[serde(default = "default_bin")]
    pub bin_width_deg: f64,
}

impl Default for AoaSection {
    fn default() -> Self {
        AoaSection {
            points: default_angles(),
            bin_width_deg: default_bin(),
        }
    }
}

fn default_angles() -> usize {
    3600
}

fn default_bin() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub link: LinkSection,
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub aoa: AoaSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field against the invariants of the types it builds.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("expected {FORMAT_VERSION}, got {}", self.format_version),
            ));
        }
        self.link()?;
        let lam = self.model.lambda_per_km2;
        if !(lam.is_finite() && lam > 0.0) {
            return Err(Error::config(
                "model.lambda_per_km2",
                format!("must be finite and > 0, got {lam}"),
            ));
        }
        self.widths()?;
        self.orientations()?;
        if self.grid.points < 4 {
            return Err(Error::config("grid.points", "need at least 4 points"));
        }
        if let Some(u) = self.grid.upper_m {
            if !(u.is_finite() && u > self.link.d_m) {
                return Err(Error::config(
                    "grid.upper_m",
                    format!("must be finite and > d_m, got {u}"),
                ));
            }
        }
        if self.simulation.realizations == 0 {
            return Err(Error::config("simulation.realizations", "must be at least 1"));
        }
        if self.simulation.max_attempts == Some(0) {
            return Err(Error::config("simulation.max_attempts", "must be at least 1"));
        }
        if let Some(w) = self.simulation.s_window_m {
            if !(w.is_finite() && w > self.link.d_m) {
                return Err(Error::config(
                    "simulation.s_window_m",
                    format!("must be finite and > d_m, got {w}"),
                ));
            }
        }
        if self.aoa.points < 1 {
            return Err(Error::config("aoa.points", "need at least 1 point"));
        }
        let bw = self.aoa.bin_width_deg;
        if !(bw > 0.0 && bw <= 360.0) {
            return Err(Error::config(
                "aoa.bin_width_deg",
                format!("must lie in (0, 360], got {bw}"),
            ));
        }
        Ok(())
    }

    pub fn link(&self) -> Result<TestLink> {
        TestLink::new(self.link.d_m).map_err(|e| Error::config("link.d_m", strip(e)))
    }

    fn widths(&self) -> Result<DiscreteUniform> {
        let w = self.model.widths_m;
        let u = DiscreteUniform::new(w.min, w.max, w.n).map_err(|e| Error::config("model.widths_m", strip(e)))?;
        if w.min <= 0.0 {
            return Err(Error::config(
                "model.widths_m.min",
                format!("must be > 0, got {}", w.min),
            ));
        }
        Ok(u)
    }

    fn orientations(&self) -> Result<DiscreteUniform> {
        let t = self.model.orientations_deg;
        if !(t.min > 0.0 && t.min < 90.0) {
            return Err(Error::config(
                "model.orientations_deg.min",
                format!("must lie in the open interval (0, 90), got {}", t.min),
            ));
        }
        if !(t.max > 0.0 && t.max < 90.0) {
            return Err(Error::config(
                "model.orientations_deg.max",
                format!("must lie in the open interval (0, 90), got {}", t.max),
            ));
        }
        DiscreteUniform::new(t.min.to_radians(), t.max.to_radians(), t.n)
            .map_err(|e| Error::config("model.orientations_deg", strip(e)))
    }

    pub fn model(&self) -> Result<BooleanModelParams> {
        BooleanModelParams::per_km2(self.model.lambda_per_km2, self.widths()?, self.orientations()?)
            .map_err(|e| Error::config("model", strip(e)))
    }

    /// Builds the simulation config; the window check can fail with a field error.
    pub fn simulation(&self) -> Result<SimulationConfig> {
        let s = &self.simulation;
        let mut cfg = SimulationConfig::new(self.model()?, self.link()?, s.mode, s.realizations, s.seed)?;
        if let Some(w) = s.s_window_m {
            cfg = cfg.with_s_window(w).map_err(section("simulation"))?;
        }
        if let Some(n) = s.max_attempts {
            cfg = cfg.with_max_attempts(n).map_err(section("simulation"))?;
        }
        Ok(cfg)
    }
}

fn section(name: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config { field, message } => Error::Config {
            field: format!("{name}.{field}"),
            message,
        },
        other => other,
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Domain(m) => m,
        other => other.to_string(),
    }
}
