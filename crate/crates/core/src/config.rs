//! JSON scenario configuration.
//!
//! Every key is optional; defaults reproduce the reference setup (60x60
//! inversion grid, 100x100 data grid, `T = 1`, 100 steps, `C_p = 5`,
//! `beta = 1`, smooth drift, no noise, 10 iterations, `tol = 1e-13`).
//!
//! ```json
//! {
//!   "grid": {"nx": 60, "ny": 60},
//!   "fine_grid": {"nx": 100, "ny": 100},
//!   "time": {"T": 1.0, "nt": 100},
//!   "cp": 5.0,
//!   "beta": 1.0,
//!   "drift": {"variant": "piecewise_constant", "params": {"cx": 0.6, "cy": 0.4, "wx": 0.18, "wy": 0.18, "inside": 1.4, "outside": 1.0}},
//!   "noise": {"delta": 0.02, "seed": 42},
//!   "denoise": {"enabled": true, "auto_strength": true},
//!   "iteration": {"max_iters": 10, "tol": 1e-13}
//! }
//! ```
//!
//! Relative file paths (`mask_path`, `path`) are resolved against the
//! directory of the configuration file.

use crate::error::{Error, Result};
use crate::field_io::{load_csv, load_matrix};
use crate::grid::{Grid2D, TimeGrid};
use crate::inverse::InverseConfig;
use crate::noise::{DenoiseConfig, NoiseConfig};
use crate::scenario::{BoxDrift, DriftSpec, ProblemSpec, Source, REFERENCE_CP, REFERENCE_SOURCE_AMPLITUDE};
use crate::validation::{MmsProblem, Resolution};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

impl GridConfig {
    pub fn square(n: usize) -> Self {
        Self { nx: n, ny: n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub nt: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_final: 1.0, nt: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxParams {
    pub cx: f64,
    pub cy: f64,
    pub wx: f64,
    pub wy: f64,
    pub inside: f64,
    pub outside: f64,
}

impl Default for BoxParams {
    fn default() -> Self {
        let b = BoxDrift::reference();
        Self { cx: b.cx, cy: b.cy, wx: b.wx, wy: b.wy, inside: b.inside, outside: b.outside }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskParams {
    pub background: f64,
    pub increment: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self { background: 1.0, increment: 0.4 }
    }
}

/// Drift target selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    #[default]
    Smooth,
    PiecewiseConstant {
        #[serde(default)]
        params: BoxParams,
    },
    /// Binary mask from a file; without `mask_path` the built-in glyph is used.
    Mask {
        #[serde(default)]
        params: MaskParams,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mask_path: Option<PathBuf>,
    },
    /// Nodal values from a field CSV.
    Tabulated {
        path: PathBuf,
        #[serde(default)]
        resample: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialStudyConfig {
    /// Values of `1/h`.
    pub h_inv: [usize; 3],
    pub tau: f64,
}

impl Default for SpatialStudyConfig {
    fn default() -> Self {
        Self { h_inv: [20, 40, 80], tau: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalStudyConfig {
    /// Values of `T/tau`.
    pub tau_inv: [usize; 3],
    pub h_inv: usize,
}

impl Default for TemporalStudyConfig {
    fn default() -> Self {
        Self { tau_inv: [25, 50, 100], h_inv: 160 }
    }
}

/// Manufactured-solution study settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsConfig {
    /// Explicit list overriding the spatial study.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spatial_resolutions: Option<Vec<Resolution>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temporal_resolutions: Option<Vec<Resolution>>,
    pub spatial: SpatialStudyConfig,
    pub temporal: TemporalStudyConfig,
}

/// Full scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub fine_grid: GridConfig,
    pub time: TimeConfig,
    pub cp: f64,
    pub beta: f64,
    pub source_amplitude: f64,
    pub drift: DriftConfig,
    pub noise: NoiseConfig,
    pub denoise: DenoiseConfig,
    pub iteration: InverseConfig,
    pub mms: MmsConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::square(60),
            fine_grid: GridConfig::square(100),
            time: TimeConfig::default(),
            cp: REFERENCE_CP,
            beta: 1.0,
            source_amplitude: REFERENCE_SOURCE_AMPLITUDE,
            drift: DriftConfig::Smooth,
            noise: NoiseConfig { delta: 0.0, seed: 0 },
            denoise: DenoiseConfig::default(),
            iteration: InverseConfig::default(),
            mms: MmsConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { delta: 0.0, seed: 0 }
    }
}

fn config_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), reason: reason.into() }
}

impl ScenarioConfig {
    /// Parse and validate; errors name the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path.is_empty() { "<root>" } else { &path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for (key, g) in [("grid", self.grid), ("fine_grid", self.fine_grid)] {
            if g.nx < 3 {
                return Err(config_err(&format!("{key}.nx"), format!("need at least 3 nodes, got {}", g.nx)));
            }
            if g.ny < 3 {
                return Err(config_err(&format!("{key}.ny"), format!("need at least 3 nodes, got {}", g.ny)));
            }
        }
        if self.fine_grid.nx < self.grid.nx || self.fine_grid.ny < self.grid.ny {
            return Err(config_err("fine_grid", "data grid must be at least as fine as the inversion grid"));
        }
        if !(self.time.t_final > 0.0 && self.time.t_final.is_finite()) {
            return Err(config_err("time.T", format!("must be positive, got {}", self.time.t_final)));
        }
        if self.time.nt == 0 {
            return Err(config_err("time.nt", "need at least one step"));
        }
        if !(self.cp > 0.0 && self.cp.is_finite()) {
            return Err(config_err("cp", format!("must be positive, got {}", self.cp)));
        }
        if !self.beta.is_finite() {
            return Err(config_err("beta", "must be finite"));
        }
        if !self.source_amplitude.is_finite() {
            return Err(config_err("source_amplitude", "must be finite"));
        }
        if !(self.noise.delta >= 0.0 && self.noise.delta.is_finite()) {
            return Err(config_err("noise.delta", format!("must be >= 0, got {}", self.noise.delta)));
        }
        if !(self.denoise.strength >= 0.0 && self.denoise.strength.is_finite()) {
            return Err(config_err("denoise.strength", format!("must be >= 0, got {}", self.denoise.strength)));
        }
        if !(self.iteration.tol > 0.0) {
            return Err(config_err("iteration.tol", format!("must be positive, got {}", self.iteration.tol)));
        }
        if !(self.iteration.dx_floor_rel > 0.0 && self.iteration.dx_floor_rel < 1.0) {
            return Err(config_err("iteration.dx_floor_rel", "must lie in (0, 1)"));
        }
        if let DriftConfig::PiecewiseConstant { params } = &self.drift {
            if !(params.wx >= 0.0 && params.wy >= 0.0) {
                return Err(config_err("drift.params", "half-widths must be nonnegative"));
            }
        }
        if self.mms.spatial.tau <= 0.0 {
            return Err(config_err("mms.spatial.tau", "must be positive"));
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Copy with file references made absolute, so the echo can be reloaded
    /// from anywhere.
    pub fn with_absolute_paths(&self) -> Self {
        let mut cfg = self.clone();
        match &mut cfg.drift {
            DriftConfig::Mask { mask_path: Some(p), .. } | DriftConfig::Tabulated { path: p, .. } => {
                let abs = self.resolve(p);
                *p = std::path::absolute(&abs).unwrap_or(abs);
            }
            _ => {}
        }
        cfg
    }

    pub fn drift_spec(&self) -> Result<DriftSpec> {
        match &self.drift {
            DriftConfig::Smooth => Ok(DriftSpec::Smooth),
            DriftConfig::PiecewiseConstant { params: p } => Ok(DriftSpec::PiecewiseConstant(BoxDrift {
                cx: p.cx,
                cy: p.cy,
                wx: p.wx,
                wy: p.wy,
                inside: p.inside,
                outside: p.outside,
            })),
            DriftConfig::Mask { params, mask_path } => match mask_path {
                Some(path) => {
                    let mask = load_matrix(self.resolve(path)).map_err(|e| config_err("drift.mask_path", e.to_string()))?;
                    DriftSpec::mask(params.background, params.increment, mask).map_err(|e| config_err("drift.mask_path", e.to_string()))
                }
                None => match DriftSpec::character() {
                    DriftSpec::Mask { mask, .. } => DriftSpec::mask(params.background, params.increment, mask),
                    _ => unreachable!(),
                },
            },
            DriftConfig::Tabulated { path, resample } => {
                let field = load_csv(self.resolve(path)).map_err(|e| config_err("drift.path", e.to_string()))?;
                Ok(DriftSpec::Tabulated { field, resample: *resample })
            }
        }
    }

    pub fn inversion_grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.grid.nx, self.grid.ny)
    }

    pub fn data_grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.fine_grid.nx, self.fine_grid.ny)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.time.t_final, self.time.nt)
    }

    /// Forward problem on `grid` with this configuration's data.
    pub fn problem(&self, grid: Grid2D) -> Result<ProblemSpec> {
        let mut spec = ProblemSpec::reference(grid, self.time_grid()?, self.drift_spec()?, self.beta);
        spec.cp = self.cp;
        spec.source = Source::Sine { amplitude: self.source_amplitude };
        Ok(spec)
    }

    pub fn mms_problem(&self) -> MmsProblem {
        MmsProblem { beta: self.beta, cp: self.cp, t_final: self.time.t_final }
    }

    pub fn spatial_resolutions(&self) -> Vec<Resolution> {
        self.mms.spatial_resolutions.clone().unwrap_or_else(|| {
            let nt = (self.time.t_final / self.mms.spatial.tau).round().max(1.0) as usize;
            self.mms.spatial.h_inv.iter().map(|&m| Resolution { n: m + 1, nt }).collect()
        })
    }

    pub fn temporal_resolutions(&self) -> Vec<Resolution> {
        self.mms.temporal_resolutions.clone().unwrap_or_else(|| {
            self.mms.temporal.tau_inv.iter().map(|&nt| Resolution { n: self.mms.temporal.h_inv + 1, nt }).collect()
        })
    }
}
