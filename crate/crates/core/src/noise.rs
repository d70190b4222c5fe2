//! Synthetic measurement noise and the smoothing applied before differentiating
//! noisy observations.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::linalg::{BandedLu, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator used for every noise realization.
pub const RNG_NAME: &str = "rand_chacha::ChaCha8Rng (seed_from_u64)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter { name: "noise.delta", reason: format!("must be >= 0, got {}", self.delta) });
        }
        Ok(())
    }
}

/// The realized perturbation `delta * ||g||_inf * xi`, `xi ~ U[-1/2, 1/2]` per node.
pub fn noise_field(g: &ScalarField, cfg: &NoiseConfig) -> ScalarField {
    let amplitude = cfg.delta * g.norm_linf();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let values = (0..g.grid().len())
        .map(|_| amplitude * rng.random_range(-0.5..=0.5))
        .collect();
    ScalarField::new(*g.grid(), values).expect("finite noise")
}

/// `g + delta * ||g||_inf * xi`. Deterministic for a given seed.
pub fn add_noise(g: &ScalarField, cfg: &NoiseConfig) -> ScalarField {
    if cfg.delta == 0.0 {
        return g.clone();
    }
    g.add(&noise_field(g, cfg))
}

/// Smoothing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub enabled: bool,
    /// Screening weight `lambda` when `auto_strength` is off.
    pub strength: f64,
    /// Derive `lambda` from the noise level of the data.
    pub auto_strength: bool,
    /// Calibration constant `c` of the automatic rule.
    pub auto_constant: f64,
    /// Exponent `p` of the automatic rule `lambda = c * (delta * ||g||_inf)^p`.
    pub auto_exponent: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            strength: 0.0,
            auto_strength: true,
            auto_constant: AUTO_CONSTANT,
            auto_exponent: AUTO_EXPONENT,
        }
    }
}

/// Calibrated on the smooth scenario; see the README.
pub const AUTO_CONSTANT: f64 = 1.0;
pub const AUTO_EXPONENT: f64 = 1.0;

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(Error::InvalidParameter { name: "denoise.strength", reason: format!("must be >= 0, got {}", self.strength) });
        }
        if !(self.auto_constant >= 0.0 && self.auto_exponent > 0.0) {
            return Err(Error::InvalidParameter {
                name: "denoise.auto_constant",
                reason: "auto rule needs c >= 0 and p > 0".into(),
            });
        }
        Ok(())
    }

    /// Screening weight for data of sup-norm `g_linf` carrying noise level `delta`.
    pub fn effective_strength(&self, delta: f64, g_linf: f64) -> f64 {
        if self.auto_strength {
            self.auto_constant * (delta * g_linf).powf(self.auto_exponent)
        } else {
            self.strength
        }
    }
}

/// A denoising strategy for nodal data.
pub trait Smoother {
    fn smooth(&self, g: &ScalarField) -> Result<ScalarField>;
}

/// Solves `(I - lambda L_N) g_s = g`, `L_N` the five-point Laplacian closed
/// with mirrored (homogeneous Neumann) ghost values on all four edges, then
/// copies the observed values back onto the Dirichlet edges `y = 0, 1`.
///
/// `I - lambda L_N` has unit row sums and a nonnegative inverse, so constants
/// are preserved and the output stays within the input's range.
///
/// With `pinned_edges` the rows `y = 0, 1` are held fixed during the solve
/// instead of being mirrored, which suits data whose edge values are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenedDiffusion {
    pub lambda: f64,
    pub pinned_edges: bool,
}

impl ScreenedDiffusion {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter { name: "lambda", reason: format!("must be >= 0, got {lambda}") });
        }
        Ok(Self { lambda, pinned_edges: false })
    }

    pub fn pinned(lambda: f64) -> Result<Self> {
        Ok(Self { pinned_edges: true, ..Self::new(lambda)? })
    }

    fn operator(&self, grid: &Grid2D) -> SparseMatrix {
        let (nx, ny) = (grid.nx(), grid.ny());
        let wx = self.lambda / (grid.hx() * grid.hx());
        let wy = self.lambda / (grid.hy() * grid.hy());
        let rows = grid
            .nodes()
            .map(|(i, j)| {
                let k = grid.index(i, j);
                if self.pinned_edges && (j == 0 || j + 1 == ny) {
                    return vec![(k, 1.0)];
                }
                let mut row = vec![(k, 1.0 + 2.0 * wx + 2.0 * wy)];
                // a missing neighbour is mirrored onto the opposite one
                match i {
                    0 => row.push((k + 1, -2.0 * wx)),
                    _ if i + 1 == nx => row.push((k - 1, -2.0 * wx)),
                    _ => row.extend([(k - 1, -wx), (k + 1, -wx)]),
                }
                match j {
                    0 => row.push((k + nx, -2.0 * wy)),
                    _ if j + 1 == ny => row.push((k - nx, -2.0 * wy)),
                    _ => row.extend([(k - nx, -wy), (k + nx, -wy)]),
                }
                row
            })
            .collect();
        SparseMatrix::from_rows(rows)
    }
}

impl Smoother for ScreenedDiffusion {
    fn smooth(&self, g: &ScalarField) -> Result<ScalarField> {
        if self.lambda == 0.0 {
            return Ok(g.clone());
        }
        let grid = *g.grid();
        let lu = BandedLu::factorize(&self.operator(&grid)).map_err(|p| {
            let (i, j) = grid.coords(p.column);
            Error::SingularMatrix { column: p.column, i, j }
        })?;
        let mut s = ScalarField::new(grid, lu.solve(g.values()))?;
        for i in 0..grid.nx() {
            s.set(i, 0, g.get(i, 0));
            s.set(i, grid.ny() - 1, g.get(i, grid.ny() - 1));
        }
        Ok(s)
    }
}

/// Screened-diffusion smoothing with a fixed weight `cfg.strength`.
/// Returns the input unchanged when smoothing is disabled.
pub fn denoise(g_noisy: &ScalarField, cfg: &DenoiseConfig) -> Result<ScalarField> {
    cfg.validate()?;
    if !cfg.enabled {
        return Ok(g_noisy.clone());
    }
    ScreenedDiffusion::new(cfg.strength)?.smooth(g_noisy)
}
