//! Forward-problem data: drift targets, source, initial and boundary data.

use crate::error::{Error, Result};
use crate::grid::{interpolate_bilinear, resample_nearest, BoundaryTag, Grid2D, ScalarField, TimeGrid};
use std::f64::consts::{E, PI};

/// Axis-aligned box where the drift takes a different constant value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDrift {
    pub cx: f64,
    pub cy: f64,
    pub wx: f64,
    pub wy: f64,
    pub inside: f64,
    pub outside: f64,
}

impl BoxDrift {
    /// 1.4 on the square `|x - 0.6| <= 0.18, |y - 0.4| <= 0.18`, 1 elsewhere.
    pub fn reference() -> Self {
        Self { cx: 0.6, cy: 0.4, wx: 0.18, wy: 0.18, inside: 1.4, outside: 1.0 }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        // closed box; the slack absorbs rounding of node coordinates
        const SLACK: f64 = 1e-12;
        (x - self.cx).abs() <= self.wx + SLACK && (y - self.cy).abs() <= self.wy + SLACK
    }
}

/// Target drift coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    /// `1 + sin(pi x) sin(pi y)`
    Smooth,
    PiecewiseConstant(BoxDrift),
    /// `background + increment * mask`, mask values in {0, 1}.
    Mask {
        background: f64,
        increment: f64,
        mask: ScalarField,
    },
    /// Arbitrary nodal values. With `resample` set, other grids are served by
    /// bilinear interpolation; otherwise a grid mismatch is an error.
    Tabulated { field: ScalarField, resample: bool },
}

impl DriftSpec {
    pub fn mask(background: f64, increment: f64, mask: ScalarField) -> Result<Self> {
        if let Some(k) = mask.values().iter().position(|&v| v != 0.0 && v != 1.0) {
            let (i, j) = mask.grid().coords(k);
            return Err(Error::InvalidParameter {
                name: "mask",
                reason: format!("value {} at node ({i}, {j}) is not 0 or 1", mask.values()[k]),
            });
        }
        if !(background.is_finite() && increment.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mask",
                reason: "background and increment must be finite".into(),
            });
        }
        Ok(DriftSpec::Mask { background, increment, mask })
    }

    /// `1 + 0.4 * chi_D` with `D` the bundled character-shaped region.
    pub fn character() -> Self {
        let grid = Grid2D::square(CHARACTER_MASK_RESOLUTION).expect("valid grid");
        DriftSpec::Mask { background: 1.0, increment: 0.4, mask: character_mask(&grid) }
    }
}

/// Nodewise evaluation of a drift target.
pub fn evaluate_drift(spec: &DriftSpec, grid: &Grid2D) -> Result<ScalarField> {
    let field = match spec {
        DriftSpec::Smooth => ScalarField::from_fn(*grid, |x, y| 1.0 + (PI * x).sin() * (PI * y).sin()),
        DriftSpec::PiecewiseConstant(b) => {
            ScalarField::from_fn(*grid, |x, y| if b.contains(x, y) { b.inside } else { b.outside })
        }
        DriftSpec::Mask { background, increment, mask } => {
            let m = if mask.grid() == grid { mask.clone() } else { resample_nearest(mask, grid) };
            m.map(|v| background + increment * v)
        }
        DriftSpec::Tabulated { field, resample } => {
            if field.grid() == grid {
                field.clone()
            } else if *resample {
                interpolate_bilinear(field, grid)
            } else {
                return Err(Error::GridMismatch(format!(
                    "tabulated drift is {}x{}, requested {}x{}",
                    field.grid().nx(),
                    field.grid().ny(),
                    grid.nx(),
                    grid.ny()
                )));
            }
        }
    };
    field.check_finite("drift")?;
    Ok(field)
}

/// Resolution of the built-in character mask.
pub const CHARACTER_MASK_RESOLUTION: usize = 120;

/// Blocky glyph: a rectangular frame crossed by a vertical bar that sticks out
/// above and below it.
pub fn character_mask(grid: &Grid2D) -> ScalarField {
    let rects: [(f64, f64, f64, f64); 5] = [
        // (x0, x1, y0, y1)
        (0.20, 0.80, 0.34, 0.42),
        (0.20, 0.80, 0.62, 0.70),
        (0.20, 0.28, 0.34, 0.70),
        (0.72, 0.80, 0.34, 0.70),
        (0.46, 0.54, 0.12, 0.88),
    ];
    ScalarField::from_fn(*grid, |x, y| {
        let inside = rects.iter().any(|&(x0, x1, y0, y1)| x >= x0 && x <= x1 && y >= y0 && y <= y1);
        if inside {
            1.0
        } else {
            0.0
        }
    })
}

/// Boundary data of the family `a(t) = exp(beta t)`:
/// Dirichlet `scale * a(t) * e^x + offset` on `y = 0` and `y = 1`,
/// outward-normal Neumann `scale * a(t) * e` on `x = 1` and `-scale * a(t)` on `x = 0`.
///
/// `scale = 1, offset = 0` is the reference family; `scale = 0` gives constant
/// Dirichlet data with homogeneous Neumann data. The family is closed under
/// addition for a common `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub beta: f64,
    pub scale: f64,
    pub offset: f64,
}

impl BoundarySpec {
    pub fn exponential(beta: f64) -> Self {
        Self { beta, scale: 1.0, offset: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { beta: 0.0, scale: 0.0, offset: c }
    }

    pub fn growth(&self, t: f64) -> f64 {
        (self.beta * t).exp()
    }

    /// Dirichlet datum on `y = 0` (b1) and `y = 1` (b3).
    pub fn dirichlet(&self, x: f64, t: f64) -> f64 {
        self.scale * self.growth(t) * x.exp() + self.offset
    }

    /// Outward normal derivative on `x = 1` (b2).
    pub fn neumann_right(&self, t: f64) -> f64 {
        self.scale * self.growth(t) * E
    }

    /// Outward normal derivative on `x = 0` (b4).
    pub fn neumann_left(&self, t: f64) -> f64 {
        -self.scale * self.growth(t)
    }

    /// The x-derivative prescribed at a Neumann node. The outward normal at
    /// `x = 0` is `-x`, hence the sign flip there.
    pub fn dx_datum(&self, tag: BoundaryTag, t: f64) -> f64 {
        match tag {
            BoundaryTag::NeumannLeft => -self.neumann_left(t),
            BoundaryTag::NeumannRight => self.neumann_right(t),
            _ => panic!("no Neumann datum on {tag:?} nodes"),
        }
    }

    /// Data of the sum of two solutions.
    pub fn combine(&self, other: &BoundarySpec) -> Result<BoundarySpec> {
        let beta = if self.scale == 0.0 {
            other.beta
        } else if other.scale == 0.0 || self.beta == other.beta {
            self.beta
        } else {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "cannot add boundary data with different growth rates".into(),
            });
        };
        Ok(BoundarySpec { beta, scale: self.scale + other.scale, offset: self.offset + other.offset })
    }
}

/// Right-hand side `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `amplitude * sin(pi x) sin(pi y)`
    Sine { amplitude: f64 },
    Constant(f64),
    Field(ScalarField),
    /// `(beta - 1 + q + C_p) exp(beta t + x)`, the source for which
    /// `u = exp(beta t + x)` solves the equation with drift `q`.
    Manufactured { beta: f64 },
}

impl Source {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Source::Manufactured { .. })
    }

    /// Evaluate at time `t` for drift `q`.
    pub fn evaluate(&self, grid: &Grid2D, q: &ScalarField, cp: f64, t: f64) -> Result<ScalarField> {
        let f = match self {
            Source::Sine { amplitude } => ScalarField::from_fn(*grid, |x, y| amplitude * (PI * x).sin() * (PI * y).sin()),
            Source::Constant(c) => ScalarField::constant(*grid, *c),
            Source::Field(field) => {
                if field.grid() != grid {
                    return Err(Error::GridMismatch("source field is on a different grid".into()));
                }
                field.clone()
            }
            Source::Manufactured { beta } => {
                if q.grid() != grid {
                    return Err(Error::GridMismatch("drift is on a different grid".into()));
                }
                ScalarField::from_index_fn(*grid, |i, j| {
                    (beta - 1.0 + q.get(i, j) + cp) * (beta * t + grid.x(i)).exp()
                })
            }
        };
        f.check_finite("source")?;
        Ok(f)
    }
}

/// Complete forward-problem definition on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub grid: Grid2D,
    pub time: TimeGrid,
    pub drift: DriftSpec,
    pub cp: f64,
    pub source: Source,
    pub u0: ScalarField,
    pub boundary: BoundarySpec,
}

/// Default reaction constant.
pub const REFERENCE_CP: f64 = 5.0;
/// Default source amplitude.
pub const REFERENCE_SOURCE_AMPLITUDE: f64 = 5.0;

impl ProblemSpec {
    /// The reference setup: `C_p = 5`, `f = 5 sin(pi x) sin(pi y)`,
    /// `a(t) = exp(beta t)` boundary data and `u0 = e^x` corrected at the boundary.
    pub fn reference(grid: Grid2D, time: TimeGrid, drift: DriftSpec, beta: f64) -> Self {
        let boundary = BoundarySpec::exponential(beta);
        let u0 = correct_initial_data(&ScalarField::from_fn(grid, |x, _| x.exp()), &boundary);
        Self {
            grid,
            time,
            drift,
            cp: REFERENCE_CP,
            source: Source::Sine { amplitude: REFERENCE_SOURCE_AMPLITUDE },
            u0,
            boundary,
        }
    }

    /// Same data on another grid (initial data resampled analytically where
    /// possible, bilinearly otherwise).
    pub fn on_grid(&self, grid: Grid2D) -> Self {
        let mut spec = self.clone();
        spec.grid = grid;
        spec.u0 = correct_initial_data(&interpolate_bilinear(&self.u0, &grid), &self.boundary);
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cp > 0.0 && self.cp.is_finite()) {
            return Err(Error::InvalidParameter { name: "cp", reason: format!("must be positive, got {}", self.cp) });
        }
        if self.u0.grid() != &self.grid {
            return Err(Error::GridMismatch("initial data is on a different grid".into()));
        }
        if !(self.boundary.beta.is_finite() && self.boundary.scale.is_finite() && self.boundary.offset.is_finite()) {
            return Err(Error::InvalidParameter { name: "beta", reason: "boundary data must be finite".into() });
        }
        self.u0.check_finite("initial data")
    }

    /// The target drift on this problem's grid.
    pub fn drift_field(&self) -> Result<ScalarField> {
        evaluate_drift(&self.drift, &self.grid)
    }
}

/// Make `u0` discretely compatible with the boundary data at `t = 0`.
///
/// Dirichlet rows take `b(x, 0)`; on the Neumann columns the boundary value is
/// solved from the one-sided three-node stencil so that it reproduces the
/// prescribed x-derivative exactly.
pub fn correct_initial_data(u0: &ScalarField, boundary: &BoundarySpec) -> ScalarField {
    let grid = *u0.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let two_h = 2.0 * grid.hx();
    let mut u = u0.clone();
    for j in 1..ny - 1 {
        let d = boundary.dx_datum(BoundaryTag::NeumannLeft, 0.0);
        // (-3 u0 + 4 u1 - u2) / 2h = d
        let v = (4.0 * u.get(1, j) - u.get(2, j) - two_h * d) / 3.0;
        u.set(0, j, v);
        let d = boundary.dx_datum(BoundaryTag::NeumannRight, 0.0);
        // (3 u_n - 4 u_{n-1} + u_{n-2}) / 2h = d
        let v = (two_h * d + 4.0 * u.get(nx - 2, j) - u.get(nx - 3, j)) / 3.0;
        u.set(nx - 1, j, v);
    }
    for i in 0..nx {
        let b = boundary.dirichlet(grid.x(i), 0.0);
        u.set(i, 0, b);
        u.set(i, ny - 1, b);
    }
    u
}
