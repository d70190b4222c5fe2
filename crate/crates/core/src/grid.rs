//! Uniform vertex-centred grids on the unit square, nodal scalar fields and the
//! finite-difference operators acting on them.
//!
//! Nodes are stored row-major with the x index fastest: node `(i, j)` lives at
//! `j * nx + i` and sits at `(i * hx, j * hy)`.

use crate::error::{Error, Result};
use crate::parallel::Execution;
use serde::{Deserialize, Serialize};

/// Uniform grid on `[0, 1]^2`, boundary nodes included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per direction, got {nx}x{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    /// Square grid with `n` nodes per side.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        1.0 / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / (self.ny - 1) as f64
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    /// x coordinate of column `i`. The last column is pinned to exactly 1.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            1.0
        } else {
            i as f64 * self.hx()
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            1.0
        } else {
            j as f64 * self.hy()
        }
    }

    /// Boundary classification of node `(i, j)`. Corners belong to the
    /// Dirichlet edges.
    pub fn tag(&self, i: usize, j: usize) -> BoundaryTag {
        if j == 0 {
            BoundaryTag::DirichletBottom
        } else if j + 1 == self.ny {
            BoundaryTag::DirichletTop
        } else if i == 0 {
            BoundaryTag::NeumannLeft
        } else if i + 1 == self.nx {
            BoundaryTag::NeumannRight
        } else {
            BoundaryTag::Interior
        }
    }

    /// Iterate over `(i, j)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }

    /// Weight of one node in the discrete L2 inner product.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }
}

/// Per-node boundary role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Interior,
    /// `y = 0`
    DirichletBottom,
    /// `y = 1`
    DirichletTop,
    /// `x = 1`
    NeumannRight,
    /// `x = 0`
    NeumannLeft,
}

impl BoundaryTag {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundaryTag::DirichletBottom | BoundaryTag::DirichletTop)
    }

    pub fn is_neumann(self) -> bool {
        matches!(self, BoundaryTag::NeumannLeft | BoundaryTag::NeumannRight)
    }
}

/// Uniform partition of `[0, T]` into `nt` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    nt: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, nt: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("final time must be positive and finite, got {t_final}"),
            });
        }
        if nt == 0 {
            return Err(Error::InvalidParameter {
                name: "nt",
                reason: "need at least one time step".into(),
            });
        }
        Ok(Self { t_final, nt })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    /// `t^n`; the last level is exactly `T`.
    pub fn time(&self, n: usize) -> f64 {
        if n == self.nt {
            self.t_final
        } else {
            n as f64 * self.tau()
        }
    }
}

/// Nodal values of a function on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wrap `values`; rejects wrong lengths and non-finite entries.
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        let field = Self { grid, values };
        field.check_finite("field")?;
        Ok(field)
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.nodes().map(|(i, j)| f(grid.x(i), grid.y(j))).collect();
        Self { grid, values }
    }

    /// Build from a per-node closure over indices.
    pub fn from_index_fn(grid: Grid2D, f: impl Fn(usize, usize) -> f64) -> Self {
        let values = grid.nodes().map(|(i, j)| f(i, j)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => {
                let (i, j) = self.grid.coords(k);
                Err(Error::NonFinite { what, i, j })
            }
        }
    }

    pub fn ensure_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.grid.nx, self.grid.ny, other.grid.nx, other.grid.ny
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combine two fields nodewise. Panics if the grids differ.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert_eq!(self.grid, other.grid, "zip_map on different grids");
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| s * v)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Discrete L2 norm `sqrt(hx * hy * sum v^2)`.
    pub fn norm_l2(&self) -> f64 {
        norm_l2(self)
    }

    pub fn norm_linf(&self) -> f64 {
        norm_linf(self)
    }
}

/// Grid-weighted discrete L2 norm.
pub fn norm_l2(field: &ScalarField) -> f64 {
    let sum: f64 = field.values.iter().map(|v| v * v).sum();
    (field.grid.cell_area() * sum).sqrt()
}

/// Maximum absolute nodal value.
pub fn norm_linf(field: &ScalarField) -> f64 {
    field.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
}

/// Second difference along one direction at position `p` of a line of `n`
/// samples, one-sided three-node form at the ends. `at(k)` reads sample `k`.
#[inline]
fn second_difference(at: impl Fn(usize) -> f64, p: usize, n: usize) -> f64 {
    let (a, b, c) = if p == 0 {
        (0, 1, 2)
    } else if p + 1 == n {
        (n - 3, n - 2, n - 1)
    } else {
        (p - 1, p, p + 1)
    };
    let mid = at(b);
    (at(a) - mid) + (at(c) - mid)
}

/// First difference times `2h`: centred inside, three-node one-sided at the ends.
#[inline]
fn first_difference(at: impl Fn(usize) -> f64, p: usize, n: usize) -> f64 {
    if p == 0 {
        let f0 = at(0);
        4.0 * (at(1) - f0) - (at(2) - f0)
    } else if p + 1 == n {
        let f0 = at(n - 1);
        -(4.0 * (at(n - 2) - f0) - (at(n - 3) - f0))
    } else {
        at(p + 1) - at(p - 1)
    }
}

/// Five-point Laplacian; boundary nodes use one-sided three-node second
/// differences in the direction where a neighbour is missing.
pub fn apply_laplacian(field: &ScalarField) -> ScalarField {
    apply_laplacian_with(field, Execution::default())
}

pub fn apply_laplacian_with(field: &ScalarField, exec: Execution) -> ScalarField {
    let grid = field.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let (ihx2, ihy2) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let v = &field.values;
    let mut out = vec![0.0; grid.len()];
    exec.for_each_chunk(&mut out, nx, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            let dxx = second_difference(|k| v[j * nx + k], i, nx);
            let dyy = second_difference(|k| v[k * nx + i], j, ny);
            *o = dxx * ihx2 + dyy * ihy2;
        }
    });
    ScalarField { grid, values: out }
}

/// Second-order first derivative in x: centred inside, one-sided at `x = 0, 1`.
pub fn apply_dx(field: &ScalarField) -> ScalarField {
    apply_dx_with(field, Execution::default())
}

pub fn apply_dx_with(field: &ScalarField, exec: Execution) -> ScalarField {
    let grid = field.grid;
    let nx = grid.nx;
    let inv = 1.0 / (2.0 * grid.hx());
    let v = &field.values;
    let mut out = vec![0.0; grid.len()];
    exec.for_each_chunk(&mut out, nx, |j, row| {
        let line = &v[j * nx..(j + 1) * nx];
        for (i, o) in row.iter_mut().enumerate() {
            *o = first_difference(|k| line[k], i, nx) * inv;
        }
    });
    ScalarField { grid, values: out }
}

/// Transfer `fine` onto the nodes of `coarse_grid` by tensor-product cubic
/// Lagrange interpolation.
///
/// Bilinear interpolation would leave an `O(h_fine^2)` error that varies from
/// node to node on the coarse grid; the five-point Laplacian turns that into an
/// `O(h_fine^2 / h_coarse^2)` error in `Δg`. The cubic error is `O(h_fine^4)`.
/// Directions with fewer than four fine nodes fall back to linear weights.
pub fn restrict(fine: &ScalarField, coarse_grid: &Grid2D) -> Result<ScalarField> {
    let fg = fine.grid;
    if coarse_grid.nx > fg.nx || coarse_grid.ny > fg.ny {
        return Err(Error::GridMismatch(format!(
            "cannot restrict {}x{} onto finer grid {}x{}",
            fg.nx, fg.ny, coarse_grid.nx, coarse_grid.ny
        )));
    }
    let wx: Vec<Stencil> = (0..coarse_grid.nx).map(|i| cubic_stencil(coarse_grid.x(i), fg.nx)).collect();
    let wy: Vec<Stencil> = (0..coarse_grid.ny).map(|j| cubic_stencil(coarse_grid.y(j), fg.ny)).collect();
    Ok(ScalarField::from_index_fn(*coarse_grid, |i, j| {
        let (sx, sy) = (&wx[i], &wy[j]);
        let mut acc = 0.0;
        for (b, wb) in sy.weights[..sy.len].iter().enumerate() {
            let row: f64 = sx.weights[..sx.len]
                .iter()
                .enumerate()
                .map(|(a, wa)| wa * fine.get(sx.start + a, sy.start + b))
                .sum();
            acc += wb * row;
        }
        acc
    }))
}

struct Stencil {
    start: usize,
    len: usize,
    weights: [f64; 4],
}

/// Interpolation weights at coordinate `t` on `n` uniform nodes: four
/// consecutive nodes around `t`, shifted inward at the ends.
fn cubic_stencil(t: f64, n: usize) -> Stencil {
    let (k, s) = locate(t, n);
    if n < 4 {
        return Stencil { start: k, len: 2, weights: [1.0 - s, s, 0.0, 0.0] };
    }
    let start = k.saturating_sub(1).min(n - 4);
    // position of t relative to node `start`
    let p = (k - start) as f64 + s;
    let mut weights = [1.0; 4];
    for (a, w) in weights.iter_mut().enumerate() {
        for b in 0..4 {
            if a != b {
                *w *= (p - b as f64) / (a as f64 - b as f64);
            }
        }
    }
    Stencil { start, len: 4, weights }
}

/// Locate coordinate `t` in a uniform partition of `[0, 1]` with `n` nodes.
/// Returns the left node and the fractional offset in `[0, 1]`.
#[inline]
fn locate(t: f64, n: usize) -> (usize, f64) {
    let p = t * (n - 1) as f64;
    let k = (p.floor().max(0.0) as usize).min(n - 2);
    (k, (p - k as f64).clamp(0.0, 1.0))
}

/// Bilinear interpolation onto an arbitrary target grid.
pub fn interpolate_bilinear(src: &ScalarField, target: &Grid2D) -> ScalarField {
    let g = src.grid;
    ScalarField::from_index_fn(*target, |i, j| {
        let (i0, s) = locate(target.x(i), g.nx);
        let (j0, t) = locate(target.y(j), g.ny);
        let f00 = src.get(i0, j0);
        let f10 = src.get(i0 + 1, j0);
        let f01 = src.get(i0, j0 + 1);
        let f11 = src.get(i0 + 1, j0 + 1);
        (1.0 - t) * ((1.0 - s) * f00 + s * f10) + t * ((1.0 - s) * f01 + s * f11)
    })
}

/// Nearest-node resampling; keeps binary fields binary.
pub fn resample_nearest(src: &ScalarField, target: &Grid2D) -> ScalarField {
    let g = src.grid;
    ScalarField::from_index_fn(*target, |i, j| {
        let si = (target.x(i) * (g.nx - 1) as f64).round() as usize;
        let sj = (target.y(j) * (g.ny - 1) as f64).round() as usize;
        src.get(si.min(g.nx - 1), sj.min(g.ny - 1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn g(n: usize) -> Grid2D {
        Grid2D::square(n).unwrap()
    }

    #[test]
    fn grid_rejects_small() {
        assert!(Grid2D::new(2, 5).is_err());
        assert!(Grid2D::new(5, 2).is_err());
        assert!(Grid2D::new(3, 3).is_ok());
    }

    #[test]
    fn nodes_cover_unit_square() {
        let grid = Grid2D::new(7, 5).unwrap();
        assert_eq!(grid.x(0), 0.0);
        assert_eq!(grid.x(6), 1.0);
        assert_eq!(grid.y(4), 1.0);
        assert_relative_eq!(grid.x(3), 0.5);
        assert_eq!(grid.index(2, 3), 3 * 7 + 2);
        assert_eq!(grid.coords(grid.index(2, 3)), (2, 3));
    }

    #[test]
    fn corners_are_dirichlet() {
        let grid = g(5);
        for (i, j) in [(0, 0), (4, 0), (0, 4), (4, 4)] {
            assert!(grid.tag(i, j).is_dirichlet());
        }
        assert_eq!(grid.tag(0, 2), BoundaryTag::NeumannLeft);
        assert_eq!(grid.tag(4, 2), BoundaryTag::NeumannRight);
        assert_eq!(grid.tag(2, 2), BoundaryTag::Interior);
    }

    #[test]
    fn time_grid_ends_at_t() {
        let t = TimeGrid::new(1.0, 3).unwrap();
        assert_eq!(t.time(3), 1.0);
        assert_relative_eq!(t.tau() * 3.0, 1.0);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn field_rejects_bad_input() {
        let grid = g(3);
        assert!(matches!(
            ScalarField::new(grid, vec![0.0; 8]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(matches!(
            ScalarField::new(grid, v),
            Err(Error::NonFinite { i: 1, j: 1, .. })
        ));
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let f = ScalarField::constant(g(11), 0.1);
        assert!(apply_laplacian(&f).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let f = ScalarField::from_fn(g(13), |x, _| x * x);
        for v in apply_laplacian(&f).values() {
            assert_relative_eq!(*v, 2.0, epsilon = 1e-9);
        }
        let f = ScalarField::from_fn(Grid2D::new(9, 14).unwrap(), |x, y| 3.0 * x * x - y * y + x * y);
        for v in apply_laplacian(&f).values() {
            assert_relative_eq!(*v, 4.0, epsilon = 1e-8);
        }
    }

    fn sine_laplacian_error(n: usize) -> f64 {
        let grid = g(n);
        let f = ScalarField::from_fn(grid, |x, y| (PI * x).sin() * (PI * y).sin());
        let lap = apply_laplacian(&f);
        grid.nodes()
            .filter(|&(i, j)| grid.tag(i, j) == BoundaryTag::Interior)
            .map(|(i, j)| {
                let exact = -2.0 * PI * PI * f.get(i, j);
                (lap.get(i, j) - exact).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_second_order_on_sine() {
        let e1 = sine_laplacian_error(51);
        let e2 = sine_laplacian_error(101);
        let e3 = sine_laplacian_error(201);
        // h halves, error quarters
        assert!((e1 / e2 - 4.0).abs() < 0.1, "{e1} {e2}");
        assert!((e2 / e3 - 4.0).abs() < 0.1, "{e2} {e3}");
        assert!(sine_laplacian_error(100) < 2e-2);
    }

    #[test]
    fn dx_of_constant_and_linear() {
        let f = ScalarField::constant(g(7), 0.1);
        assert!(apply_dx(&f).values().iter().all(|&v| v == 0.0));
        let f = ScalarField::from_fn(g(7), |x, _| x);
        for v in apply_dx(&f).values() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    fn exp_dx_error(n: usize) -> f64 {
        let f = ScalarField::from_fn(g(n), |x, _| x.exp());
        let d = apply_dx(&f);
        d.sub(&f).norm_linf()
    }

    #[test]
    fn dx_second_order_on_exp() {
        let e1 = exp_dx_error(31);
        let e2 = exp_dx_error(61);
        let e3 = exp_dx_error(121);
        let o1 = (e1 / e2).log2();
        let o2 = (e2 / e3).log2();
        assert!(o1 > 1.9 && o2 > 1.95, "orders {o1} {o2}");
        assert!(exp_dx_error(60) < 1e-3);
    }

    #[test]
    fn norms() {
        let grid = g(17);
        assert_eq!(norm_l2(&ScalarField::zeros(grid)), 0.0);
        let one = ScalarField::constant(grid, 1.0);
        assert_relative_eq!(
            norm_l2(&one),
            (grid.hx() * grid.hy() * grid.len() as f64).sqrt(),
            max_relative = 1e-14
        );
        let mut f = ScalarField::zeros(grid);
        f.set(3, 4, -3.5);
        assert_eq!(norm_linf(&f), 3.5);
        let e = ScalarField::from_fn(grid, |x, _| x.exp());
        assert_eq!(norm_linf(&e), std::f64::consts::E);
    }

    #[test]
    fn l2_norm_of_sine_is_half() {
        let f = ScalarField::from_fn(g(100), |x, y| (PI * x).sin() * (PI * y).sin());
        assert!((norm_l2(&f) - 0.5).abs() < 0.005);
    }

    #[test]
    fn restrict_reproduces_bilinear() {
        let fine = ScalarField::from_fn(g(100), |x, y| 0.3 + 1.5 * x - 2.0 * y + 0.7 * x * y);
        let coarse = restrict(&fine, &g(60)).unwrap();
        for (i, j) in coarse.grid().nodes() {
            let (x, y) = (coarse.grid().x(i), coarse.grid().y(j));
            assert_relative_eq!(coarse.get(i, j), 0.3 + 1.5 * x - 2.0 * y + 0.7 * x * y, epsilon = 1e-13);
        }
        let c = restrict(&ScalarField::constant(g(100), 2.5), &g(60)).unwrap();
        assert!(c.values().iter().all(|&v| (v - 2.5).abs() < 1e-15));
    }

    #[test]
    fn restrict_sine_error_is_second_order() {
        let fine = ScalarField::from_fn(g(100), |x, y| (PI * x).sin() * (PI * y).sin());
        let coarse = restrict(&fine, &g(60)).unwrap();
        let exact = ScalarField::from_fn(g(60), |x, y| (PI * x).sin() * (PI * y).sin());
        let err = coarse.sub(&exact).norm_linf();
        // the bilinear bound h^2 * pi^2 / 4 holds with a wide margin
        let h = 1.0 / 99.0;
        assert!(err <= PI * PI / 4.0 * h * h, "{err}");
        assert!(err <= 1e-7, "{err}");
    }

    #[test]
    fn restrict_reproduces_cubics() {
        let p = |x: f64, y: f64| 1.0 - x + 2.0 * x * x * x - 0.5 * x * y * y + y * y * y;
        let fine = ScalarField::from_fn(g(37), p);
        let coarse = restrict(&fine, &Grid2D::new(23, 19).unwrap()).unwrap();
        for (i, j) in coarse.grid().nodes() {
            let (x, y) = (coarse.grid().x(i), coarse.grid().y(j));
            assert_relative_eq!(coarse.get(i, j), p(x, y), epsilon = 1e-12);
        }
    }

    #[test]
    fn restrict_error_is_fourth_order() {
        let f = |x: f64, y: f64| (PI * x).sin() * (2.0 * y).exp();
        let err = |n: usize| {
            let fine = ScalarField::from_fn(g(n), f);
            let coarse = restrict(&fine, &g(13)).unwrap();
            coarse.sub(&ScalarField::from_fn(g(13), f)).norm_linf()
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }

    #[test]
    fn restrict_on_three_nodes_is_linear() {
        let fine = ScalarField::from_fn(g(3), |x, y| x + 2.0 * y);
        let coarse = restrict(&fine, &g(3)).unwrap();
        assert_eq!(coarse, fine);
    }

    #[test]
    fn restrict_rejects_finer_target() {
        assert!(restrict(&ScalarField::zeros(g(10)), &Grid2D::new(11, 5).unwrap()).is_err());
    }

    #[test]
    fn nearest_keeps_binary() {
        let src = ScalarField::from_fn(g(20), |x, _| if x > 0.5 { 1.0 } else { 0.0 });
        let dst = resample_nearest(&src, &g(33));
        assert!(dst.values().iter().all(|&v| v == 0.0 || v == 1.0));
        assert_eq!(dst.get(32, 5), 1.0);
        assert_eq!(dst.get(0, 5), 0.0);
    }
}
