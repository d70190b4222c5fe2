//! Backward Euler forward solver.
//!
//! Every step solves `(I/tau - L_h + Q D_h + C_p I) u^{n+1} = u^n / tau + f`
//! on interior nodes. Dirichlet rows are identity rows carrying `b(x, t^{n+1})`;
//! Neumann rows are the one-sided three-node x-derivative carrying the
//! prescribed derivative. The operator does not depend on time, so it is
//! factorized once per solve.

use crate::error::{Error, Result};
use crate::grid::{BoundaryTag, Grid2D, ScalarField};
use crate::linalg::{BandedLu, SparseMatrix};
use crate::scenario::{correct_initial_data, ProblemSpec};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Assembled and factorized time-step operator.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    grid: Grid2D,
    tau: f64,
    cp: f64,
    matrix: SparseMatrix,
    lu: BandedLu,
}

impl SystemMatrix {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn cp(&self) -> f64 {
        self.cp
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Solve `A w = r`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.lu.solve(rhs)
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        self.lu.solve_in_place(rhs);
    }
}

/// Build and factorize the step operator for drift `q`.
pub fn assemble(spec: &ProblemSpec, q: &ScalarField) -> Result<SystemMatrix> {
    let grid = spec.grid;
    if q.grid() != &grid {
        return Err(Error::GridMismatch(format!(
            "drift is {}x{}, problem grid is {}x{}",
            q.grid().nx(),
            q.grid().ny(),
            grid.nx(),
            grid.ny()
        )));
    }
    q.check_finite("drift")?;
    let tau = spec.time.tau();
    let matrix = assemble_matrix(&grid, q, tau, spec.cp);
    let lu = BandedLu::factorize(&matrix).map_err(|p| {
        let (i, j) = grid.coords(p.column);
        Error::SingularMatrix { column: p.column, i, j }
    })?;
    Ok(SystemMatrix { grid, tau, cp: spec.cp, matrix, lu })
}

fn assemble_matrix(grid: &Grid2D, q: &ScalarField, tau: f64, cp: f64) -> SparseMatrix {
    let (nx, _) = (grid.nx(), grid.ny());
    let (hx, hy) = (grid.hx(), grid.hy());
    let (ihx2, ihy2) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let i2hx = 1.0 / (2.0 * hx);
    let rows = grid
        .nodes()
        .map(|(i, j)| {
            let k = grid.index(i, j);
            match grid.tag(i, j) {
                BoundaryTag::DirichletBottom | BoundaryTag::DirichletTop => vec![(k, 1.0)],
                BoundaryTag::NeumannLeft => vec![(k, -3.0 * i2hx), (k + 1, 4.0 * i2hx), (k + 2, -i2hx)],
                BoundaryTag::NeumannRight => vec![(k, 3.0 * i2hx), (k - 1, -4.0 * i2hx), (k - 2, i2hx)],
                BoundaryTag::Interior => {
                    let qk = q.get(i, j);
                    vec![
                        (k, 1.0 / tau + 2.0 * ihx2 + 2.0 * ihy2 + cp),
                        (k - 1, -ihx2 - qk * i2hx),
                        (k + 1, -ihx2 + qk * i2hx),
                        (k - nx, -ihy2),
                        (k + nx, -ihy2),
                    ]
                }
            }
        })
        .collect();
    SparseMatrix::from_rows(rows)
}

/// Counters and timings of one forward solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub factorizations: usize,
    pub steps: usize,
    pub factorization_seconds: f64,
    pub stepping_seconds: f64,
}

impl SolverStats {
    pub fn accumulate(&mut self, other: &SolverStats) {
        self.factorizations += other.factorizations;
        self.steps += other.steps;
        self.factorization_seconds += other.factorization_seconds;
        self.stepping_seconds += other.stepping_seconds;
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardOptions {
    /// Keep every time level, `u^0 ..= u^{nt}`.
    pub keep_trajectory: bool,
}

#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub u_t: ScalarField,
    /// `(u^{nt} - u^{nt-1}) / tau`
    pub du_dt_t: ScalarField,
    /// `u^{nt-1}`
    pub u_prev: Option<ScalarField>,
    pub tau: f64,
    pub trajectory: Option<Vec<ScalarField>>,
    pub stats: SolverStats,
}

pub fn solve_forward(spec: &ProblemSpec, q: &ScalarField) -> Result<ForwardSolution> {
    solve_forward_with(spec, q, ForwardOptions::default())
}

pub fn solve_forward_with(spec: &ProblemSpec, q: &ScalarField, opts: ForwardOptions) -> Result<ForwardSolution> {
    spec.validate()?;
    let started = Instant::now();
    let system = assemble(spec, q)?;
    let mut stats = SolverStats {
        factorizations: 1,
        factorization_seconds: started.elapsed().as_secs_f64(),
        ..Default::default()
    };
    let mut sol = march(spec, q, &system, opts)?;
    stats.steps = sol.stats.steps;
    stats.stepping_seconds = sol.stats.stepping_seconds;
    sol.stats = stats;
    Ok(sol)
}

/// Time-march with an already factorized operator.
pub fn march(spec: &ProblemSpec, q: &ScalarField, system: &SystemMatrix, opts: ForwardOptions) -> Result<ForwardSolution> {
    let grid = spec.grid;
    if system.grid != grid || system.tau != spec.time.tau() || system.cp != spec.cp {
        return Err(Error::GridMismatch("system matrix was built for a different problem".into()));
    }
    let started = Instant::now();
    let time = spec.time;
    let tau = time.tau();
    let nt = time.nt();
    let b = spec.boundary;

    let tags: Vec<BoundaryTag> = grid.nodes().map(|(i, j)| grid.tag(i, j)).collect();
    let xs: Vec<f64> = (0..grid.nx()).map(|i| grid.x(i)).collect();
    let static_source = if spec.source.is_time_dependent() {
        None
    } else {
        Some(spec.source.evaluate(&grid, q, spec.cp, 0.0)?)
    };

    let mut u = correct_initial_data(&spec.u0, &b).into_values();
    let mut trajectory = match opts.keep_trajectory {
        true => Some(vec![ScalarField::new(grid, u.clone())?]),
        false => None,
    };
    let mut prev = u.clone();
    let mut delta = vec![0.0; grid.len()];

    // increment form: A (u^{n+1} - u^n) = rhs^{n+1} - A u^n
    for n in 0..nt {
        let t = time.time(n + 1);
        let timed_source;
        let f = match &static_source {
            Some(f) => f,
            None => {
                timed_source = spec.source.evaluate(&grid, q, spec.cp, t)?;
                &timed_source
            }
        };
        let (dl, dr) = (
            b.dx_datum(BoundaryTag::NeumannLeft, t),
            b.dx_datum(BoundaryTag::NeumannRight, t),
        );
        let au = system.matrix.matvec(&u);
        for (k, r) in delta.iter_mut().enumerate() {
            let target = match tags[k] {
                BoundaryTag::Interior => u[k] / tau + f.values()[k],
                BoundaryTag::DirichletBottom | BoundaryTag::DirichletTop => b.dirichlet(xs[k % grid.nx()], t),
                BoundaryTag::NeumannLeft => dl,
                BoundaryTag::NeumannRight => dr,
            };
            *r = target - au[k];
        }
        system.solve_in_place(&mut delta);
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStep { step: n + 1 });
        }
        prev.copy_from_slice(&u);
        for (k, (uk, d)) in u.iter_mut().zip(&delta).enumerate() {
            // identity rows: pin the Dirichlet values exactly
            *uk = if tags[k].is_dirichlet() { b.dirichlet(xs[k % grid.nx()], t) } else { *uk + d };
        }
        if let Some(tr) = trajectory.as_mut() {
            tr.push(ScalarField::new(grid, u.clone())?);
        }
    }

    let du_dt: Vec<f64> = delta.iter().map(|d| d / tau).collect();
    Ok(ForwardSolution {
        u_t: ScalarField::new(grid, u)?,
        du_dt_t: ScalarField::new(grid, du_dt)?,
        u_prev: Some(ScalarField::new(grid, prev)?),
        tau,
        trajectory,
        stats: SolverStats {
            factorizations: 0,
            steps: nt,
            factorization_seconds: 0.0,
            stepping_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

/// Backward difference `(u^{nt} - u^{nt-1}) / tau` from a finished solve.
pub fn terminal_derivative(sol: &ForwardSolution) -> Result<ScalarField> {
    let prev = sol
        .u_prev
        .as_ref()
        .ok_or(Error::TrajectoryUnavailable("the state before the final step was not retained"))?;
    let tau = sol.tau;
    Ok(sol.u_t.zip_map(prev, |a, p| (a - p) / tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{apply_dx, TimeGrid};
    use crate::scenario::{evaluate_drift, BoundarySpec, DriftSpec, Source};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_problem(n: usize, c: f64, nt: usize) -> ProblemSpec {
        let grid = Grid2D::square(n).unwrap();
        ProblemSpec {
            grid,
            time: TimeGrid::new(1.0, nt).unwrap(),
            drift: DriftSpec::Smooth,
            cp: 5.0,
            source: Source::Constant(5.0 * c),
            u0: ScalarField::constant(grid, c),
            boundary: BoundarySpec::constant(c),
        }
    }

    #[test]
    fn interior_row_of_small_grid() {
        let grid = Grid2D::square(3).unwrap();
        let mut spec = constant_problem(3, 0.0, 1);
        spec.cp = 0.0;
        let q = ScalarField::zeros(grid);
        let sys = assemble(&spec, &q).unwrap();
        let a = sys.matrix();
        let (hx, hy) = (grid.hx(), grid.hy());
        let k = grid.index(1, 1);
        assert_relative_eq!(a.get(k, k), 1.0 + 2.0 / (hx * hx) + 2.0 / (hy * hy));
        assert_relative_eq!(a.get(k, k - 1), -1.0 / (hx * hx));
        assert_relative_eq!(a.get(k, k + 1), -1.0 / (hx * hx));
        assert_relative_eq!(a.get(k, k - 3), -1.0 / (hy * hy));
        assert_relative_eq!(a.get(k, k + 3), -1.0 / (hy * hy));
        assert_eq!(a.row(k).count(), 5);
        // Dirichlet rows are identity rows
        let d = grid.index(2, 0);
        assert_eq!(a.row(d).collect::<Vec<_>>(), vec![(d, 1.0)]);
        // Neumann rows carry three entries
        assert_eq!(a.row(grid.index(0, 1)).count(), 3);
        assert_eq!(a.row(grid.index(2, 1)).count(), 3);
    }

    #[test]
    fn convection_entries_are_centred() {
        let grid = Grid2D::square(5).unwrap();
        let spec = constant_problem(5, 0.0, 4);
        let q = ScalarField::constant(grid, 2.0);
        let sys = assemble(&spec, &q).unwrap();
        let k = grid.index(2, 2);
        let a = sys.matrix();
        let h = grid.hx();
        assert_relative_eq!(a.get(k, k + 1) - a.get(k, k - 1), 2.0 / h, epsilon = 1e-9);
    }

    #[test]
    fn rejects_non_finite_drift() {
        let spec = constant_problem(5, 0.0, 4);
        let mut v = [1.0; 25];
        v[12] = f64::INFINITY;
        let q = ScalarField::from_index_fn(spec.grid, |i, j| v[j * 5 + i]);
        assert!(matches!(assemble(&spec, &q), Err(Error::NonFinite { i: 2, j: 2, .. })));
    }

    #[test]
    fn reference_factorization_residual() {
        let grid = Grid2D::square(60).unwrap();
        let spec = ProblemSpec::reference(grid, TimeGrid::new(1.0, 100).unwrap(), DriftSpec::Smooth, 1.0);
        let q = evaluate_drift(&DriftSpec::Smooth, &grid).unwrap();
        let sys = assemble(&spec, &q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = sys.solve(&r);
        let aw = sys.matrix().matvec(&w);
        let res = aw.iter().zip(&r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(res / rn <= 1e-10, "{}", res / rn);
    }

    #[test]
    fn constant_state_is_steady() {
        for c in [0.0, 1.0, -3.0] {
            let spec = constant_problem(15, c, 100);
            let q = evaluate_drift(&DriftSpec::Smooth, &spec.grid).unwrap();
            let sol = solve_forward_with(&spec, &q, ForwardOptions { keep_trajectory: true }).unwrap();
            for level in sol.trajectory.as_ref().unwrap() {
                for v in level.values() {
                    assert!((v - c).abs() <= 1e-12, "c = {c}: {v}");
                }
            }
            assert!(terminal_derivative(&sol).unwrap().norm_linf() <= 1e-12);
        }
    }

    #[test]
    fn zero_data_zero_solution() {
        let spec = constant_problem(9, 0.0, 10);
        let sol = solve_forward(&spec, &ScalarField::constant(spec.grid, 1.3)).unwrap();
        assert_eq!(sol.u_t.norm_linf(), 0.0);
    }

    #[test]
    fn one_factorization_per_solve() {
        for nt in [1, 7, 50] {
            let spec = constant_problem(8, 1.0, nt);
            let sol = solve_forward(&spec, &ScalarField::constant(spec.grid, 1.0)).unwrap();
            assert_eq!(sol.stats.factorizations, 1);
            assert_eq!(sol.stats.steps, nt);
        }
    }

    #[test]
    fn dirichlet_values_are_exact_every_step() {
        let grid = Grid2D::square(21).unwrap();
        let spec = ProblemSpec::reference(grid, TimeGrid::new(1.0, 20).unwrap(), DriftSpec::Smooth, 1.0);
        let q = spec.drift_field().unwrap();
        let sol = solve_forward_with(&spec, &q, ForwardOptions { keep_trajectory: true }).unwrap();
        for (n, level) in sol.trajectory.unwrap().iter().enumerate() {
            let t = spec.time.time(n);
            for i in 0..21 {
                assert_eq!(level.get(i, 0), spec.boundary.dirichlet(grid.x(i), t));
                assert_eq!(level.get(i, 20), spec.boundary.dirichlet(grid.x(i), t));
            }
        }
    }

    #[test]
    fn neumann_rows_hold_derivative_data() {
        let grid = Grid2D::square(21).unwrap();
        let spec = ProblemSpec::reference(grid, TimeGrid::new(1.0, 20).unwrap(), DriftSpec::Smooth, 1.0);
        let q = spec.drift_field().unwrap();
        let sol = solve_forward(&spec, &q).unwrap();
        let dx = apply_dx(&sol.u_t);
        for j in 1..20 {
            assert_relative_eq!(dx.get(0, j), 1f64.exp(), epsilon = 1e-9);
            assert_relative_eq!(dx.get(20, j), 2f64.exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn terminal_derivative_matches_solution_field() {
        let spec = constant_problem(9, 0.0, 5);
        let mut spec2 = spec.clone();
        spec2.source = Source::Constant(1.0);
        let sol = solve_forward(&spec2, &ScalarField::constant(spec.grid, 0.5)).unwrap();
        let diff = terminal_derivative(&sol).unwrap().sub(&sol.du_dt_t);
        assert!(diff.norm_linf() < 1e-12, "{}", diff.norm_linf());
        let mut stripped = sol.clone();
        stripped.u_prev = None;
        assert!(matches!(terminal_derivative(&stripped), Err(Error::TrajectoryUnavailable(_))));
    }
}
