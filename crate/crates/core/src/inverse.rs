//! The fixed-point operator `K` and the monotone reconstruction iteration.

use crate::error::{Error, Result};
use crate::forward::{solve_forward, SolverStats};
use crate::grid::{apply_dx, apply_laplacian, ScalarField};
use crate::noise::{DenoiseConfig, ScreenedDiffusion, Smoother};
use crate::scenario::{ProblemSpec, Source};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Terminal data and the derived quantities the update formula needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationData {
    /// Terminal observation, smoothed if denoising was requested.
    pub g: ScalarField,
    pub lap_g: ScalarField,
    /// x-derivative of `g`, floored to stay positive.
    pub dx_g: ScalarField,
    pub f: ScalarField,
    pub cp: f64,
    /// Nodes where the floor replaced the computed derivative.
    pub floored_nodes: usize,
    /// Screening weight that was used; zero when no smoothing took place.
    pub smoothing_strength: f64,
    /// Constant drift of the reference state used by the smoother.
    pub reference_drift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseConfig {
    pub max_iters: usize,
    /// Stop once `||q_k - q_{k-1}||_L2 <= tol`.
    pub tol: f64,
    /// `g_x` is floored at `dx_floor_rel * max(g_x)`.
    pub dx_floor_rel: f64,
    /// Clip every iterate from above by `q_0`.
    pub project_to_domain: bool,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self { max_iters: 10, tol: 1e-13, dx_floor_rel: 1e-3, project_to_domain: true }
    }
}

impl InverseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter { name: "iteration.tol", reason: format!("must be positive, got {}", self.tol) });
        }
        if !(self.dx_floor_rel > 0.0 && self.dx_floor_rel < 1.0) {
            return Err(Error::InvalidParameter {
                name: "iteration.dx_floor_rel",
                reason: format!("must lie in (0, 1), got {}", self.dx_floor_rel),
            });
        }
        Ok(())
    }
}

/// `g_x` below this multiple of `max(1, ||g||_inf)` counts as no variation.
const DEGENERATE_DX: f64 = 1e-12;

/// Prepare terminal data for the update formula.
///
/// With smoothing enabled, `g` is split into a reference state and a
/// deviation, and only the deviation is smoothed. The reference is the
/// terminal state for the constant drift that best fits `g` (see
/// [`fit_constant_drift`]). It satisfies the boundary conditions, so the
/// deviation vanishes on the Dirichlet rows and has zero x-derivative on the
/// Neumann columns: the smoother mirrors across `x = 0, 1` and holds the
/// Dirichlet rows fixed. Screening biases a field by about `lambda * Δ`, and
/// the deviation is far flatter than `g` itself.
///
/// `noise_delta` is the noise level used by the automatic strength rule.
pub fn build_observation(
    g_field: &ScalarField,
    spec: &ProblemSpec,
    denoise_cfg: &DenoiseConfig,
    noise_delta: f64,
    dx_floor_rel: f64,
) -> Result<ObservationData> {
    denoise_cfg.validate()?;
    let grid = spec.grid;
    if g_field.grid() != &grid {
        return Err(Error::GridMismatch(format!(
            "observation is {}x{}, inversion grid is {}x{}",
            g_field.grid().nx(),
            g_field.grid().ny(),
            grid.nx(),
            grid.ny()
        )));
    }
    g_field.check_finite("observation")?;
    if matches!(spec.source, Source::Manufactured { .. }) {
        return Err(Error::InvalidParameter {
            name: "source",
            reason: "a drift-dependent source cannot be used for reconstruction".into(),
        });
    }
    let t_final = spec.time.t_final();

    let strength = match denoise_cfg.enabled {
        true => denoise_cfg.effective_strength(noise_delta, g_field.norm_linf()),
        false => 0.0,
    };
    let mut reference_drift = None;
    let g = if strength > 0.0 {
        let (c, reference) = fit_constant_drift(g_field, spec)?;
        reference_drift = Some(c);
        let mut deviation = g_field.sub(&reference);
        for i in 0..grid.nx() {
            deviation.set(i, 0, 0.0);
            deviation.set(i, grid.ny() - 1, 0.0);
        }
        let mut g = reference.add(&ScreenedDiffusion::pinned(strength)?.smooth(&deviation)?);
        for i in 0..grid.nx() {
            for j in [0, grid.ny() - 1] {
                g.set(i, j, spec.boundary.dirichlet(grid.x(i), t_final));
            }
        }
        g
    } else {
        g_field.clone()
    };

    let lap_g = apply_laplacian(&g);
    let raw_dx = apply_dx(&g);
    let max_dx = raw_dx.max();
    if !(max_dx > DEGENERATE_DX * g.norm_linf().max(1.0)) {
        return Err(Error::DegenerateData(format!(
            "x-derivative of the observation is nonpositive everywhere (max {max_dx:e})"
        )));
    }
    let floor = dx_floor_rel * max_dx;
    let floored_nodes = raw_dx.values().iter().filter(|&&v| v < floor).count();
    let dx_g = raw_dx.map(|v| v.max(floor));

    // the update formula uses the stationary part f(x)
    let zero = ScalarField::zeros(grid);
    let f = spec.source.evaluate(&grid, &zero, spec.cp, t_final)?;

    Ok(ObservationData { g, lap_g, dx_g, f, cp: spec.cp, floored_nodes, smoothing_strength: strength, reference_drift })
}

/// Gauss-Newton steps for the constant fit; the terminal state is nearly
/// affine in a constant drift, so a few suffice.
const FIT_STEPS: usize = 4;

/// Least-squares fit of a constant drift `c` to terminal data:
/// minimizes `||u(T; c) - g||_L2` and returns `c` with `u(T; c)`.
pub fn fit_constant_drift(g: &ScalarField, spec: &ProblemSpec) -> Result<(f64, ScalarField)> {
    let grid = spec.grid;
    let state = |c: f64| solve_forward(spec, &ScalarField::constant(grid, c)).map(|s| s.u_t);
    let mut c = 1.0;
    let mut u = state(c)?;
    for _ in 0..FIT_STEPS {
        let eps = 1e-3 * c.abs().max(1.0);
        let du = state(c + eps)?.sub(&u).scale(1.0 / eps);
        let denom: f64 = du.values().iter().map(|v| v * v).sum();
        if !(denom > 0.0) {
            break;
        }
        let num: f64 = du.values().iter().zip(g.sub(&u).values()).map(|(a, b)| a * b).sum();
        let step = num / denom;
        c += step;
        u = state(c)?;
        if step.abs() <= 1e-10 * c.abs().max(1.0) {
            break;
        }
    }
    Ok((c, u))
}

/// Upper bound of the admissible set, `(f + Δg - C_p g) / g_x`.
pub fn initial_guess(obs: &ObservationData) -> ScalarField {
    let cp = obs.cp;
    let raw = ScalarField::from_index_fn(*obs.g.grid(), |i, j| {
        (obs.f.get(i, j) + obs.lap_g.get(i, j) - cp * obs.g.get(i, j)) / obs.dx_g.get(i, j)
    });
    extend_from_interior(&raw)
}

/// The update with a given terminal time derivative `u_t(·, T)`:
/// `(f - u_t + Δg - C_p g) / g_x`, optionally clipped by `upper`.
pub fn update_from_time_derivative(obs: &ObservationData, du_dt: &ScalarField, upper: Option<&ScalarField>) -> ScalarField {
    let cp = obs.cp;
    let raw = ScalarField::from_index_fn(*obs.g.grid(), |i, j| {
        (obs.f.get(i, j) - du_dt.get(i, j) + obs.lap_g.get(i, j) - cp * obs.g.get(i, j)) / obs.dx_g.get(i, j)
    });
    let k = extend_from_interior(&raw);
    match upper {
        Some(u) => k.zip_map(u, f64::min),
        None => k,
    }
}

/// Copy each boundary value from the nearest interior node (corners from the
/// diagonal neighbour).
///
/// Boundary rows of the forward scheme never touch the drift, so the update
/// formula there only measures one-sided stencil error. A copy keeps `K`
/// order preserving.
pub fn extend_from_interior(field: &ScalarField) -> ScalarField {
    let grid = *field.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    ScalarField::from_index_fn(grid, |i, j| field.get(i.clamp(1, nx - 2), j.clamp(1, ny - 2)))
}

/// `K psi`: solve the forward problem with drift `psi` and apply the update.
pub fn apply_k(psi: &ScalarField, obs: &ObservationData, spec: &ProblemSpec, cfg: &InverseConfig) -> Result<ScalarField> {
    let q0 = cfg.project_to_domain.then(|| initial_guess(obs));
    apply_k_bounded(psi, obs, spec, q0.as_ref()).map(|(k, _)| k)
}

fn apply_k_bounded(
    psi: &ScalarField,
    obs: &ObservationData,
    spec: &ProblemSpec,
    upper: Option<&ScalarField>,
) -> Result<(ScalarField, SolverStats)> {
    obs.g.ensure_same_grid(psi)?;
    let sol = solve_forward(spec, psi)?;
    Ok((update_from_time_derivative(obs, &sol.du_dt_t, upper), sol.stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Tolerance,
    MaxIters,
    Divergence,
}

/// History of one reconstruction.
#[derive(Debug, Clone)]
pub struct IterationReport {
    /// `q_0 ..= q_N`
    pub iterates: Vec<ScalarField>,
    /// `increments[k - 1] = ||q_k - q_{k-1}||_L2`
    pub increments: Vec<f64>,
    /// `RelErr(k)` for every iterate, when the true drift was supplied.
    pub rel_errors: Option<Vec<f64>>,
    pub stop_reason: StopReason,
    pub iterations_run: usize,
    pub stats: SolverStats,
    pub elapsed_seconds: f64,
}

impl IterationReport {
    pub fn final_iterate(&self) -> &ScalarField {
        self.iterates.last().expect("at least q_0")
    }
}

// timings are excluded: two runs on the same data compare equal
impl PartialEq for IterationReport {
    fn eq(&self, other: &Self) -> bool {
        self.iterates == other.iterates
            && self.increments == other.increments
            && self.rel_errors == other.rel_errors
            && self.stop_reason == other.stop_reason
            && self.iterations_run == other.iterations_run
    }
}

/// Increment growth factor that counts towards divergence.
const GROWTH_FACTOR: f64 = 10.0;
/// Consecutive growth events that declare divergence.
const GROWTH_STREAK: usize = 3;

/// Run `q_k = K q_{k-1}` from `q_0` until the increment drops to `cfg.tol`,
/// `cfg.max_iters` is reached, or the iteration diverges.
pub fn iterate(
    obs: &ObservationData,
    spec: &ProblemSpec,
    cfg: &InverseConfig,
    q_true: Option<&ScalarField>,
) -> Result<IterationReport> {
    cfg.validate()?;
    let started = Instant::now();
    let q0 = initial_guess(obs);
    let upper = cfg.project_to_domain.then(|| q0.clone());
    let mut rel_errors = match q_true {
        Some(t) => {
            obs.g.ensure_same_grid(t)?;
            Some(vec![crate::validation::rel_err(&q0, t)?])
        }
        None => None,
    };
    let mut iterates = vec![q0];
    let mut increments = Vec::new();
    let mut stats = SolverStats::default();
    let mut stop_reason = StopReason::MaxIters;
    let mut streak = 0usize;

    for k in 1..=cfg.max_iters {
        let prev = iterates.last().expect("nonempty");
        let (next, s) = apply_k_bounded(prev, obs, spec, upper.as_ref())
            .map_err(|e| Error::ForwardFailure { iteration: k, source: Box::new(e) })?;
        stats.accumulate(&s);
        let finite = next.check_finite("iterate").is_ok();
        let inc = if finite { next.sub(prev).norm_l2() } else { f64::INFINITY };

        if let Some(&last) = increments.last() {
            if last > 0.0 && inc > GROWTH_FACTOR * last {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        increments.push(inc);
        if let (Some(errs), Some(t)) = (rel_errors.as_mut(), q_true) {
            errs.push(if finite { crate::validation::rel_err(&next, t)? } else { f64::INFINITY });
        }
        iterates.push(next);

        if !finite || streak >= GROWTH_STREAK {
            stop_reason = StopReason::Divergence;
            break;
        }
        if inc <= cfg.tol {
            stop_reason = StopReason::Tolerance;
            break;
        }
    }

    Ok(IterationReport {
        iterations_run: increments.len(),
        iterates,
        increments,
        rel_errors,
        stop_reason,
        stats,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
