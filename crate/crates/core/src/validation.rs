//! Error metrics, manufactured-solution convergence studies and runtime
//! positivity / monotonicity diagnostics.

use crate::error::{Error, Result};
use crate::forward::{solve_forward, ForwardSolution};
use crate::grid::{apply_dx, BoundaryTag, Grid2D, ScalarField, TimeGrid};
use crate::inverse::IterationReport;
use crate::parallel::Execution;
use crate::scenario::{correct_initial_data, evaluate_drift, BoundarySpec, DriftSpec, ProblemSpec, Source};
use serde::{Deserialize, Serialize};

/// `||q_est - q_true||_L2 / ||q_true||_L2`.
pub fn rel_err(q_est: &ScalarField, q_true: &ScalarField) -> Result<f64> {
    q_est.ensure_same_grid(q_true)?;
    let denom = q_true.norm_l2();
    if denom == 0.0 {
        return Err(Error::InvalidParameter { name: "q_true", reason: "reference drift is identically zero".into() });
    }
    Ok(q_est.sub(q_true).norm_l2() / denom)
}

/// Values below this count as sign violations.
pub const NEGATIVITY_THRESHOLD: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// `min apply_dx(u_T)` over interior nodes.
    pub min_dx_ut: f64,
    /// `min u_t(·, T)` over all nodes.
    pub min_dudt: f64,
    /// `max_{k, node} (q_{k+1} - q_k)`, when an iteration history was supplied.
    pub monotone_violation: Option<f64>,
    pub notes: Vec<String>,
}

impl DiagnosticsReport {
    pub fn is_clean(&self) -> bool {
        self.notes.is_empty()
    }

    /// Attach the monotonicity check of an iteration history.
    pub fn with_iterations(mut self, report: &IterationReport) -> Self {
        let v = monotone_violation(&report.iterates);
        if v > 1e-8 {
            self.notes.push(format!("iterates increase by up to {v:e} between steps"));
        }
        self.monotone_violation = Some(v);
        self
    }
}

/// Largest pointwise increase between consecutive iterates; `-inf` for fewer
/// than two iterates.
pub fn monotone_violation(iterates: &[ScalarField]) -> f64 {
    iterates
        .windows(2)
        .flat_map(|w| w[1].values().iter().zip(w[0].values()).map(|(b, a)| b - a).collect::<Vec<_>>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Check the sign properties of a forward solution. Observational only:
/// violations end up in `notes`, never as errors.
pub fn positivity_diagnostics(sol: &ForwardSolution, spec: &ProblemSpec) -> DiagnosticsReport {
    let grid = spec.grid;
    let dx = apply_dx(&sol.u_t);
    let min_dx_ut = grid
        .nodes()
        .filter(|&(i, j)| grid.tag(i, j) == BoundaryTag::Interior)
        .map(|(i, j)| dx.get(i, j))
        .fold(f64::INFINITY, f64::min);
    let min_dudt = sol.du_dt_t.min();
    let mut notes = Vec::new();
    if min_dx_ut < NEGATIVITY_THRESHOLD {
        let n = grid
            .nodes()
            .filter(|&(i, j)| grid.tag(i, j) == BoundaryTag::Interior && dx.get(i, j) < NEGATIVITY_THRESHOLD)
            .count();
        notes.push(format!("u_x(T) negative at {n} interior nodes (min {min_dx_ut:e})"));
    } else if min_dx_ut <= 0.0 {
        notes.push(format!("u_x(T) not strictly positive (min {min_dx_ut:e})"));
    }
    if min_dudt < NEGATIVITY_THRESHOLD {
        let n = sol.du_dt_t.values().iter().filter(|&&v| v < NEGATIVITY_THRESHOLD).count();
        notes.push(format!("u_t(T) negative at {n} nodes (min {min_dudt:e})"));
    }
    DiagnosticsReport { min_dx_ut, min_dudt, monotone_violation: None, notes }
}

/// One grid / time-step pair of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    /// Nodes per side; `h = 1 / (n - 1)`.
    pub n: usize,
    pub nt: usize,
}

/// Which discretization parameter a study refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Refinement {
    Space,
    Time,
}

/// Manufactured problem `u = exp(beta t + x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsProblem {
    pub beta: f64,
    pub cp: f64,
    pub t_final: f64,
}

impl Default for MmsProblem {
    fn default() -> Self {
        Self { beta: 1.0, cp: 5.0, t_final: 1.0 }
    }
}

impl MmsProblem {
    pub fn exact(&self, x: f64, t: f64) -> f64 {
        (self.beta * t + x).exp()
    }

    pub fn spec(&self, drift: &DriftSpec, res: Resolution) -> Result<ProblemSpec> {
        let grid = Grid2D::square(res.n)?;
        let boundary = BoundarySpec::exponential(self.beta);
        Ok(ProblemSpec {
            grid,
            time: TimeGrid::new(self.t_final, res.nt)?,
            drift: drift.clone(),
            cp: self.cp,
            source: Source::Manufactured { beta: self.beta },
            u0: correct_initial_data(&ScalarField::from_fn(grid, |x, _| self.exact(x, 0.0)), &boundary),
            boundary,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub resolution: Resolution,
    pub h: f64,
    pub tau: f64,
    pub error_inf: f64,
    pub error_l2: f64,
    /// Observed order against the previous row, in the refined parameter.
    pub order_inf: Option<f64>,
    pub order_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub refinement: Refinement,
    pub problem: MmsProblem,
    pub rows: Vec<StudyRow>,
    /// False when some refinement did not reduce the max-norm error.
    pub monotone: bool,
}

impl ConvergenceStudy {
    /// Observed max-norm orders between consecutive rows.
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order_inf).collect()
    }

    /// Observed L2 orders between consecutive rows.
    pub fn orders_l2(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order_l2).collect()
    }

    /// Least-squares slope of `log(error_l2)` against the log of the refined
    /// parameter, over all rows. `None` with fewer than two rows.
    pub fn fitted_order_l2(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| {
                let step = match self.refinement {
                    Refinement::Space => r.h,
                    Refinement::Time => r.tau,
                };
                (step.ln(), r.error_l2.ln())
            })
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// CSV with columns `n,nt,h,tau,error_inf,error_l2,order_inf,order_l2`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,nt,h,tau,error_inf,error_l2,order_inf,order_l2\n");
        let opt = |o: Option<f64>| o.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.resolution.n,
                r.resolution.nt,
                r.h,
                r.tau,
                r.error_inf,
                r.error_l2,
                opt(r.order_inf),
                opt(r.order_l2)
            ));
        }
        s
    }
}

/// Run the manufactured solution at each resolution and measure the error at
/// `T`. Resolutions are solved concurrently under `exec`.
pub fn mms_study(
    drift: &DriftSpec,
    problem: &MmsProblem,
    refinement: Refinement,
    resolutions: &[Resolution],
    exec: Execution,
) -> Result<ConvergenceStudy> {
    if resolutions.is_empty() {
        return Err(Error::InvalidParameter { name: "resolutions", reason: "empty study".into() });
    }
    let refines = resolutions.windows(2).all(|w| match refinement {
        Refinement::Space => w[1].n > w[0].n,
        Refinement::Time => w[1].nt > w[0].nt,
    });
    if !refines {
        return Err(Error::InvalidParameter {
            name: "resolutions",
            reason: format!("{refinement:?} parameter must strictly refine"),
        });
    }

    let errors: Vec<Result<(f64, f64)>> = exec.map(resolutions, |&res| {
        let spec = problem.spec(drift, res)?;
        let q = evaluate_drift(drift, &spec.grid)?;
        let sol = solve_forward(&spec, &q)?;
        let exact = ScalarField::from_fn(spec.grid, |x, _| problem.exact(x, problem.t_final));
        let diff = sol.u_t.sub(&exact);
        Ok((diff.norm_linf(), diff.norm_l2()))
    });

    let mut rows: Vec<StudyRow> = Vec::with_capacity(resolutions.len());
    for (res, e) in resolutions.iter().zip(errors) {
        let (error_inf, error_l2) = e?;
        let h = 1.0 / (res.n - 1) as f64;
        let tau = problem.t_final / res.nt as f64;
        let (order_inf, order_l2) = match rows.last() {
            Some(prev) => {
                let ratio = match refinement {
                    Refinement::Space => (prev.h / h).ln(),
                    Refinement::Time => (prev.tau / tau).ln(),
                };
                (Some((prev.error_inf / error_inf).ln() / ratio), Some((prev.error_l2 / error_l2).ln() / ratio))
            }
            None => (None, None),
        };
        rows.push(StudyRow { resolution: *res, h, tau, error_inf, error_l2, order_inf, order_l2 });
    }
    let monotone = rows.windows(2).all(|w| w[1].error_inf < w[0].error_inf);
    Ok(ConvergenceStudy { refinement, problem: *problem, rows, monotone })
}

/// Spatial study: `h = 1/20, 1/40, 1/80` at `tau = 1e-4`.
pub fn default_spatial_resolutions(t_final: f64) -> Vec<Resolution> {
    let nt = (t_final / 1e-4).round() as usize;
    [20, 40, 80].iter().map(|&m| Resolution { n: m + 1, nt }).collect()
}

/// Temporal study: `tau = T/25, T/50, T/100` at `h = 1/160`.
pub fn default_temporal_resolutions() -> Vec<Resolution> {
    [25, 50, 100].iter().map(|&nt| Resolution { n: 161, nt }).collect()
}
