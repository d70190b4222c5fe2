//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use drift_recover::config::ScenarioConfig;
use drift_recover::forward::{solve_forward_with, ForwardOptions};
use drift_recover::validation::{monotone_violation, MmsProblem, Refinement};
use drift_recover::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

/// Fixed-point residual budget for the smooth target under the inverse crime.
/// Calibrated at 2.66e-2; the one-sided boundary derivatives of `g` dominate.
const EPS_DISC: f64 = 3e-2;

type Check = std::result::Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn targets() -> [(&'static str, DriftSpec); 3] {
    [
        ("smooth", DriftSpec::Smooth),
        ("piecewise", DriftSpec::PiecewiseConstant(BoxDrift::reference())),
        ("character", DriftSpec::character()),
    ]
}

fn reference_spec(n: usize, drift: DriftSpec) -> ProblemSpec {
    let cfg = ScenarioConfig::default();
    ProblemSpec::reference(Grid2D::square(n).unwrap(), cfg.time_grid().unwrap(), drift, cfg.beta)
}

/// Noise-free data produced on the inversion grid itself.
fn crime_observation(drift: DriftSpec) -> (ProblemSpec, ScalarField, ObservationData) {
    let spec = reference_spec(60, drift);
    let q = spec.drift_field().unwrap();
    let g = solve_forward(&spec, &q).unwrap().u_t;
    let obs = build_observation(&g, &spec, &DenoiseConfig::default(), 0.0, InverseConfig::default().dx_floor_rel).unwrap();
    (spec, q, obs)
}

fn mms_orders() -> Check {
    let start = Instant::now();
    let problem = MmsProblem::default();
    let space = mms_study(
        &DriftSpec::Smooth,
        &problem,
        Refinement::Space,
        &validation::default_spatial_resolutions(problem.t_final),
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    let time = mms_study(
        &DriftSpec::Smooth,
        &problem,
        Refinement::Time,
        &validation::default_temporal_resolutions(),
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let (sp, tm) = (space.orders_l2(), time.orders_l2());
    let ok = sp.iter().all(|p| (1.8..=2.3).contains(p)) && tm.iter().all(|p| (0.8..=1.2).contains(p)) && elapsed <= 120.0;
    verdict(
        ok,
        format!(
            "spatial L2 orders {sp:.3?} (max-norm {:.3?}), temporal L2 orders {tm:.3?} (max-norm {:.3?}), {elapsed:.1} s",
            space.orders(),
            time.orders()
        ),
    )
}

fn constant_steady_state() -> Check {
    let grid = Grid2D::square(21).unwrap();
    let mut worst = 0.0f64;
    for c in [0.0, 1.0, -3.0] {
        let spec = ProblemSpec {
            grid,
            time: TimeGrid::new(1.0, 100).unwrap(),
            drift: DriftSpec::Smooth,
            cp: 5.0,
            source: Source::Constant(5.0 * c),
            u0: ScalarField::constant(grid, c),
            boundary: BoundarySpec::constant(c),
        };
        let q = spec.drift_field().unwrap();
        let sol = solve_forward_with(&spec, &q, ForwardOptions { keep_trajectory: true }).map_err(|e| e.to_string())?;
        for level in sol.trajectory.as_ref().unwrap() {
            worst = worst.max(level.values().iter().map(|v| (v - c).abs()).fold(0.0, f64::max));
        }
    }
    verdict(worst <= 1e-12, format!("max deviation {worst:.3e} over 100 steps"))
}

fn fixed_point_consistency() -> Check {
    let (spec, q, obs) = crime_observation(DriftSpec::Smooth);
    let kq = apply_k(&q, &obs, &spec, &InverseConfig::default()).map_err(|e| e.to_string())?;
    let r = kq.sub(&q).norm_linf() / q.norm_linf();
    verdict(r <= EPS_DISC && EPS_DISC <= 0.05, format!("||Kq - q||/||q|| = {r:.3e} (eps_disc {EPS_DISC})"))
}

fn monotone_iterates() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, drift) in targets() {
        let (spec, q, obs) = crime_observation(drift);
        let rep = iterate(&obs, &spec, &InverseConfig::default(), Some(&q)).map_err(|e| e.to_string())?;
        let v = monotone_violation(&rep.iterates[..rep.iterates.len().min(11)]);
        ok &= v <= 1e-8;
        parts.push(format!("{name} {v:.2e}"));
    }
    verdict(ok, format!("max increase {}", parts.join(", ")))
}

fn monotone_operator() -> Check {
    let (spec, _, obs) = crime_observation(DriftSpec::Smooth);
    let q0 = initial_guess(&obs);
    let cfg = InverseConfig::default();
    let span = q0.norm_linf();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let gap2: f64 = rng.random_range(0.0..1.0) * span;
        let gap1: f64 = rng.random_range(0.0..1.0) * span;
        let r2: Vec<f64> = (0..q0.values().len()).map(|_| rng.random()).collect();
        let r1: Vec<f64> = (0..q0.values().len()).map(|_| rng.random()).collect();
        let psi2 = ScalarField::from_index_fn(spec.grid, |i, j| q0.get(i, j) - gap2 * r2[spec.grid.index(i, j)]);
        let psi1 = ScalarField::from_index_fn(spec.grid, |i, j| psi2.get(i, j) - gap1 * r1[spec.grid.index(i, j)]);
        let k1 = apply_k(&psi1, &obs, &spec, &cfg).map_err(|e| e.to_string())?;
        let k2 = apply_k(&psi2, &obs, &spec, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(k1.sub(&k2).max());
    }
    verdict(worst <= 1e-8, format!("max (K psi1 - K psi2) = {worst:.3e} over 20 pairs"))
}

fn reference_pipeline() -> Check {
    let start = Instant::now();
    let cfg = ScenarioConfig::default();
    let fine = cfg.problem(cfg.data_grid().unwrap()).unwrap();
    let gf = solve_forward(&fine, &fine.drift_field().unwrap()).map_err(|e| e.to_string())?.u_t;
    let spec = cfg.problem(cfg.inversion_grid().unwrap()).unwrap();
    let g = restrict(&gf, &spec.grid).map_err(|e| e.to_string())?;
    let q = spec.drift_field().unwrap();
    let obs = build_observation(&g, &spec, &cfg.denoise, 0.0, cfg.iteration.dx_floor_rel).map_err(|e| e.to_string())?;
    let rep = iterate(&obs, &spec, &cfg.iteration, Some(&q)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let rel = rep.rel_errors.unwrap();
    let head = &rel[..rel.len().min(6)];
    let nonincreasing = head.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    let last = *rel.last().unwrap();
    let ok = nonincreasing && rel.len() == 11 && last < rel[0] && elapsed <= 60.0;
    let head: Vec<String> = head.iter().map(|r| format!("{r:.4e}")).collect();
    verdict(ok, format!("RelErr(0..5) [{}], RelErr(10) {last:.4e}, {elapsed:.1} s", head.join(", ")))
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drift-recover"))
}

fn read_summary(dir: &Path) -> Vec<(String, f64)> {
    let text = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].to_string(), cols[6].parse().unwrap())
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn noise_ordering(tmp: &Path) -> Check {
    let out = tmp.join("noise");
    let status = cli()
        .args(["--quiet", "experiment", "smooth", "--noise-only", "--seeds", "1,2,3,4,5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    if !status.success() {
        return Err(format!("experiment exited with {status}"));
    }
    let rows = read_summary(&out);
    let med = |label: &str| median(rows.iter().filter(|r| r.0 == label).map(|r| r.1).collect());
    let (a, b, c) = (med("1pct"), med("0.1pct"), med("0.01pct"));
    verdict(a >= b && b >= c, format!("median RelErr(10): 1% {a:.4e}, 0.1% {b:.4e}, 0.01% {c:.4e}"))
}

fn noise_bound() -> Check {
    let spec = reference_spec(60, DriftSpec::Smooth);
    let g = solve_forward(&spec, &spec.drift_field().unwrap()).unwrap().u_t;
    let bound_unit = g.norm_linf() / 2.0;
    let mut ok = true;
    let mut worst_ratio = 0.0f64;
    for delta in [2e-4, 2e-3, 2e-2, 6e-2, 0.5] {
        for seed in 0..20u64 {
            let err = add_noise(&g, &NoiseConfig { delta, seed }).sub(&g).norm_linf();
            ok &= err <= delta * bound_unit;
            worst_ratio = worst_ratio.max(err / (delta * bound_unit));
        }
    }
    verdict(ok, format!("max ||g_delta - g|| / (delta/2 ||g||) = {worst_ratio:.6} over 100 draws"))
}

fn stopping_behavior() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    let cfg = InverseConfig { tol: 1e-13, ..InverseConfig::default() };
    for (name, drift) in targets() {
        let (spec, q, obs) = crime_observation(drift);
        let rep = iterate(&obs, &spec, &cfg, Some(&q)).map_err(|e| e.to_string())?;
        ok &= matches!(rep.stop_reason, StopReason::Tolerance | StopReason::MaxIters);
        parts.push(format!("{name} {:?}", rep.stop_reason));
    }
    verdict(ok, parts.join(", "))
}

fn csv_files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn reproducibility(tmp: &Path) -> Check {
    let runs = [tmp.join("rep_a"), tmp.join("rep_b")];
    for out in &runs {
        let status = cli().args(["--quiet", "experiment", "smooth", "--seeds", "7", "--out"]).arg(out).status().unwrap();
        if !status.success() {
            return Err(format!("experiment exited with {status}"));
        }
    }
    let (a, b) = (csv_files(&runs[0]), csv_files(&runs[1]));
    if a != b {
        return Err("different file sets".into());
    }
    let differing: Vec<_> = a
        .iter()
        .filter(|rel| std::fs::read(runs[0].join(rel)).unwrap() != std::fs::read(runs[1].join(rel)).unwrap())
        .collect();
    verdict(differing.is_empty(), format!("{} CSV files compared, {} differ", a.len(), differing.len()))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("scheme verification (MMS)", Box::new(mms_orders)),
        ("constant steady state", Box::new(constant_steady_state)),
        ("fixed-point consistency", Box::new(fixed_point_consistency)),
        ("monotone decreasing iterates", Box::new(monotone_iterates)),
        ("monotone operator", Box::new(monotone_operator)),
        ("default pipeline, smooth target", Box::new(reference_pipeline)),
        ("noise ordering", Box::new(|| noise_ordering(tmp.path()))),
        ("noise hard bound", Box::new(noise_bound)),
        ("stopping behavior", Box::new(stopping_behavior)),
        ("reproducibility", Box::new(|| reproducibility(tmp.path()))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
