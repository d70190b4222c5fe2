use crate::manifest::{now, Invocation, Manifest, OutDir, MANIFEST};
use anyhow::{bail, Context, Result};
use drift_recover::config::{BoxParams, DriftConfig, MaskParams, ScenarioConfig};
use drift_recover::field_io::{load_csv, save_csv};
use drift_recover::forward::SolverStats;
use drift_recover::noise::RNG_NAME;
use drift_recover::validation::Refinement;
use drift_recover::{
    add_noise, build_observation, iterate, mms_study, restrict, solve_forward, Execution, InverseConfig, IterationReport,
    NoiseConfig, ScalarField, StopReason,
};
use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Input that could not be used as given; maps to the configuration exit code.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Diverged,
}

pub struct Ctx {
    pub quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => ScenarioConfig::load(p).map_err(|e| InputError(format!("{}: {e}", p.display())).into()),
        None => Ok(ScenarioConfig::default()),
    }
}

fn with_overrides(cfg: &ScenarioConfig, max_iters: Option<usize>, tol: Option<f64>) -> Result<InverseConfig> {
    let mut it = cfg.iteration;
    if let Some(n) = max_iters {
        it.max_iters = n;
    }
    if let Some(t) = tol {
        it.tol = t;
    }
    it.validate().map_err(|e| InputError(e.to_string()))?;
    Ok(it)
}

fn manifest(cfg: &ScenarioConfig, invocation: Invocation, started_at: String, seeds: Vec<u64>) -> Manifest {
    Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        invocation,
        config: serde_json::from_str(&cfg.with_absolute_paths().to_json()).expect("config echo is JSON"),
        started_at,
        finished_at: now(),
        rng: RNG_NAME.to_string(),
        seeds,
        solver: SolverStats::default(),
        outputs: Vec::new(),
        summary: serde_json::Value::Null,
    }
}

/// Noise-free terminal data on the inversion grid: solved on the data grid
/// (or on the inversion grid itself for `inverse_crime`) and restricted.
fn clean_observation(cfg: &ScenarioConfig, inverse_crime: bool) -> Result<(ScalarField, SolverStats)> {
    let coarse = cfg.inversion_grid()?;
    let data_grid = if inverse_crime { coarse } else { cfg.data_grid()? };
    let spec = cfg.problem(data_grid)?;
    let q = spec.drift_field()?;
    let sol = solve_forward(&spec, &q)?;
    Ok((restrict(&sol.u_t, &coarse)?, sol.stats))
}

pub fn generate_data(cfg: &ScenarioConfig, inverse_crime: bool, out: &Path, ctx: &Ctx) -> Result<Outcome> {
    let started = now();
    let mut dir = OutDir::create(out)?;
    ctx.note(format!(
        "generating data: {}x{} -> {}x{}",
        cfg.fine_grid.nx, cfg.fine_grid.ny, cfg.grid.nx, cfg.grid.ny
    ));
    let (g, stats) = clean_observation(cfg, inverse_crime)?;
    let g = add_noise(&g, &cfg.noise);
    save_csv(&g, dir.file("g.csv")?)?;
    let q_true = cfg.problem(cfg.inversion_grid()?)?.drift_field()?;
    save_csv(&q_true, dir.file("q_true.csv")?)?;

    let mut m = manifest(cfg, Invocation::GenerateData { inverse_crime }, started, vec![cfg.noise.seed]);
    m.solver = stats;
    m.summary = json!({ "delta": cfg.noise.delta, "nodes": g.values().len() });
    dir.finish(m)?;
    Ok(Outcome::Done)
}

/// Result of one reconstruction written below some output directory.
struct RunRecord {
    files: Vec<String>,
    stop_reason: StopReason,
    iterations: usize,
    rel_err_first: f64,
    rel_err_last: f64,
    smoothing_strength: f64,
    reference_drift: Option<f64>,
    floored_nodes: usize,
    stats: SolverStats,
}

fn iterate_file(k: usize) -> String {
    format!("q_{k:03}.csv")
}

fn convergence_csv(rep: &IterationReport) -> String {
    let mut s = String::from("k,increment,rel_err\n");
    for k in 0..rep.iterates.len() {
        let inc = if k == 0 { String::new() } else { rep.increments[k - 1].to_string() };
        let rel = rep.rel_errors.as_ref().map(|r| r[k].to_string()).unwrap_or_default();
        let _ = writeln!(s, "{k},{inc},{rel}");
    }
    s
}

/// Reconstruct from `g` and write iterates plus the convergence table into
/// `root/rel`. Returns paths relative to `root`.
fn reconstruct(
    cfg: &ScenarioConfig,
    it: &InverseConfig,
    g: &ScalarField,
    delta: f64,
    root: &Path,
    rel: &str,
) -> Result<RunRecord> {
    let spec = cfg.problem(cfg.inversion_grid()?)?;
    let obs = build_observation(g, &spec, &cfg.denoise, delta, it.dx_floor_rel)?;
    let q_true = spec.drift_field()?;
    let rep = iterate(&obs, &spec, it, Some(&q_true))?;

    let join = |name: &str| if rel.is_empty() { name.to_string() } else { format!("{rel}/{name}") };
    fs::create_dir_all(root.join(rel))?;
    let mut files = Vec::new();
    for (k, q) in rep.iterates.iter().enumerate() {
        let name = join(&iterate_file(k));
        save_csv(q, root.join(&name))?;
        files.push(name);
    }
    let name = join("convergence.csv");
    fs::write(root.join(&name), convergence_csv(&rep))?;
    files.push(name);

    let rel_errs = rep.rel_errors.as_ref().expect("truth supplied");
    Ok(RunRecord {
        files,
        stop_reason: rep.stop_reason,
        iterations: rep.iterations_run,
        rel_err_first: rel_errs[0],
        rel_err_last: *rel_errs.last().expect("q_0 present"),
        smoothing_strength: obs.smoothing_strength,
        reference_drift: obs.reference_drift,
        floored_nodes: obs.floored_nodes,
        stats: rep.stats,
    })
}

fn run_summary(r: &RunRecord) -> serde_json::Value {
    json!({
        "stop_reason": format!("{:?}", r.stop_reason),
        "iterations": r.iterations,
        "rel_err_initial": r.rel_err_first,
        "rel_err_final": r.rel_err_last,
        "smoothing_strength": r.smoothing_strength,
        "reference_drift": r.reference_drift,
        "floored_nodes": r.floored_nodes,
    })
}

pub fn invert(
    cfg: &ScenarioConfig,
    data: &Path,
    max_iters: Option<usize>,
    tol: Option<f64>,
    out: &Path,
    ctx: &Ctx,
) -> Result<Outcome> {
    let started = now();
    let it = with_overrides(cfg, max_iters, tol)?;
    let g = load_csv(data).map_err(|e| InputError(format!("{}: {e}", data.display())))?;
    let grid = cfg.inversion_grid()?;
    if g.grid() != &grid {
        return Err(InputError(format!(
            "data grid {}x{} does not match the inversion grid {}x{}",
            g.grid().nx(),
            g.grid().ny(),
            grid.nx(),
            grid.ny()
        ))
        .into());
    }
    let mut dir = OutDir::create(out)?;
    ctx.note(format!("inverting {} ({} iterations max)", data.display(), it.max_iters));
    let rec = reconstruct(cfg, &it, &g, cfg.noise.delta, dir.root(), "")?;
    dir.record(rec.files.clone());

    // the first three iterates form the second figure row for noisy data
    let first: Vec<&String> = rec.files.iter().filter(|f| f.starts_with("q_")).take(3).collect();
    let panels = json!({
        "final": rec.files.iter().rfind(|f| f.starts_with("q_")),
        "first_iterates": first,
        "convergence": "convergence.csv",
    });
    fs::write(dir.file("panels.json")?, serde_json::to_string_pretty(&panels)? + "\n")?;
    ctx.note(format!(
        "{:?} after {} iterations, RelErr {:.4e}",
        rec.stop_reason, rec.iterations, rec.rel_err_last
    ));

    let data = std::path::absolute(data).unwrap_or_else(|_| data.to_path_buf());
    let mut m = manifest(cfg, Invocation::Invert { data, max_iters, tol }, started, vec![cfg.noise.seed]);
    m.solver = rec.stats;
    m.summary = run_summary(&rec);
    dir.finish(m)?;
    Ok(match rec.stop_reason {
        StopReason::Divergence => Outcome::Diverged,
        _ => Outcome::Done,
    })
}

pub fn mms(cfg: &ScenarioConfig, out: &Path, ctx: &Ctx) -> Result<Outcome> {
    let started = now();
    let drift = cfg.drift_spec()?;
    let problem = cfg.mms_problem();
    let mut dir = OutDir::create(out)?;
    let mut summary = serde_json::Map::new();
    for (name, refinement, resolutions) in [
        ("spatial", Refinement::Space, cfg.spatial_resolutions()),
        ("temporal", Refinement::Time, cfg.temporal_resolutions()),
    ] {
        ctx.note(format!("{name} study over {} resolutions", resolutions.len()));
        let study = mms_study(&drift, &problem, refinement, &resolutions, Execution::default())
            .map_err(|e| InputError(format!("mms.{name}: {e}")))?;
        fs::write(dir.file(&format!("{name}.csv"))?, study.to_csv())?;
        summary.insert(
            name.to_string(),
            json!({
                "orders_inf": study.orders(),
                "orders_l2": study.orders_l2(),
                "fitted_order_l2": study.fitted_order_l2(),
                "monotone": study.monotone,
            }),
        );
    }
    let mut m = manifest(cfg, Invocation::Mms, started, Vec::new());
    m.summary = serde_json::Value::Object(summary);
    dir.finish(m)?;
    Ok(Outcome::Done)
}

/// Noise levels of the reference study: label, percent of `||g||_inf`.
/// The uniform perturbation on `[-1/2, 1/2]` means `delta = 2 * level`.
pub const NOISE_LEVELS: [(&str, f64); 5] =
    [("0", 0.0), ("1pct", 1.0), ("0.1pct", 0.1), ("0.01pct", 0.01), ("3pct", 3.0)];

pub fn level_delta(percent: f64) -> f64 {
    2.0 * percent / 100.0
}

pub fn experiment_drift(name: &str) -> Result<DriftConfig> {
    Ok(match name {
        "smooth" => DriftConfig::Smooth,
        "piecewise" => DriftConfig::PiecewiseConstant { params: BoxParams::default() },
        "character" => DriftConfig::Mask { params: MaskParams::default(), mask_path: None },
        other => return Err(InputError(format!("unknown experiment `{other}` (smooth, piecewise, character)")).into()),
    })
}

struct Run {
    label: &'static str,
    delta: f64,
    seed: Option<u64>,
}

impl Run {
    fn dir(&self) -> String {
        match self.seed {
            Some(s) => format!("level_{}/seed_{s}", self.label),
            None => format!("level_{}", self.label),
        }
    }
}

pub struct ExperimentOptions {
    pub seeds: Vec<u64>,
    pub inverse_crime: bool,
    pub noise_only: bool,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

pub fn experiment(name: &str, base: &ScenarioConfig, opts: &ExperimentOptions, out: &Path, ctx: &Ctx) -> Result<Outcome> {
    let started = now();
    let mut cfg = base.clone();
    cfg.drift = experiment_drift(name)?;
    cfg.denoise.enabled = true;
    let it = with_overrides(&cfg, opts.max_iters, opts.tol)?;
    let seeds = if opts.seeds.is_empty() { vec![cfg.noise.seed] } else { opts.seeds.clone() };

    let mut dir = OutDir::create(out)?;
    let (g_clean, data_stats) = clean_observation(&cfg, opts.inverse_crime)?;
    let q_true = cfg.problem(cfg.inversion_grid()?)?.drift_field()?;
    save_csv(&q_true, dir.file("q_true.csv")?)?;
    save_csv(&g_clean, dir.file("g_clean.csv")?)?;

    let mut runs = Vec::new();
    for &(label, percent) in &NOISE_LEVELS {
        if percent == 0.0 {
            if !opts.noise_only {
                runs.push(Run { label, delta: 0.0, seed: None });
            }
            continue;
        }
        runs.extend(seeds.iter().map(|&s| Run { label, delta: level_delta(percent), seed: Some(s) }));
    }
    ctx.note(format!("experiment {name}: {} runs on {} threads", runs.len(), drift_recover::parallel::current_threads()));

    let root = dir.root().to_path_buf();
    let results = Execution::default().map(&runs, |run| -> Result<RunRecord> {
        let rel = run.dir();
        let g = match run.seed {
            Some(seed) => add_noise(&g_clean, &NoiseConfig { delta: run.delta, seed }),
            None => g_clean.clone(),
        };
        fs::create_dir_all(root.join(&rel))?;
        save_csv(&g, root.join(format!("{rel}/g.csv")))?;
        let mut rec = reconstruct(&cfg, &it, &g, run.delta, &root, &rel).with_context(|| format!("run {rel}"))?;
        rec.files.insert(0, format!("{rel}/g.csv"));
        Ok(rec)
    });

    let mut stats = data_stats;
    let mut table = String::from("level,delta,seed,stop_reason,iterations,rel_err_initial,rel_err_final\n");
    let mut run_json = Vec::new();
    let mut diverged = false;
    let mut records = Vec::new();
    for (run, res) in runs.iter().zip(results) {
        let rec = res?;
        stats.accumulate(&rec.stats);
        diverged |= rec.stop_reason == StopReason::Divergence;
        let seed = run.seed.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            table,
            "{},{},{},{:?},{},{},{}",
            run.label, run.delta, seed, rec.stop_reason, rec.iterations, rec.rel_err_first, rec.rel_err_last
        );
        let mut j = run_summary(&rec);
        j["dir"] = json!(run.dir());
        j["delta"] = json!(run.delta);
        run_json.push(j);
        ctx.note(format!("  {:<18} {:?} RelErr {:.4e}", run.dir(), rec.stop_reason, rec.rel_err_last));
        dir.record(rec.files.clone());
        records.push((run, rec));
    }
    fs::write(dir.file("summary.csv")?, table)?;
    fs::write(dir.file("figures.json")?, serde_json::to_string_pretty(&figure_panels(name, &records))? + "\n")?;

    let mut m = manifest(
        &cfg,
        Invocation::Experiment {
            name: name.to_string(),
            seeds: opts.seeds.clone(),
            inverse_crime: opts.inverse_crime,
            noise_only: opts.noise_only,
            max_iters: opts.max_iters,
            tol: opts.tol,
        },
        started,
        seeds,
    );
    m.solver = stats;
    m.summary = json!({ "runs": run_json });
    dir.finish(m)?;
    Ok(if diverged { Outcome::Diverged } else { Outcome::Done })
}

/// Which files fill which figure panel. Noisy panels use the first seed.
fn figure_panels(name: &str, records: &[(&Run, RunRecord)]) -> serde_json::Value {
    let last_iterate = |r: &RunRecord| r.files.iter().rfind(|f| f.contains("/q_") || f.starts_with("q_")).cloned();
    let first_seed = |label: &str| records.iter().find(|(run, _)| run.label == label);
    let noise_free = records.iter().find(|(run, _)| run.seed.is_none()).map(|(run, rec)| {
        json!({
            "layout": "row-of-3",
            "panels": [
                { "title": "exact", "field": "q_true.csv" },
                { "title": "reconstruction", "field": last_iterate(rec) },
                { "title": "relative error", "curve": format!("{}/convergence.csv", run.dir()) },
            ],
        })
    });
    let mut top = Vec::new();
    for (label, title) in [("1pct", "1%"), ("0.1pct", "0.1%"), ("0.01pct", "0.01%")] {
        if let Some((_, rec)) = first_seed(label) {
            top.push(json!({ "title": title, "field": last_iterate(rec) }));
        }
    }
    let mut bottom = Vec::new();
    if let Some((run, _)) = first_seed("3pct") {
        for k in 0..3 {
            bottom.push(json!({ "title": format!("3%, q{k}"), "field": format!("{}/{}", run.dir(), iterate_file(k)) }));
        }
    }
    json!({
        "experiment": name,
        "noise_free": noise_free,
        "noisy": { "layout": "2x3", "color_range": "shared", "rows": [top, bottom] },
    })
}

pub fn replay(manifest_path: &Path, out: &Path, ctx: &Ctx) -> Result<Outcome> {
    let path = if manifest_path.is_dir() { manifest_path.join(MANIFEST) } else { manifest_path.to_path_buf() };
    let m = Manifest::load(&path).map_err(|e| InputError(format!("{e:#}")))?;
    let cfg = ScenarioConfig::from_json(&m.config.to_string()).map_err(|e| InputError(format!("manifest config: {e}")))?;
    if out.join(MANIFEST).exists() && same_dir(out, path.parent().unwrap_or(Path::new("."))) {
        bail!(InputError("replay would overwrite the run it replays; choose another --out".into()));
    }
    ctx.note(format!("replaying {} from {}", invocation_name(&m.invocation), path.display()));
    match m.invocation {
        Invocation::GenerateData { inverse_crime } => generate_data(&cfg, inverse_crime, out, ctx),
        Invocation::Invert { data, max_iters, tol } => invert(&cfg, &data, max_iters, tol, out, ctx),
        Invocation::Mms => mms(&cfg, out, ctx),
        Invocation::Experiment { name, seeds, inverse_crime, noise_only, max_iters, tol } => {
            let opts = ExperimentOptions { seeds, inverse_crime, noise_only, max_iters, tol };
            experiment(&name, &cfg, &opts, out, ctx)
        }
    }
}

fn invocation_name(inv: &Invocation) -> &'static str {
    match inv {
        Invocation::GenerateData { .. } => "generate-data",
        Invocation::Invert { .. } => "invert",
        Invocation::Mms => "mms",
        Invocation::Experiment { .. } => "experiment",
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    let canon = |p: &Path| -> PathBuf { fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf()) };
    canon(a) == canon(b)
}
