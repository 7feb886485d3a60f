//! Command implementations behind the CLI: simulate, verify, converge.
//!
//! Each command loads a TOML config (with optional overrides), runs, writes
//! its artifacts under the output directory, and returns a process exit
//! code: 0 success, 1 runtime or assertion failure, 2 configuration error.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    convergence_table, BumpTestFunction, ConvergenceTable, TestFunction,
    WeakResidualAccumulator, WeakResidualReport,
};
use crate::config::RunConfig;
use crate::diagnostics::{DiagnosticsCollector, DiagnosticsReport, StepSeries};
use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::grid::Grid;
use crate::integrator::{integrate, Observer, RunResult};
use crate::io;
use crate::state::State;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable controlling the ladder thread count.
pub const THREADS_ENV: &str = "KKSOLVE_THREADS";

/// Resolved invocation: config file, output dir, overrides, verbosity.
#[derive(Debug, Clone)]
pub struct CliOptions {
    pub config: PathBuf,
    pub output: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub quiet: bool,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Input(_) | Error::Domain(_) => EXIT_CONFIG,
        Error::Solver(_) | Error::Io(_) => EXIT_RUNTIME,
    }
}

fn load(opts: &CliOptions) -> Result<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(&opts.config)?;
    let mut cfg = RunConfig::parse_with_overrides(&text, &opts.overrides)?;
    if let Some(dir) = &opts.output {
        cfg.output.directory = dir.display().to_string();
    }
    let out_dir = PathBuf::from(&cfg.output.directory);
    Ok((cfg, out_dir))
}

fn write_manifest(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let header = format!(
        "# kksolve {} run manifest; re-run with `kksolve <command> --config manifest.toml`\n",
        env!("CARGO_PKG_VERSION")
    );
    io::write_text(&out_dir.join("manifest.toml"), &(header + &cfg.to_toml()?))
}

/// Everything a finished simulation produced.
pub struct SimulationOutput {
    pub grid: Grid,
    pub model: FluxModel,
    pub result: RunResult,
    pub report: Option<DiagnosticsReport>,
    pub series: StepSeries,
}

/// Validate the config, build the problem, and run it with the diagnostics
/// collector attached when enabled.
pub fn run_simulation(cfg: &RunConfig, strict_cfl: bool) -> Result<SimulationOutput> {
    let problem = cfg.build(strict_cfl)?;
    let state0 = problem.initial.project(&problem.grid)?;
    let mut collector = if cfg.diagnostics.enabled {
        let mut c = DiagnosticsCollector::new(
            problem.model.clone(),
            problem.grid.clone(),
            cfg.diagnostics.slack,
        )?;
        c.track_dissipation = cfg.diagnostics.track_dissipation;
        Some(c)
    } else {
        None
    };
    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    if let Some(c) = collector.as_mut() {
        observers.push(c);
    }
    let result = integrate(state0, &problem.model, &problem.grid, &cfg.integrator, &mut observers)?;
    let (report, series) = match collector {
        Some(c) => (Some(c.report()), c.step_series().clone()),
        None => (None, StepSeries::default()),
    };
    Ok(SimulationOutput {
        grid: problem.grid,
        model: problem.model,
        result,
        report,
        series,
    })
}

fn write_simulation_artifacts(out: &SimulationOutput, out_dir: &Path) -> Result<()> {
    for (i, snap) in out.result.snapshots.iter().enumerate() {
        let path = out_dir.join(format!("snapshot_{i:04}.csv"));
        io::write_text(&path, &io::snapshot_csv(snap, &out.grid))?;
    }
    io::write_text(&out_dir.join("series.csv"), &io::series_csv(&out.series))?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("final_state.bin"),
        io::encode_snapshot(&out.result.final_state, &out.grid),
    )?;
    if let Some(report) = &out.report {
        io::write_json(&out_dir.join("diagnostics.json"), report)?;
    }
    Ok(())
}

/// Run one simulation and write snapshots, series, diagnostics, manifest.
pub fn cmd_simulate(opts: &CliOptions) -> i32 {
    match simulate_inner(opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn simulate_inner(opts: &CliOptions) -> Result<i32> {
    let (cfg, out_dir) = load(opts)?;
    let out = run_simulation(&cfg, true)?;
    write_simulation_artifacts(&out, &out_dir)?;
    write_manifest(&cfg, &out_dir)?;
    if let Some(failure) = &out.result.failure {
        eprintln!("solver aborted: {failure}");
        return Ok(EXIT_RUNTIME);
    }
    if !opts.quiet {
        println!(
            "simulate: {} steps to t = {}, {} snapshots -> {}",
            out.result.steps,
            out.result.final_state.t,
            out.result.snapshots.len(),
            out_dir.display()
        );
    }
    Ok(EXIT_SUCCESS)
}

/// Run with the full inequality suite and report a per-check verdict table.
pub fn cmd_verify(opts: &CliOptions) -> i32 {
    match verify_inner(opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn verify_inner(opts: &CliOptions) -> Result<i32> {
    let (mut cfg, out_dir) = load(opts)?;
    cfg.diagnostics.enabled = true;
    cfg.diagnostics.track_dissipation = true;
    // relaxed CFL validation: deliberately inadmissible settings are allowed
    // so that their expected failures can be observed and reported
    let out = run_simulation(&cfg, false)?;
    let report = out.report.as_ref().expect("diagnostics enabled");
    write_simulation_artifacts(&out, &out_dir)?;
    io::write_json(&out_dir.join("verify_report.json"), report)?;
    write_manifest(&cfg, &out_dir)?;
    if !opts.quiet {
        println!("{:<22} {:<6} {:>14} {:>10}  detail", "check", "result", "violation", "at_t");
        for c in &report.checks {
            println!(
                "{:<22} {:<6} {:>14.3e} {:>10.4}  {}",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.worst_violation,
                c.at_time,
                c.detail
            );
        }
    }
    if let Some(failure) = &out.result.failure {
        eprintln!("solver aborted: {failure}");
        return Ok(EXIT_RUNTIME);
    }
    Ok(if report.all_pass { EXIT_SUCCESS } else { EXIT_RUNTIME })
}

fn thread_count(n_levels: usize) -> usize {
    let requested = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        });
    requested.min(n_levels).max(1)
}

/// Build the weak-form test functions: the configured ones plus any
/// seeded-random placements, all validated against the domain and horizon.
fn build_test_functions(cfg: &RunConfig) -> Result<Vec<BumpTestFunction>> {
    let conv = cfg.convergence.as_ref().expect("checked by caller");
    let mut psis: Vec<BumpTestFunction> = conv
        .test_functions
        .iter()
        .map(|t| t.build())
        .collect::<Result<_>>()?;
    if conv.random_test_functions > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let span = cfg.grid.x_max - cfg.grid.x_min;
        let t_end = cfg.integrator.t_end;
        if !(t_end > 0.0) {
            return Err(Error::Config(
                "random test functions need a positive t_end".into(),
            ));
        }
        for _ in 0..conv.random_test_functions {
            let wx = 0.15 * span;
            let wt = 0.2 * t_end;
            let xc = rng.gen_range(cfg.grid.x_min + 1.1 * wx..cfg.grid.x_max - 1.1 * wx);
            let tc = rng.gen_range(1.1 * wt..t_end - 1.1 * wt);
            psis.push(BumpTestFunction::new(xc, wx, tc, wt)?);
        }
    }
    Ok(psis)
}

fn run_ladder_level(
    cfg: &RunConfig,
    n_cells: usize,
    psis: &[BumpTestFunction],
) -> Result<(Grid, State, Vec<WeakResidualReport>)> {
    let mut level = cfg.clone();
    level.grid.n_cells = n_cells;
    let problem = level.build(true)?;
    let state0 = problem.initial.project(&problem.grid)?;
    let mut accumulators: Vec<WeakResidualAccumulator> = psis
        .iter()
        .map(|p| {
            WeakResidualAccumulator::new(&problem.model, p, &problem.grid, level.integrator.t_end)
        })
        .collect::<Result<_>>()?;
    let mut observers: Vec<&mut dyn Observer> =
        accumulators.iter_mut().map(|a| a as &mut dyn Observer).collect();
    let result = integrate(
        state0,
        &problem.model,
        &problem.grid,
        &level.integrator,
        &mut observers,
    )?;
    if let Some(failure) = result.failure {
        return Err(Error::Solver(format!("ladder level {n_cells}: {failure}")));
    }
    let reports = accumulators.iter().map(|a| a.report()).collect();
    Ok((problem.grid, result.final_state, reports))
}

/// Per-doubling shrink factors |residual(N)| / |residual(2N)|, per test
/// function, for one component.
fn shrink_factors(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.windows(2)
        .map(|w| {
            w[0].iter()
                .zip(w[1].iter())
                .map(|(&coarse, &fine)| coarse.abs() / fine.abs().max(f64::MIN_POSITIVE))
                .collect()
        })
        .collect()
}

#[derive(serde::Serialize)]
struct ConvergenceReport {
    table: ConvergenceTable,
    test_functions: Vec<BumpTestFunction>,
    /// residuals[level][test function]
    residuals_u: Vec<Vec<f64>>,
    residuals_v: Vec<Vec<f64>>,
    shrink_u: Vec<Vec<f64>>,
    shrink_v: Vec<Vec<f64>>,
    min_rate_r: f64,
    min_residual_shrink: f64,
    rates_pass: bool,
    residuals_pass: bool,
    pass: bool,
}

/// Run the resolution ladder, assemble self-convergence rates and weak
/// residual shrink factors, and gate on the configured thresholds.
pub fn cmd_converge(opts: &CliOptions) -> i32 {
    match converge_inner(opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn converge_inner(opts: &CliOptions) -> Result<i32> {
    let (cfg, out_dir) = load(opts)?;
    cfg.build(true)?;
    let conv = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| Error::Config("converge needs a [convergence] section".into()))?
        .clone();
    let psis = build_test_functions(&cfg)?;

    let resolutions = conv.resolutions.clone();
    let n_threads = thread_count(resolutions.len());
    let chunk_size = resolutions.len().div_ceil(n_threads);
    let mut slots: Vec<Option<Result<(Grid, State, Vec<WeakResidualReport>)>>> =
        (0..resolutions.len()).map(|_| None).collect();
    {
        let cfg = &cfg;
        let psis = &psis;
        let resolutions = &resolutions;
        std::thread::scope(|scope| {
            for (ci, chunk) in slots.chunks_mut(chunk_size).enumerate() {
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        let n = resolutions[ci * chunk_size + k];
                        *slot = Some(run_ladder_level(cfg, n, psis));
                    }
                });
            }
        });
    }

    let mut levels = Vec::new();
    let mut residuals_u: Vec<Vec<f64>> = Vec::new();
    let mut residuals_v: Vec<Vec<f64>> = Vec::new();
    for slot in slots {
        let (grid, state, reports) = slot.expect("all slots filled")?;
        levels.push((grid, state));
        residuals_u.push(reports.iter().map(|r| r.residual_u).collect());
        residuals_v.push(reports.iter().map(|r| r.residual_v).collect());
    }
    let table = convergence_table(&levels)?;

    let shrink_u = shrink_factors(&residuals_u);
    let shrink_v = shrink_factors(&residuals_v);
    let rates_pass = table
        .rates_r
        .iter()
        .all(|&r| r.is_nan() || r >= conv.min_rate_r);
    let residuals_pass = psis.is_empty()
        || shrink_u
            .iter()
            .chain(shrink_v.iter())
            .flatten()
            .all(|&f| f >= conv.min_residual_shrink);
    let report = ConvergenceReport {
        pass: rates_pass && residuals_pass,
        table,
        test_functions: psis,
        residuals_u: residuals_u.clone(),
        residuals_v: residuals_v.clone(),
        shrink_u,
        shrink_v,
        min_rate_r: conv.min_rate_r,
        min_residual_shrink: conv.min_residual_shrink,
        rates_pass,
        residuals_pass,
    };

    io::write_text(&out_dir.join("convergence.csv"), &io::convergence_csv(&report.table))?;
    let mut weak_rows = Vec::new();
    for (li, &n) in resolutions.iter().enumerate() {
        for (pi, psi) in report.test_functions.iter().enumerate() {
            weak_rows.push((
                n,
                WeakResidualReport {
                    test_function_id: psi.id(),
                    residual_u: residuals_u[li][pi],
                    residual_v: residuals_v[li][pi],
                },
            ));
        }
    }
    io::write_text(&out_dir.join("weak_residuals.csv"), &io::weak_residual_csv(&weak_rows))?;
    io::write_json(&out_dir.join("convergence.json"), &report)?;
    write_manifest(&cfg, &out_dir)?;

    if !opts.quiet {
        println!("resolutions: {resolutions:?}");
        println!("l1 self-errors (r): {:?}", report.table.l1_errors_r);
        println!(
            "rates (r): {:?}  (threshold {}) -> {}",
            report.table.rates_r,
            conv.min_rate_r,
            if rates_pass { "PASS" } else { "FAIL" }
        );
        println!(
            "weak-residual shrink factors u: {:?} v: {:?}  (threshold {}) -> {}",
            report.shrink_u,
            report.shrink_v,
            conv.min_residual_shrink,
            if residuals_pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(if report.pass { EXIT_SUCCESS } else { EXIT_RUNTIME })
}
