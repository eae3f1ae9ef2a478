//! Command-line front end.
//!
//! Subcommands: `kernel-info`, `simulate`, `solve`, `compare`,
//! `convergence`, `reproduce <manifest>`. Exit code is 0 on success and
//! nonzero when any stage fails (or, for `reproduce`, when any artifact
//! differs).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slowbond::config::{BarrierConfig, ExperimentConfig, KernelConfig, Overrides, ProfileConfig};
use slowbond::experiment::{
    reproduce, robin_flux_prediction, run_and_emit, run_ensemble_parallel, select_regime,
};
use slowbond::manifest::write_manifest;
use slowbond::{csvio, snapshot, stage, HarnessError};
use slowbond_core::kernel::{build_kernel, crossing_first_moment, sigma_s2, BarrierSpec, JumpKernel};
use slowbond_core::pde::{solve, PdeProblem, PdeSolution, Regime};
use slowbond_core::sim::{ModelConfig, TrajectoryPlan};
use slowbond_core::weakform::{
    convergence_suite, default_smooth_test_function, default_two_sided_test_function, SuiteKind,
    SuiteRow,
};

#[derive(Parser, Debug)]
#[command(
    name = "slowbond",
    version,
    about = "Exclusion gas with a damped interface: simulate, solve, compare, reproduce."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print moments and the macroscopic regime for a jump law + barrier.
    KernelInfo(KernelInfoOpts),
    /// Run the particle ensemble and store snapshots (binary + CSV).
    Simulate(CommonOpts),
    /// Solve the macroscopic equation; store profiles and interface traces.
    Solve(CommonOpts),
    /// Full pipeline: simulate, solve, compare; write report and overlays.
    Compare(CommonOpts),
    /// Evaluate discrete-operator convergence statistics as CSV.
    Convergence(ConvergenceOpts),
    /// Re-run a recorded experiment and byte-compare the artifacts.
    Reproduce(ReproduceOpts),
}

fn parse_kernel(s: &str) -> Result<KernelConfig, HarnessError> {
    s.parse()
}

fn parse_profile(s: &str) -> Result<ProfileConfig, HarnessError> {
    s.parse()
}

fn parse_bridge(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("bridge {s:?}: expected `x:y`"))?;
    let x = a
        .trim()
        .parse()
        .map_err(|e| format!("bridge site {a:?}: {e}"))?;
    let y = b
        .trim()
        .parse()
        .map_err(|e| format!("bridge site {b:?}: {e}"))?;
    Ok((x, y))
}

#[derive(Args, Debug)]
struct KernelInfoOpts {
    /// Jump law: `nn`, `weights=w1,w2,…`, or `gamma=G,zmax=Z`.
    #[arg(long, value_parser = parse_kernel, default_value = "nn")]
    kernel: KernelConfig,
    /// Damping amplitude α.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Damping exponent β.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Undamped bridge bond `x:y` (negative:nonnegative); repeatable.
    #[arg(long = "bridge", value_parser = parse_bridge, allow_hyphen_values = true)]
    bridge: Vec<(i64, i64)>,
}

#[derive(Args, Debug)]
struct CommonOpts {
    /// TOML configuration file; the flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Jump law: `nn`, `weights=w1,w2,…`, or `gamma=G,zmax=Z`.
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<KernelConfig>,
    /// Damping amplitude α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Damping exponent β.
    #[arg(long)]
    beta: Option<f64>,
    /// Undamped bridge bond `x:y`; repeatable. Any bridge switches the
    /// barrier to bridge mode.
    #[arg(long = "bridge", value_parser = parse_bridge, allow_hyphen_values = true)]
    bridge: Vec<(i64, i64)>,
    /// Initial profile: `constant(a)`, `step(a,b)`, or `bump(a,c,r)`.
    #[arg(long, value_parser = parse_profile)]
    profile: Option<ProfileConfig>,
    /// Scales to sweep, comma-separated.
    #[arg(long = "n-list", value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    /// Macroscopic horizon T.
    #[arg(long)]
    horizon: Option<f64>,
    /// Replica count M.
    #[arg(long)]
    replicas: Option<u32>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergenceOpts {
    /// Jump law: `nn`, `weights=w1,w2,…`, or `gamma=G,zmax=Z`.
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<KernelConfig>,
    /// Damping amplitude α.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Damping exponent β.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Undamped bridge bond `x:y`; repeatable.
    #[arg(long = "bridge", value_parser = parse_bridge, allow_hyphen_values = true)]
    bridge: Vec<(i64, i64)>,
    /// Scales to evaluate, comma-separated.
    #[arg(long = "n-list", value_delimiter = ',', default_value = "32,64,128,256")]
    n_list: Vec<u32>,
    /// Statistics to evaluate, comma-separated; default all of
    /// convdisc, neum1, lemconvrob, lemconvneum, princneu.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<String>>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproduceOpts {
    /// Path to the `manifest.json` of a previous run.
    manifest: PathBuf,
    /// Directory for the re-run (default: original directory name with a
    /// `-reproduced` suffix).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: &Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::KernelInfo(o) => cmd_kernel_info(o),
        Command::Simulate(o) => cmd_simulate(o),
        Command::Solve(o) => cmd_solve(o),
        Command::Compare(o) => cmd_compare(o),
        Command::Convergence(o) => cmd_convergence(o),
        Command::Reproduce(o) => cmd_reproduce(o),
    }
}

/// Merge the config file (or defaults) with CLI overrides and validate.
fn resolve(opts: &CommonOpts) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::from_toml_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        kernel: opts.kernel.clone(),
        alpha: opts.alpha,
        beta: opts.beta,
        bridges: (!opts.bridge.is_empty()).then(|| opts.bridge.clone()),
        profile: opts.profile,
        n_list: opts.n_list.clone(),
        horizon: opts.horizon,
        replicas: opts.replicas,
        seed: opts.seed,
        output_dir: opts.out.clone(),
    };
    cfg.apply(&overrides);
    cfg.validate()?;
    Ok(cfg)
}

fn regime_label(regime: Regime) -> String {
    match regime {
        Regime::Free => "free".into(),
        Regime::Robin { kappa } => format!("robin (kappa = {kappa})"),
        Regime::Neumann => "neumann".into(),
    }
}

fn build_plan(cfg: &ExperimentConfig, kernel: &JumpKernel, barrier: &BarrierSpec, n: u32) -> TrajectoryPlan {
    TrajectoryPlan {
        model: ModelConfig {
            kernel: kernel.clone(),
            barrier: barrier.clone(),
            n,
            window_half_width_sites: (cfg.run.window_factor * n as f64).round() as u32,
        },
        initial_profile: cfg.profile.to_profile(),
        horizon: cfg.run.horizon,
        snapshot_times: cfg.snapshot_times(),
        seed: cfg.run.seed,
        replicas: cfg.run.replicas,
        log_events: true,
    }
}

fn cmd_kernel_info(o: &KernelInfoOpts) -> Result<ExitCode, HarnessError> {
    let kernel = build_kernel(&o.kernel.to_spec()).map_err(stage("kernel"))?;
    let barrier = BarrierConfig {
        alpha: o.alpha,
        beta: o.beta,
        bridges: o.bridge.clone(),
    }
    .to_spec();
    barrier.validate(&kernel).map_err(stage("kernel"))?;
    println!("z_max = {}", kernel.z_max());
    println!("sigma2 = {}", kernel.sigma2());
    println!("m = {}", kernel.m());
    if let Some(c) = kernel.c_gamma() {
        println!("c_gamma = {c}");
    }
    println!("sigma_s2 = {}", sigma_s2(&kernel, &barrier));
    println!("crossing_first_moment = {}", crossing_first_moment(&kernel, &barrier));
    println!("alpha = {}", o.alpha);
    println!("beta = {}", o.beta);
    println!("regime = {}", regime_label(select_regime(&kernel, &barrier)));
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(opts: &CommonOpts) -> Result<ExitCode, HarnessError> {
    let cfg = resolve(opts)?;
    let kernel = build_kernel(&cfg.kernel.to_spec()).map_err(stage("kernel"))?;
    let barrier = cfg.barrier.to_spec();
    for &n in &cfg.run.n_list {
        let plan = build_plan(&cfg, &kernel, &barrier, n);
        let ensemble = run_ensemble_parallel(&plan).map_err(stage("simulate"))?;
        let sub = cfg.run.output_dir.join(format!("n{n}"));
        let bin_path = sub.join("snapshots.bin");
        snapshot::write_snapshots(&bin_path, cfg.run.seed, &ensemble)?;
        let store = snapshot::read_snapshots(&bin_path)?;
        snapshot::export_occupied_csv(&sub.join("occupied.csv"), &store)?;
        println!(
            "n = {n}: {} replicas × {} snapshots → {}",
            ensemble.len(),
            plan.snapshot_times.len(),
            bin_path.display()
        );
    }
    write_manifest(&cfg, &cfg.run.output_dir)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(opts: &CommonOpts) -> Result<ExitCode, HarnessError> {
    let cfg = resolve(opts)?;
    let kernel = build_kernel(&cfg.kernel.to_spec()).map_err(stage("kernel"))?;
    let barrier = cfg.barrier.to_spec();
    barrier.validate(&kernel).map_err(stage("kernel"))?;
    let regime = select_regime(&kernel, &barrier);
    let du = 1.0 / cfg.run.solver_cells_per_unit as f64;
    let solve_until = |horizon: f64| -> Result<PdeSolution, HarnessError> {
        solve(&PdeProblem {
            regime,
            sigma2: kernel.sigma2(),
            initial: cfg.profile.to_profile(),
            domain_half_width: cfg.run.window_factor,
            du,
            dt: du / 2.0,
            horizon,
        })
        .map_err(stage("solve"))
    };
    let mut solutions = Vec::new();
    for &t in &cfg.snapshot_times() {
        solutions.push((t, solve_until(t)?));
    }
    let blocks: Vec<_> = solutions
        .iter()
        .map(|(t, sol)| (*t, sol.final_field()))
        .collect();
    let full = solve_until(cfg.run.horizon)?;
    std::fs::create_dir_all(&cfg.run.output_dir)?;
    csvio::write_density_csv(&cfg.run.output_dir.join("pde_profiles.csv"), &blocks)?;
    csvio::write_trace_csv(&cfg.run.output_dir.join("pde_trace.csv"), &full.trace)?;
    println!("regime: {}", regime_label(regime));
    if let Regime::Robin { kappa } = regime {
        println!(
            "predicted cumulative interface flux at T = {}: {}",
            cfg.run.horizon,
            robin_flux_prediction(kernel.sigma2(), kappa, &full)
        );
    }
    println!("artifacts: {}", cfg.run.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(opts: &CommonOpts) -> Result<ExitCode, HarnessError> {
    let cfg = resolve(opts)?;
    let report = run_and_emit(&cfg)?;
    println!("regime: {}", regime_label(report.regime));
    println!("n,time,l1_distance,l1_stderr,jump_estimate,mean_crossings_per_replica");
    for r in &report.rows {
        println!(
            "{},{},{},{},{},{}",
            r.n, r.time, r.l1_distance, r.l1_stderr, r.jump_estimate, r.mean_crossings_per_replica
        );
    }
    if let Some(predicted) = report.flux_prediction {
        for flux in &report.fluxes {
            let measured = flux.measured.values.last().copied().unwrap_or(0.0);
            println!(
                "flux n = {}: measured {measured} vs predicted {predicted}",
                flux.n
            );
        }
    }
    println!("artifacts: {}", cfg.run.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

/// Evaluate the requested statistics; entries of `n_list` run in parallel,
/// results are merged in (kind, n) order so the output is deterministic.
fn evaluate_suites(
    kinds: &[SuiteKind],
    kernel: &JumpKernel,
    barrier: &BarrierSpec,
    n_list: &[u32],
) -> Result<Vec<SuiteRow>, HarnessError> {
    let mut all = Vec::new();
    for &kind in kinds {
        let g = match kind {
            SuiteKind::ConvDisc | SuiteKind::Neum1 => default_smooth_test_function(),
            _ => default_two_sided_test_function(),
        };
        let g_ref = &g;
        let per_n: Vec<Result<Vec<SuiteRow>, slowbond_core::Error>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = n_list
                    .iter()
                    .map(|&n| {
                        scope.spawn(move || convergence_suite(kind, g_ref, kernel, barrier, &[n]))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("suite worker panicked"))
                    .collect()
            });
        for rows in per_n {
            all.extend(rows.map_err(stage("convergence"))?);
        }
    }
    Ok(all)
}

fn cmd_convergence(o: &ConvergenceOpts) -> Result<ExitCode, HarnessError> {
    let kernel_cfg = o.kernel.clone().unwrap_or(KernelConfig::NearestNeighbour);
    let kernel = build_kernel(&kernel_cfg.to_spec()).map_err(stage("kernel"))?;
    let barrier = BarrierConfig {
        alpha: o.alpha,
        beta: o.beta,
        bridges: o.bridge.clone(),
    }
    .to_spec();
    barrier.validate(&kernel).map_err(stage("kernel"))?;
    let kinds: Vec<SuiteKind> = match &o.kinds {
        Some(names) => names
            .iter()
            .map(|s| csvio::suite_kind_from_name(s))
            .collect::<Result<_, _>>()?,
        None => vec![
            SuiteKind::ConvDisc,
            SuiteKind::Neum1,
            SuiteKind::LemConvRob,
            SuiteKind::LemConvNeum,
            SuiteKind::PrincNeu,
        ],
    };
    let rows = evaluate_suites(&kinds, &kernel, &barrier, &o.n_list)?;
    match &o.out {
        Some(path) => {
            csvio::write_suite_csv(path, &rows)?;
            println!("wrote {}", path.display());
        }
        None => csvio::write_suite_rows(&mut std::io::stdout().lock(), &rows)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn default_reproduce_dir(manifest_path: &Path) -> PathBuf {
    let parent = manifest_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    match parent.file_name().and_then(|s| s.to_str()) {
        Some(name) => parent.with_file_name(format!("{name}-reproduced")),
        None => PathBuf::from("reproduced"),
    }
}

fn cmd_reproduce(o: &ReproduceOpts) -> Result<ExitCode, HarnessError> {
    let out_dir = o
        .out
        .clone()
        .unwrap_or_else(|| default_reproduce_dir(&o.manifest));
    let results = reproduce(&o.manifest, &out_dir)?;
    let mut mismatches = 0usize;
    for (path, matched) in &results {
        if *matched {
            println!("ok        {path}");
        } else {
            println!("MISMATCH  {path}");
            mismatches += 1;
        }
    }
    if mismatches == 0 {
        println!("reproduced {} artifacts byte-identically", results.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{mismatches} of {} artifacts differ", results.len());
        Ok(ExitCode::FAILURE)
    }
}
