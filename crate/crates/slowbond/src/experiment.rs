//! The end-to-end pipeline: run the particle ensemble for every requested
//! scale, solve the matching macroscopic equation, and compare the two on a
//! shared grid.
//!
//! Everything here is deterministic given the resolved configuration: the
//! replica seed stream is `seed ^ i`, replica-level parallelism preserves
//! the sequential results bit for bit, and the artifacts are written with
//! deterministic formatting.

use std::path::{Path, PathBuf};

use slowbond_core::kernel::{build_kernel, sigma_s2, BarrierSpec, JumpKernel};
use slowbond_core::observables::{
    crossing_flux, empirical_density, l1_distance, mean_density, DensityField, FluxSeries,
};
use slowbond_core::pde::{robin_kappa, solve, InterfaceTrace, PdeProblem, PdeSolution, Regime};
use slowbond_core::sim::{run_ensemble, ModelConfig, ReplicaTrajectory, TrajectoryPlan};
use slowbond_core::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::manifest::write_manifest;
use crate::svg::overlay_svg;
use crate::{csvio, stage, HarnessError};

/// Upper bound on worker threads for replica-level parallelism.
const MAX_WORKERS: usize = 8;

/// The macroscopic interface condition implied by the microscopic model.
///
/// Any bridge keeps the interface invisible (a bridge carries kernel mass
/// by construction, so the crossing second moment drops strictly below the
/// full one), as does subcritical damping; critical damping produces a
/// transmission condition with conductance `2mα/σ²`; supercritical damping
/// seals the interface. The damping amplitude `α` only scales the
/// conductance — it never changes the label.
pub fn select_regime(kernel: &JumpKernel, barrier: &BarrierSpec) -> Regime {
    let leaks = !barrier.bridges().is_empty() || sigma_s2(kernel, barrier) < kernel.sigma2();
    if leaks || barrier.beta < 1.0 {
        Regime::Free
    } else if barrier.beta == 1.0 {
        Regime::Robin {
            kappa: robin_kappa(kernel, barrier.alpha),
        }
    } else {
        Regime::Neumann
    }
}

/// Macroscopic prediction for the final cumulative interface flux in the
/// transmission regime: `(σ²κ/2) ∫₀ᵀ [ρ(s,0⁻) − ρ(s,0⁺)] ds`, in the same
/// units as the measured series (net crossings over `n`).
pub fn robin_flux_prediction(sigma2: f64, kappa: f64, solution: &PdeSolution) -> f64 {
    -(sigma2 * kappa / 2.0) * solution.time_integrated_jump()
}

/// One comparison summary line.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub n: u32,
    pub time: f64,
    /// `‖ρ̂ − ρ‖_{L¹[−L,L]}` between the ensemble mean and the reference.
    pub l1_distance: f64,
    /// Leave-one-out jackknife standard error of `l1_distance` across
    /// replicas (0 when fewer than two replicas).
    pub l1_stderr: f64,
    /// `ρ̂(0⁺) − ρ̂(0⁻)` from the two bins adjacent to the interface.
    pub jump_estimate: f64,
    pub mean_crossings_per_replica: f64,
}

/// The two profiles behind one report row.
#[derive(Debug, Clone)]
pub struct ProfilePair {
    pub n: u32,
    pub time: f64,
    pub empirical: DensityField,
    pub reference: DensityField,
}

/// Replica-averaged cumulative interface flux for one scale.
#[derive(Debug, Clone)]
pub struct FluxSummary {
    pub n: u32,
    pub measured: FluxSeries,
}

/// Everything `run_experiment` learns, ready to be written to disk.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub regime: Regime,
    /// One row per (n, snapshot time), n-major, times ascending.
    pub rows: Vec<ComparisonRow>,
    /// Profile pairs in the same order as `rows`.
    pub profiles: Vec<ProfilePair>,
    /// One entry per n.
    pub fluxes: Vec<FluxSummary>,
    /// Interface trace of the full-horizon macroscopic solve.
    pub trace: InterfaceTrace,
    /// Predicted final cumulative flux; `Some` only in the transmission
    /// regime.
    pub flux_prediction: Option<f64>,
}

impl ComparisonReport {
    /// A report with no measurements (useful for exercising the emitters).
    pub fn empty(regime: Regime) -> ComparisonReport {
        ComparisonReport {
            regime,
            rows: Vec::new(),
            profiles: Vec::new(),
            fluxes: Vec::new(),
            trace: InterfaceTrace {
                times: Vec::new(),
                rho_left: Vec::new(),
                rho_right: Vec::new(),
                grad_left: Vec::new(),
                grad_right: Vec::new(),
            },
            flux_prediction: None,
        }
    }
}

/// Run `M` independent replicas on a bounded worker pool. Replica `i`
/// depends only on its own seed stream `seed ^ i`, so the output is bitwise
/// identical to the sequential [`run_ensemble`] for every worker count.
pub fn run_ensemble_parallel(plan: &TrajectoryPlan) -> Result<Vec<ReplicaTrajectory>, CoreError> {
    plan.validate()?;
    let m = plan.replicas as usize;
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(m)
        .min(MAX_WORKERS);
    if workers <= 1 {
        return run_ensemble(plan);
    }
    let mut slots: Vec<Option<ReplicaTrajectory>> = (0..m).map(|_| None).collect();
    std::thread::scope(|scope| -> Result<(), CoreError> {
        let mut handles = Vec::with_capacity(workers);
        for w in 0..workers {
            handles.push(scope.spawn(move || -> Result<Vec<(usize, ReplicaTrajectory)>, CoreError> {
                let mut chunk = Vec::new();
                let mut i = w;
                while i < m {
                    let mut single = plan.clone();
                    single.replicas = 1;
                    single.seed = plan.seed ^ i as u64;
                    let mut result = run_ensemble(&single)?;
                    let mut trajectory = result.pop().expect("one replica requested");
                    trajectory.replica = i as u32;
                    chunk.push((i, trajectory));
                    i += workers;
                }
                Ok(chunk)
            }));
        }
        for handle in handles {
            for (i, trajectory) in handle.join().expect("ensemble worker panicked")? {
                slots[i] = Some(trajectory);
            }
        }
        Ok(())
    })?;
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every replica index visited"))
        .collect())
}

/// Leave-one-out jackknife standard error of the L¹ distance between the
/// replica-mean density and a fixed reference.
fn jackknife_l1_stderr(
    fields: &[DensityField],
    mean: &DensityField,
    reference: &DensityField,
) -> Result<f64, CoreError> {
    let m = fields.len();
    if m < 2 {
        return Ok(0.0);
    }
    let mf = m as f64;
    let mut stats = Vec::with_capacity(m);
    for field in fields {
        let values: Vec<f64> = mean
            .values()
            .iter()
            .zip(field.values())
            .map(|(&mv, &fv)| (mf * mv - fv) / (mf - 1.0))
            .collect();
        let leave_one_out = DensityField::new(mean.left_edge(), mean.bin_width(), values)?;
        stats.push(l1_distance(&leave_one_out, reference)?);
    }
    let avg: f64 = stats.iter().sum::<f64>() / mf;
    let var: f64 = stats.iter().map(|s| (s - avg) * (s - avg)).sum::<f64>() * (mf - 1.0) / mf;
    Ok(var.sqrt())
}

/// Simulate every scale in `n_list`, solve the regime-matched macroscopic
/// equation, and compare on the configured grid.
///
/// The reference profile for each snapshot time comes from a dedicated
/// solve with that horizon, so the comparison never interpolates in time;
/// one extra full-horizon solve provides the interface trace and, in the
/// transmission regime, the flux prediction.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport, HarnessError> {
    cfg.validate()?;
    let kernel = build_kernel(&cfg.kernel.to_spec()).map_err(stage("kernel"))?;
    let barrier = cfg.barrier.to_spec();
    barrier.validate(&kernel).map_err(stage("kernel"))?;
    let profile = cfg.profile.to_profile();
    let regime = select_regime(&kernel, &barrier);
    let run = &cfg.run;
    let times = cfg.snapshot_times();
    let half_width = run.window_factor;
    let du = 1.0 / run.solver_cells_per_unit as f64;
    let bin_width = 1.0 / run.bins_per_unit as f64;
    let bins = (2.0 * half_width * run.bins_per_unit as f64).round() as usize;

    let solve_until = |horizon: f64| -> Result<PdeSolution, HarnessError> {
        solve(&PdeProblem {
            regime,
            sigma2: kernel.sigma2(),
            initial: profile,
            domain_half_width: half_width,
            du,
            dt: du / 2.0,
            horizon,
        })
        .map_err(stage("solve"))
    };
    let mut references = Vec::with_capacity(times.len());
    for &t in &times {
        let solution = solve_until(t)?;
        let field = solution
            .final_field()
            .resample(-half_width, bin_width, bins)
            .map_err(stage("solve"))?;
        references.push(field);
    }
    let full = solve_until(run.horizon)?;
    let flux_prediction = match regime {
        Regime::Robin { kappa } => Some(robin_flux_prediction(kernel.sigma2(), kappa, &full)),
        _ => None,
    };

    let mut report = ComparisonReport {
        regime,
        rows: Vec::new(),
        profiles: Vec::new(),
        fluxes: Vec::new(),
        trace: full.trace,
        flux_prediction,
    };

    for &n in &run.n_list {
        let plan = TrajectoryPlan {
            model: ModelConfig {
                kernel: kernel.clone(),
                barrier: barrier.clone(),
                n,
                window_half_width_sites: (run.window_factor * n as f64).round() as u32,
            },
            initial_profile: profile,
            horizon: run.horizon,
            snapshot_times: times.clone(),
            seed: run.seed,
            replicas: run.replicas,
            log_events: true,
        };
        let ensemble = run_ensemble_parallel(&plan).map_err(stage("simulate"))?;
        let sites_per_bin = n / run.bins_per_unit;

        for (j, &t) in times.iter().enumerate() {
            let fields = ensemble
                .iter()
                .map(|tr| empirical_density(&tr.snapshots[j], sites_per_bin))
                .collect::<Result<Vec<_>, _>>()
                .map_err(stage("observe"))?;
            let mean = mean_density(&fields).map_err(stage("observe"))?;
            let reference = &references[j];
            let l1 = l1_distance(&mean, reference).map_err(stage("compare"))?;
            let stderr =
                jackknife_l1_stderr(&fields, &mean, reference).map_err(stage("compare"))?;
            let half = mean.len() / 2;
            let jump = mean.values()[half] - mean.values()[half - 1];
            let crossings = ensemble
                .iter()
                .map(|tr| tr.events.as_ref().expect("event logging is on").gross[j] as f64)
                .sum::<f64>()
                / ensemble.len() as f64;
            report.rows.push(ComparisonRow {
                n,
                time: t,
                l1_distance: l1,
                l1_stderr: stderr,
                jump_estimate: jump,
                mean_crossings_per_replica: crossings,
            });
            report.profiles.push(ProfilePair {
                n,
                time: t,
                empirical: mean,
                reference: reference.clone(),
            });
        }

        let series: Vec<FluxSeries> = ensemble
            .iter()
            .map(|tr| crossing_flux(tr.events.as_ref().expect("event logging is on"), n))
            .collect();
        let flux_times = series[0].times.clone();
        let mut flux_values = vec![0.0; flux_times.len()];
        for s in &series {
            for (acc, v) in flux_values.iter_mut().zip(&s.values) {
                *acc += v;
            }
        }
        for v in &mut flux_values {
            *v /= series.len() as f64;
        }
        report.fluxes.push(FluxSummary {
            n,
            measured: FluxSeries {
                times: flux_times,
                values: flux_values,
            },
        });
    }
    Ok(report)
}

/// Write every artifact of a report into `dir`:
///
/// * `report.csv` — the summary table (header-only when the report is
///   empty),
/// * `pde_trace.csv` — one-sided interface values/slopes of the reference,
/// * `n{n}/empirical.csv`, `n{n}/reference.csv` — stacked profiles,
/// * `n{n}/flux.csv` — replica-averaged cumulative interface flux,
/// * `n{n}/overlay_{j}.svg` — one overlay per snapshot time.
pub fn emit_profiles(report: &ComparisonReport, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    csvio::write_report_csv(&dir.join("report.csv"), &report.rows)?;
    csvio::write_trace_csv(&dir.join("pde_trace.csv"), &report.trace)?;
    let mut scales: Vec<u32> = report.profiles.iter().map(|p| p.n).collect();
    scales.dedup();
    for n in scales {
        let sub = dir.join(format!("n{n}"));
        let pairs: Vec<&ProfilePair> = report.profiles.iter().filter(|p| p.n == n).collect();
        let empirical: Vec<(f64, &DensityField)> =
            pairs.iter().map(|p| (p.time, &p.empirical)).collect();
        let reference: Vec<(f64, &DensityField)> =
            pairs.iter().map(|p| (p.time, &p.reference)).collect();
        csvio::write_density_csv(&sub.join("empirical.csv"), &empirical)?;
        csvio::write_density_csv(&sub.join("reference.csv"), &reference)?;
        for (j, pair) in pairs.iter().enumerate() {
            let title = format!("n = {}, t = {}", pair.n, pair.time);
            let rendered = overlay_svg(&title, &pair.empirical, &pair.reference);
            std::fs::write(sub.join(format!("overlay_{j}.svg")), rendered)?;
        }
    }
    for flux in &report.fluxes {
        let sub = dir.join(format!("n{}", flux.n));
        csvio::write_flux_csv(&sub.join("flux.csv"), &flux.measured)?;
    }
    Ok(())
}

/// Full pipeline: run the experiment, emit all artifacts into the
/// configured output directory, and record the manifest.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<ComparisonReport, HarnessError> {
    let report = run_experiment(cfg)?;
    emit_profiles(&report, &cfg.run.output_dir)?;
    write_manifest(cfg, &cfg.run.output_dir)?;
    Ok(report)
}

/// Re-run the experiment recorded in a manifest into `out_dir` and
/// byte-compare every artifact (`.csv` and `.svg`) with the original
/// directory. Returns `(relative path, matched)` pairs sorted by path; a
/// file missing from the original directory counts as a mismatch.
pub fn reproduce(
    manifest_path: &Path,
    out_dir: &Path,
) -> Result<Vec<(String, bool)>, HarnessError> {
    let manifest = crate::manifest::read_manifest(manifest_path)?;
    let original_dir = manifest_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let mut cfg = manifest.config;
    cfg.run.output_dir = out_dir.to_path_buf();
    run_and_emit(&cfg)?;

    let mut files = Vec::new();
    collect_artifacts(out_dir, Path::new(""), &mut files)?;
    files.sort();
    let mut results = Vec::with_capacity(files.len());
    for rel in files {
        let fresh = std::fs::read(out_dir.join(&rel))?;
        let original = std::fs::read(original_dir.join(&rel)).ok();
        let matched = original.as_deref() == Some(fresh.as_slice());
        results.push((rel.to_string_lossy().into_owned(), matched));
    }
    Ok(results)
}

fn collect_artifacts(
    root: &Path,
    rel: &Path,
    out: &mut Vec<PathBuf>,
) -> Result<(), HarnessError> {
    let mut entries: Vec<_> =
        std::fs::read_dir(root.join(rel))?.collect::<Result<Vec<_>, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let sub = rel.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            collect_artifacts(root, &sub, out)?;
        } else if matches!(
            sub.extension().and_then(|x| x.to_str()),
            Some("csv") | Some("svg")
        ) {
            out.push(sub);
        }
    }
    Ok(())
}
