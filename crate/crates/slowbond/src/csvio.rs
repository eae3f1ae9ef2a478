//! CSV emitters for every tabular artifact the harness writes.
//!
//! All floats are formatted with Rust's shortest round-trip representation,
//! so a value renders identically on every run and platform; byte-identical
//! reruns are a documented contract (see the `reproduce` subcommand).
//!
//! Schemas (one header line each):
//!
//! * density:     `time,u,rho`
//! * flux:        `time,flux`
//! * trace:       `time,rho_left,rho_right,grad_left,grad_right`
//! * suite:       `kind,n,epsilon,statistic` (`epsilon` empty when absent)
//! * report:      `n,time,l1_distance,l1_stderr,jump_estimate,mean_crossings_per_replica`

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use slowbond_core::observables::{DensityField, FluxSeries};
use slowbond_core::pde::InterfaceTrace;
use slowbond_core::weakform::{SuiteKind, SuiteRow};

use crate::experiment::ComparisonRow;
use crate::HarnessError;

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Stacked density profiles: one block of rows per `(time, field)` pair,
/// one row per bin center.
pub fn write_density_csv(
    path: &Path,
    blocks: &[(f64, &DensityField)],
) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(w, "time,u,rho")?;
    for (time, field) in blocks {
        for (u, rho) in field.centers().zip(field.values()) {
            writeln!(w, "{time},{u},{rho}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cumulative signed interface flux over time.
pub fn write_flux_csv(path: &Path, series: &FluxSeries) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(w, "time,flux")?;
    for (t, v) in series.times.iter().zip(&series.values) {
        writeln!(w, "{t},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// One-sided interface values and slopes of the macroscopic solution.
pub fn write_trace_csv(path: &Path, trace: &InterfaceTrace) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(w, "time,rho_left,rho_right,grad_left,grad_right")?;
    for k in 0..trace.times.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            trace.times[k],
            trace.rho_left[k],
            trace.rho_right[k],
            trace.grad_left[k],
            trace.grad_right[k]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Stable lowercase tag for a convergence-suite statistic.
pub fn suite_kind_name(kind: SuiteKind) -> &'static str {
    match kind {
        SuiteKind::ConvDisc => "convdisc",
        SuiteKind::Neum1 => "neum1",
        SuiteKind::LemConvRob => "lemconvrob",
        SuiteKind::LemConvNeum => "lemconvneum",
        SuiteKind::PrincNeu => "princneu",
    }
}

/// Inverse of [`suite_kind_name`]; used by the CLI's `--kinds` flag.
pub fn suite_kind_from_name(name: &str) -> Result<SuiteKind, HarnessError> {
    match name {
        "convdisc" => Ok(SuiteKind::ConvDisc),
        "neum1" => Ok(SuiteKind::Neum1),
        "lemconvrob" => Ok(SuiteKind::LemConvRob),
        "lemconvneum" => Ok(SuiteKind::LemConvNeum),
        "princneu" => Ok(SuiteKind::PrincNeu),
        other => Err(HarnessError::Config(format!(
            "unknown suite kind {other:?} (expected convdisc, neum1, lemconvrob, lemconvneum, or princneu)"
        ))),
    }
}

/// Convergence-suite rows; `epsilon` is left empty for the ε-free kinds.
pub fn write_suite_csv(path: &Path, rows: &[SuiteRow]) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    write_suite_rows(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

/// Same table, but to an arbitrary sink (the CLI defaults to stdout).
pub fn write_suite_rows(w: &mut impl Write, rows: &[SuiteRow]) -> Result<(), HarnessError> {
    writeln!(w, "kind,n,epsilon,statistic")?;
    for row in rows {
        let eps = row.epsilon.map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            suite_kind_name(row.kind),
            row.n,
            eps,
            row.statistic
        )?;
    }
    Ok(())
}

/// Per-(n, time) comparison summary. An empty slice produces a header-only
/// file.
pub fn write_report_csv(path: &Path, rows: &[ComparisonRow]) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    writeln!(
        w,
        "n,time,l1_distance,l1_stderr,jump_estimate,mean_crossings_per_replica"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.n, r.time, r.l1_distance, r.l1_stderr, r.jump_estimate, r.mean_crossings_per_replica
        )?;
    }
    w.flush()?;
    Ok(())
}
