//! Experiment configuration: a versioned TOML schema plus CLI override
//! plumbing. Every run is fully described by one [`ExperimentConfig`]; the
//! manifest written next to the outputs embeds the resolved value so a run
//! can be replayed exactly.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use slowbond_core::kernel::{BarrierMode, BarrierSpec, KernelSpec};
use slowbond_core::profile::Profile;

use crate::HarnessError;

/// Version of the on-disk schema this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Jump-law section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    /// `p(±1) = 1/2`.
    NearestNeighbour,
    /// One-sided weights for `z = 1..=len`, summing to 1/2.
    FiniteRange { half_weights: Vec<f64> },
    /// `p(z) ∝ |z|^{−γ−1}` truncated at `|z| ≤ z_max`.
    LongRange { gamma: f64, z_max: u32 },
}

impl KernelConfig {
    pub fn to_spec(&self) -> KernelSpec {
        match self {
            KernelConfig::NearestNeighbour => KernelSpec::NearestNeighbour,
            KernelConfig::FiniteRange { half_weights } => KernelSpec::FiniteRange {
                half_weights: half_weights.clone(),
            },
            KernelConfig::LongRange { gamma, z_max } => KernelSpec::LongRange {
                gamma: *gamma,
                z_max: *z_max,
            },
        }
    }
}

impl FromStr for KernelConfig {
    type Err = HarnessError;

    /// Shorthand: `nn`, `gamma=3,zmax=2000`, or `weights=0.3,0.15,0.05`.
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let bad = |msg: String| HarnessError::Config(msg);
        if s == "nn" || s == "nearest-neighbour" {
            return Ok(KernelConfig::NearestNeighbour);
        }
        if let Some(rest) = s.strip_prefix("weights=") {
            let half_weights = rest
                .split(',')
                .map(|w| w.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| bad(format!("kernel weights {rest:?}: {e}")))?;
            return Ok(KernelConfig::FiniteRange { half_weights });
        }
        let mut gamma = None;
        let mut z_max = None;
        for part in s.split(',') {
            match part.split_once('=') {
                Some(("gamma", v)) => {
                    gamma = Some(
                        v.parse::<f64>()
                            .map_err(|e| bad(format!("gamma {v:?}: {e}")))?,
                    )
                }
                Some(("zmax", v)) | Some(("z_max", v)) => {
                    z_max = Some(
                        v.parse::<u32>()
                            .map_err(|e| bad(format!("z_max {v:?}: {e}")))?,
                    )
                }
                _ => return Err(bad(format!("unrecognized kernel clause {part:?}"))),
            }
        }
        match (gamma, z_max) {
            (Some(gamma), Some(z_max)) => Ok(KernelConfig::LongRange { gamma, z_max }),
            _ => Err(bad(format!(
                "kernel {s:?}: expected `nn`, `weights=…`, or `gamma=…,zmax=…`"
            ))),
        }
    }
}

/// Interface-damping section. An empty bridge list means every
/// origin-crossing bond is damped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub bridges: Vec<(i64, i64)>,
}

impl BarrierConfig {
    pub fn to_spec(&self) -> BarrierSpec {
        BarrierSpec {
            mode: if self.bridges.is_empty() {
                BarrierMode::Full
            } else {
                BarrierMode::Bridges(self.bridges.clone())
            },
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// Initial-profile presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant { a: f64 },
    Step { a: f64, b: f64 },
    Bump { a: f64, c: f64, r: f64 },
}

impl ProfileConfig {
    pub fn to_profile(&self) -> Profile {
        match *self {
            ProfileConfig::Constant { a } => Profile::Constant { a },
            ProfileConfig::Step { a, b } => Profile::Step { a, b },
            ProfileConfig::Bump { a, c, r } => Profile::Bump { a, c, r },
        }
    }
}

impl FromStr for ProfileConfig {
    type Err = HarnessError;

    /// Shorthand: `constant(0.5)`, `step(1,0)`, `bump(1,0,0.35)`.
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let bad = || HarnessError::Config(format!("unrecognized profile {s:?}"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<f64> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (name.trim(), args.as_slice()) {
            ("constant", [a]) => Ok(ProfileConfig::Constant { a: *a }),
            ("step", [a, b]) => Ok(ProfileConfig::Step { a: *a, b: *b }),
            ("bump", [a, c, r]) => Ok(ProfileConfig::Bump {
                a: *a,
                c: *c,
                r: *r,
            }),
            _ => Err(bad()),
        }
    }
}

/// Scales, resolution, and reproducibility knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scaling parameters to sweep.
    pub n_list: Vec<u32>,
    /// Analysis window is `[−L, L]`; the lattice window holds `L·n` sites
    /// per side.
    pub window_factor: f64,
    /// Macroscopic horizon `T`.
    pub horizon: f64,
    pub replicas: u32,
    pub seed: u64,
    /// Times at which occupancy is recorded and compared; empty means
    /// `{T/2, T}`.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Comparison-grid resolution: empirical densities are binned at width
    /// `1/bins_per_unit` (so `n/bins_per_unit` sites per bin).
    pub bins_per_unit: u32,
    /// Reference-solver resolution: `Δu = 1/solver_cells_per_unit`.
    pub solver_cells_per_unit: u32,
    pub output_dir: PathBuf,
}

/// One fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kernel: KernelConfig,
    pub barrier: BarrierConfig,
    pub profile: ProfileConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    /// Desk-scale default: nearest-neighbour kernel, critically damped full
    /// barrier, unit step initial data.
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            kernel: KernelConfig::NearestNeighbour,
            barrier: BarrierConfig {
                alpha: 1.0,
                beta: 1.0,
                bridges: Vec::new(),
            },
            profile: ProfileConfig::Step { a: 1.0, b: 0.0 },
            run: RunConfig {
                n_list: vec![64, 128, 256, 512],
                window_factor: 2.0,
                horizon: 0.1,
                replicas: 50,
                seed: 1729,
                snapshot_times: Vec::new(),
                bins_per_unit: 64,
                solver_cells_per_unit: 128,
                output_dir: PathBuf::from("out"),
            },
        }
    }
}

/// CLI-provided fields that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kernel: Option<KernelConfig>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub bridges: Option<Vec<(i64, i64)>>,
    pub profile: Option<ProfileConfig>,
    pub n_list: Option<Vec<u32>>,
    pub horizon: Option<f64>,
    pub replicas: Option<u32>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "schema_version {} is not supported (this build reads {})",
                cfg.schema_version, SCHEMA_VERSION
            )));
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string_pretty(self)
            .map_err(|e| HarnessError::Config(format!("serializing config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(k) = &o.kernel {
            self.kernel = k.clone();
        }
        if let Some(a) = o.alpha {
            self.barrier.alpha = a;
        }
        if let Some(b) = o.beta {
            self.barrier.beta = b;
        }
        if let Some(br) = &o.bridges {
            self.barrier.bridges = br.clone();
        }
        if let Some(p) = o.profile {
            self.profile = p;
        }
        if let Some(ns) = &o.n_list {
            self.run.n_list = ns.clone();
        }
        if let Some(t) = o.horizon {
            self.run.horizon = t;
        }
        if let Some(m) = o.replicas {
            self.run.replicas = m;
        }
        if let Some(s) = o.seed {
            self.run.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.run.output_dir = d.clone();
        }
    }

    /// Snapshot times with the `{T/2, T}` default applied.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.run.snapshot_times.is_empty() {
            vec![self.run.horizon / 2.0, self.run.horizon]
        } else {
            self.run.snapshot_times.clone()
        }
    }

    /// Cheap structural validation; the deep invariants are re-checked by
    /// the core types when the run is assembled.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let run = &self.run;
        if run.n_list.is_empty() {
            return bad("n_list must not be empty".into());
        }
        if !(run.window_factor > 0.0) || !run.window_factor.is_finite() {
            return bad(format!("window_factor {} must be positive", run.window_factor));
        }
        if !(run.horizon > 0.0) || !run.horizon.is_finite() {
            return bad(format!("horizon {} must be positive", run.horizon));
        }
        if run.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if run.bins_per_unit == 0 || run.solver_cells_per_unit < 2 {
            return bad("grid resolutions must be positive (and ≥ 2 solver cells)".into());
        }
        let bins_per_side = run.window_factor * run.bins_per_unit as f64;
        if bins_per_side.fract() != 0.0 {
            return bad(format!(
                "window_factor {} × bins_per_unit {} must be an integer bin count",
                run.window_factor, run.bins_per_unit
            ));
        }
        let cells_per_side = run.window_factor * run.solver_cells_per_unit as f64;
        if cells_per_side.fract() != 0.0 {
            return bad(format!(
                "window_factor {} × solver_cells_per_unit {} must be an integer cell count",
                run.window_factor, run.solver_cells_per_unit
            ));
        }
        for &n in &run.n_list {
            if n == 0 {
                return bad("n must be at least 1".into());
            }
            if n % run.bins_per_unit != 0 {
                return bad(format!(
                    "n = {n} is not a multiple of bins_per_unit = {}; bins would straddle sites",
                    run.bins_per_unit
                ));
            }
            let window_sites = run.window_factor * n as f64;
            if window_sites.fract() != 0.0 {
                return bad(format!(
                    "window_factor {} × n {n} must be an integer site count",
                    run.window_factor
                ));
            }
        }
        let mut prev = 0.0;
        for &t in &run.snapshot_times {
            if !(t > prev) || t > run.horizon + 1e-12 {
                return bad(format!(
                    "snapshot times must be strictly increasing in (0, horizon]; got {t}"
                ));
            }
            prev = t;
        }
        self.profile
            .to_profile()
            .validate()
            .map_err(HarnessError::Core)?;
        Ok(())
    }
}
