//! Exact continuous-time simulation of the exclusion dynamics on a finite
//! window, with a damped interface at the origin.
//!
//! # Event scheduling
//!
//! The chain is uniformized: every particle carries an attempt clock of
//! microscopic rate 1 per unit jump mass, i.e. the total attempt rate is
//! `(#particles)·n²` on the macroscopic clock, and it is *constant* along a
//! trajectory because the window is closed. The number of attempts in a
//! macroscopic interval of length `Δ` is therefore Poisson with mean
//! `(#particles)·n²·Δ`, and conditionally on the count the attempts are
//! i.i.d.: pick a uniform particle, draw a signed displacement from the
//! kernel, then
//!
//! 1. reject if the target leaves the window (zero-flux truncation),
//! 2. reject if the target is occupied (exclusion),
//! 3. if the bond crosses the origin and is not a bridge, accept with
//!    probability `α/n^β` (thinning; requires `α ≤ n^β`).
//!
//! This realizes exchange rate `p(y−x)` per unordered fast bond and
//! `α n^{−β} p(y−x)` per slow bond exactly. Since observables are read only
//! at snapshot boundaries, the attempt *times* inside an interval never
//! need to be materialized — only their count does.

use alloc::format;
use alloc::vec::Vec;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};

use crate::kernel::{BarrierSpec, JumpKernel};
use crate::profile::Profile;
use crate::Error;

/// Fixed-size bit array indexed by window offset (`site + W`).
#[derive(Debug, Clone, PartialEq)]
pub struct BitGrid {
    words: Vec<u64>,
    len: usize,
}

impl BitGrid {
    pub fn new(len: usize) -> BitGrid {
        BitGrid {
            words: alloc::vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i >> 6] & (1u64 << (i & 63)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn clear(&mut self, i: usize) {
        self.words[i >> 6] &= !(1u64 << (i & 63));
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

/// Microscopic model: jump law, barrier, scaling parameter, window size.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub kernel: JumpKernel,
    pub barrier: BarrierSpec,
    /// Scaling parameter: lattice spacing `1/n`, clock speed `n²`.
    pub n: u32,
    /// Window holds sites `−W..W−1`.
    pub window_half_width_sites: u32,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 {
            return Err(Error::InvalidPlan("scaling parameter n must be ≥ 1".into()));
        }
        let w = self.window_half_width_sites as i64;
        if w < 2 {
            return Err(Error::InvalidPlan(format!(
                "window half-width {w} sites is too small (need ≥ 2)"
            )));
        }
        self.barrier.validate(&self.kernel)?;
        for &(x1, x2) in self.barrier.bridges() {
            if x1 < -w || x2 >= w {
                return Err(Error::InvalidBarrier(format!(
                    "bridge ({x1}, {x2}) lies outside the window −{w}..{w}"
                )));
            }
        }
        // Thinning feasibility: acceptance probability α/n^β must be ≤ 1.
        let damp = self.barrier.alpha / libm::pow(self.n as f64, self.barrier.beta);
        if damp > 1.0 + 1e-12 {
            return Err(Error::InvalidPlan(format!(
                "alpha = {} exceeds n^beta = {}; slow-bond thinning impossible",
                self.barrier.alpha,
                libm::pow(self.n as f64, self.barrier.beta)
            )));
        }
        Ok(())
    }
}

/// A full ensemble prescription: model, initial profile, observation times,
/// seed and replica count.
#[derive(Debug, Clone)]
pub struct TrajectoryPlan {
    pub model: ModelConfig,
    pub initial_profile: Profile,
    /// Macroscopic horizon `T`.
    pub horizon: f64,
    /// Sorted, strictly increasing times in `(0, T]` at which occupancy is
    /// recorded (the initial state is implicit).
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    pub replicas: u32,
    /// Record cumulative interface-crossing counts at snapshot times.
    pub log_events: bool,
}

impl TrajectoryPlan {
    pub fn validate(&self) -> Result<(), Error> {
        self.model.validate()?;
        self.initial_profile.validate()?;
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidPlan(format!(
                "horizon {} must be positive and finite",
                self.horizon
            )));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidPlan("need at least one replica".into()));
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::InvalidPlan("need at least one snapshot time".into()));
        }
        let mut prev = 0.0;
        for &t in &self.snapshot_times {
            if !(t > prev) || t > self.horizon + 1e-12 {
                return Err(Error::InvalidPlan(format!(
                    "snapshot times must be strictly increasing in (0, T]; got {t} after {prev}"
                )));
            }
            prev = t;
        }
        Ok(())
    }
}

/// Occupancy state of one replica plus its macroscopic clock and cumulative
/// interface-crossing counters.
#[derive(Debug, Clone)]
pub struct LatticeState {
    w: i64,
    occupancy: BitGrid,
    /// Window offsets (`site + W`) of all particles, unordered.
    particles: Vec<u32>,
    clock: f64,
    net_crossings: i64,
    gross_crossings: u64,
}

impl LatticeState {
    /// Site occupancy; `site` ranges over `−W..W−1`.
    pub fn occupied(&self, site: i64) -> bool {
        assert!(site >= -self.w && site < self.w, "site outside window");
        self.occupancy.get((site + self.w) as usize)
    }

    pub fn particle_count(&self) -> usize {
        self.particles.len()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn window_half_width(&self) -> i64 {
        self.w
    }

    pub fn occupancy(&self) -> &BitGrid {
        &self.occupancy
    }

    /// Cumulative signed count of accepted slow-bond crossings
    /// (negative→nonnegative minus the reverse). Bridge crossings are fast
    /// bonds and are never counted here.
    pub fn net_crossings(&self) -> i64 {
        self.net_crossings
    }

    /// Cumulative unsigned count of accepted slow-bond crossings.
    pub fn gross_crossings(&self) -> u64 {
        self.gross_crossings
    }
}

/// Draw the initial state: sites independently occupied with probability
/// `g(x/n)`.
pub fn init_state(model: &ModelConfig, profile: &Profile, rng: &mut SmallRng) -> LatticeState {
    let w = model.window_half_width_sites as i64;
    let n = model.n as f64;
    let mut occupancy = BitGrid::new((2 * w) as usize);
    let mut particles = Vec::new();
    for site in -w..w {
        let p = profile.eval(site as f64 / n);
        if rng.gen::<f64>() < p {
            let idx = (site + w) as usize;
            occupancy.set(idx);
            particles.push(idx as u32);
        }
    }
    LatticeState {
        w,
        occupancy,
        particles,
        clock: 0.0,
        net_crossings: 0,
        gross_crossings: 0,
    }
}

/// Evolve `state` to macroscopic time `until` under the exact law.
pub fn advance(
    state: &mut LatticeState,
    kernel: &JumpKernel,
    barrier: &BarrierSpec,
    n: u32,
    until: f64,
    rng: &mut SmallRng,
) -> Result<(), Error> {
    if until < state.clock {
        return Err(Error::InvalidPlan(format!(
            "cannot advance backwards: clock {} > target {until}",
            state.clock
        )));
    }
    let k = state.particles.len();
    if k == 0 || until == state.clock {
        state.clock = until;
        return Ok(());
    }
    let nf = n as f64;
    let slow_accept = barrier.alpha * libm::pow(nf, -barrier.beta);
    debug_assert!(slow_accept <= 1.0 + 1e-12);
    let lambda = k as f64 * nf * nf * (until - state.clock);
    let attempts = if lambda > 0.0 {
        Poisson::new(lambda)
            .map_err(|e| Error::InvalidPlan(format!("bad attempt rate {lambda}: {e}")))?
            .sample(rng) as u64
    } else {
        0
    };

    let w = state.w;
    let words = &mut state.occupancy.words;
    for _ in 0..attempts {
        let pi = rng.gen_range(0..k);
        let from_idx = state.particles[pi] as i64;
        let z = kernel.sample_jump(rng);
        let to_idx = from_idx + z;
        if to_idx < 0 || to_idx >= 2 * w {
            continue; // window truncation
        }
        let to_u = to_idx as usize;
        let word = to_u >> 6;
        let bit = 1u64 << (to_u & 63);
        if words[word] & bit != 0 {
            continue; // exclusion
        }
        let from = from_idx - w;
        let to = to_idx - w;
        let crossing = (from < 0) != (to < 0);
        if crossing {
            let (neg, nonneg) = if from < 0 { (from, to) } else { (to, from) };
            if !barrier.is_bridge(neg, nonneg) {
                // slow bond: thin
                if !(rng.gen::<f64>() < slow_accept) {
                    continue;
                }
                state.gross_crossings += 1;
                state.net_crossings += if from < 0 { 1 } else { -1 };
            }
        }
        words[word] |= bit;
        let from_u = from_idx as usize;
        words[from_u >> 6] &= !(1u64 << (from_u & 63));
        state.particles[pi] = to_u as u32;
    }
    state.clock = until;
    Ok(())
}

/// Occupancy record at one snapshot time, self-describing for observables.
#[derive(Debug, Clone)]
pub struct SnapshotRecord {
    pub time: f64,
    pub n: u32,
    pub window_half_width_sites: i64,
    pub occupancy: BitGrid,
}

impl SnapshotRecord {
    /// Site occupancy; `site` ranges over `−W..W−1`.
    pub fn occupied(&self, site: i64) -> bool {
        let w = self.window_half_width_sites;
        assert!(site >= -w && site < w, "site outside window");
        self.occupancy.get((site + w) as usize)
    }
}

/// Cumulative crossing counters sampled at snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub times: Vec<f64>,
    /// Signed accepted slow-bond crossings up to each time.
    pub net: Vec<i64>,
    /// Unsigned accepted slow-bond crossings up to each time.
    pub gross: Vec<u64>,
}

/// One replica's snapshots (and counters when event logging is on).
#[derive(Debug, Clone)]
pub struct ReplicaTrajectory {
    pub replica: u32,
    pub snapshots: Vec<SnapshotRecord>,
    pub events: Option<EventLog>,
}

/// Run `M` independent replicas; replica `i` uses the seed stream
/// `seed ⊕ i`, so results are deterministic and independent of execution
/// order.
pub fn run_ensemble(plan: &TrajectoryPlan) -> Result<Vec<ReplicaTrajectory>, Error> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.replicas as usize);
    for i in 0..plan.replicas {
        let mut rng = SmallRng::seed_from_u64(plan.seed ^ i as u64);
        let mut state = init_state(&plan.model, &plan.initial_profile, &mut rng);
        let mut snapshots = Vec::with_capacity(plan.snapshot_times.len());
        let mut events = plan.log_events.then(|| EventLog {
            times: Vec::new(),
            net: Vec::new(),
            gross: Vec::new(),
        });
        for &t in &plan.snapshot_times {
            advance(
                &mut state,
                &plan.model.kernel,
                &plan.model.barrier,
                plan.model.n,
                t,
                &mut rng,
            )?;
            snapshots.push(SnapshotRecord {
                time: t,
                n: plan.model.n,
                window_half_width_sites: state.w,
                occupancy: state.occupancy.clone(),
            });
            if let Some(log) = events.as_mut() {
                log.times.push(t);
                log.net.push(state.net_crossings);
                log.gross.push(state.gross_crossings);
            }
        }
        out.push(ReplicaTrajectory {
            replica: i,
            snapshots,
            events,
        });
    }
    Ok(out)
}
