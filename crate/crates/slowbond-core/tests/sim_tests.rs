//! Event-loop oracles for the exclusion simulator.
//!
//! The quantitative expectations are frozen from closed-form properties of
//! the dynamics: the displacement variance of a lone walker (σ²·t·n² in
//! site units), the exact stationarity of product Bernoulli measures under
//! symmetric exchange, and the thinned crossing rate
//! T·n²·(α/n^β)·Σ_bonds p·2a(1−a) at stationarity. Structural identities
//! (conservation, side-mass bookkeeping, determinism) are asserted exactly.

use proptest::prelude::*;
use rand::rngs::SmallRng;
use rand::SeedableRng;
use slowbond_core::kernel::{build_kernel, BarrierMode, BarrierSpec, JumpKernel, KernelSpec};
use slowbond_core::profile::Profile;
use slowbond_core::sim::{
    advance, init_state, run_ensemble, LatticeState, ModelConfig, SnapshotRecord, TrajectoryPlan,
};
use slowbond_core::Error;

fn nn() -> JumpKernel {
    build_kernel(&KernelSpec::NearestNeighbour).unwrap()
}

fn full_barrier(alpha: f64, beta: f64) -> BarrierSpec {
    BarrierSpec {
        mode: BarrierMode::Full,
        alpha,
        beta,
    }
}

fn plan(
    kernel: JumpKernel,
    barrier: BarrierSpec,
    n: u32,
    window: u32,
    profile: Profile,
    times: Vec<f64>,
    seed: u64,
    replicas: u32,
) -> TrajectoryPlan {
    let horizon = *times.last().unwrap();
    TrajectoryPlan {
        model: ModelConfig {
            kernel,
            barrier,
            n,
            window_half_width_sites: window,
        },
        initial_profile: profile,
        horizon,
        snapshot_times: times,
        seed,
        replicas,
        log_events: true,
    }
}

/// Number of occupied sites in `0..W` (the nonnegative half).
fn right_count_snapshot(s: &SnapshotRecord) -> i64 {
    (0..s.window_half_width_sites)
        .filter(|&x| s.occupied(x))
        .count() as i64
}

fn right_count_state(s: &LatticeState) -> i64 {
    (0..s.window_half_width())
        .filter(|&x| s.occupied(x))
        .count() as i64
}

/// Position of the unique particle in a one-particle snapshot.
fn lone_position(s: &SnapshotRecord) -> i64 {
    let w = s.window_half_width_sites;
    let hits: Vec<i64> = (-w..w).filter(|&x| s.occupied(x)).collect();
    assert_eq!(hits.len(), 1, "expected exactly one particle");
    hits[0]
}

/// Rebuild the replica's initial state from the ensemble seed contract
/// (replica `i` draws from the stream seeded with `seed ⊕ i`).
fn initial_state(p: &TrajectoryPlan, replica: u32) -> LatticeState {
    let mut rng = SmallRng::seed_from_u64(p.seed ^ replica as u64);
    init_state(&p.model, &p.initial_profile, &mut rng)
}

#[test]
fn init_state_realizes_the_profile_marginals() {
    let model = ModelConfig {
        kernel: nn(),
        barrier: full_barrier(1.0, 1.0),
        n: 256,
        window_half_width_sites: 1024,
    };
    let w = model.window_half_width_sites as i64;

    // Degenerate marginals are deterministic.
    let mut rng = SmallRng::seed_from_u64(3);
    let empty = init_state(&model, &Profile::Constant { a: 0.0 }, &mut rng);
    assert_eq!(empty.particle_count(), 0);
    let fullst = init_state(&model, &Profile::Constant { a: 1.0 }, &mut rng);
    assert_eq!(fullst.particle_count(), 2 * w as usize);

    // A unit step fills exactly the negative half.
    let step = init_state(&model, &Profile::Step { a: 1.0, b: 0.0 }, &mut rng);
    assert_eq!(step.particle_count(), w as usize);
    for x in -w..w {
        assert_eq!(step.occupied(x), x < 0, "site {x}");
    }

    // A nondegenerate constant concentrates binomially.
    let a = 0.4;
    let drawn = init_state(&model, &Profile::Constant { a }, &mut rng);
    let frac = drawn.particle_count() as f64 / (2 * w) as f64;
    let tol = 3.0 * (a * (1.0 - a) / (2 * w) as f64).sqrt();
    assert!(
        (frac - a).abs() <= tol,
        "occupied fraction {frac} vs {a} ± {tol}"
    );
}

#[test]
fn full_window_is_frozen() {
    // Every attempt targets an occupied site, so exclusion rejects all of
    // them before any counter is touched.
    let kernel = build_kernel(&KernelSpec::LongRange {
        gamma: 3.0,
        z_max: 8,
    })
    .unwrap();
    let p = plan(
        kernel,
        full_barrier(1.0, 1.0),
        8,
        16,
        Profile::Constant { a: 1.0 },
        vec![0.25, 0.5],
        41,
        3,
    );
    for run in run_ensemble(&p).unwrap() {
        for snap in &run.snapshots {
            assert_eq!(snap.occupancy.count_ones(), 32, "t = {}", snap.time);
        }
        let log = run.events.as_ref().unwrap();
        assert!(log.net.iter().all(|&c| c == 0));
        assert!(log.gross.iter().all(|&c| c == 0));
    }
}

#[test]
fn empty_window_advances_without_events() {
    let p = plan(
        nn(),
        full_barrier(1.0, 1.0),
        8,
        16,
        Profile::Constant { a: 0.0 },
        vec![0.5],
        19,
        2,
    );
    for run in run_ensemble(&p).unwrap() {
        assert_eq!(run.snapshots[0].occupancy.count_ones(), 0);
        assert_eq!(run.events.as_ref().unwrap().gross, vec![0]);
    }
}

#[test]
fn lone_walker_variance_matches_kernel_variance() {
    // With every crossing accepted (β = 0, α = 1) a single walker performs
    // an unconstrained symmetric random walk sped up by n²: displacement in
    // sites has mean 0 and variance σ²·t·n².
    let t = 0.25;
    let n = 16u32;
    let kernels = [
        build_kernel(&KernelSpec::NearestNeighbour).unwrap(),
        build_kernel(&KernelSpec::FiniteRange {
            half_weights: vec![0.3, 0.15, 0.05],
        })
        .unwrap(),
    ];
    assert!((kernels[1].sigma2() - 2.7).abs() < 1e-12);
    for (i, kernel) in kernels.iter().enumerate() {
        let expected = kernel.sigma2() * t * (n as f64).powi(2);
        let p = plan(
            kernel.clone(),
            full_barrier(1.0, 0.0),
            n,
            96,
            Profile::Bump {
                a: 1.0,
                c: 0.0,
                r: 0.03,
            },
            vec![t],
            101 + i as u64,
            10_000,
        );
        let runs = run_ensemble(&p).unwrap();
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for run in &runs {
            let x = lone_position(&run.snapshots[0]) as f64;
            s1 += x;
            s2 += x * x;
        }
        let m = runs.len() as f64;
        let mean = s1 / m;
        let var = s2 / m - mean * mean;
        assert!(
            mean.abs() < 0.3,
            "kernel {i}: mean displacement {mean} sites"
        );
        assert!(
            (var / expected - 1.0).abs() < 0.05,
            "kernel {i}: variance {var} vs {expected} sites²"
        );
    }
}

#[test]
fn lone_walker_never_breaches_a_heavily_damped_interface() {
    // Acceptance probability n^{−β} at β = 50 is ~1e-106; over 10³ replicas
    // of 16384 expected attempts each, a single accepted crossing has
    // probability far below 1e-80.
    let p = plan(
        nn(),
        full_barrier(1.0, 50.0),
        128,
        8,
        Profile::Bump {
            a: 1.0,
            c: -1.0 / 128.0,
            r: 0.003,
        },
        vec![0.5, 1.0],
        7,
        1000,
    );
    for run in run_ensemble(&p).unwrap() {
        for snap in &run.snapshots {
            assert_eq!(snap.occupancy.count_ones(), 1);
            assert_eq!(right_count_snapshot(snap), 0, "walker crossed the interface");
        }
        let log = run.events.as_ref().unwrap();
        assert!(log.gross.iter().all(|&c| c == 0));
        assert!(log.net.iter().all(|&c| c == 0));
    }
}

#[test]
fn product_bernoulli_occupations_are_stationary() {
    // Symmetric exchange rates (the damped interface bond included) are
    // reversible for every constant-marginal product measure, so each site
    // stays Bernoulli(a) at all times.
    let a = 0.3;
    let m = 1000u32;
    let p = plan(
        nn(),
        full_barrier(1.0, 1.0),
        16,
        32,
        Profile::Constant { a },
        vec![0.25],
        23,
        m,
    );
    let runs = run_ensemble(&p).unwrap();
    let w = 32i64;
    let mut per_site = vec![0u32; (2 * w) as usize];
    for run in &runs {
        let snap = &run.snapshots[0];
        for x in -w..w {
            if snap.occupied(x) {
                per_site[(x + w) as usize] += 1;
            }
        }
    }
    let site_tol = 4.0 * (a * (1.0 - a) / m as f64).sqrt();
    let mut total = 0.0;
    for (j, &c) in per_site.iter().enumerate() {
        let freq = c as f64 / m as f64;
        total += freq;
        assert!(
            (freq - a).abs() <= site_tol,
            "site {}: frequency {freq} vs {a} ± {site_tol}",
            j as i64 - w
        );
    }
    let global = total / (2 * w) as f64;
    let global_tol = 3.0 * (a * (1.0 - a) / (m as f64 * 2.0 * w as f64)).sqrt();
    assert!(
        (global - a).abs() <= global_tol,
        "global mean {global} vs {a} ± {global_tol}"
    );
}

#[test]
fn accepted_crossings_match_the_thinned_rate_formula() {
    // At stationarity (constant a) the accepted-crossing counter is a
    // thinned point process with exact mean
    //     T · n² · (α/n^β) · Σ_{crossing bonds} p(|y−x|) · 2a(1−a),
    // and the bond sum telescopes to Σ_{z≥1} z·p(z) = m when every crossing
    // bond fits in the window. Side-mass bookkeeping must match the signed
    // counter exactly, replica by replica.
    let (n, t, a) = (16u32, 2.0, 0.5);
    let kernels = [
        build_kernel(&KernelSpec::NearestNeighbour).unwrap(),
        build_kernel(&KernelSpec::LongRange {
            gamma: 3.0,
            z_max: 4,
        })
        .unwrap(),
    ];
    for (i, kernel) in kernels.iter().enumerate() {
        let expected =
            t * (n as f64).powi(2) * (1.0 / n as f64) * kernel.m() * 2.0 * a * (1.0 - a);
        let p = plan(
            kernel.clone(),
            full_barrier(1.0, 1.0),
            n,
            16,
            Profile::Constant { a },
            vec![t],
            409 + i as u64,
            400,
        );
        let runs = run_ensemble(&p).unwrap();
        let (mut gross_sum, mut net_sum) = (0.0f64, 0.0f64);
        for run in &runs {
            let log = run.events.as_ref().unwrap();
            gross_sum += log.gross[0] as f64;
            net_sum += log.net[0] as f64;
            // With a full barrier every side-mass change is a counted
            // crossing: the signed counter equals the right-half gain.
            let gained =
                right_count_snapshot(&run.snapshots[0]) - right_count_state(&initial_state(&p, run.replica));
            assert_eq!(gained, log.net[0], "replica {}", run.replica);
        }
        let mean = gross_sum / runs.len() as f64;
        assert!(
            (mean / expected - 1.0).abs() <= 0.10,
            "kernel {i}: mean accepted crossings {mean} vs {expected}"
        );
        let net_mean = net_sum / runs.len() as f64;
        assert!(
            net_mean.abs() <= 0.6,
            "kernel {i}: signed crossings should balance, got mean {net_mean}"
        );
    }
}

#[test]
fn bridge_transports_mass_without_counted_crossings() {
    // With the bond {−1, 0} kept fast and β = 50, the interface is sealed
    // for counted (damped) crossings, yet mass still flows through the
    // bridge at the full rate.
    let p = plan(
        nn(),
        BarrierSpec {
            mode: BarrierMode::Bridges(vec![(-1, 0)]),
            alpha: 1.0,
            beta: 50.0,
        },
        32,
        64,
        Profile::Step { a: 1.0, b: 0.0 },
        vec![0.1, 0.2],
        77,
        20,
    );
    let runs = run_ensemble(&p).unwrap();
    let mut transported = 0i64;
    for run in &runs {
        let log = run.events.as_ref().unwrap();
        assert!(log.gross.iter().all(|&c| c == 0));
        assert!(log.net.iter().all(|&c| c == 0));
        transported += right_count_snapshot(run.snapshots.last().unwrap());
    }
    assert!(
        transported > 20 * 4,
        "a fast bridge must carry macroscopic mass; moved {transported} particles in total"
    );
}

#[test]
fn same_seed_reproduces_bitwise_and_prefixes_are_stable() {
    let kernel = build_kernel(&KernelSpec::LongRange {
        gamma: 3.0,
        z_max: 3,
    })
    .unwrap();
    let base = plan(
        kernel,
        full_barrier(1.0, 1.0),
        8,
        8,
        Profile::Constant { a: 0.5 },
        vec![0.1, 0.3],
        55,
        2,
    );
    let first = run_ensemble(&base).unwrap();
    let second = run_ensemble(&base).unwrap();
    for (x, y) in first.iter().zip(&second) {
        assert_eq!(x.replica, y.replica);
        for (sx, sy) in x.snapshots.iter().zip(&y.snapshots) {
            assert_eq!(sx.occupancy, sy.occupancy);
            assert_eq!(sx.time, sy.time);
        }
        assert_eq!(x.events, y.events);
    }

    // Replica streams depend only on seed ⊕ index, not on the replica count.
    let mut wider = base.clone();
    wider.replicas = 5;
    let five = run_ensemble(&wider).unwrap();
    for (x, y) in first.iter().zip(&five) {
        for (sx, sy) in x.snapshots.iter().zip(&y.snapshots) {
            assert_eq!(sx.occupancy, sy.occupancy);
        }
    }

    // A different seed changes the draw with overwhelming probability.
    let mut reseeded = base.clone();
    reseeded.seed = 56;
    let other = run_ensemble(&reseeded).unwrap();
    let differs = first.iter().zip(&other).any(|(x, y)| {
        x.snapshots
            .iter()
            .zip(&y.snapshots)
            .any(|(sx, sy)| sx.occupancy != sy.occupancy)
    });
    assert!(differs, "independent seeds produced identical trajectories");
}

#[test]
fn advancing_backwards_errors_and_zero_length_is_a_no_op() {
    let kernel = nn();
    let barrier = full_barrier(1.0, 1.0);
    let model = ModelConfig {
        kernel: kernel.clone(),
        barrier: barrier.clone(),
        n: 4,
        window_half_width_sites: 4,
    };
    let mut rng = SmallRng::seed_from_u64(11);
    let mut state = init_state(&model, &Profile::Constant { a: 0.5 }, &mut rng);
    advance(&mut state, &kernel, &barrier, 4, 0.1, &mut rng).unwrap();
    assert_eq!(state.clock(), 0.1);
    let before = state.occupancy().clone();

    let err = advance(&mut state, &kernel, &barrier, 4, 0.05, &mut rng).unwrap_err();
    assert!(matches!(err, Error::InvalidPlan(_)), "got {err}");

    advance(&mut state, &kernel, &barrier, 4, 0.1, &mut rng).unwrap();
    assert_eq!(state.occupancy(), &before, "zero-length advance must not move");
    assert_eq!(state.clock(), 0.1);
}

#[test]
fn invalid_plans_are_rejected() {
    let good = plan(
        nn(),
        full_barrier(1.0, 1.0),
        4,
        4,
        Profile::Constant { a: 0.5 },
        vec![0.1],
        1,
        1,
    );
    let check = |mutate: &dyn Fn(&mut TrajectoryPlan), want_barrier: bool| {
        let mut p = good.clone();
        mutate(&mut p);
        let err = p.validate().unwrap_err();
        if want_barrier {
            assert!(matches!(err, Error::InvalidBarrier(_)), "got {err}");
        } else {
            assert!(matches!(err, Error::InvalidPlan(_)), "got {err}");
        }
    };

    check(&|p| p.model.n = 0, false);
    check(&|p| p.model.window_half_width_sites = 1, false);
    check(
        &|p| {
            // α/n^β = 3/2 > 1: the thinning construction breaks down.
            p.model.n = 2;
            p.model.barrier.alpha = 3.0;
        },
        false,
    );
    check(&|p| p.horizon = -1.0, false);
    check(&|p| p.replicas = 0, false);
    check(&|p| p.snapshot_times.clear(), false);
    check(&|p| p.snapshot_times = vec![0.2, 0.1], false);
    check(
        &|p| {
            p.snapshot_times = vec![0.1, 0.2];
            p.horizon = 0.15;
        },
        false,
    );
    check(&|p| p.initial_profile = Profile::Constant { a: 1.5 }, false);

    // A bridge must carry kernel mass and fit in the window.
    check(
        &|p| {
            p.model.barrier.mode = BarrierMode::Bridges(vec![(-9, 0)]);
        },
        true,
    );
    check(
        &|p| {
            p.model.kernel = build_kernel(&KernelSpec::FiniteRange {
                half_weights: vec![0.25, 0.15, 0.1],
            })
            .unwrap();
            p.model.window_half_width_sites = 2;
            p.model.barrier.mode = BarrierMode::Bridges(vec![(-3, 0)]);
        },
        true,
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Conservation and side-mass bookkeeping hold on arbitrary small
    /// systems: the particle count never changes, and with a full barrier
    /// the signed crossing counter equals the right-half mass gain at every
    /// snapshot.
    #[test]
    fn particle_count_and_crossing_bookkeeping_are_exact(
        seed in any::<u64>(),
        n in 2u32..6,
        window in 4u32..12,
        beta_idx in 0usize..4,
        a in 0.05f64..0.95,
        extra in proptest::collection::vec(0.01f64..1.0, 0..3),
        horizon in 0.05f64..0.5,
    ) {
        let mut raw = vec![1.0];
        raw.extend(extra);
        let total: f64 = raw.iter().sum();
        let half_weights: Vec<f64> = raw.iter().map(|r| r / (2.0 * total)).collect();
        let kernel = build_kernel(&KernelSpec::FiniteRange { half_weights }).unwrap();
        let beta = [0.0, 0.5, 1.0, 2.0][beta_idx];
        let p = plan(
            kernel,
            full_barrier(0.7, beta),
            n,
            window,
            Profile::Constant { a },
            vec![horizon / 2.0, horizon],
            seed,
            1,
        );
        let runs = run_ensemble(&p).unwrap();
        let init = initial_state(&p, 0);
        let count0 = init.particle_count();
        let right0 = right_count_state(&init);
        let log = runs[0].events.as_ref().unwrap();
        let mut prev_gross = 0u64;
        for (j, snap) in runs[0].snapshots.iter().enumerate() {
            prop_assert_eq!(snap.occupancy.count_ones(), count0);
            prop_assert_eq!(
                right_count_snapshot(snap) - right0,
                log.net[j]
            );
            prop_assert!(log.net[j].unsigned_abs() <= log.gross[j]);
            prop_assert!(log.gross[j] >= prev_gross);
            prev_gross = log.gross[j];
        }
    }
}
