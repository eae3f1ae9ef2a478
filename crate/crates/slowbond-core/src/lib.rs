//! Core numerics for a one-dimensional exclusion gas with a damped interface
//! at the origin ("slow bonds"), together with the macroscopic heat-equation
//! solvers it converges to under diffusive scaling, weak-formulation
//! residual diagnostics, and discrete-operator convergence suites.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all I/O, file
//! formats and the CLI live in the companion `slowbond` crate.
//!
//! # Model summary
//!
//! Particles live on the integer window `−W..W−1` with at most one particle
//! per site. A particle at `x` attempts a jump of signed displacement `z`
//! drawn from a symmetric law `p` (`Σ_{z≠0} p(z) = 1`); the attempt succeeds
//! iff the target is inside the window and empty. Bonds that cross the
//! origin (`x < 0 ≤ y`, the bond between −1 and 0 included) are *slow*: an
//! attempt over such a bond is additionally accepted only with probability
//! `α/n^β`, except over explicitly configured *bridge* bonds, which stay
//! fast. Time is macroscopic: the per-particle attempt rate is `n²`, so an
//! unordered bond with exactly one occupied endpoint exchanges at
//! microscopic rate `p(y−x)` (damped by `α/n^β` when slow).
//!
//! Under diffusive scaling the empirical density converges to
//! `∂_t ρ = (σ²/2) Δρ` with interface condition depending on `β`:
//! free (no condition, `β < 1` or any bridge present), Robin
//! (`∂_uρ(0±) = κ[ρ(0⁺) − ρ(0⁻)]` with `κ = 2mα/σ²`, `β = 1`), or Neumann
//! (`κ = 0`, `β > 1`), where `σ² = Σ z²p(z)` and `m = Σ_{z≥1} z p(z)`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod kernel;
pub mod observables;
pub mod pde;
pub mod profile;
pub mod rle;
pub mod sim;
pub mod weakform;

use alloc::string::String;

/// Crate-wide error type. Variants carry the violated precondition in a
/// human-readable message; the CLI crate wraps them with stage labels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Kernel construction rejected (bad γ, bad weight table, …).
    InvalidKernel(String),
    /// Barrier description inconsistent with the kernel or window.
    InvalidBarrier(String),
    /// Trajectory plan rejected (thinning impossible, bad snapshot grid, …).
    InvalidPlan(String),
    /// Observable precondition violated (bin alignment, box size, …).
    InvalidObservable(String),
    /// PDE problem rejected (grid, regime, profile, …).
    InvalidPdeProblem(String),
    /// The PDE solve produced non-finite values; message records the grid.
    NumericalFailure(String),
    /// Weak-form evaluation rejected (wrong test-function space, coverage…).
    InvalidTestFunction(String),
}

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::InvalidKernel(m) => write!(f, "invalid kernel: {m}"),
            Error::InvalidBarrier(m) => write!(f, "invalid barrier: {m}"),
            Error::InvalidPlan(m) => write!(f, "invalid trajectory plan: {m}"),
            Error::InvalidObservable(m) => write!(f, "invalid observable request: {m}"),
            Error::InvalidPdeProblem(m) => write!(f, "invalid PDE problem: {m}"),
            Error::NumericalFailure(m) => write!(f, "numerical failure: {m}"),
            Error::InvalidTestFunction(m) => write!(f, "invalid test function: {m}"),
        }
    }
}

impl core::error::Error for Error {}
