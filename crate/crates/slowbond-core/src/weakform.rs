//! Test functions, weak-formulation residuals, and discrete-operator
//! convergence statistics.
//!
//! # Test functions
//!
//! A [`TestFunction`] is a pair of one-sided space-time functions, each a
//! finite sum `Σ_j s^j · B_j(u)` of time powers multiplying smooth
//! compactly supported bumps. Constructed with [`TestFunction::smooth`]
//! (identical sides, smooth across the origin) it belongs to the space the
//! plain heat weak form is tested against; with [`TestFunction::two_sided`]
//! it may jump at the origin, as required for interface weak forms. All
//! derivatives are coded in closed form.
//!
//! # Residual functionals
//!
//! [`eval_f_dif`] computes
//! `⟨ρ_t, G_t⟩ − ⟨ρ_0, G_0⟩ − ∫₀ᵗ ⟨ρ_s, (σ²/2·Δ + ∂_s) G_s⟩ ds`,
//! which vanishes on weak solutions of the unobstructed heat equation;
//! [`eval_f_rob`] appends the two interface-trace integrals
//! `− (σ²/2) ∫ [ρ(0⁺)∂G(0⁺) − ρ(0⁻)∂G(0⁻)] + (κσ²/2) ∫ [ρ]₀ · [G]₀`
//! so that it vanishes on solutions of the transmission problem with
//! coefficient κ. Quadrature is trapezoidal in space (on the solver's cell
//! centers) and in time (over every solver step).
//!
//! # Convergence suites
//!
//! [`convergence_suite`] evaluates, exactly, the finite lattice sums whose
//! vanishing as `n → ∞` underpins the hydrodynamic limit: a bulk
//! smeared-operator-versus-Laplacian discrepancy, crossing-bond Taylor
//! remainders, and boxed one-sided replacements. Long tails over far sites
//! are folded in analytically through suffix sums of the jump law, so every
//! statistic is an exact evaluation, not a windowed approximation. Suprema
//! over time are taken on a fixed 33-point uniform grid on the unit
//! interval.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::{BarrierSpec, JumpKernel};
use crate::observables::DensityField;
use crate::pde::PdeSolution;
use crate::Error;

/// Width (in the squared normalized coordinate) of the band at the support
/// edge inside which a bump and its derivatives are flushed to zero. The
/// true values there are below `e^{-499}`, far under roundoff.
const EDGE_GUARD: f64 = 2e-3;

/// `amp · exp(1 − 1/(1 − w²))` with `w = (u − center)/radius`, zero for
/// `|w| ≥ 1`: the standard C^∞ bump, peak value `amp` at `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    pub center: f64,
    pub radius: f64,
}

impl Bump {
    fn core(&self, u: f64) -> Option<(f64, f64, f64)> {
        let w = (u - self.center) / self.radius;
        let d = 1.0 - w * w;
        if d <= EDGE_GUARD {
            return None;
        }
        Some((self.amplitude * libm::exp(1.0 - 1.0 / d), w, d))
    }

    pub fn value(&self, u: f64) -> f64 {
        self.core(u).map_or(0.0, |(b, _, _)| b)
    }

    pub fn d1(&self, u: f64) -> f64 {
        self.core(u)
            .map_or(0.0, |(b, w, d)| b * (-2.0 * w) / (self.radius * d * d))
    }

    pub fn d2(&self, u: f64) -> f64 {
        self.core(u).map_or(0.0, |(b, w, d)| {
            let r2 = self.radius * self.radius;
            let d2 = d * d;
            b * (4.0 * w * w / (d2 * d2) - 2.0 / d2 - 8.0 * w * w / (d2 * d)) / r2
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.center.abs() + self.radius
    }

    fn validate(&self) -> Result<(), Error> {
        if !(self.radius > 0.0)
            || !self.radius.is_finite()
            || !self.center.is_finite()
            || !self.amplitude.is_finite()
        {
            return Err(Error::InvalidTestFunction(format!(
                "bad bump parameters: amplitude {}, center {}, radius {}",
                self.amplitude, self.center, self.radius
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Deriv {
    Value,
    First,
    Second,
    Time,
}

/// `s^k` for the small time powers (core has no `powi`).
fn ipow(s: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= s;
    }
    acc
}

/// Compactly supported space-time test function with closed-form
/// derivatives; see the module docs.
#[derive(Debug, Clone)]
pub struct TestFunction {
    left: Vec<(u32, Bump)>,
    right: Vec<(u32, Bump)>,
    smooth: bool,
    support_radius: f64,
}

fn validate_parts(parts: &[(u32, Bump)]) -> Result<f64, Error> {
    if parts.is_empty() {
        return Err(Error::InvalidTestFunction(
            "test function needs at least one bump".into(),
        ));
    }
    let mut radius = 0.0f64;
    for (_, b) in parts {
        b.validate()?;
        radius = radius.max(b.support_radius());
    }
    Ok(radius)
}

fn eval_parts(parts: &[(u32, Bump)], s: f64, u: f64, which: Deriv) -> f64 {
    let mut acc = 0.0;
    for &(k, ref b) in parts {
        acc += match which {
            Deriv::Value => ipow(s, k) * b.value(u),
            Deriv::First => ipow(s, k) * b.d1(u),
            Deriv::Second => ipow(s, k) * b.d2(u),
            Deriv::Time => {
                if k == 0 {
                    0.0
                } else {
                    k as f64 * ipow(s, k - 1) * b.value(u)
                }
            }
        };
    }
    acc
}

impl TestFunction {
    /// A test function smooth across the origin: the same bump combination
    /// on both sides.
    pub fn smooth(parts: Vec<(u32, Bump)>) -> Result<TestFunction, Error> {
        let support_radius = validate_parts(&parts)?;
        Ok(TestFunction {
            left: parts.clone(),
            right: parts,
            smooth: true,
            support_radius,
        })
    }

    /// A test function with independent branches on the two half-lines;
    /// it may jump at the origin.
    pub fn two_sided(
        left: Vec<(u32, Bump)>,
        right: Vec<(u32, Bump)>,
    ) -> Result<TestFunction, Error> {
        let rl = validate_parts(&left)?;
        let rr = validate_parts(&right)?;
        Ok(TestFunction {
            left,
            right,
            smooth: false,
            support_radius: rl.max(rr),
        })
    }

    pub fn is_smooth_across_origin(&self) -> bool {
        self.smooth
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn side(&self, u: f64) -> &[(u32, Bump)] {
        if u < 0.0 {
            &self.left
        } else {
            &self.right
        }
    }

    /// `G(s, u)`; at `u = 0` the right branch applies, matching the lattice
    /// convention that site 0 belongs to the nonnegative side.
    pub fn value(&self, s: f64, u: f64) -> f64 {
        eval_parts(self.side(u), s, u, Deriv::Value)
    }

    /// `∂_u G(s, u)` (one-sided at the origin, right branch).
    pub fn du(&self, s: f64, u: f64) -> f64 {
        eval_parts(self.side(u), s, u, Deriv::First)
    }

    /// `∂_uu G(s, u)` (one-sided at the origin, right branch).
    pub fn duu(&self, s: f64, u: f64) -> f64 {
        eval_parts(self.side(u), s, u, Deriv::Second)
    }

    /// `∂_s G(s, u)`.
    pub fn ds(&self, s: f64, u: f64) -> f64 {
        eval_parts(self.side(u), s, u, Deriv::Time)
    }

    pub fn left_value_at_origin(&self, s: f64) -> f64 {
        eval_parts(&self.left, s, 0.0, Deriv::Value)
    }

    pub fn right_value_at_origin(&self, s: f64) -> f64 {
        eval_parts(&self.right, s, 0.0, Deriv::Value)
    }

    pub fn left_slope_at_origin(&self, s: f64) -> f64 {
        eval_parts(&self.left, s, 0.0, Deriv::First)
    }

    pub fn right_slope_at_origin(&self, s: f64) -> f64 {
        eval_parts(&self.right, s, 0.0, Deriv::First)
    }
}

/// Default smooth test function: two bumps straddling the origin with
/// nonzero slope there, affine in time.
pub fn default_smooth_test_function() -> TestFunction {
    TestFunction::smooth(vec![
        (
            0,
            Bump {
                amplitude: 1.0,
                center: 0.1,
                radius: 0.35,
            },
        ),
        (
            1,
            Bump {
                amplitude: 0.6,
                center: -0.15,
                radius: 0.3,
            },
        ),
    ])
    .expect("default parameters are valid")
}

/// Default two-sided test function: branches with different origin values
/// (a genuine jump) and nonzero one-sided slopes, affine in time.
pub fn default_two_sided_test_function() -> TestFunction {
    TestFunction::two_sided(
        vec![
            (
                0,
                Bump {
                    amplitude: 1.0,
                    center: -0.2,
                    radius: 0.45,
                },
            ),
            (
                1,
                Bump {
                    amplitude: 0.7,
                    center: -0.15,
                    radius: 0.35,
                },
            ),
        ],
        vec![
            (
                0,
                Bump {
                    amplitude: 0.8,
                    center: 0.25,
                    radius: 0.5,
                },
            ),
            (
                1,
                Bump {
                    amplitude: 0.4,
                    center: 0.2,
                    radius: 0.4,
                },
            ),
        ],
    )
    .expect("default parameters are valid")
}

/// Exact smeared difference `K_n g(x/n) = Σ_z p(z) [g((x+z)/n) − g(x/n)]`
/// over the whole kernel support (no barrier weights).
pub fn discrete_kn<F: Fn(f64) -> f64>(g: F, kernel: &JumpKernel, n: u32, x: i64) -> f64 {
    let nf = n as f64;
    let gx = g(x as f64 / nf);
    let mut acc = 0.0;
    // Smallest weights first for a well-conditioned accumulation.
    for z in (1..=kernel.z_max() as i64).rev() {
        let p = kernel.weight(z);
        acc += p * ((g((x + z) as f64 / nf) - gx) + (g((x - z) as f64 / nf) - gx));
    }
    acc
}

// ------------------------------------------------------------------------
// Weak-formulation residuals
// ------------------------------------------------------------------------

/// Trapezoid over cell centers of `ρ·f`; the end half-weights are
/// irrelevant in practice because test functions vanish near the walls.
fn space_integral<F: Fn(f64) -> f64>(field: &DensityField, f: F) -> f64 {
    let vals = field.values();
    let last = vals.len() - 1;
    let mut acc = 0.0;
    for (i, u) in field.centers().enumerate() {
        let w = if i == 0 || i == last { 0.5 } else { 1.0 };
        acc += w * vals[i] * f(u);
    }
    acc * field.bin_width()
}

fn locate_time(sol: &PdeSolution, t: f64) -> Result<usize, Error> {
    sol.times
        .iter()
        .position(|&tt| (tt - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| {
            Error::InvalidObservable(format!(
                "time {t} is not on the recorded step grid (dt = {})",
                sol.dt
            ))
        })
}

fn check_support(sol: &PdeSolution, g: &TestFunction) -> Result<(), Error> {
    let field = &sol.fields[0];
    let l = -field.left_edge();
    if g.support_radius() > l + 1e-12 {
        return Err(Error::InvalidTestFunction(format!(
            "test-function support radius {} exceeds the solution domain half-width {l}",
            g.support_radius()
        )));
    }
    Ok(())
}

/// Exact integral of `ρ_h · ∂_uu G` for the piecewise-constant field: each
/// cell contributes `ρ_i · [∂_uG(right edge) − ∂_uG(left edge)]` with the
/// analytic derivative taken on the branch the cell lies in (the interface
/// sits on a cell edge). For constant fields this telescopes to the
/// one-sided origin slopes exactly, which is what makes the functionals
/// vanish identically on constants instead of up to quadrature error.
fn laplace_integral(field: &DensityField, g: &TestFunction, s: f64) -> f64 {
    let vals = field.values();
    let h = field.bin_width();
    let l = field.left_edge();
    let mut acc = 0.0;
    for (i, &rho) in vals.iter().enumerate() {
        let el = l + i as f64 * h;
        let er = el + h;
        let parts = if el + 0.5 * h < 0.0 { &g.left } else { &g.right };
        acc += rho * (eval_parts(parts, s, er, Deriv::First) - eval_parts(parts, s, el, Deriv::First));
    }
    acc
}

/// Shared part of both functionals:
/// `⟨ρ_t, G_t⟩ − ⟨ρ_0, G_0⟩ − ∫₀ᵗ ⟨ρ_s, (σ²/2·Δ + ∂_s)G_s⟩ ds`.
fn heat_residual(sol: &PdeSolution, g: &TestFunction, sigma2: f64, it: usize) -> f64 {
    let t_end = sol.times[it];
    let term_t = space_integral(&sol.fields[it], |u| g.value(t_end, u));
    let term_0 = space_integral(&sol.fields[0], |u| g.value(0.0, u));
    let integrand = |k: usize| {
        let s = sol.times[k];
        space_integral(&sol.fields[k], |u| g.ds(s, u))
            + 0.5 * sigma2 * laplace_integral(&sol.fields[k], g, s)
    };
    let mut time_int = 0.0;
    let mut prev = integrand(0);
    for k in 1..=it {
        let cur = integrand(k);
        time_int += 0.5 * (prev + cur) * (sol.times[k] - sol.times[k - 1]);
        prev = cur;
    }
    term_t - term_0 - time_int
}

/// Residual of the unobstructed weak heat formulation; zero (to the scheme
/// and quadrature accuracy) iff `sol` solves the free equation.
pub fn eval_f_dif(
    sol: &PdeSolution,
    g: &TestFunction,
    sigma2: f64,
    t: f64,
) -> Result<f64, Error> {
    if !g.is_smooth_across_origin() {
        return Err(Error::InvalidTestFunction(
            "the plain heat functional requires a test function smooth across the origin".into(),
        ));
    }
    check_support(sol, g)?;
    let it = locate_time(sol, t)?;
    Ok(heat_residual(sol, g, sigma2, it))
}

/// Residual of the transmission (Robin-interface) weak formulation with
/// coefficient `kappa`; uses the solver's interface traces for the two
/// boundary integrals.
pub fn eval_f_rob(
    sol: &PdeSolution,
    g: &TestFunction,
    sigma2: f64,
    kappa: f64,
    t: f64,
) -> Result<f64, Error> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidObservable(format!(
            "transmission coefficient {kappa} must be ≥ 0 and finite"
        )));
    }
    check_support(sol, g)?;
    let it = locate_time(sol, t)?;
    let core = heat_residual(sol, g, sigma2, it);

    let tr = &sol.trace;
    let grad_term = |k: usize| {
        let s = tr.times[k];
        tr.rho_right[k] * g.right_slope_at_origin(s) - tr.rho_left[k] * g.left_slope_at_origin(s)
    };
    let jump_term = |k: usize| {
        let s = tr.times[k];
        (tr.rho_right[k] - tr.rho_left[k]) * (g.right_value_at_origin(s) - g.left_value_at_origin(s))
    };
    let mut b_grad = 0.0;
    let mut b_jump = 0.0;
    for k in 1..=it {
        let dt = tr.times[k] - tr.times[k - 1];
        b_grad += 0.5 * (grad_term(k - 1) + grad_term(k)) * dt;
        b_jump += 0.5 * (jump_term(k - 1) + jump_term(k)) * dt;
    }
    Ok(core - 0.5 * sigma2 * b_grad + 0.5 * kappa * sigma2 * b_jump)
}

// ------------------------------------------------------------------------
// Convergence suites
// ------------------------------------------------------------------------

/// Which lattice statistic to evaluate; see [`convergence_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    /// Bulk: `(1/n) Σ_x sup_s |n² K_n G(s,x/n) − (σ²/2) ΔG(s,x/n)|`.
    ConvDisc,
    /// Crossing bonds: Taylor remainder of `n·(G-difference)` against
    /// `∂_u G(s,0)·(gap)`, over damped bonds only, oriented negative →
    /// nonnegative.
    Neum1,
    /// Crossing bonds: `G`-difference against the origin jump of `G`,
    /// over all crossing pairs.
    LemConvRob,
    /// One-sided box: difference quotient against the one-sided slope at
    /// the origin, for sites inside a box of width ε (both sides summed).
    LemConvNeum,
    /// One-sided bulk away from an ε-box versus the one-sided Laplacian
    /// sum (both sides summed).
    PrincNeu,
}

/// One `(kind, n, ε)` evaluation.
#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub kind: SuiteKind,
    pub n: u32,
    pub epsilon: Option<f64>,
    pub statistic: f64,
}

/// Box widths for the ε-dependent statistics.
pub const EPSILON_GRID: [f64; 4] = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];

const S_GRID_POINTS: usize = 33;

fn s_grid() -> impl Iterator<Item = f64> {
    (0..S_GRID_POINTS).map(|j| j as f64 / (S_GRID_POINTS - 1) as f64)
}

/// Suffix sums of the jump law: `mass[k] = Σ_{d≥k} p(d)` and
/// `first[k] = Σ_{d≥k} d·p(d)`, clamped outside `[1, z_max]`.
struct Tails {
    mass: Vec<f64>,
    first: Vec<f64>,
}

impl Tails {
    fn new(kernel: &JumpKernel) -> Tails {
        let zm = kernel.z_max() as usize;
        let mut mass = vec![0.0; zm + 2];
        let mut first = vec![0.0; zm + 2];
        for k in (1..=zm).rev() {
            let p = kernel.weight(k as i64);
            mass[k] = mass[k + 1] + p;
            first[k] = first[k + 1] + k as f64 * p;
        }
        Tails { mass, first }
    }

    fn mass_from(&self, k: i64) -> f64 {
        let k = k.max(1) as usize;
        if k >= self.mass.len() {
            0.0
        } else {
            self.mass[k]
        }
    }

    fn first_from(&self, k: i64) -> f64 {
        let k = k.max(1) as usize;
        if k >= self.first.len() {
            0.0
        } else {
            self.first[k]
        }
    }
}

/// Last site index on either side of the origin at which the test function
/// can be nonzero, plus a one-site safety margin.
fn support_sites(g: &TestFunction, n: u32) -> i64 {
    libm::ceil(g.support_radius() * n as f64) as i64 + 1
}

fn convdisc_statistic(g: &TestFunction, kernel: &JumpKernel, n: u32) -> f64 {
    let nf = n as f64;
    let n2 = nf * nf;
    let sg = support_sites(g, n);
    let zm = kernel.z_max() as i64;
    let half_sigma2 = 0.5 * kernel.sigma2();
    let total = kernel.total();
    // The test function is smooth across 0 here, so one branch suffices.
    let parts = &g.right;
    let k_count = parts.len();
    let mut coeff = vec![0.0f64; k_count];
    let mut total_sum = 0.0;
    for x in -(sg + zm)..=(sg + zm) {
        let u = x as f64 / nf;
        // Displacements that can land inside the support; everything else
        // contributes only through the total-mass term.
        let lo = (-sg - x).max(-zm);
        let hi = (sg - x).min(zm);
        for c in coeff.iter_mut() {
            *c = 0.0;
        }
        for z in lo..=hi {
            if z == 0 {
                continue;
            }
            let p = kernel.weight(z);
            let v = (x + z) as f64 / nf;
            for (slot, &(_, ref b)) in coeff.iter_mut().zip(parts.iter()) {
                *slot += p * b.value(v);
            }
        }
        for (slot, &(_, ref b)) in coeff.iter_mut().zip(parts.iter()) {
            *slot = n2 * (*slot - b.value(u) * total) - half_sigma2 * b.d2(u);
        }
        let mut sup = 0.0f64;
        for s in s_grid() {
            let mut v = 0.0;
            for (slot, &(k, _)) in coeff.iter().zip(parts.iter()) {
                v += ipow(s, k) * slot;
            }
            sup = sup.max(v.abs());
        }
        total_sum += sup;
    }
    total_sum / nf
}

fn neum1_statistic(g: &TestFunction, kernel: &JumpKernel, barrier: &BarrierSpec, n: u32) -> f64 {
    let nf = n as f64;
    let sg = support_sites(g, n);
    let tails = Tails::new(kernel);
    let half_sigma2 = 0.5 * kernel.sigma2();
    let mut sup = 0.0f64;
    for s in s_grid() {
        let slope0 = g.right_slope_at_origin(s);
        let mut acc = slope0 * half_sigma2;
        for y in 1..=sg {
            acc += nf * g.value(s, -y as f64 / nf) * tails.mass_from(y);
        }
        for z in 0..=sg {
            acc -= nf * g.value(s, z as f64 / nf) * tails.mass_from(z + 1);
        }
        for &(x1, x2) in barrier.bridges() {
            let d = x2 - x1;
            if d > kernel.z_max() as i64 {
                continue;
            }
            let p = kernel.weight(d);
            let bracket =
                nf * (g.value(s, x1 as f64 / nf) - g.value(s, x2 as f64 / nf)) - slope0 * (x1 - x2) as f64;
            acc -= p * bracket;
        }
        sup = sup.max(acc.abs());
    }
    sup
}

fn lemconvrob_statistic(g: &TestFunction, kernel: &JumpKernel, n: u32) -> f64 {
    let nf = n as f64;
    let sg = support_sites(g, n);
    let tails = Tails::new(kernel);
    let mut sup = 0.0f64;
    for s in s_grid() {
        let jump0 = g.left_value_at_origin(s) - g.right_value_at_origin(s);
        let mut acc = -jump0 * kernel.m();
        for x in 1..=sg {
            acc += g.value(s, -x as f64 / nf) * tails.mass_from(x);
        }
        for z in 0..=sg {
            acc -= g.value(s, z as f64 / nf) * tails.mass_from(z + 1);
        }
        sup = sup.max(acc.abs());
    }
    sup
}

fn lemconvneum_statistic(g: &TestFunction, kernel: &JumpKernel, n: u32, eps: f64) -> f64 {
    let nf = n as f64;
    let sg = support_sites(g, n);
    let box_sites = libm::round(eps * nf).max(1.0) as i64;
    let tails = Tails::new(kernel);
    let (mut sup_pos, mut sup_neg) = (0.0f64, 0.0f64);
    for s in s_grid() {
        let slope_r = g.right_slope_at_origin(s);
        let mut pos = 0.0;
        for z in 0..box_sites {
            let gz = g.value(s, z as f64 / nf);
            for x in 0..=sg {
                if x == z {
                    continue;
                }
                let p = kernel.weight(x - z);
                pos += p * (nf * (g.value(s, x as f64 / nf) - gz) - slope_r * (x - z) as f64);
            }
            pos += -nf * gz * tails.mass_from(sg + 1 - z) - slope_r * tails.first_from(sg + 1 - z);
        }
        sup_pos = sup_pos.max(pos.abs());

        let slope_l = g.left_slope_at_origin(s);
        let mut neg = 0.0;
        for zs in 1..box_sites {
            let z = -zs;
            let gz = g.value(s, z as f64 / nf);
            for xs in 1..=sg {
                let x = -xs;
                if x == z {
                    continue;
                }
                let p = kernel.weight(x - z);
                neg += p * (nf * (g.value(s, x as f64 / nf) - gz) - slope_l * (x - z) as f64);
            }
            neg += -nf * gz * tails.mass_from(sg + 1 + z) + slope_l * tails.first_from(sg + 1 + z);
        }
        sup_neg = sup_neg.max(neg.abs());
    }
    sup_pos + sup_neg
}

fn princneu_statistic(g: &TestFunction, kernel: &JumpKernel, n: u32, eps: f64) -> f64 {
    let nf = n as f64;
    let sg = support_sites(g, n);
    let k_eps = libm::round(eps * nf).max(1.0) as i64;
    let tails = Tails::new(kernel);
    let half_sigma2 = 0.5 * kernel.sigma2();
    let (mut sup_pos, mut sup_neg) = (0.0f64, 0.0f64);
    for s in s_grid() {
        let mut pos = 0.0;
        for z in k_eps..=sg {
            let gz = g.value(s, z as f64 / nf);
            for x in 0..=sg {
                if x == z {
                    continue;
                }
                let p = kernel.weight(x - z);
                pos += p * nf * (g.value(s, x as f64 / nf) - gz);
            }
            pos += -nf * gz * tails.mass_from(sg + 1 - z);
        }
        // Sites beyond the support: only the reach-back into the support
        // survives, and the per-site mass is a suffix sum.
        let far_start = (sg + 1).max(k_eps);
        for x in 0..=sg {
            pos += nf * g.value(s, x as f64 / nf) * tails.mass_from(far_start - x);
        }
        for z in 0..=sg {
            pos -= half_sigma2 / nf * g.duu(s, z as f64 / nf);
        }
        sup_pos = sup_pos.max(pos.abs());

        let mut neg = 0.0;
        for zs in k_eps..=sg {
            let z = -zs;
            let gz = g.value(s, z as f64 / nf);
            for xs in 1..=sg {
                let x = -xs;
                if x == z {
                    continue;
                }
                let p = kernel.weight(x - z);
                neg += p * nf * (g.value(s, x as f64 / nf) - gz);
            }
            neg += -nf * gz * tails.mass_from(sg + 1 + z);
        }
        for xs in 1..=sg {
            let x = -xs;
            neg += nf * g.value(s, x as f64 / nf) * tails.mass_from(far_start - xs);
        }
        for zs in 1..=sg {
            neg -= half_sigma2 / nf * g.duu(s, -zs as f64 / nf);
        }
        sup_neg = sup_neg.max(neg.abs());
    }
    sup_pos + sup_neg
}

/// Evaluate the selected statistic for each `n` (and, for the boxed kinds,
/// each ε in [`EPSILON_GRID`]). All sums are exact; results are
/// deterministic functions of `(G, kernel, barrier, n)`.
pub fn convergence_suite(
    kind: SuiteKind,
    g: &TestFunction,
    kernel: &JumpKernel,
    barrier: &BarrierSpec,
    n_list: &[u32],
) -> Result<Vec<SuiteRow>, Error> {
    barrier.validate(kernel)?;
    if matches!(kind, SuiteKind::ConvDisc | SuiteKind::Neum1) && !g.is_smooth_across_origin() {
        return Err(Error::InvalidTestFunction(format!(
            "{kind:?} requires a test function smooth across the origin"
        )));
    }
    if n_list.is_empty() {
        return Err(Error::InvalidTestFunction("empty n list".into()));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidTestFunction("n must be ≥ 1".into()));
        }
        match kind {
            SuiteKind::ConvDisc => rows.push(SuiteRow {
                kind,
                n,
                epsilon: None,
                statistic: convdisc_statistic(g, kernel, n),
            }),
            SuiteKind::Neum1 => rows.push(SuiteRow {
                kind,
                n,
                epsilon: None,
                statistic: neum1_statistic(g, kernel, barrier, n),
            }),
            SuiteKind::LemConvRob => rows.push(SuiteRow {
                kind,
                n,
                epsilon: None,
                statistic: lemconvrob_statistic(g, kernel, n),
            }),
            SuiteKind::LemConvNeum => {
                for eps in EPSILON_GRID {
                    rows.push(SuiteRow {
                        kind,
                        n,
                        epsilon: Some(eps),
                        statistic: lemconvneum_statistic(g, kernel, n, eps),
                    });
                }
            }
            SuiteKind::PrincNeu => {
                for eps in EPSILON_GRID {
                    rows.push(SuiteRow {
                        kind,
                        n,
                        epsilon: Some(eps),
                        statistic: princneu_statistic(g, kernel, n, eps),
                    });
                }
            }
        }
    }
    Ok(rows)
}
