//! Jump law, its moments, and the slow-barrier bookkeeping.
//!
//! A kernel is a symmetric probability law `p` on nonzero signed
//! displacements: `p(z) = p(−z)`, `p(0) = 0`, `Σ_{z≠0} p(z) = 1`. Only the
//! one-sided weights `p(z)` for `z = 1..=z_max` are stored (they sum to
//! 1/2). Derived constants:
//!
//! - `σ² = Σ_{z≠0} z² p(z) = 2 Σ_{z≥1} z² p(z)` — diffusivity scale,
//! - `m  = Σ_{z≥1} z p(z)` — one-sided first moment (drives the interface
//!   permeability `κ = 2mα/σ²`).
//!
//! Constants are always recomputed from the truncated, renormalized weights
//! rather than from closed forms, so that the simulator and the macroscopic
//! solvers consume identical numbers.
//!
//! # Origin-crossing bonds and the two pair-counting sums
//!
//! The crossing bonds are the unordered pairs `{x, y}` with `x < 0 ≤ y`;
//! displacement `z = y − x` contributes exactly `z` such bonds. Two sums
//! over crossing bonds appear downstream, with different pair-counting
//! conventions:
//!
//! - [`sigma_s2`] weights each *unordered* bond by `|y−x|` times the bond's
//!   symmetrized mass `p(z) + p(−z) = 2p(z)` (equivalently: counts each
//!   bond once per orientation at mass `p(z)`). For the full barrier it
//!   reproduces `σ²` exactly; a bridge at displacement `d` subtracts
//!   `d·2p(d)`. This is the quantity whose comparison against `σ²` decides
//!   the macroscopic regime.
//! - [`crossing_first_moment`] counts each crossing pair once, in the
//!   `x < 0 ≤ y` orientation, at mass `p(z)`; for the full barrier it
//!   equals `m`, the constant entering the Robin coefficient.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;

use crate::Error;

/// How the jump law is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `p(±1) = 1/2`.
    NearestNeighbour,
    /// One-sided weights for `z = 1..=len`; must sum to 1/2 and give
    /// positive mass to `z = 1`.
    FiniteRange { half_weights: Vec<f64> },
    /// Heavy tail `p(z) ∝ |z|^{−γ−1}` truncated at `|z| ≤ z_max` and
    /// renormalized; requires `γ > 2` (finite variance).
    LongRange { gamma: f64, z_max: u32 },
}

/// Vose alias table over the `2·z_max` signed displacements: O(1) sampling
/// with one uniform index and one uniform real per draw.
#[derive(Debug, Clone)]
struct AliasTable {
    accept: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> AliasTable {
        let k = weights.len();
        let total: f64 = weights.iter().sum();
        let mut accept: Vec<f64> = weights.iter().map(|w| w * k as f64 / total).collect();
        let mut alias: Vec<u32> = (0..k as u32).collect();
        let mut small: Vec<u32> = Vec::new();
        let mut large: Vec<u32> = Vec::new();
        for (i, &p) in accept.iter().enumerate() {
            if p < 1.0 {
                small.push(i as u32);
            } else {
                large.push(i as u32);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            alias[s as usize] = l;
            let leftover = accept[l as usize] + accept[s as usize] - 1.0;
            accept[l as usize] = leftover;
            if leftover < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Entries left over in either stack have weight 1 up to roundoff.
        for i in small.into_iter().chain(large) {
            accept[i as usize] = 1.0;
        }
        AliasTable { accept, alias }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.accept.len());
        if rng.gen::<f64>() < self.accept[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// A validated, immutable jump law with precomputed constants and sampler.
#[derive(Debug, Clone)]
pub struct JumpKernel {
    /// `p(z)` for `z = i+1`; sums to 1/2 after renormalization.
    half_weights: Vec<f64>,
    sigma2: f64,
    m: f64,
    total: f64,
    c_gamma: Option<f64>,
    alias: AliasTable,
    /// Signed displacement for each alias-table slot.
    displacements: Vec<i64>,
}

/// Build and validate a kernel from its specification.
pub fn build_kernel(spec: &KernelSpec) -> Result<JumpKernel, Error> {
    let (half_weights, c_gamma): (Vec<f64>, Option<f64>) = match spec {
        KernelSpec::NearestNeighbour => (alloc::vec![0.5], None),
        KernelSpec::FiniteRange { half_weights } => {
            if half_weights.is_empty() {
                return Err(Error::InvalidKernel("empty weight table".into()));
            }
            if half_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidKernel(
                    "weights must be finite and nonnegative".into(),
                ));
            }
            if half_weights[0] <= 0.0 {
                return Err(Error::InvalidKernel(
                    "unit jump must have positive mass (irreducibility)".into(),
                ));
            }
            let sum: f64 = half_weights.iter().sum();
            if (sum - 0.5).abs() > 1e-9 {
                return Err(Error::InvalidKernel(format!(
                    "one-sided weights sum to {sum}, expected 1/2"
                )));
            }
            // Renormalize exactly so downstream identities hold to 1e-12.
            (half_weights.iter().map(|w| w * 0.5 / sum).collect(), None)
        }
        KernelSpec::LongRange { gamma, z_max } => {
            if !(*gamma > 2.0) {
                return Err(Error::InvalidKernel(format!(
                    "tail exponent gamma = {gamma} must exceed 2 (finite variance)"
                )));
            }
            if *z_max == 0 {
                return Err(Error::InvalidKernel("z_max must be at least 1".into()));
            }
            // Sum |z|^{−γ−1} from the small end up for accuracy.
            let mut raw: Vec<f64> = (1..=*z_max)
                .map(|z| libm::pow(z as f64, -gamma - 1.0))
                .collect();
            let mut sum = 0.0;
            for r in raw.iter().rev() {
                sum += r;
            }
            let c = 1.0 / (2.0 * sum);
            for r in raw.iter_mut() {
                *r *= c;
            }
            (raw, Some(c))
        }
    };

    let mut sigma2 = 0.0;
    let mut m = 0.0;
    let mut half_total = 0.0;
    for (i, &w) in half_weights.iter().enumerate().rev() {
        let z = (i + 1) as f64;
        sigma2 += 2.0 * z * z * w;
        m += z * w;
        half_total += w;
    }

    let z_max = half_weights.len();
    let mut displacements = Vec::with_capacity(2 * z_max);
    let mut table_weights = Vec::with_capacity(2 * z_max);
    for z in (1..=z_max).rev() {
        displacements.push(-(z as i64));
        table_weights.push(half_weights[z - 1]);
    }
    for z in 1..=z_max {
        displacements.push(z as i64);
        table_weights.push(half_weights[z - 1]);
    }
    let alias = AliasTable::new(&table_weights);

    Ok(JumpKernel {
        half_weights,
        sigma2,
        m,
        total: 2.0 * half_total,
        c_gamma,
        alias,
        displacements,
    })
}

impl JumpKernel {
    /// Largest displacement with nonzero mass.
    pub fn z_max(&self) -> u32 {
        self.half_weights.len() as u32
    }

    /// `p(z)`; zero for `z = 0` and beyond the truncation.
    #[inline]
    pub fn weight(&self, z: i64) -> f64 {
        let a = z.unsigned_abs();
        if z == 0 || a > self.half_weights.len() as u64 {
            0.0
        } else {
            self.half_weights[(a - 1) as usize]
        }
    }

    /// `σ² = Σ_{z≠0} z² p(z)`, from the truncated renormalized weights.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `m = Σ_{z≥1} z p(z)`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// `Σ_{z≠0} p(z)`; equals 1 up to roundoff by construction.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Tail normalizer for heavy-tailed kernels (`p(z) = c_γ |z|^{−γ−1}`).
    pub fn c_gamma(&self) -> Option<f64> {
        self.c_gamma
    }

    /// Draw a signed displacement distributed per the law.
    #[inline]
    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.displacements[self.alias.sample(rng)]
    }
}

/// Which origin-crossing bonds are damped.
#[derive(Debug, Clone, PartialEq)]
pub enum BarrierMode {
    /// Every crossing bond is slow.
    Full,
    /// Every crossing bond is slow except the listed bridges
    /// `(x₁, x₂)` with `x₁ < 0 ≤ x₂`, which keep the fast rate.
    Bridges(Vec<(i64, i64)>),
}

/// Barrier description: which bonds are damped and by how much
/// (slow-bond rate factor `α·n^{−β}`).
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub mode: BarrierMode,
    pub alpha: f64,
    pub beta: f64,
}

impl BarrierSpec {
    /// Check internal consistency and consistency with a kernel.
    pub fn validate(&self, kernel: &JumpKernel) -> Result<(), Error> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::InvalidBarrier(format!(
                "alpha = {} must be positive and finite",
                self.alpha
            )));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::InvalidBarrier(format!(
                "beta = {} must be nonnegative and finite",
                self.beta
            )));
        }
        if let BarrierMode::Bridges(list) = &self.mode {
            for (i, &(x1, x2)) in list.iter().enumerate() {
                if !(x1 < 0 && x2 >= 0) {
                    return Err(Error::InvalidBarrier(format!(
                        "bridge ({x1}, {x2}) must satisfy x1 < 0 <= x2"
                    )));
                }
                if kernel.weight(x2 - x1) == 0.0 {
                    return Err(Error::InvalidBarrier(format!(
                        "bridge ({x1}, {x2}) has no jump mass at displacement {}",
                        x2 - x1
                    )));
                }
                if list[..i].contains(&(x1, x2)) {
                    return Err(Error::InvalidBarrier(format!(
                        "duplicate bridge ({x1}, {x2})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Is the crossing bond `{neg, nonneg}` an (undamped) bridge?
    #[inline]
    pub fn is_bridge(&self, neg: i64, nonneg: i64) -> bool {
        match &self.mode {
            BarrierMode::Full => false,
            BarrierMode::Bridges(list) => list.contains(&(neg, nonneg)),
        }
    }

    /// The listed bridges (empty for the full barrier).
    pub fn bridges(&self) -> &[(i64, i64)] {
        match &self.mode {
            BarrierMode::Full => &[],
            BarrierMode::Bridges(list) => list,
        }
    }
}

/// Barrier second moment: Σ over slow crossing bonds of `|y−x|` times the
/// bond's symmetrized mass `2p(y−x)`. Equals `σ²` exactly for the full
/// barrier; strictly smaller whenever a bridge with positive mass exists.
pub fn sigma_s2(kernel: &JumpKernel, barrier: &BarrierSpec) -> f64 {
    let mut acc = 0.0;
    for z in (1..=kernel.z_max() as i64).rev() {
        // z unordered bonds {x, x+z} with x in −z..0 cross the origin.
        acc += (z * z) as f64 * 2.0 * kernel.weight(z);
    }
    for &(x1, x2) in barrier.bridges() {
        let d = x2 - x1;
        acc -= d as f64 * 2.0 * kernel.weight(d);
    }
    acc
}

/// Crossing first moment: Σ over slow crossing pairs `(x, y)`, `x < 0 ≤ y`,
/// each counted once, of `p(y−x)`. Equals `m` exactly for the full barrier.
pub fn crossing_first_moment(kernel: &JumpKernel, barrier: &BarrierSpec) -> f64 {
    let mut acc = 0.0;
    for z in (1..=kernel.z_max() as i64).rev() {
        acc += z as f64 * kernel.weight(z);
    }
    for &(x1, x2) in barrier.bridges() {
        acc -= kernel.weight(x2 - x1);
    }
    acc
}
