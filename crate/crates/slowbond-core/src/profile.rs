//! Initial macroscopic density profiles `g: ℝ → [0,1]`.

use alloc::format;

use crate::Error;

/// Named profile presets. `Step` and `Bump` are the interesting initial
/// data (discontinuity at the interface / smooth localized excess);
/// `Constant` gives the stationary product measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `g ≡ a`.
    Constant { a: f64 },
    /// `g = a·1_{u<0} + b·1_{u≥0}`.
    Step { a: f64, b: f64 },
    /// `g(u) = a·exp(1 − 1/(1 − ((u−c)/r)²))` for `|u−c| < r`, else 0;
    /// peak value `a` at `u = c`.
    Bump { a: f64, c: f64, r: f64 },
}

impl Profile {
    /// Evaluate the profile.
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Profile::Constant { a } => a,
            Profile::Step { a, b } => {
                if u < 0.0 {
                    a
                } else {
                    b
                }
            }
            Profile::Bump { a, c, r } => {
                let w = (u - c) / r;
                let d = 1.0 - w * w;
                // Guard the rational blow-up at the support edge: the
                // exponential underflows to ~1e-218 there anyway.
                if d <= 2e-3 {
                    0.0
                } else {
                    a * libm::exp(1.0 - 1.0 / d)
                }
            }
        }
    }

    /// Range must stay inside `[0,1]` (occupation probabilities).
    pub fn validate(&self) -> Result<(), Error> {
        let ok = match *self {
            Profile::Constant { a } => (0.0..=1.0).contains(&a),
            Profile::Step { a, b } => (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b),
            Profile::Bump { a, c, r } => {
                (0.0..=1.0).contains(&a) && c.is_finite() && r.is_finite() && r > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPlan(format!(
                "profile {self:?} must map into [0,1]"
            )))
        }
    }
}
