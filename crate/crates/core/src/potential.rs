//! Quartic double-well potential `W(s) = c (1 - s^2)^2`, the primitive
//! `psi(r) = int_{-1}^r sqrt(2 W(s)) ds`, the surface tension `sigma = psi(1)`
//! and the optimal transition profile solving `-theta'' + W'(theta) = 0`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default well coefficient; gives the profile `tanh(s / sqrt 2)`.
pub const DEFAULT_WELL_COEFFICIENT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    c: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            c: DEFAULT_WELL_COEFFICIENT,
        }
    }
}

impl PotentialSpec {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParams(format!(
                "well coefficient must be positive, got {c}"
            )));
        }
        Ok(Self { c })
    }

    pub fn coefficient(&self) -> f64 {
        self.c
    }

    #[inline]
    pub fn w(&self, s: f64) -> f64 {
        let q = 1.0 - s * s;
        self.c * q * q
    }

    #[inline]
    pub fn w_prime(&self, s: f64) -> f64 {
        -4.0 * self.c * s * (1.0 - s * s)
    }

    #[inline]
    pub fn w_second(&self, s: f64) -> f64 {
        self.c * (12.0 * s * s - 4.0)
    }

    /// `max |W''|` over `[-1, 1]`, attained at the wells.
    pub fn max_curvature(&self) -> f64 {
        8.0 * self.c
    }

    /// `sqrt(2 W(s))`, valid for all real `s`.
    #[inline]
    pub fn sqrt_2w(&self, s: f64) -> f64 {
        (2.0 * self.c).sqrt() * (1.0 - s * s).abs()
    }

    /// `psi(r)` for `r` in `[-1, 1]`.
    pub fn psi(&self, r: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::Domain {
                what: "psi",
                value: r,
                lo: -1.0,
                hi: 1.0,
            });
        }
        Ok(self.psi_clamped(r))
    }

    /// `psi` of `r` clamped into `[-1, 1]`. Phase fields may overshoot the
    /// wells by round-off; those values are attributed to the nearest well.
    #[inline]
    pub fn psi_clamped(&self, r: f64) -> f64 {
        let r = r.clamp(-1.0, 1.0);
        (2.0 * self.c).sqrt() * (r + 1.0) * (r + 1.0) * (2.0 - r) / 3.0
    }

    pub fn sigma(&self) -> f64 {
        (2.0 * self.c).sqrt() * 4.0 / 3.0
    }

    /// Rate `a` of the closed-form profile `tanh(a s)`; `a = sqrt(2c)`.
    pub fn profile_rate(&self) -> f64 {
        (2.0 * self.c).sqrt()
    }

    pub fn optimal_profile(&self, s: f64) -> f64 {
        (self.profile_rate() * s).tanh()
    }

    pub fn optimal_profile_derivative(&self, s: f64) -> f64 {
        let t = self.optimal_profile(s);
        self.profile_rate() * (1.0 - t * t)
    }

    /// Lower-bound constant used in the coercivity check
    /// `W(s) >= c min{|s-1|^2, |s+1|^2}`.
    pub fn well_lower_bound(&self, s: f64) -> f64 {
        self.c * (s - 1.0).powi(2).min((s + 1.0).powi(2))
    }
}

/// Optimal profile, either in closed form or tabulated from the first
/// integral `theta' = sqrt(2 W(theta))` with cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub enum ProfileTable {
    ClosedForm {
        potential: PotentialSpec,
        s_max: f64,
    },
    Tabulated {
        potential: PotentialSpec,
        spacing: f64,
        s_max: f64,
        /// Profile values on `0, spacing, 2 spacing, ..., s_max`; the negative
        /// half follows from oddness.
        values: Vec<f64>,
    },
}

/// Default table spacing.
pub const PROFILE_SPACING: f64 = 1e-3;

fn default_s_max(potential: &PotentialSpec) -> f64 {
    // 1 - tanh(a s) ~ 2 exp(-2 a s) < 1e-6 requires a s > 7.25.
    8.0 / potential.profile_rate()
}

impl ProfileTable {
    pub fn closed_form(potential: PotentialSpec) -> Self {
        Self::ClosedForm {
            potential,
            s_max: default_s_max(&potential),
        }
    }

    pub fn tabulated(potential: PotentialSpec, spacing: f64) -> Self {
        let s_max = default_s_max(&potential);
        let n = (s_max / spacing).ceil() as usize;
        let s_max = n as f64 * spacing;
        let f = |t: f64| potential.sqrt_2w(t);
        let mut values = Vec::with_capacity(n + 1);
        let mut theta = 0.0_f64;
        values.push(theta);
        for _ in 0..n {
            let k1 = f(theta);
            let k2 = f(theta + 0.5 * spacing * k1);
            let k3 = f(theta + 0.5 * spacing * k2);
            let k4 = f(theta + spacing * k3);
            theta += spacing / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            values.push(theta.min(1.0));
        }
        Self::Tabulated {
            potential,
            spacing,
            s_max,
            values,
        }
    }

    pub fn s_max(&self) -> f64 {
        match self {
            Self::ClosedForm { s_max, .. } | Self::Tabulated { s_max, .. } => *s_max,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s.abs() >= self.s_max() {
            return s.signum();
        }
        match self {
            Self::ClosedForm { potential, .. } => potential.optimal_profile(s),
            Self::Tabulated {
                potential,
                spacing,
                values,
                ..
            } => {
                let a = s.abs();
                let pos = a / spacing;
                let i = (pos.floor() as usize).min(values.len() - 2);
                let u = pos - i as f64;
                let (y0, y1) = (values[i], values[i + 1]);
                let (d0, d1) = (
                    potential.sqrt_2w(y0) * spacing,
                    potential.sqrt_2w(y1) * spacing,
                );
                let u2 = u * u;
                let u3 = u2 * u;
                let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
                    + (u3 - 2.0 * u2 + u) * d0
                    + (-2.0 * u3 + 3.0 * u2) * y1
                    + (u3 - u2) * d1;
                v.copysign(s)
            }
        }
    }

    /// Derivative via the first integral.
    pub fn derivative(&self, s: f64) -> f64 {
        if s.abs() >= self.s_max() {
            return 0.0;
        }
        match self {
            Self::ClosedForm { potential, .. } => potential.optimal_profile_derivative(s),
            Self::Tabulated { potential, .. } => potential.sqrt_2w(self.eval(s)),
        }
    }
}
