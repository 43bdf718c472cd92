//! Polytropic gas: `P = A rho^gamma exp(S / c_v)`.

use alloc::format;
use libm::{exp, pow, sqrt};

use crate::{Error, Result};

/// Newton tolerance shared by the thermodynamic inversions.
pub const NEWTON_TOL: f64 = 1e-13;
/// Iteration cap shared by the thermodynamic inversions.
pub const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConstants {
    pub gamma: f64,
    pub a: f64,
    pub cv: f64,
}

impl GasConstants {
    pub fn new(gamma: f64, a: f64, cv: f64) -> Result<Self> {
        if !(gamma > 1.0) || !(a > 0.0) || !(cv > 0.0) {
            return Err(Error::Invalid(format!(
                "gas constants need gamma > 1, A > 0, c_v > 0 (got {gamma}, {a}, {cv})"
            )));
        }
        Ok(Self { gamma, a, cv })
    }

    /// Air-like default: gamma = 1.4, A = 1, c_v = 1.
    pub fn air() -> Self {
        Self { gamma: 1.4, a: 1.0, cv: 1.0 }
    }

    pub fn pressure(&self, rho: f64, s: f64) -> f64 {
        self.a * pow(rho, self.gamma) * exp(s / self.cv)
    }

    /// Exact inverse of [`Self::pressure`] in rho.
    pub fn density(&self, p: f64, s: f64) -> Result<f64> {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("non-positive pressure {p}")));
        }
        Ok(self.density_unchecked(p, s))
    }

    pub(crate) fn density_unchecked(&self, p: f64, s: f64) -> f64 {
        pow(p * exp(-s / self.cv) / self.a, 1.0 / self.gamma)
    }

    pub fn sound_speed_sq(&self, p: f64, rho: f64) -> f64 {
        self.gamma * p / rho
    }

    /// h(P, S) = gamma/(gamma-1) P / rho(P, S).
    pub fn enthalpy(&self, p: f64, s: f64) -> f64 {
        self.gamma / (self.gamma - 1.0) * p / self.density_unchecked(p, s)
    }

    /// Density on the isentrope `s` with enthalpy `h > 0`.
    pub fn density_from_enthalpy(&self, h: f64, s: f64) -> f64 {
        let g = self.gamma;
        pow(h * (g - 1.0) / (g * self.a * exp(s / self.cv)), 1.0 / (g - 1.0))
    }

    /// Critical (sonic) speed for Bernoulli constant `b`.
    pub fn critical_speed(&self, b: f64) -> f64 {
        let g = self.gamma;
        sqrt(2.0 * (g - 1.0) * b / (g + 1.0))
    }

    /// Radial speed recovered from Bernoulli's law with flow-angle ratio
    /// `varpi = U2/U1` and swirl `u3`.
    pub fn speed_from_bernoulli(&self, b: f64, p: f64, s: f64, u3: f64, varpi: f64) -> Result<f64> {
        let num = 2.0 * b - u3 * u3 - 2.0 * self.enthalpy(p, s);
        if !(num > 0.0) {
            return Err(Error::Domain(format!(
                "Bernoulli constant {b} too small for pressure {p}"
            )));
        }
        Ok(sqrt(num / (1.0 + varpi * varpi)))
    }
}

/// Pointwise state in spherical components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub p: f64,
    pub s: f64,
}

impl FlowState {
    pub fn new(u1: f64, u2: f64, u3: f64, p: f64, s: f64) -> Self {
        Self { u1, u2, u3, p, s }
    }

    pub fn radial(u: f64, p: f64, s: f64) -> Self {
        Self { u1: u, u2: 0.0, u3: 0.0, p, s }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.u1, self.u2, self.u3, self.p, self.s].iter().all(|v| v.is_finite());
        if !finite || !(self.p > 0.0) {
            return Err(Error::Domain(format!("invalid state {self:?}")));
        }
        Ok(())
    }

    pub fn density(&self, g: &GasConstants) -> f64 {
        g.density_unchecked(self.p, self.s)
    }

    pub fn speed_sq(&self) -> f64 {
        self.u1 * self.u1 + self.u2 * self.u2 + self.u3 * self.u3
    }

    pub fn sound_speed(&self, g: &GasConstants) -> f64 {
        sqrt(g.sound_speed_sq(self.p, self.density(g)))
    }

    pub fn mach(&self, g: &GasConstants) -> f64 {
        sqrt(self.speed_sq()) / self.sound_speed(g)
    }

    pub fn bernoulli(&self, g: &GasConstants) -> f64 {
        0.5 * self.speed_sq() + g.enthalpy(self.p, self.s)
    }
}

/// Mass flux `U rho(U)` along the isentrope `s` at Bernoulli constant `b`.
pub fn mass_flux_of_speed(g: &GasConstants, b: f64, s: f64, u: f64) -> f64 {
    let h = b - 0.5 * u * u;
    if h <= 0.0 {
        return 0.0;
    }
    u * g.density_from_enthalpy(h, s)
}
