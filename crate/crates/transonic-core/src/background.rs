//! Spherically symmetric transonic shock in a conic nozzle and the
//! exit-pressure shooting map for its radius.

use alloc::format;
use alloc::vec::Vec;
use libm::{acos, log, sqrt};

use crate::gas::{mass_flux_of_speed, FlowState, GasConstants, NEWTON_MAX_ITER, NEWTON_TOL};
use crate::{Error, Result};

/// Default resolution of the tabulated background profiles.
pub const DEFAULT_TABLE_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Supersonic,
    Subsonic,
}

/// Conic nozzle `r1 < r < r2`, `0 <= theta < theta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nozzle {
    pub r1: f64,
    pub r2: f64,
    pub theta0: f64,
}

impl Nozzle {
    pub fn new(r1: f64, r2: f64, theta0: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > r1) {
            return Err(Error::Invalid(format!("need 0 < r1 < r2 (got {r1}, {r2})")));
        }
        if !(theta0 > 0.0 && theta0 < core::f64::consts::FRAC_PI_2) {
            return Err(Error::Invalid(format!("need 0 < theta0 < pi/2 (got {theta0})")));
        }
        Ok(Self { r1, r2, theta0 })
    }
}

/// Radial state with `r^2 rho U = m` and `U^2/2 + h = b` on the requested branch.
pub fn solve_radial_state(g: &GasConstants, r: f64, m: f64, b: f64, s: f64, branch: Branch) -> Result<FlowState> {
    if !(r > 0.0 && m > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("radial state needs r, m, B > 0 (got {r}, {m}, {b})")));
    }
    let cstar = g.critical_speed(b);
    let target = m / (r * r);
    let qmax = mass_flux_of_speed(g, b, s, cstar);
    if target > qmax * (1.0 + 1e-14) {
        return Err(Error::FluxExceedsCritical { flux: target, critical: qmax });
    }
    if (target - qmax).abs() <= 1e-14 * qmax {
        return Err(Error::DegenerateRoot);
    }
    let umax = sqrt(2.0 * b);
    let (mut lo, mut hi, mut u) = match branch {
        Branch::Supersonic => (cstar, umax, 1.2 * cstar),
        Branch::Subsonic => (0.0, cstar, 0.8 * cstar),
    };
    if u >= hi || u <= lo {
        u = 0.5 * (lo + hi);
    }
    // f is decreasing on the supersonic bracket and increasing on the subsonic one.
    let sign = if branch == Branch::Supersonic { -1.0 } else { 1.0 };
    for _ in 0..NEWTON_MAX_ITER {
        let f = mass_flux_of_speed(g, b, s, u) - target;
        if sign * f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let h = b - 0.5 * u * u;
        let rho = g.density_from_enthalpy(h, s);
        let c2 = (g.gamma - 1.0) * h;
        let df = rho * (1.0 - u * u / c2);
        let mut next = u - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - u).abs();
        u = next;
        if step <= NEWTON_TOL * u.max(cstar) || hi - lo <= NEWTON_TOL * cstar {
            return Ok(radial_state(g, u, b, s));
        }
    }
    Err(Error::Domain(format!("radial state did not converge at r = {r}")))
}

fn radial_state(g: &GasConstants, u: f64, b: f64, s: f64) -> FlowState {
    let rho = g.density_from_enthalpy(b - 0.5 * u * u, s);
    FlowState::radial(u, g.pressure(rho, s), s)
}

/// Normal shock with `u1` as the normal component; tangential components pass through.
pub fn normal_shock(upstream: &FlowState, g: &GasConstants) -> Result<FlowState> {
    upstream.validate()?;
    let rho1 = upstream.density(g);
    let c1 = sqrt(g.sound_speed_sq(upstream.p, rho1));
    let u1 = upstream.u1;
    if !(u1 > c1) {
        return Err(Error::NotSupersonic { mach: u1 / c1 });
    }
    let gm = g.gamma;
    let bn = 0.5 * u1 * u1 + g.enthalpy(upstream.p, upstream.s);
    let cstar2 = 2.0 * (gm - 1.0) * bn / (gm + 1.0);
    let u2 = cstar2 / u1;
    let rho2 = rho1 * u1 / u2;
    let p2 = upstream.p + rho1 * u1 * u1 - rho2 * u2 * u2;
    let s2 = g.cv * log(p2 / (g.a * libm::pow(rho2, gm)));
    Ok(FlowState::new(u2, upstream.u2, upstream.u3, p2, s2))
}

/// Upstream invariants of a radial supersonic inlet state at `r1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub m: f64,
    pub b: f64,
    pub s: f64,
}

impl Invariants {
    pub fn from_inlet(g: &GasConstants, inlet: &FlowState, nozzle: &Nozzle) -> Result<Self> {
        inlet.validate()?;
        let mach = inlet.mach(g);
        if !(inlet.u1 > 0.0 && mach > 1.0) {
            return Err(Error::NotSupersonic { mach });
        }
        Ok(Self {
            m: nozzle.r1 * nozzle.r1 * inlet.density(g) * inlet.u1,
            b: inlet.bernoulli(g),
            s: inlet.s,
        })
    }
}

/// Exit pressure at `r2` when the shock sits at `r_b`.
pub fn exit_pressure_given_shock(g: &GasConstants, r_b: f64, inlet: &FlowState, nozzle: &Nozzle) -> Result<f64> {
    if !(r_b >= nozzle.r1 && r_b <= nozzle.r2) {
        return Err(Error::Domain(format!("shock radius {r_b} outside [{}, {}]", nozzle.r1, nozzle.r2)));
    }
    let inv = Invariants::from_inlet(g, inlet, nozzle)?;
    exit_pressure_inner(g, r_b, &inv, nozzle)
}

fn exit_pressure_inner(g: &GasConstants, r_b: f64, inv: &Invariants, nozzle: &Nozzle) -> Result<f64> {
    let up = solve_radial_state(g, r_b, inv.m, inv.b, inv.s, Branch::Supersonic)?;
    let down = normal_shock(&up, g)?;
    Ok(solve_radial_state(g, nozzle.r2, inv.m, inv.b, down.s, Branch::Subsonic)?.p)
}

/// Admissible exit pressures `(p1, p2)`: the limits of the exit pressure as
/// the shock approaches the outlet and the inlet respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitPressureRange {
    pub p1: f64,
    pub p2: f64,
}

impl ExitPressureRange {
    pub fn contains(&self, pe: f64) -> bool {
        pe > self.p1 && pe < self.p2
    }
}

pub fn exit_pressure_range(g: &GasConstants, inlet: &FlowState, nozzle: &Nozzle) -> Result<ExitPressureRange> {
    let inv = Invariants::from_inlet(g, inlet, nozzle)?;
    let p2 = exit_pressure_inner(g, nozzle.r1, &inv, nozzle)?;
    let p1 = exit_pressure_inner(g, nozzle.r2, &inv, nozzle)?;
    if !(p1 < p2) {
        return Err(Error::Domain(format!("exit pressure is not decreasing in the shock radius ({p1}, {p2})")));
    }
    Ok(ExitPressureRange { p1, p2 })
}

/// Bisection for the shock radius matching the exit pressure `pe`; stops
/// once the bracket is narrower than `tol`.
pub fn shoot_shock_position(g: &GasConstants, pe: f64, inlet: &FlowState, nozzle: &Nozzle, tol: f64) -> Result<BackgroundSolution> {
    let range = exit_pressure_range(g, inlet, nozzle)?;
    if !range.contains(pe) {
        return Err(Error::ExitPressureOutOfRange { pe, p1: range.p1, p2: range.p2 });
    }
    let inv = Invariants::from_inlet(g, inlet, nozzle)?;
    let (mut lo, mut hi) = (nozzle.r1, nozzle.r2);
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        if exit_pressure_inner(g, mid, &inv, nozzle)? > pe {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    let mut bg = BackgroundSolution::with_shock(g, inlet, nozzle, 0.5 * (lo + hi))?;
    bg.bisection_iterations = iterations;
    bg.range = Some(range);
    Ok(bg)
}

/// `theta_b = arccos(1 - kappa_b z2^2)`.
pub fn background_theta(z2: f64, kappa_b: f64) -> Result<f64> {
    let arg = 1.0 - kappa_b * z2 * z2;
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::Domain(format!("arccos argument {arg} outside [-1, 1]")));
    }
    Ok(acos(arg))
}

/// `sin(theta_b) / (2 z2)` in the closed form that stays smooth at the axis.
pub fn sin_theta_over_2z2(z2: f64, kappa_b: f64) -> f64 {
    sqrt(kappa_b * (2.0 - kappa_b * z2 * z2).max(0.0)) / 2.0
}

/// Values and radial derivatives of one background branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub r: f64,
    pub u: f64,
    pub p: f64,
    pub rho: f64,
    pub c2: f64,
    pub du: f64,
    pub d2u: f64,
    pub dp: f64,
    pub d2p: f64,
    pub drho: f64,
    pub dc2: f64,
}

impl RadialProfile {
    fn new(g: &GasConstants, r: f64, st: &FlowState) -> Self {
        let gm = g.gamma;
        let (u, p) = (st.u1, st.p);
        let rho = st.density(g);
        let c2 = g.sound_speed_sq(p, rho);
        let d = c2 - u * u;
        let dp = 2.0 * gm * p * u * u / (r * d);
        let drho = dp / c2;
        let du = -u * (2.0 / r + dp / (gm * p));
        let dc2 = -(gm - 1.0) * u * du;
        let dd = dc2 - 2.0 * u * du;
        let d2p = dp * (dp / p + 2.0 * du / u - 1.0 / r - dd / d);
        let ddlog = d2p / (gm * p) - dp * dp / (gm * p * p);
        let d2u = du * du / u - u * (-2.0 / (r * r) + ddlog);
        Self { r, u, p, rho, c2, du, d2u, dp, d2p, drho, dc2 }
    }

    pub fn mach(&self) -> f64 {
        self.u / sqrt(self.c2)
    }
}

/// The background transonic shock solution.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundSolution {
    pub gas: GasConstants,
    pub nozzle: Nozzle,
    pub inlet: FlowState,
    pub r_b: f64,
    pub m: f64,
    pub b: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    pub upstream: FlowState,
    pub downstream: FlowState,
    pub exit_pressure: f64,
    pub range: Option<ExitPressureRange>,
    pub bisection_iterations: usize,
}

impl BackgroundSolution {
    /// Background with the shock placed at `r_b`.
    pub fn with_shock(g: &GasConstants, inlet: &FlowState, nozzle: &Nozzle, r_b: f64) -> Result<Self> {
        if !(r_b > nozzle.r1 && r_b < nozzle.r2) {
            return Err(Error::Domain(format!("shock radius {r_b} outside ({}, {})", nozzle.r1, nozzle.r2)));
        }
        let inv = Invariants::from_inlet(g, inlet, nozzle)?;
        let upstream = solve_radial_state(g, r_b, inv.m, inv.b, inv.s, Branch::Supersonic)?;
        let downstream = normal_shock(&upstream, g)?;
        let exit = solve_radial_state(g, nozzle.r2, inv.m, inv.b, downstream.s, Branch::Subsonic)?;
        Ok(Self {
            gas: *g,
            nozzle: *nozzle,
            inlet: *inlet,
            r_b,
            m: inv.m,
            b: inv.b,
            s_minus: inv.s,
            s_plus: downstream.s,
            upstream,
            downstream,
            exit_pressure: exit.p,
            range: None,
            bisection_iterations: 0,
        })
    }

    /// Domain length behind the shock, `r2 - r_b`.
    pub fn n(&self) -> f64 {
        self.nozzle.r2 - self.r_b
    }

    /// `1/(r^2 rho U)`, the same constant on both branches.
    pub fn kappa_b(&self) -> f64 {
        1.0 / self.m
    }

    /// Total-flux constant of the background: `M^2 = m (1 - cos theta0)`.
    pub fn total_flux(&self) -> f64 {
        sqrt(self.m * (1.0 - libm::cos(self.nozzle.theta0)))
    }

    pub fn supersonic(&self, r: f64) -> Result<FlowState> {
        solve_radial_state(&self.gas, r, self.m, self.b, self.s_minus, Branch::Supersonic)
    }

    pub fn subsonic(&self, r: f64) -> Result<FlowState> {
        solve_radial_state(&self.gas, r, self.m, self.b, self.s_plus, Branch::Subsonic)
    }

    /// The physical background: supersonic before `r_b`, subsonic after.
    pub fn state(&self, r: f64) -> Result<FlowState> {
        if r < self.r_b {
            self.supersonic(r)
        } else {
            self.subsonic(r)
        }
    }

    pub fn supersonic_profile(&self, r: f64) -> Result<RadialProfile> {
        Ok(RadialProfile::new(&self.gas, r, &self.supersonic(r)?))
    }

    pub fn subsonic_profile(&self, r: f64) -> Result<RadialProfile> {
        Ok(RadialProfile::new(&self.gas, r, &self.subsonic(r)?))
    }

    /// Uniform table of the physical background on `[r1, r2]`, with the
    /// shock radius inserted on both sides.
    pub fn table(&self, points: usize) -> Result<Vec<(f64, Branch, FlowState)>> {
        let n = points.max(2);
        let (r1, r2) = (self.nozzle.r1, self.nozzle.r2);
        let mut rows = Vec::with_capacity(n + 2);
        let mut shock_done = false;
        for k in 0..n {
            let r = r1 + (r2 - r1) * k as f64 / (n - 1) as f64;
            if !shock_done && r >= self.r_b {
                rows.push((self.r_b, Branch::Supersonic, self.upstream));
                rows.push((self.r_b, Branch::Subsonic, self.downstream));
                shock_done = true;
                if r == self.r_b {
                    continue;
                }
            }
            let branch = if r < self.r_b { Branch::Supersonic } else { Branch::Subsonic };
            let st = match branch {
                Branch::Supersonic => self.supersonic(r)?,
                Branch::Subsonic => self.subsonic(r)?,
            };
            rows.push((r, branch, st));
        }
        Ok(rows)
    }
}
