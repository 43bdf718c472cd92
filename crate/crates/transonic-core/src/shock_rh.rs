//! Rankine-Hugoniot conditions on the shock trace in Lagrangian form, the
//! nonlinear jump solve, the linearized jump coefficients and the Taylor
//! remainders computed as exact minus linear.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use libm::{fabs, sqrt};

use crate::background::{sin_theta_over_2z2, BackgroundSolution};
use crate::gas::{FlowState, GasConstants};
use crate::{Error, Result};

/// Iteration cap of the jump Newton solve.
pub const RH_MAX_ITER: usize = 50;
/// Residual target of the jump Newton solve, relative to the flux scale.
pub const RH_TOL: f64 = 1e-13;
/// Pressure jumps below this fraction of `P_b^+(r_b)` are degenerate.
pub const DEGENERATE_JUMP: f64 = 1e-6;

/// Downstream state of a jump solve with the jump ratio `chi = [U2]/[P]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhSolution {
    pub downstream: FlowState,
    pub chi: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Residuals of the mass and normal-momentum jump relations written with
/// `[rho U1]` and `[rho U1^2 + P]`, for downstream `(P, S)` and given
/// `(varpi, U3, B)`. Also returns the downstream state and `chi`.
pub fn rh_flux_residual(
    g: &GasConstants,
    up: &FlowState,
    varpi: f64,
    u3: f64,
    b: f64,
    p: f64,
    s: f64,
    jump_floor: f64,
) -> Result<([f64; 2], FlowState, f64)> {
    let u1 = g.speed_from_bernoulli(b, p, s, u3, varpi)?;
    let rho = g.density(p, s)?;
    let down = FlowState::new(u1, varpi * u1, u3, p, s);
    let dp = p - up.p;
    if !(fabs(dp) >= jump_floor) {
        return Err(Error::DegenerateShock { jump: dp, threshold: jump_floor });
    }
    let chi = (down.u2 - up.u2) / dp;
    let rho_m = up.density(g);
    let m_up = rho_m * up.u1;
    let m = rho * u1;
    let varpi_m = up.u2 / up.u1;
    let jv = varpi - varpi_m;
    let mom = rho * u1 * u1 + p;
    let mom_up = m_up * up.u1 + up.p;
    let jpv = p * varpi - up.p * varpi_m;
    let g1 = m - m_up - m * m_up * chi * jv;
    let g2 = mom - mom_up + m_up * chi * jpv - mom * m_up * chi * jv;
    Ok(([g1, g2], down, chi))
}

/// Downstream `(P, S)` from the mass and normal-momentum jump relations,
/// given the downstream flow-angle ratio `varpi`, swirl `u3` and Bernoulli
/// constant `b`. Newton with a finite-difference Jacobian, started from
/// `guess` or from the normal shock of `up`.
pub fn solve_rh_trace(
    g: &GasConstants,
    up: &FlowState,
    varpi: f64,
    u3: f64,
    b: f64,
    guess: Option<(f64, f64)>,
) -> Result<RhSolution> {
    up.validate()?;
    let (mut p, mut s) = match guess {
        Some(x) => x,
        None => {
            let n = crate::background::normal_shock(up, g)?;
            (n.p, n.s)
        }
    };
    let floor = DEGENERATE_JUMP * p.abs().max(up.p);
    let rho_m = up.density(g);
    let scale = [rho_m * up.u1, rho_m * up.u1 * up.u1 + up.p];
    let norm = |r: &[f64; 2]| fabs(r[0] / scale[0]).max(fabs(r[1] / scale[1]));
    let (mut r, mut down, mut chi) = rh_flux_residual(g, up, varpi, u3, b, p, s, floor)?;
    let mut res = norm(&r);
    let mut it = 0;
    while res > RH_TOL {
        if it == RH_MAX_ITER {
            return Err(Error::JumpSolve(format!("no convergence in {RH_MAX_ITER} steps (residual {res:e})")));
        }
        it += 1;
        let hp = 1e-7 * p.abs().max(1e-3);
        let hs = 1e-7 * (1.0 + s.abs());
        let (rp, _, _) = rh_flux_residual(g, up, varpi, u3, b, p + hp, s, floor)?;
        let (rm, _, _) = rh_flux_residual(g, up, varpi, u3, b, p - hp, s, floor)?;
        let (sp, _, _) = rh_flux_residual(g, up, varpi, u3, b, p, s + hs, floor)?;
        let (sm, _, _) = rh_flux_residual(g, up, varpi, u3, b, p, s - hs, floor)?;
        let j = [
            [(rp[0] - rm[0]) / (2.0 * hp), (sp[0] - sm[0]) / (2.0 * hs)],
            [(rp[1] - rm[1]) / (2.0 * hp), (sp[1] - sm[1]) / (2.0 * hs)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.is_finite()) || det == 0.0 {
            return Err(Error::JumpSolve("singular jump Jacobian".to_string()));
        }
        let dp = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let ds = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut lambda = 1.0;
        loop {
            let trial = rh_flux_residual(g, up, varpi, u3, b, p - lambda * dp, s - lambda * ds, floor);
            if let Ok((rt, dt, ct)) = trial {
                let rn = norm(&rt);
                if rn < res || lambda < 1e-3 {
                    p -= lambda * dp;
                    s -= lambda * ds;
                    r = rt;
                    down = dt;
                    chi = ct;
                    res = rn;
                    break;
                }
            } else if lambda < 1e-3 {
                return Err(Error::JumpSolve("Newton step left the admissible region".to_string()));
            }
            lambda *= 0.5;
        }
        if fabs(dp) < 1e-15 * p.abs() && fabs(ds) < 1e-15 * (1.0 + s.abs()) {
            break;
        }
    }
    let c = down.sound_speed(g);
    if !(down.u1 < c) {
        return Err(Error::JumpSolve(format!("root on the supersonic branch (normal Mach {})", down.u1 / c)));
    }
    Ok(RhSolution { downstream: down, chi, iterations: it, residual: res })
}

/// Both sides of the shock at one Lagrangian ordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockTraceState {
    pub y2: f64,
    /// Shock position `psi(y2)` and its slope.
    pub psi: f64,
    pub dpsi: f64,
    pub sin_theta: f64,
    pub upstream: FlowState,
    pub downstream: FlowState,
}

impl ShockTraceState {
    /// Residuals of the five jump conditions in Lagrangian form:
    /// mass, normal momentum, tangential momentum, swirl and Bernoulli.
    pub fn residuals(&self, g: &GasConstants) -> [f64; 5] {
        let (u, d) = (&self.upstream, &self.downstream);
        let jump = |f: &dyn Fn(&FlowState) -> f64| f(d) - f(u);
        let inv_m = jump(&|st: &FlowState| 1.0 / (st.density(g) * st.u1));
        let varpi = jump(&|st: &FlowState| st.u2 / st.u1);
        let energy = jump(&|st: &FlowState| st.u1 + st.p / (st.density(g) * st.u1));
        let pu = jump(&|st: &FlowState| st.p * st.u2 / st.u1);
        let chi = self.dpsi * self.psi * self.sin_theta / (2.0 * self.y2);
        let lead = if self.y2 == 0.0 { 0.0 } else { 2.0 * self.y2 / (self.psi * self.sin_theta) };
        [
            lead * inv_m + self.dpsi * varpi,
            energy + chi * pu,
            (d.u2 - u.u2) - chi * (d.p - u.p),
            d.u3 - u.u3,
            d.bernoulli(g) - u.bernoulli(g),
        ]
    }
}

/// Shock slope `psi' = (2 y2 / sin theta) (U2+ - U2-) / (psi (P+ - P-))`,
/// zero at the axis.
pub fn shock_ode_rhs(up: &FlowState, down: &FlowState, psi: f64, y2: f64, sin_theta: f64, threshold: f64) -> Result<f64> {
    let jump = down.p - up.p;
    if !(fabs(jump) >= threshold) {
        return Err(Error::DegenerateShock { jump, threshold });
    }
    if y2 == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * y2 / sin_theta * (down.u2 - up.u2) / (psi * jump))
}

/// One closed-form coefficient checked against a finite-difference
/// Jacobian of the exact map it linearizes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCheck {
    pub name: String,
    pub closed: f64,
    pub jacobian: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CoefficientCheck {
    pub fn new(name: &str, closed: f64, jacobian: f64, tolerance: f64) -> Self {
        Self::scaled(name, closed, jacobian, 1e-300, tolerance)
    }

    /// Relative error against `max(|closed|, |jacobian|, scale)`, for
    /// quantities that may vanish.
    pub fn scaled(name: &str, closed: f64, jacobian: f64, scale: f64, tolerance: f64) -> Self {
        let rel_error = fabs(closed - jacobian) / fabs(jacobian).max(fabs(closed)).max(scale);
        Self { name: name.to_string(), closed, jacobian, rel_error, tolerance, pass: rel_error <= tolerance }
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::Coefficient { name: self.name, closed: self.closed, jacobian: self.jacobian })
        }
    }
}

/// Linearized jump relations at the background shock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearJumpCoefficients {
    /// `dP+/dpsi` and `dS+/dpsi` of the jump at fixed `B`.
    pub e1: f64,
    pub e2: f64,
    /// Shock-slope coefficient `U_b^+ / (r_b (P_b^+ - P_b^-))`.
    pub a: f64,
    /// Jacobian of `(rho U1, rho U1^2 + P)` in `(P, S)` behind the shock.
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub det: f64,
    pub condition: f64,
}

impl LinearJumpCoefficients {
    pub fn closed_form(bg: &BackgroundSolution) -> Self {
        let g = &bg.gas;
        let gm = g.gamma;
        let (up, dn) = (&bg.upstream, &bg.downstream);
        let r = bg.r_b;
        let u = dn.u1;
        let p = dn.p;
        let c2 = g.sound_speed_sq(dn.p, dn.density(g));
        let a11 = (u * u - c2) / (u * c2);
        let a12 = -(u * u + c2 / (gm - 1.0)) * p / (g.cv * u * c2);
        let a21 = (u * u - c2) / c2;
        let a22 = -(u * u + 2.0 * c2 / (gm - 1.0)) * p / (g.cv * c2);
        let det = a11 * a22 - a12 * a21;
        let m = up.density(g) * up.u1;
        // right-hand sides: radial derivatives of the upstream fluxes
        let f1 = -2.0 * m / r;
        let f2 = -2.0 * m * up.u1 / r;
        let e1 = (f1 * a22 - f2 * a12) / det;
        let e2 = (a11 * f2 - a21 * f1) / det;
        let a = u / (r * (p - up.p));
        let fro = sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22);
        let condition = fro * fro / fabs(det);
        Self { e1, e2, a, a11, a12, a21, a22, det, condition }
    }

    /// Every coefficient against central differences of the exact maps.
    pub fn checks(&self, bg: &BackgroundSolution, tolerance: f64) -> Result<Vec<CoefficientCheck>> {
        let g = &bg.gas;
        let dn = &bg.downstream;
        let mut out = Vec::new();
        // e1, e2: jump solve with the shock moved along the background
        let d = 1e-4 * bg.n();
        let jump_at = |rs: f64| -> Result<FlowState> {
            let up = bg.supersonic(rs)?;
            Ok(solve_rh_trace(g, &up, 0.0, 0.0, bg.b, None)?.downstream)
        };
        let (hi, lo) = (jump_at(bg.r_b + d)?, jump_at(bg.r_b - d)?);
        let (hi2, lo2) = (jump_at(bg.r_b + 2.0 * d)?, jump_at(bg.r_b - 2.0 * d)?);
        let rich = |f2: f64, f1: f64, b1: f64, b2: f64| (8.0 * (f1 - b1) - (f2 - b2)) / (12.0 * d);
        out.push(CoefficientCheck::new("e1", self.e1, rich(hi2.p, hi.p, lo.p, lo2.p), tolerance));
        out.push(CoefficientCheck::new("e2", self.e2, rich(hi2.s, hi.s, lo.s, lo2.s), tolerance));
        // a_ij: fluxes behind the shock as functions of (P, S) at fixed B
        let flux = |p: f64, s: f64| -> Result<[f64; 2]> {
            let u = g.speed_from_bernoulli(bg.b, p, s, 0.0, 0.0)?;
            let rho = g.density(p, s)?;
            Ok([rho * u, rho * u * u + p])
        };
        let hp = 1e-5 * dn.p;
        let hs = 1e-5;
        let (fp, fm) = (flux(dn.p + hp, dn.s)?, flux(dn.p - hp, dn.s)?);
        let (fp2, fm2) = (flux(dn.p + 2.0 * hp, dn.s)?, flux(dn.p - 2.0 * hp, dn.s)?);
        let (gp, gm_) = (flux(dn.p, dn.s + hs)?, flux(dn.p, dn.s - hs)?);
        let (gp2, gm2) = (flux(dn.p, dn.s + 2.0 * hs)?, flux(dn.p, dn.s - 2.0 * hs)?);
        let d5 = |f2: f64, f1: f64, b1: f64, b2: f64, h: f64| (8.0 * (f1 - b1) - (f2 - b2)) / (12.0 * h);
        out.push(CoefficientCheck::new("a11", self.a11, d5(fp2[0], fp[0], fm[0], fm2[0], hp), tolerance));
        out.push(CoefficientCheck::new("a21", self.a21, d5(fp2[1], fp[1], fm[1], fm2[1], hp), tolerance));
        out.push(CoefficientCheck::new("a12", self.a12, d5(gp2[0], gp[0], gm_[0], gm2[0], hs), tolerance));
        out.push(CoefficientCheck::new("a22", self.a22, d5(gp2[1], gp[1], gm_[1], gm2[1], hs), tolerance));
        // a: shock slope against the downstream flow-angle ratio at the trace
        let y2 = 0.5 * bg.total_flux();
        let sin_b = 2.0 * y2 * sin_theta_over_2z2(y2, bg.kappa_b());
        let slope = |varpi: f64| -> Result<f64> {
            let down = FlowState::new(dn.u1, varpi * dn.u1, 0.0, dn.p, dn.s);
            shock_ode_rhs(&bg.upstream, &down, bg.r_b, y2, sin_b, 0.0)
        };
        let hv = 1e-4;
        let fd = (slope(hv)? - slope(-hv)?) / (2.0 * hv) * sin_b / (2.0 * y2);
        out.push(CoefficientCheck::new("a", self.a, fd, tolerance));
        Ok(out)
    }
}

/// Closed-form jump coefficients, validated against their Jacobians to
/// relative `tolerance`.
pub fn linear_jump_coefficients(bg: &BackgroundSolution, tolerance: f64) -> Result<LinearJumpCoefficients> {
    let c = LinearJumpCoefficients::closed_form(bg);
    if !(c.det != 0.0 && c.det.is_finite()) {
        return Err(Error::LinearSolve(format!("singular jump matrix (det {})", c.det)));
    }
    for chk in c.checks(bg, tolerance)? {
        chk.into_result()?;
    }
    Ok(c)
}

/// Downstream trace values of a hat iterate at one ordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatTrace {
    pub w1: f64,
    pub w2: f64,
    pub w4: f64,
    pub w6: f64,
}

/// Remainders at one trace point: `R3 = P_exact - P_b^+ - e1 W6`,
/// `R4 = S_exact - S_b^+ - e2 W6` and
/// `R11 = psi'_exact - a (2 y2 / sin theta_b) W2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRemainders {
    pub r3: f64,
    pub r4: f64,
    pub r11: f64,
    pub jump: RhSolution,
}

/// Exact-minus-linear remainders at ordinate `y2`. `up` is the upstream
/// state at `(r_b + W6, y2)` and `sin_theta` the downstream chart angle at
/// the trace.
pub fn trace_remainders(
    bg: &BackgroundSolution,
    coef: &LinearJumpCoefficients,
    up: &FlowState,
    hat: &HatTrace,
    y2: f64,
    sin_theta: f64,
) -> Result<TraceRemainders> {
    let g = &bg.gas;
    let dn = &bg.downstream;
    let b = up.bernoulli(g);
    let jump = solve_rh_trace(g, up, hat.w2, up.u3, b, Some((dn.p + coef.e1 * hat.w6, dn.s + coef.e2 * hat.w6)))?;
    let r3 = jump.downstream.p - dn.p - coef.e1 * hat.w6;
    let r4 = jump.downstream.s - bg.s_plus - coef.e2 * hat.w6;
    let u1 = dn.u1 + hat.w1;
    let down = FlowState::new(u1, u1 * hat.w2, up.u3, dn.p + hat.w4, dn.s);
    let threshold = DEGENERATE_JUMP * dn.p;
    let psi = bg.r_b + hat.w6;
    let r11 = if y2 == 0.0 {
        0.0
    } else {
        let exact = shock_ode_rhs(up, &down, psi, y2, sin_theta, threshold)?;
        let sin_b = 2.0 * y2 * sin_theta_over_2z2(y2, bg.kappa_b());
        exact - coef.a * 2.0 * y2 / sin_b * hat.w2
    };
    Ok(TraceRemainders { r3, r4, r11, jump })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{normal_shock, Nozzle};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn bg_at(rb: f64) -> BackgroundSolution {
        let g = GasConstants::air();
        let inlet = FlowState::radial(2.0, 1.0 / 1.4, 0.0);
        BackgroundSolution::with_shock(&g, &inlet, &Nozzle::new(1.0, 2.0, PI / 6.0).unwrap(), rb).unwrap()
    }

    #[test]
    fn background_jump_is_recovered() {
        for rb in [1.2, 1.5, 1.8] {
            let bg = bg_at(rb);
            let sol = solve_rh_trace(&bg.gas, &bg.upstream, 0.0, 0.0, bg.b, None).unwrap();
            assert!((sol.downstream.p - bg.downstream.p).abs() < 1e-12);
            assert!((sol.downstream.s - bg.s_plus).abs() < 1e-12);
            assert_eq!(sol.chi, 0.0);
            // from a cruder guess as well
            let sol = solve_rh_trace(&bg.gas, &bg.upstream, 0.0, 0.0, bg.b, Some((bg.downstream.p * 0.9, bg.s_plus + 0.01))).unwrap();
            assert!((sol.downstream.p - bg.downstream.p).abs() < 1e-11);
            assert!(sol.residual < 1e-11);
        }
    }

    fn perturbed_upstream(bg: &BackgroundSolution, t: f64) -> (FlowState, f64, f64) {
        let u = bg.upstream;
        let up = FlowState::new(u.u1 * (1.0 + 0.02 * t), 0.05 * t, 0.03 * t, u.p * (1.0 - 0.01 * t), u.s + 0.01 * t);
        (up, 0.04 * t, up.u3)
    }

    #[test]
    fn jump_residuals_and_full_system() {
        let bg = bg_at(1.5);
        let g = bg.gas;
        let (up, varpi, u3) = perturbed_upstream(&bg, 1.0);
        let b = up.bernoulli(&g);
        let sol = solve_rh_trace(&g, &up, varpi, u3, b, None).unwrap();
        assert!(sol.residual < 1e-11);
        let d = sol.downstream;
        assert!(d.p > up.p && d.s > up.s);
        // with the slope from the tangential relation all five hold
        let y2 = 0.3;
        let sin_t = 0.4;
        let psi = 1.5;
        let dpsi = shock_ode_rhs(&up, &d, psi, y2, sin_t, 1e-9).unwrap();
        let tr = ShockTraceState { y2, psi, dpsi, sin_theta: sin_t, upstream: up, downstream: d };
        for r in tr.residuals(&g) {
            assert!(r.abs() < 1e-10, "{:?}", tr.residuals(&g));
        }
    }

    #[test]
    fn jump_deviation_from_linear_is_quadratic() {
        let bg = bg_at(1.5);
        let g = bg.gas;
        let c = LinearJumpCoefficients::closed_form(&bg);
        let mut devs = [0.0; 3];
        for (k, t) in [1.0, 0.5, 0.25].iter().enumerate() {
            let up = bg.supersonic(bg.r_b + 0.05 * t).unwrap();
            let up = FlowState::new(up.u1, 0.02 * t, 0.0, up.p, up.s);
            let sol = solve_rh_trace(&g, &up, 0.03 * t, 0.0, bg.b, None).unwrap();
            devs[k] = (sol.downstream.p - bg.downstream.p - c.e1 * 0.05 * t).abs();
        }
        let r1 = devs[0] / devs[1];
        let r2 = devs[1] / devs[2];
        assert!((r1 - 4.0).abs() < 0.5 && (r2 - 4.0).abs() < 0.3, "{r1} {r2}");
    }

    #[test]
    fn coefficients_match_jacobians() {
        for rb in [1.2, 1.5, 1.8] {
            let bg = bg_at(rb);
            let c = linear_jump_coefficients(&bg, 1e-6).unwrap();
            assert!(c.e2 > 0.0);
            assert!(c.a > 0.0);
            assert!(c.det != 0.0 && c.condition.is_finite());
            // moving the shock downstream weakens it
            assert!(c.e1 < 0.0);
            let g = bg.gas;
            let (um, up_) = (bg.upstream.u1, bg.downstream.u1);
            let m = bg.upstream.density(&g) * um;
            let e2 = 2.0 * (g.gamma - 1.0) * g.cv / rb * m / bg.downstream.p * (um - up_);
            assert!((e2 - c.e2).abs() < 1e-12 * c.e2.abs());
        }
    }

    #[test]
    fn slope_examples() {
        let bg = bg_at(1.5);
        let dn = bg.downstream;
        let up = bg.upstream;
        assert_eq!(shock_ode_rhs(&up, &dn, 1.5, 0.3, 0.4, 1e-9).unwrap(), 0.0);
        assert_eq!(shock_ode_rhs(&up, &dn, 1.5, 0.0, 0.0, 1e-9).unwrap(), 0.0);
        let k = bg.kappa_b();
        let delta = 0.01;
        for y2 in [0.05, 0.2, 0.4] {
            let sin_b = 2.0 * y2 * sin_theta_over_2z2(y2, k);
            let down = FlowState::new(dn.u1, delta * sin_b * y2, 0.0, dn.p, dn.s);
            let s = shock_ode_rhs(&up, &down, bg.r_b, y2, sin_b, 1e-9).unwrap();
            let exact = 2.0 * delta * y2 * y2 / (bg.r_b * (dn.p - up.p));
            assert!((s - exact).abs() < 1e-14);
        }
        let same = FlowState::new(dn.u1, 0.0, 0.0, up.p, dn.s);
        assert!(matches!(shock_ode_rhs(&up, &same, 1.5, 0.3, 0.4, 1e-6), Err(Error::DegenerateShock { .. })));
        // odd-like U2 near the axis gives a vanishing slope
        let mut prev = f64::INFINITY;
        for y2 in [1e-1, 1e-2, 1e-3] {
            let sin_b = 2.0 * y2 * sin_theta_over_2z2(y2, k);
            let down = FlowState::new(dn.u1, 0.1 * sin_b, 0.0, dn.p, dn.s);
            let s = shock_ode_rhs(&up, &down, bg.r_b, y2, sin_b, 1e-9).unwrap().abs();
            assert!(s < prev);
            prev = s;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn remainders_vanish_on_background_and_scale() {
        let bg = bg_at(1.5);
        let c = LinearJumpCoefficients::closed_form(&bg);
        let zero = HatTrace { w1: 0.0, w2: 0.0, w4: 0.0, w6: 0.0 };
        let y2 = 0.3;
        let sin_b = 2.0 * y2 * sin_theta_over_2z2(y2, bg.kappa_b());
        let r = trace_remainders(&bg, &c, &bg.upstream, &zero, y2, sin_b).unwrap();
        assert!(r.r3.abs() < 1e-12 && r.r4.abs() < 1e-12 && r.r11.abs() < 1e-14);
        let mut prev: Option<[f64; 3]> = None;
        for t in [0.02, 0.01, 0.005] {
            let hat = HatTrace { w1: 0.3 * t, w2: t, w4: c.e1 * t, w6: t };
            let up = bg.supersonic(bg.r_b + t).unwrap();
            let r = trace_remainders(&bg, &c, &up, &hat, y2, sin_b).unwrap();
            let v = [r.r3.abs(), r.r4.abs(), r.r11.abs()];
            if let Some(p) = prev {
                for k in 0..3 {
                    let ratio = p[k] / v[k];
                    assert!(ratio > 3.5 && ratio < 4.5, "component {k}: {ratio}");
                }
            }
            prev = Some(v);
        }
    }

    #[test]
    fn rejects_subsonic_upstream() {
        let bg = bg_at(1.5);
        assert!(solve_rh_trace(&bg.gas, &bg.downstream, 0.0, 0.0, bg.b, Some((bg.downstream.p * 1.5, bg.s_plus))).is_err());
    }

    proptest! {
        #[test]
        fn jump_is_admissible(rb in 1.1f64..1.9, t in -1.0f64..1.0) {
            let bg = bg_at(rb);
            let (up, varpi, u3) = perturbed_upstream(&bg, 0.2 * t);
            let b = up.bernoulli(&bg.gas);
            let sol = solve_rh_trace(&bg.gas, &up, varpi, u3, b, None).unwrap();
            prop_assert!(sol.downstream.p > up.p);
            prop_assert!(sol.downstream.s > up.s);
            prop_assert!(sol.residual < 1e-11);
            let n = normal_shock(&up, &bg.gas).unwrap();
            prop_assert!((sol.downstream.p - n.p).abs() < 0.2 * n.p);
        }
    }
}
