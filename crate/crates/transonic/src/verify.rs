//! Diagnostics of a converged solution.
//!
//! Every check is computed from two tables that a solve writes to disk:
//! the physical position and state at every subsonic node (`nodes.csv`) and
//! both sides of the shock at every trace point (`shock_trace.csv`). The
//! interior Euler residual uses its own discretization of the Eulerian
//! equations on the node grid, independent of the one the iteration solves.

use std::path::Path;

use serde::Serialize;
use transonic_core::gas::{FlowState, GasConstants};
use transonic_core::numerics::{derivative_cell, derivative_vertex, face_extrapolate, lagrange4_nonuniform, Parity};
use transonic_core::profile::Profile;
use transonic_core::shock_rh::ShockTraceState;

use crate::config::{Case, Diagnostics};
use crate::error::{HarnessError, Result};
use crate::output::{fmt17, write_csv};
use crate::pipeline::SolutionBundle;
use crate::reconstruct::{lagrange4_slope, ShockCurve};

/// Physical nodes of the subsonic grid: `n1 + 1` streamline stations by
/// `n2` streamlines, stored station-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub n1: usize,
    pub n2: usize,
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub states: Vec<FlowState>,
}

impl NodeTable {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    fn column(&self, i: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..self.n2).map(|j| f(self.idx(i, j))).collect()
    }

    fn row(&self, j: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..=self.n1).map(|i| f(self.idx(i, j))).collect()
    }

    /// Whether a node lies in one of the two wall corners (shock and exit),
    /// boxes covering an eighth of the grid in each direction. The data are
    /// not compatible there in general and the solution is singular.
    pub fn in_corner(&self, i: usize, j: usize) -> bool {
        let (b1, b2) = ((self.n1 / 8).max(2), (self.n2 / 8).max(2));
        j + b2 >= self.n2 && (i < b1 || i + b1 > self.n1)
    }
}

/// Everything the checks read.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyInput {
    pub gas: GasConstants,
    pub epsilon: f64,
    pub theta0: f64,
    pub r2: f64,
    pub wall: Profile,
    pub straight_wall: bool,
    pub nodes: NodeTable,
    pub trace: Vec<ShockTraceState>,
    pub shock: ShockCurve,
}

const STATE_COLUMNS: [&str; 5] = ["U1", "U2", "U3", "P", "S"];

fn state_cells(st: &FlowState) -> [String; 5] {
    [st.u1, st.u2, st.u3, st.p, st.s].map(fmt17)
}

impl VerifyInput {
    pub fn from_bundle(b: &SolutionBundle) -> Result<Self> {
        let problem = b.problem()?;
        let dom = problem.domain();
        let nodes = problem.physical_nodes(&b.state)?;
        let trace = problem.shock_trace(&b.state)?;
        Ok(Self {
            gas: b.background.gas,
            epsilon: b.case.perturbation.epsilon,
            theta0: b.case.nozzle.theta0,
            r2: b.case.nozzle.r2,
            wall: b.case.perturbation.wall.clone(),
            straight_wall: b.case.numerics.straight_wall,
            nodes: NodeTable {
                n1: dom.n1,
                n2: dom.n2,
                r: nodes.iter().map(|n| n.0).collect(),
                theta: nodes.iter().map(|n| n.1).collect(),
                states: nodes.iter().map(|n| n.2).collect(),
            },
            trace,
            shock: b.shock.clone(),
        })
    }

    /// Writes `nodes.csv` and `shock_trace.csv`.
    pub fn write_tables(&self, dir: &Path) -> Result<()> {
        let t = &self.nodes;
        let mut header = vec!["i", "j", "r", "theta"];
        header.extend(STATE_COLUMNS);
        let rows = (0..=t.n1).flat_map(|i| {
            (0..t.n2).map(move |j| {
                let k = t.idx(i, j);
                let mut row = vec![i.to_string(), j.to_string(), fmt17(t.r[k]), fmt17(t.theta[k])];
                row.extend(state_cells(&t.states[k]));
                row
            })
        });
        write_csv(&dir.join("nodes.csv"), &header, rows)?;

        let header = [
            "y2", "psi", "dpsi", "sin_theta", "U1_up", "U2_up", "U3_up", "P_up", "S_up", "U1_down", "U2_down", "U3_down", "P_down",
            "S_down",
        ];
        let rows = self.trace.iter().map(|s| {
            let mut row = [s.y2, s.psi, s.dpsi, s.sin_theta].map(fmt17).to_vec();
            row.extend(state_cells(&s.upstream));
            row.extend(state_cells(&s.downstream));
            row
        });
        write_csv(&dir.join("shock_trace.csv"), &header, rows)
    }

    /// Rebuilds the input from the tables a solve wrote to `dir`.
    pub fn from_dir(case: &Case, dir: &Path) -> Result<Self> {
        let nodes_rows = read_rows(&dir.join("nodes.csv"), 9)?;
        let n1 = nodes_rows.iter().map(|r| r[0] as usize).max().unwrap_or(0);
        let n2 = nodes_rows.iter().map(|r| r[1] as usize).max().map_or(0, |m| m + 1);
        if n2 < 4 || n1 < 4 || nodes_rows.len() != (n1 + 1) * n2 {
            return Err(HarnessError::Parse(format!("{}: incomplete node table", dir.join("nodes.csv").display())));
        }
        let state = |r: &[f64]| FlowState::new(r[0], r[1], r[2], r[3], r[4]);
        let nodes = NodeTable {
            n1,
            n2,
            r: nodes_rows.iter().map(|r| r[2]).collect(),
            theta: nodes_rows.iter().map(|r| r[3]).collect(),
            states: nodes_rows.iter().map(|r| state(&r[4..9])).collect(),
        };
        let trace = read_rows(&dir.join("shock_trace.csv"), 14)?
            .iter()
            .map(|r| ShockTraceState {
                y2: r[0],
                psi: r[1],
                dpsi: r[2],
                sin_theta: r[3],
                upstream: state(&r[4..9]),
                downstream: state(&r[9..14]),
            })
            .collect();
        let shock_rows = read_rows(&dir.join("shock.csv"), 2)?;
        Ok(Self {
            gas: case.gas,
            epsilon: case.perturbation.epsilon,
            theta0: case.nozzle.theta0,
            r2: case.nozzle.r2,
            wall: case.perturbation.wall.clone(),
            straight_wall: case.numerics.straight_wall,
            nodes,
            trace,
            shock: ShockCurve { theta: shock_rows.iter().map(|r| r[0]).collect(), xi: shock_rows.iter().map(|r| r[1]).collect() },
        })
    }

    /// Largest `|U1|` or `P` over the nodes.
    pub fn scale(&self) -> f64 {
        self.nodes.states.iter().fold(0.0, |m: f64, s| m.max(s.u1.abs()).max(s.p.abs()))
    }

    /// Grid step: the larger of the streamwise spacing and the angular one.
    pub fn h(&self) -> f64 {
        let t = &self.nodes;
        let r_shock = t.r[t.idx(0, 0)];
        ((self.r2 - r_shock) / t.n1 as f64).max(self.theta0 / t.n2 as f64)
    }
}

/// Reads a headed numeric CSV table, skipping non-numeric columns.
fn read_rows(path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().take(width).map(str::parse).collect();
        match row {
            Ok(row) if row.len() == width => out.push(row),
            _ => return Err(HarnessError::Parse(format!("{}: malformed row {}", path.display(), line + 2))),
        }
    }
    Ok(out)
}

/// One named diagnostic. Informational checks carry no tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance: Some(tolerance), pass: value <= tolerance }
    }

    /// Passes when `value > 0`.
    fn positive(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: Some(0.0), pass: value > 0.0 }
    }

    fn info(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: None, pass: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub h: f64,
    pub scale: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Tolerance constants. Perturbation checks with constant `c` and order
/// `p` pass below `c max(eps, floor) scale h^p`. The defaults sit at two
/// to three times the largest value measured on the default case for
/// `eps <= 4e-3` and grids up to 128.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Jump conditions, order 2.
    pub jump: f64,
    /// Relative variation of `B` and `S` along streamlines.
    pub transport: f64,
    /// `r U3 sin(theta)` along streamlines, order 2.
    pub swirl: f64,
    /// `U2`, `U3` extrapolated to the axis, order 2.
    pub axis_odd: f64,
    /// Axis slopes of `U1`, `P`, `S`, order 1.
    pub axis_even: f64,
    /// `U2 / U1` against the wall slope, order 2.
    pub wall_slip: f64,
    /// Relative Euler residuals pass below `(interior + interior_eps eps) h^2`:
    /// the discretization error of the background does not scale with `eps`.
    pub interior: f64,
    pub interior_eps: f64,
    /// `xi'(0)`, order 2.
    pub xi_axis: f64,
    /// Straight wall: `d/dtheta` of `U1, U3, P, S` and `xi'` at the wall
    /// pass below `straight_wall scale h^2`.
    pub straight_wall: f64,
    /// Effective `eps` below which every check sits at round-off.
    pub floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            jump: 300.0,
            transport: 1e-12,
            swirl: 10.0,
            axis_odd: 50.0,
            axis_even: 50.0,
            wall_slip: 500.0,
            interior: 20.0,
            interior_eps: 2.5e4,
            xi_axis: 10.0,
            straight_wall: 10.0,
            floor: 1e-8,
        }
    }
}

/// Raw measurements, before tolerances are applied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Measurements {
    pub jump_residual: f64,
    pub min_pressure_jump: f64,
    pub min_entropy_jump: f64,
    pub bernoulli_variation: f64,
    pub entropy_variation: f64,
    pub swirl_variation: f64,
    pub axis_odd: f64,
    pub axis_even: f64,
    pub wall_slip: f64,
    pub interior_mass: f64,
    pub interior_momentum: f64,
    /// The same three inside the wall corners.
    pub corner_slip: f64,
    pub corner_mass: f64,
    pub corner_momentum: f64,
    pub min_jacobian: f64,
    pub xi_axis_slope: f64,
    /// `d/dtheta` of `U1, U3, P, S` at the wall, at fixed `r`.
    pub wall_dtheta: [f64; 4],
    pub xi_wall_slope: f64,
    pub xi_quotients: [f64; 3],
}

pub fn measure(input: &VerifyInput) -> Measurements {
    let g = &input.gas;
    let t = &input.nodes;
    let (n1, n2) = (t.n1, t.n2);
    let mut m = Measurements {
        min_pressure_jump: f64::INFINITY,
        min_entropy_jump: f64::INFINITY,
        min_jacobian: f64::INFINITY,
        ..Default::default()
    };

    for s in &input.trace {
        for v in s.residuals(g) {
            m.jump_residual = m.jump_residual.max(v.abs());
        }
        m.min_pressure_jump = m.min_pressure_jump.min(s.downstream.p - s.upstream.p);
        m.min_entropy_jump = m.min_entropy_jump.min(s.downstream.s - s.upstream.s);
    }

    let swirl = |k: usize| t.r[k] * t.states[k].u3 * t.theta[k].sin();
    for j in 0..n2 {
        let k0 = t.idx(0, j);
        let (b0, s0, w0) = (t.states[k0].bernoulli(g), t.states[k0].s, swirl(k0));
        for i in 1..=n1 {
            let k = t.idx(i, j);
            m.bernoulli_variation = m.bernoulli_variation.max((t.states[k].bernoulli(g) - b0).abs());
            m.entropy_variation = m.entropy_variation.max((t.states[k].s - s0).abs());
            m.swirl_variation = m.swirl_variation.max((swirl(k) - w0).abs());
        }
    }

    // axis: odd components extrapolate to zero, even ones are flat
    for i in 0..=n1 {
        let (a, b) = (&t.states[t.idx(i, 0)], &t.states[t.idx(i, 1)]);
        let (ta, tb) = (t.theta[t.idx(i, 0)], t.theta[t.idx(i, 1)]);
        let at_axis = |fa: f64, fb: f64| (fa * tb - fb * ta) / (tb - ta);
        m.axis_odd = m.axis_odd.max(at_axis(a.u2, b.u2).abs()).max(at_axis(a.u3, b.u3).abs());
        let slope = |fa: f64, fb: f64| (fb - fa) / (tb * tb - ta * ta) * 2.0 * ta;
        for (fa, fb) in [(a.u1, b.u1), (a.p, b.p), (a.s, b.s)] {
            m.axis_even = m.axis_even.max(slope(fa, fb).abs());
        }
    }

    // wall slip: U2 / U1 at the wall against the wall slope r theta_w'(r)
    for i in 0..=n1 {
        let col = t.column(i, |k| t.states[k].u2 / t.states[k].u1);
        let r = face_extrapolate(&t.column(i, |k| t.r[k]));
        let datum = input.epsilon * r * input.wall.derivative(r, 1);
        let e = (face_extrapolate(&col) - datum).abs();
        if t.in_corner(i, n2 - 1) {
            m.corner_slip = m.corner_slip.max(e);
        } else {
            m.wall_slip = m.wall_slip.max(e);
        }
    }

    let res = interior_residuals(input);
    [m.interior_mass, m.interior_momentum, m.corner_mass, m.corner_momentum] = res.sup;
    m.min_jacobian = res.min_jacobian;

    let tr = &input.shock;
    let k = tr.len();
    if k >= 6 {
        // cubic through the first trace points, excluding the even closure
        let xs = [tr.theta[1], tr.theta[2], tr.theta[3], tr.theta[4]];
        let ys = [tr.xi[1], tr.xi[2], tr.xi[3], tr.xi[4]];
        m.xi_axis_slope = lagrange4_slope(&xs, &ys, 0.0).abs();
        m.xi_wall_slope = tr.slope_at(tr.theta[k - 1]).abs();
        m.xi_quotients = tr.difference_quotients();
    }
    m.wall_dtheta = wall_angular_derivatives(t);
    m
}

/// Index-space derivatives of a node quantity: along streamlines (vertex
/// grid) and across them (cell grid with an axis ghost of the given parity).
fn index_derivatives(t: &NodeTable, f: &dyn Fn(usize) -> f64, parity: Parity) -> (Vec<f64>, Vec<f64>) {
    let mut di = vec![0.0; t.r.len()];
    let mut dj = vec![0.0; t.r.len()];
    for j in 0..t.n2 {
        for (i, d) in derivative_vertex(&t.row(j, f), 1.0).into_iter().enumerate() {
            di[t.idx(i, j)] = d;
        }
    }
    for i in 0..=t.n1 {
        for (j, d) in derivative_cell(&t.column(i, f), 1.0, parity, None).into_iter().enumerate() {
            dj[t.idx(i, j)] = d;
        }
    }
    (di, dj)
}

struct InteriorResiduals {
    /// Mass and momentum away from the corners, then inside them.
    sup: [f64; 4],
    min_jacobian: f64,
}

/// Sup of the steady axisymmetric Euler residuals with swirl in spherical
/// coordinates over the interior nodes, relative to `rho U1 / r` (mass) and
/// `U1^2 / r` (radial and polar momentum); and the smallest Jacobian of
/// the node map `(i, j) -> (r, theta)`.
fn interior_residuals(input: &VerifyInput) -> InteriorResiduals {
    let t = &input.nodes;
    let g = &input.gas;
    let st = &t.states;
    let rho: Vec<f64> = st.iter().map(|s| s.density(g)).collect();
    let (r_i, r_j) = index_derivatives(t, &|k| t.r[k], Parity::Even);
    let (th_i, th_j) = index_derivatives(t, &|k| t.theta[k], Parity::Odd);
    let jac: Vec<f64> = (0..t.r.len()).map(|k| r_i[k] * th_j[k] - r_j[k] * th_i[k]).collect();
    let min_jac = jac.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(min_jac > 0.0) {
        return InteriorResiduals { sup: [f64::INFINITY; 4], min_jacobian: min_jac };
    }
    let grad = |f: &dyn Fn(usize) -> f64, parity: Parity| {
        let (f_i, f_j) = index_derivatives(t, f, parity);
        let dr: Vec<f64> = (0..jac.len()).map(|k| (f_i[k] * th_j[k] - f_j[k] * th_i[k]) / jac[k]).collect();
        let dt: Vec<f64> = (0..jac.len()).map(|k| (f_j[k] * r_i[k] - f_i[k] * r_j[k]) / jac[k]).collect();
        (dr, dt)
    };
    let (m1_r, _) = grad(&|k| rho[k] * st[k].u1, Parity::Even);
    let (_, m2_t) = grad(&|k| rho[k] * st[k].u2, Parity::Odd);
    let (u1_r, u1_t) = grad(&|k| st[k].u1, Parity::Even);
    let (u2_r, u2_t) = grad(&|k| st[k].u2, Parity::Odd);
    let (p_r, p_t) = grad(&|k| st[k].p, Parity::Even);

    let mut sup = [0.0f64; 4];
    for i in 1..t.n1 {
        for j in 0..t.n2 - 1 {
            let k = t.idx(i, j);
            let (r, th) = (t.r[k], t.theta[k]);
            let s = &st[k];
            let cot = th.cos() / th.sin();
            let ru = rho[k] * s.u1;
            let e_mass = m1_r[k] + 2.0 * ru / r + m2_t[k] / r + rho[k] * s.u2 * cot / r;
            let e_r = s.u1 * u1_r[k] + s.u2 * u1_t[k] / r - (s.u2 * s.u2 + s.u3 * s.u3) / r + p_r[k] / rho[k];
            let e_t = s.u1 * u2_r[k] + s.u2 * u2_t[k] / r + s.u1 * s.u2 / r - s.u3 * s.u3 * cot / r + p_t[k] / (rho[k] * r);
            let u2 = s.u1 * s.u1 / r;
            let at = if t.in_corner(i, j) { 2 } else { 0 };
            sup[at] = sup[at].max((e_mass * r / ru).abs());
            sup[at + 1] = sup[at + 1].max((e_r / u2).abs()).max((e_t / u2).abs());
        }
    }
    InteriorResiduals { sup, min_jacobian: min_jac }
}

/// `d/dtheta` at fixed `r` of `U1, U3, P, S` on the wall face, from cubic
/// extrapolation across the last cells and the chain rule.
fn wall_angular_derivatives(t: &NodeTable) -> [f64; 4] {
    let n2 = t.n2;
    let xs: [f64; 4] = core::array::from_fn(|q| (n2 - 4 + q) as f64 + 0.5);
    let x = n2 as f64;
    let face = |f: &dyn Fn(usize) -> f64| -> (Vec<f64>, Vec<f64>) {
        (0..=t.n1)
            .map(|i| {
                let ys: [f64; 4] = core::array::from_fn(|q| f(t.idx(i, n2 - 4 + q)));
                (lagrange4_nonuniform(&xs, &ys, x), lagrange4_slope(&xs, &ys, x))
            })
            .unzip()
    };
    let along = |v: &[f64]| derivative_vertex(v, 1.0);
    let (r_f, r_x) = face(&|k| t.r[k]);
    let (th_f, th_x) = face(&|k| t.theta[k]);
    let (r_i, th_i) = (along(&r_f), along(&th_f));
    let st = &t.states;
    let comps: [&dyn Fn(usize) -> f64; 4] = [&|k| st[k].u1, &|k| st[k].u3, &|k| st[k].p, &|k| st[k].s];
    comps.map(|f| {
        let (v, v_x) = face(f);
        let v_i = along(&v);
        (0..=t.n1)
            .map(|i| ((v_x[i] * r_i[i] - v_i[i] * r_x[i]) / (th_x[i] * r_i[i] - th_i[i] * r_x[i])).abs())
            .fold(0.0, f64::max)
    })
}

pub fn evaluate(input: &VerifyInput, level: Diagnostics, tol: &Tolerances) -> VerifyReport {
    let m = measure(input);
    let h = input.h();
    let scale = input.scale();
    let e = input.epsilon.max(tol.floor) * scale;
    let interior = (tol.interior + tol.interior_eps * input.epsilon) * h * h;
    let mut checks = vec![
        Check::below("jump_residual", m.jump_residual, tol.jump * e * h * h),
        Check::positive("pressure_jump", m.min_pressure_jump),
        Check::positive("entropy_jump", m.min_entropy_jump),
        Check::below("bernoulli_streamline", m.bernoulli_variation, tol.transport * scale * scale),
        Check::below("entropy_streamline", m.entropy_variation, tol.transport * scale),
        Check::below("swirl_streamline", m.swirl_variation, tol.swirl * e * h * h),
        Check::below("axis_odd", m.axis_odd, tol.axis_odd * e * h * h),
        Check::below("axis_even", m.axis_even, tol.axis_even * e * h),
        Check::below("wall_slip", m.wall_slip, tol.wall_slip * e * h * h),
        Check::below("interior_mass", m.interior_mass, interior),
        Check::below("interior_momentum", m.interior_momentum, interior),
        Check::positive("jacobian", m.min_jacobian),
        Check::below("xi_axis_slope", m.xi_axis_slope, tol.xi_axis * e * h * h),
    ];
    if input.straight_wall {
        let names = ["wall_dtheta_U1", "wall_dtheta_U3", "wall_dtheta_P", "wall_dtheta_S"];
        for (name, v) in names.iter().zip(m.wall_dtheta) {
            checks.push(Check::below(name, v, tol.straight_wall * scale * h * h));
        }
        checks.push(Check::below("xi_wall_slope", m.xi_wall_slope, tol.straight_wall * scale * h * h));
    }
    if level == Diagnostics::Full {
        for (k, v) in m.xi_quotients.iter().enumerate() {
            checks.push(Check::info(&format!("xi_difference_quotient_{}", k + 1), *v));
        }
        checks.push(Check::info("corner_wall_slip", m.corner_slip));
        checks.push(Check::info("corner_mass", m.corner_mass));
        checks.push(Check::info("corner_momentum", m.corner_momentum));
        if !input.straight_wall {
            for (name, v) in ["wall_dtheta_U1", "wall_dtheta_U3", "wall_dtheta_P", "wall_dtheta_S"].iter().zip(m.wall_dtheta) {
                checks.push(Check::info(name, v));
            }
        }
    }
    let passed = checks.iter().all(|c| c.pass);
    VerifyReport { h, scale, checks, passed }
}

pub fn verify(b: &SolutionBundle, level: Diagnostics) -> Result<VerifyReport> {
    Ok(evaluate(&VerifyInput::from_bundle(b)?, level, &Tolerances::default()))
}
