//! Mapping the fixed-domain solution back to physical `(r, theta)`.

use serde::Serialize;
use transonic_core::gas::{FlowState, GasConstants};
use transonic_core::numerics::{lagrange4_nonuniform, locate};
use transonic_core::subsonic::{PerturbationState, SubsonicProblem};

use crate::error::Result;

/// Shock curve `r = xi(theta)` through the trace points, closed by its
/// axis value (even extension) and its wall point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockCurve {
    pub theta: Vec<f64>,
    pub xi: Vec<f64>,
}

impl ShockCurve {
    pub fn from_state(problem: &SubsonicProblem, w: &PerturbationState) -> Result<Self> {
        let trace = problem.shock_trace(w)?;
        let mut theta = vec![0.0];
        let mut xi = vec![0.0];
        for t in &trace {
            theta.push(t.sin_theta.asin());
            xi.push(t.psi);
        }
        let (t0, t1) = (theta[1] * theta[1], theta[2] * theta[2]);
        xi[0] = (t1 * xi[1] - t0 * xi[2]) / (t1 - t0);
        let wall_r = problem.domain().r_b + w.w6_m;
        theta.push(problem.field.wall_angle(wall_r));
        xi.push(wall_r);
        Ok(Self { theta, xi })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    fn window(&self, x: f64) -> usize {
        locate(&self.theta, x).saturating_sub(1).min(self.len() - 4)
    }

    pub fn at(&self, theta: f64) -> f64 {
        let k = self.window(theta);
        lagrange4_nonuniform(&arr4(&self.theta, k), &arr4(&self.xi, k), theta)
    }

    pub fn slope_at(&self, theta: f64) -> f64 {
        let k = self.window(theta);
        lagrange4_slope(&arr4(&self.theta, k), &arr4(&self.xi, k), theta)
    }

    /// `xi'` at the axis and at the wall.
    pub fn end_slopes(&self) -> (f64, f64) {
        (self.slope_at(0.0), self.slope_at(*self.theta.last().unwrap_or(&0.0)))
    }

    pub fn max_deviation(&self, r_b: f64) -> f64 {
        self.xi.iter().fold(0.0, |m: f64, x| m.max((x - r_b).abs()))
    }

    /// Largest `|xi^(k)|` estimated by divided differences, `k = 1, 2, 3`.
    pub fn difference_quotients(&self) -> [f64; 3] {
        let mut out = [0.0f64; 3];
        let mut table = self.xi.clone();
        let mut fact = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            let order = k + 1;
            fact *= order as f64;
            table = (0..table.len() - 1)
                .map(|i| (table[i + 1] - table[i]) / (self.theta[i + order] - self.theta[i]))
                .collect();
            *o = table.iter().fold(0.0, |m: f64, v| m.max(v.abs())) * fact;
        }
        out
    }
}

fn arr4(v: &[f64], k: usize) -> [f64; 4] {
    [v[k], v[k + 1], v[k + 2], v[k + 3]]
}

/// Derivative of the cubic through four points.
pub fn lagrange4_slope(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let mut out = 0.0;
    for i in 0..4 {
        let mut denom = 1.0;
        for j in 0..4 {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        let mut num = 0.0;
        for m in 0..4 {
            if m == i {
                continue;
            }
            let mut term = 1.0;
            for j in 0..4 {
                if j != i && j != m {
                    term *= x - xs[j];
                }
            }
            num += term;
        }
        out += ys[i] * num / denom;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Supersonic,
    Subsonic,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Supersonic => "supersonic",
            Region::Subsonic => "subsonic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerianSample {
    pub r: f64,
    pub theta: f64,
    pub state: FlowState,
    pub mach: f64,
    pub region: Region,
}

/// Samples on the grid `r_k = r1 + k (r2 - r1) / (n_r - 1)`,
/// `theta = sigma_l theta_w(r) / theta0` with `sigma_l = l theta0 / (n_theta - 1)`
/// (a regular `(r, theta)` grid when the wall is straight).
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianFields {
    pub n_r: usize,
    pub n_theta: usize,
    pub samples: Vec<EulerianSample>,
}

impl EulerianFields {
    pub fn column(&self, k: usize) -> &[EulerianSample] {
        &self.samples[k * self.n_theta..(k + 1) * self.n_theta]
    }

    /// Largest change of `r U3 sin(theta)` along streamlines of the subsonic
    /// columns. Streamlines are labelled by the stream function
    /// `int rho U1 r^2 sin(theta) dtheta` and compared with the exit column.
    pub fn swirl_deviation(&self, g: &GasConstants) -> f64 {
        let profile = |k: usize| {
            let c = self.column(k);
            let q = |s: &EulerianSample| s.state.density(g) * s.state.u1 * s.r * s.r * s.theta.sin();
            let mut psi = vec![0.0];
            for l in 1..c.len() {
                psi.push(psi[l - 1] + 0.5 * (c[l].theta - c[l - 1].theta) * (q(&c[l]) + q(&c[l - 1])));
            }
            let lam: Vec<f64> = c.iter().map(|s| s.r * s.state.u3 * s.theta.sin()).collect();
            (psi, lam)
        };
        let (psi_exit, lam_exit) = profile(self.n_r - 1);
        let mut dev: f64 = 0.0;
        for k in 0..self.n_r - 1 {
            if self.column(k).iter().any(|s| s.region != Region::Subsonic) {
                continue;
            }
            let (psi, lam) = profile(k);
            for (p, l) in psi.iter().zip(&lam) {
                let w = locate(&psi_exit, *p).saturating_sub(1).min(psi_exit.len() - 4);
                let exit = lagrange4_nonuniform(&arr4(&psi_exit, w), &arr4(&lam_exit, w), *p);
                dev = dev.max((exit - l).abs());
            }
        }
        dev
    }
}

/// Column at a fixed radius: the angle and `(U1, U2 / U1, U3, P, S)` of
/// every streamline, with two mirrored axis ghosts in front.
struct Column {
    theta: Vec<f64>,
    w: Vec<[f64; 5]>,
}

const PARITY: [f64; 5] = [1.0, -1.0, -1.0, 1.0, 1.0];

impl Column {
    fn sample(&self, theta: f64) -> [f64; 5] {
        let k = locate(&self.theta, theta).saturating_sub(1).min(self.theta.len() - 4);
        let xs = arr4(&self.theta, k);
        core::array::from_fn(|c| {
            let ys = [self.w[k][c], self.w[k + 1][c], self.w[k + 2][c], self.w[k + 3][c]];
            lagrange4_nonuniform(&xs, &ys, theta)
        })
    }
}

fn column_at(problem: &SubsonicProblem, w: &PerturbationState, nodes: &[(f64, f64, FlowState)], r: f64) -> Column {
    let dom = problem.domain();
    let (n1, n2, nn, h1) = (dom.n1, dom.n2, dom.length, dom.h1());
    let mut theta = Vec::with_capacity(n2 + 2);
    let mut vals = Vec::with_capacity(n2 + 2);
    let comps: [fn(&FlowState) -> f64; 5] = [|s| s.u1, |s| s.u2 / s.u1, |s| s.u3, |s| s.p, |s| s.s];
    for j in 0..n2 {
        let z1 = (r - dom.r_b - w.w6[j]) * nn / (nn - w.w6[j]);
        let i0 = ((z1 / h1).floor() as isize - 1).clamp(0, n1 as isize - 3) as usize;
        let xs: [f64; 4] = core::array::from_fn(|q| dom.z1(i0 + q));
        let at = |f: &dyn Fn(usize) -> f64| lagrange4_nonuniform(&xs, &core::array::from_fn(|q| f(i0 + q)), z1);
        theta.push(at(&|i| nodes[dom.idx(i, j)].1));
        vals.push(core::array::from_fn(|c| at(&|i| comps[c](&nodes[dom.idx(i, j)].2))));
    }
    let mut full_t = vec![-theta[1], -theta[0]];
    let mut full_w: Vec<[f64; 5]> = [vals[1], vals[0]].iter().map(|v| core::array::from_fn(|c| PARITY[c] * v[c])).collect();
    full_t.extend(theta);
    full_w.extend(vals);
    Column { theta: full_t, w: full_w }
}

pub fn reconstruct_eulerian(
    problem: &SubsonicProblem,
    w: &PerturbationState,
    shock: &ShockCurve,
    [n_r, n_theta]: [usize; 2],
) -> Result<EulerianFields> {
    let field = problem.field;
    let g = &problem.bg.gas;
    let nodes = problem.physical_nodes(w)?;
    let (r1, r2, t0) = (field.r1, field.r2, field.theta0);
    let mut samples = Vec::with_capacity(n_r * n_theta);
    for k in 0..n_r {
        let r = if k + 1 == n_r { r2 } else { r1 + k as f64 * (r2 - r1) / (n_r - 1) as f64 };
        let scale = field.wall_angle(r) / t0;
        let mut column = None;
        for l in 0..n_theta {
            let theta = l as f64 * t0 / (n_theta - 1) as f64 * scale;
            let (state, region) = if r < shock.at(theta) {
                (field.sample(r, theta)?, Region::Supersonic)
            } else {
                let col = column.get_or_insert_with(|| column_at(problem, w, &nodes, r));
                let d = col.sample(theta);
                (FlowState::new(d[0], d[0] * d[1], d[2], d[3], d[4]), Region::Subsonic)
            };
            samples.push(EulerianSample { r, theta, state, mach: state.mach(g), region });
        }
    }
    Ok(EulerianFields { n_r, n_theta, samples })
}
