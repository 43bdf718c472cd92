//! Case configuration: a TOML file with `[gas]`, `[geometry]`, `[inlet]`,
//! `[perturbation]` and `[numerics]` sections.
//!
//! Profiles are inline tables tagged by `kind`:
//!
//! ```toml
//! u1p  = { kind = "cos", coeffs = [0.0, 1.0] }          # sum a_k cos(k pi theta / theta0)
//! u2p  = { kind = "sin", coeffs = [0.3] }               # sum b_k sin(k pi theta / theta0)
//! wall = { kind = "poly", coeffs = [0, 0, 0, 1.0] }     # sum c_k (r - r1)^k
//! ```
//!
//! `period` (angular profiles) defaults to `theta0` and `origin` (wall
//! profile) to `r1`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use transonic_core::background::{exit_pressure_range, Nozzle};
use transonic_core::gas::{FlowState, GasConstants};
use transonic_core::profile::Profile;
use transonic_core::subsonic::IterationOptions;
use transonic_core::supersonic::{InletPerturbation, MarchOptions, WallTreatment};

use crate::error::{HarnessError, Result};

/// The configuration shipped with the crate (the default test case).
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(default)]
    pub gas: GasSection,
    pub geometry: GeometrySection,
    pub inlet: InletSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

/// `P = a rho^gamma exp(S / cv)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub cv: f64,
}

impl Default for GasSection {
    fn default() -> Self {
        Self { gamma: default_gamma(), a: 1.0, cv: 1.0 }
    }
}

/// Conic nozzle `r1 < r < r2`, `theta < theta0`, and the pressure imposed
/// at the exit `r = r2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub r1: f64,
    pub r2: f64,
    pub theta0: f64,
    pub exit_pressure: f64,
}

/// Radial supersonic state at `r = r1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InletSection {
    pub velocity: f64,
    pub pressure: f64,
    #[serde(default)]
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub u1p: ProfileSpec,
    #[serde(default)]
    pub u2p: ProfileSpec,
    #[serde(default)]
    pub u3p: ProfileSpec,
    #[serde(default)]
    pub pp: ProfileSpec,
    #[serde(default)]
    pub sp: ProfileSpec,
    /// Wall shape `f(r)`: the wall is `theta = theta0 + eps f(r)`.
    #[serde(default)]
    pub wall: ProfileSpec,
    /// Exit pressure profile `P0(theta)`: the exit pressure is `Pe + eps P0`.
    #[serde(default)]
    pub exit: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileSpec {
    #[default]
    Zero,
    Cos {
        coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
    },
    Sin {
        coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
    },
    Poly {
        coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<f64>,
    },
}

impl ProfileSpec {
    pub fn to_profile(&self, period: f64, origin: f64) -> Profile {
        match self {
            ProfileSpec::Zero => Profile::Zero,
            ProfileSpec::Cos { coeffs, period: p } => Profile::Cos { period: p.unwrap_or(period), coeffs: coeffs.clone() },
            ProfileSpec::Sin { coeffs, period: p } => Profile::Sin { period: p.unwrap_or(period), coeffs: coeffs.clone() },
            ProfileSpec::Poly { coeffs, origin: o } => Profile::Poly { origin: o.unwrap_or(origin), coeffs: coeffs.clone() },
        }
    }

    fn coefficients(&self) -> &[f64] {
        match self {
            ProfileSpec::Zero => &[],
            ProfileSpec::Cos { coeffs, .. } | ProfileSpec::Sin { coeffs, .. } | ProfileSpec::Poly { coeffs, .. } => coeffs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Diagnostics {
    #[default]
    Basic,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    /// Subsonic grid `[n1, n2]`: intervals along the flow, cells across it.
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    /// Angular intervals of the supersonic march; defaults to `2 n2`.
    #[serde(default)]
    pub n_sigma: Option<usize>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Update-norm tolerance; defaults to `1e-10 max(eps, 1e-8)`.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Trust radius; defaults to `trust_factor * max(eps, 1e-8)` times the
    /// background scale.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_trust_factor")]
    pub trust_factor: f64,
    /// Largest admissible `eps`.
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    #[serde(default = "default_coefficient_tolerance")]
    pub coefficient_tolerance: f64,
    #[serde(default = "default_shooting_tol")]
    pub shooting_tol: f64,
    /// Straight wall (`f = 0`) with the higher compatibility conditions;
    /// enables the wall-regularity diagnostics.
    #[serde(default)]
    pub straight_wall: bool,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    /// Eulerian output grid `[n_r, n_theta]`; defaults to `[n1 + 1, n2 + 1]`.
    #[serde(default)]
    pub output_grid: Option<[usize; 2]>,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            n_sigma: None,
            max_iter: default_max_iter(),
            tol: None,
            delta: None,
            trust_factor: default_trust_factor(),
            epsilon0: default_epsilon0(),
            coefficient_tolerance: default_coefficient_tolerance(),
            shooting_tol: default_shooting_tol(),
            straight_wall: false,
            diagnostics: Diagnostics::Basic,
            output_grid: None,
        }
    }
}

fn default_gamma() -> f64 {
    1.4
}
fn one() -> f64 {
    1.0
}
fn default_grid() -> [usize; 2] {
    [64, 64]
}
fn default_max_iter() -> usize {
    60
}
fn default_trust_factor() -> f64 {
    10.0
}
fn default_epsilon0() -> f64 {
    4e-3
}
fn default_coefficient_tolerance() -> f64 {
    1e-5
}
fn default_shooting_tol() -> f64 {
    1e-12
}

/// Validated runtime form of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub gas: GasConstants,
    pub nozzle: Nozzle,
    pub inlet: FlowState,
    pub exit_pressure: f64,
    pub perturbation: InletPerturbation,
    pub exit_profile: Profile,
    pub numerics: NumericsSection,
}

impl Case {
    pub fn iteration_options(&self) -> IterationOptions {
        let n = &self.numerics;
        IterationOptions {
            n1: n.grid[0],
            n2: n.grid[1],
            max_iter: n.max_iter,
            tol: n.tol,
            trust_factor: n.trust_factor,
            delta: n.delta,
            coefficient_tolerance: n.coefficient_tolerance,
        }
    }

    pub fn march_options(&self) -> MarchOptions {
        let n = &self.numerics;
        MarchOptions {
            n_sigma: n.n_sigma.unwrap_or(2 * n.grid[1]),
            wall: if n.straight_wall { WallTreatment::Reflection } else { WallTreatment::OneSided },
            ..MarchOptions::default()
        }
    }

    pub fn output_grid(&self) -> [usize; 2] {
        let [n1, n2] = self.numerics.grid;
        self.numerics.output_grid.unwrap_or([n1 + 1, n2 + 1])
    }
}

impl CaseConfig {
    /// Checks every invariant and reports all violations together.
    pub fn case(&self) -> Result<Case> {
        let mut errs = Vec::new();
        let g = &self.gas;
        let gas = GasConstants::new(g.gamma, g.a, g.cv).map_err(|e| errs.push(e.to_string())).ok();
        let geo = &self.geometry;
        if !(geo.r1 > 0.0 && geo.r1 < geo.r2) {
            errs.push(format!("geometry: need 0 < r1 < r2 (got r1 = {}, r2 = {})", geo.r1, geo.r2));
        }
        if !(geo.theta0 > 0.0 && geo.theta0 < std::f64::consts::FRAC_PI_2) {
            errs.push(format!("geometry: need 0 < theta0 < pi/2 (got {})", geo.theta0));
        }
        let nozzle = Nozzle::new(geo.r1, geo.r2, geo.theta0).ok();
        let inl = &self.inlet;
        if !(inl.velocity > 0.0 && inl.pressure > 0.0 && inl.entropy.is_finite()) {
            errs.push(format!(
                "inlet: need velocity > 0, pressure > 0 and finite entropy (got {}, {}, {})",
                inl.velocity, inl.pressure, inl.entropy
            ));
        }
        let inlet = FlowState::radial(inl.velocity, inl.pressure, inl.entropy);
        if let Some(gas) = &gas {
            if inl.pressure > 0.0 && !(inlet.mach(gas) > 1.0) {
                errs.push(format!("inlet: Mach number {} is not supersonic", inlet.mach(gas)));
            }
        }
        if let (Some(gas), Some(nozzle), true) = (&gas, &nozzle, errs.is_empty()) {
            match exit_pressure_range(gas, &inlet, nozzle) {
                Ok(range) if !range.contains(geo.exit_pressure) => errs.push(format!(
                    "geometry: exit pressure {} outside the admissible range ({}, {})",
                    geo.exit_pressure, range.p1, range.p2
                )),
                Ok(_) => {}
                Err(e) => errs.push(format!("geometry: {e}")),
            }
        }

        let pert = &self.perturbation;
        let num = &self.numerics;
        if !(pert.epsilon >= 0.0) {
            errs.push(format!("perturbation: epsilon must be >= 0 (got {})", pert.epsilon));
        }
        if pert.epsilon > num.epsilon0 {
            errs.push(format!("perturbation: epsilon {} exceeds epsilon0 = {}", pert.epsilon, num.epsilon0));
        }
        for (name, p) in self.profiles() {
            if p.coefficients().iter().any(|c| !c.is_finite()) {
                errs.push(format!("perturbation: {name} has non-finite coefficients"));
            }
        }
        if num.grid.iter().any(|n| *n < 8) {
            errs.push(format!("numerics: grid sizes must be >= 8 (got {:?})", num.grid));
        }
        if num.n_sigma.is_some_and(|n| n < 8) {
            errs.push("numerics: n_sigma must be >= 8".to_string());
        }
        if num.output_grid.is_some_and(|g| g.iter().any(|n| *n < 2)) {
            errs.push("numerics: output grid sizes must be >= 2".to_string());
        }
        if num.max_iter == 0 {
            errs.push("numerics: max_iter must be positive".to_string());
        }
        for (name, v) in [("tol", num.tol), ("delta", num.delta)] {
            if v.is_some_and(|v| !(v > 0.0)) {
                errs.push(format!("numerics: {name} must be positive"));
            }
        }
        for (name, v) in [
            ("trust_factor", num.trust_factor),
            ("epsilon0", num.epsilon0),
            ("coefficient_tolerance", num.coefficient_tolerance),
            ("shooting_tol", num.shooting_tol),
        ] {
            if !(v > 0.0) {
                errs.push(format!("numerics: {name} must be positive (got {v})"));
            }
        }
        if num.straight_wall && pert.wall != ProfileSpec::Zero {
            errs.push("numerics: straight_wall requires perturbation.wall to be zero".to_string());
        }

        let t0 = geo.theta0;
        let perturbation = InletPerturbation {
            epsilon: pert.epsilon,
            u1p: pert.u1p.to_profile(t0, geo.r1),
            u2p: pert.u2p.to_profile(t0, geo.r1),
            u3p: pert.u3p.to_profile(t0, geo.r1),
            pp: pert.pp.to_profile(t0, geo.r1),
            sp: pert.sp.to_profile(t0, geo.r1),
            wall: pert.wall.to_profile(t0, geo.r1),
        };
        let exit_profile = pert.exit.to_profile(t0, geo.r1);
        if errs.is_empty() && pert.epsilon > 0.0 {
            errs.extend(compatibility_failures(&perturbation, &exit_profile, t0, num.straight_wall));
        }
        match (gas, nozzle) {
            (Some(gas), Some(nozzle)) if errs.is_empty() => Ok(Case {
                gas,
                nozzle,
                inlet,
                exit_pressure: geo.exit_pressure,
                perturbation,
                exit_profile,
                numerics: num.clone(),
            }),
            _ => Err(HarnessError::Validation(errs)),
        }
    }

    fn profiles(&self) -> [(&'static str, &ProfileSpec); 7] {
        let p = &self.perturbation;
        [("u1p", &p.u1p), ("u2p", &p.u2p), ("u3p", &p.u3p), ("pp", &p.pp), ("sp", &p.sp), ("wall", &p.wall), ("exit", &p.exit)]
    }
}

/// Axis and wall compatibility of the perturbation data that the iteration
/// relies on. The inlet-corner identity needs the background, so it is
/// checked when the supersonic field is built.
fn compatibility_failures(p: &InletPerturbation, exit: &Profile, t0: f64, straight: bool) -> Vec<String> {
    let mut scale: f64 = 1.0;
    for q in [&p.u1p, &p.u2p, &p.u3p, &p.pp, &p.sp, exit] {
        for k in 0..=16 {
            scale = scale.max(q.value(t0 * k as f64 / 16.0).abs());
        }
    }
    let tol = 1e-8 * scale;
    let mut checks = vec![
        ("U2p(0) = 0", p.u2p.value(0.0)),
        ("U2p''(0) = 0", p.u2p.derivative(0.0, 2)),
        ("U3p(0) = 0", p.u3p.value(0.0)),
        ("U1p'(0) = 0", p.u1p.derivative(0.0, 1)),
        ("U3p'(0) = 0", p.u3p.derivative(0.0, 1)),
        ("Pp'(0) = 0", p.pp.derivative(0.0, 1)),
        ("Sp'(0) = 0", p.sp.derivative(0.0, 1)),
        ("U2p(theta0) = 0", p.u2p.value(t0)),
        ("P0'(0) = 0", exit.derivative(0.0, 1)),
    ];
    if straight {
        checks.extend([
            ("P0'(theta0) = 0", exit.derivative(t0, 1)),
            ("U3p(theta0) = 0", p.u3p.value(t0)),
            ("U1p'(theta0) = 0", p.u1p.derivative(t0, 1)),
            ("U3p'(theta0) = 0", p.u3p.derivative(t0, 1)),
            ("Sp'(theta0) = 0", p.sp.derivative(t0, 1)),
        ]);
    }
    checks
        .into_iter()
        .filter(|(_, v)| !(v.abs() <= tol))
        .map(|(name, v)| format!("perturbation: compatibility {name} violated (value {v:e})"))
        .collect()
}

pub fn parse_config(text: &str) -> Result<CaseConfig> {
    toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
}

/// Reads and parses a configuration file without validating it.
pub fn read_config(path: &Path) -> Result<CaseConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.to_path_buf(), source })?;
    parse_config(&text).map_err(|e| match e {
        HarnessError::Parse(msg) => HarnessError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<CaseConfig> {
    let cfg = read_config(path)?;
    cfg.case()?;
    Ok(cfg)
}

pub fn default_config() -> CaseConfig {
    parse_config(DEFAULT_CONFIG).expect("shipped configuration parses")
}
