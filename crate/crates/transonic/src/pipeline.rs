//! End-to-end orchestration: shooting for the background shock, the
//! supersonic march, the subsonic fixed-point iteration and the Eulerian
//! reconstruction.

use std::time::Instant;

use log::{debug, info};
use transonic_core::background::{shoot_shock_position, BackgroundSolution};
use transonic_core::subsonic::{fixed_point_solve, IterationReport, PerturbationState, SubsonicProblem};
use transonic_core::supersonic::{march, validate_inlet, CompatibilityReport, SupersonicField};

use crate::config::Case;
use crate::error::{HarnessError, Result};
use crate::reconstruct::{reconstruct_eulerian, EulerianFields, ShockCurve};

/// Background shock position from the exit pressure.
pub fn background(case: &Case) -> Result<BackgroundSolution> {
    let t = Instant::now();
    let bg = shoot_shock_position(&case.gas, case.exit_pressure, &case.inlet, &case.nozzle, case.numerics.shooting_tol)?;
    info!("background shock at r_b = {:.12} ({} bisection steps, {:.2?})", bg.r_b, bg.bisection_iterations, t.elapsed());
    Ok(bg)
}

/// Marched supersonic field; incompatible inlet data are a validation error.
pub fn supersonic(case: &Case, bg: &BackgroundSolution) -> Result<(SupersonicField, CompatibilityReport)> {
    let compat = validate_inlet(&case.perturbation, bg);
    if case.perturbation.epsilon > 0.0 && !compat.passed() {
        return Err(HarnessError::Validation(
            compat
                .failures()
                .iter()
                .map(|c| format!("inlet compatibility {} violated (residual {:e})", c.name, c.residual))
                .collect(),
        ));
    }
    let t = Instant::now();
    let field = march(&case.perturbation, bg, &case.march_options())?;
    info!("supersonic march: {} rows x {} intervals ({:.2?})", field.n_rows(), field.n_sigma, t.elapsed());
    Ok((field, compat))
}

/// Everything a solve produces.
#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub case: Case,
    pub background: BackgroundSolution,
    pub field: SupersonicField,
    pub compatibility: CompatibilityReport,
    pub state: PerturbationState,
    pub report: IterationReport,
    pub shock: ShockCurve,
    pub eulerian: EulerianFields,
}

impl SolutionBundle {
    /// The subsonic problem the state solves (reassembled on demand).
    pub fn problem(&self) -> Result<SubsonicProblem<'_>> {
        let o = self.case.iteration_options();
        Ok(SubsonicProblem::new(&self.background, &self.field, &self.case.exit_profile, o.n1, o.n2, o.coefficient_tolerance)?)
    }
}

pub fn solve(case: &Case) -> Result<SolutionBundle> {
    let bg = background(case)?;
    let (field, compatibility) = supersonic(case, &bg)?;
    let opts = case.iteration_options();
    let t = Instant::now();
    let problem = SubsonicProblem::new(&bg, &field, &case.exit_profile, opts.n1, opts.n2, opts.coefficient_tolerance)?;
    let sol = fixed_point_solve(&problem, None, &opts)?;
    for r in &sol.report.records {
        debug!("iteration {:>3}: norm {:.6e} update {:.6e} residual {:.6e}", r.k, r.norm, r.update, r.residual);
    }
    info!(
        "subsonic iteration converged in {} steps: |W| = {:.6e}, rate {:?}, jump residual {:.3e} ({:.2?})",
        sol.report.iterations(),
        sol.report.final_norm(),
        sol.report.contraction_ratio,
        sol.report.shock_residual,
        t.elapsed()
    );
    let shock = ShockCurve::from_state(&problem, &sol.state)?;
    let eulerian = reconstruct_eulerian(&problem, &sol.state, &shock, case.output_grid())?;
    drop(problem);
    Ok(SolutionBundle {
        case: case.clone(),
        background: bg,
        field,
        compatibility,
        state: sol.state,
        report: sol.report,
        shock,
        eulerian,
    })
}
