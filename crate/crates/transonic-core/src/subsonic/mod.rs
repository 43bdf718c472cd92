//! Subsonic region behind the shock: the linearized operator, the potential
//! solve and the fixed-point iteration for the free boundary.

pub mod coefficients;
pub mod iteration;
pub mod potential;

pub use coefficients::{
    assemble_coefficients, fixed_domain_residual, lagrangian_residual, BackgroundColumn, FixedDomain, LagrangianPoint,
    LinearOperatorCoefficients, LocalDeviation,
};
pub use iteration::{
    fixed_point_solve, solve_subsonic, AxisChecks, FixedPointSolution, IterationOptions, IterationRecord,
    IterationReport, MapOutput, PerturbationState, SolveFailure, SubsonicProblem,
};
pub use potential::{recover_w2_w4, PotentialData, PotentialOperator, PotentialSolution, Recovered, SolveStats};
