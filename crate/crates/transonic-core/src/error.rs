use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("mass flux {flux} exceeds the critical flux {critical}")]
    FluxExceedsCritical { flux: f64, critical: f64 },

    #[error("requested branch is degenerate at the sonic point")]
    DegenerateRoot,

    #[error("upstream state is not supersonic (Mach {mach})")]
    NotSupersonic { mach: f64 },

    #[error("exit pressure {pe} outside the admissible range ({p1}, {p2})")]
    ExitPressureOutOfRange { pe: f64, p1: f64, p2: f64 },

    #[error("supersonic breakdown at r = {r}, theta = {theta}: Mach {mach}")]
    SupersonicBreakdown { r: f64, theta: f64, mach: f64 },

    #[error("marching step size collapsed at r = {r}")]
    StepSize { r: f64 },

    #[error("point outside chart: {0}")]
    OutOfChart(String),

    #[error("degenerate chart: Jacobian {jacobian} below threshold")]
    DegenerateChart { jacobian: f64 },

    #[error("jump solve failed: {0}")]
    JumpSolve(String),

    #[error("degenerate shock: pressure jump {jump} below {threshold}")]
    DegenerateShock { jump: f64, threshold: f64 },

    #[error("coefficient {name} disagrees with its Jacobian: closed form {closed}, finite difference {jacobian}")]
    Coefficient { name: String, closed: f64, jacobian: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("contraction failure: ratio {ratio} >= 1 for 3 consecutive iterations; try a smaller epsilon or a finer grid")]
    ContractionFailure { ratio: f64 },

    #[error("iterate left the trust region: norm {norm} > delta {delta}")]
    TrustRegion { norm: f64, delta: f64 },

    #[error("no convergence after {iterations} iterations (last update {update})")]
    NotConverged { iterations: usize, update: f64 },
}
