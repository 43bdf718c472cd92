//! Configuration, orchestration, Eulerian reconstruction, verification and
//! file output for the transonic shock solver in `transonic-core`.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod reconstruct;
pub mod sweep;
pub mod verify;

pub use config::{default_config, load_config, parse_config, read_config, Case, CaseConfig};
pub use error::{HarnessError, Result};
pub use pipeline::{solve, SolutionBundle};
pub use verify::{verify, VerifyReport};
