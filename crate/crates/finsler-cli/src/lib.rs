//! Library surface of the `finsler` command-line tool: scenario parsing,
//! check execution, and report types. The binary in `main.rs` is a thin
//! argument-parsing shell over these.

pub mod report;
pub mod run;
pub mod scenario;

pub use report::{CheckRow, EngineInfo, ModelEcho, VerificationReport};
pub use run::{run_checks, write_geodesic, write_jacobi};
pub use scenario::{load_scenario, CheckKind, Scenario};
