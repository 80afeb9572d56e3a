//! Engine behind the `mclab` binary: argument parsing helpers, the
//! chain-analysis report, the counterexample sweep, and the inequality
//! checklist. Kept as a library so the pieces stay testable without
//! spawning the binary.

pub mod analyze;
pub mod args;
pub mod checks;
pub mod sweep;

use mclab_core::Error;

/// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 an
/// inequality check failed in a regime where it is expected to hold.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Maps library errors onto process exit codes: solver and optimizer
/// breakdowns are numerical (3), everything else is bad input (2).
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Convergence(_) | Error::Eigen(_) | Error::SingularSystem(_) | Error::Infeasible(_) => {
            EXIT_NUMERICAL
        }
        _ => EXIT_VALIDATION,
    }
}
