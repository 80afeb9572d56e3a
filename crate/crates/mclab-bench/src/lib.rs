//! Shared fixtures for the criterion benches.

use mclab_core::{counterexample_chain, BirthDeathChain, NumericMode, Result};

/// The birth-death family at size `n` with float rates; bench inputs
/// never need exact arithmetic on the construction side.
pub fn family(n: usize) -> Result<BirthDeathChain> {
    counterexample_chain(n, NumericMode::Float64LogSpace)
}
