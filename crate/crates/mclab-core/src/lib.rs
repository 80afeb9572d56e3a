//! Curvature and functional-inequality invariants of finite reversible
//! Markov chains.
//!
//! The library works with a transition kernel `P` on states `1..=m`,
//! reversible with respect to its stationary distribution `pi`. On top of
//! that it computes:
//!
//! - coarse Ricci (Ollivier) curvature of kernel edges, via an exact
//!   optimal-transport LP or a closed form for birth-death chains,
//! - Bakry-Emery curvature at a vertex, via the Gamma_2 criterion reduced
//!   to the 2-ball around the vertex,
//! - Dirichlet forms, entropy, the spectral gap, and multi-start inner
//!   approximations of the log-Sobolev and modified log-Sobolev constants,
//! - electrical capacities between vertex sets and the isocapacitary
//!   lower bound on the log-Sobolev constant,
//! - a one-parameter family of lazy birth-death chains on `3n` states
//!   whose minimum edge curvature is exactly `1/(4n^2)` while the
//!   log-Sobolev constant decays much faster; the family separates
//!   curvature lower bounds from log-Sobolev lower bounds even after
//!   correcting by the log of the sparsity.
//!
//! States are numbered `1..=m` in every API that names an individual
//! state (curvature edges, capacity sets, violation indices). Function
//! vectors are plain slices of length `m`, with position `i` holding the
//! value at state `i + 1`.
//!
//! Quantities spanning hundreds of orders of magnitude (stationary masses
//! of the counterexample family scale like `n^{-n/2}`) are handled either
//! in log-space `f64` or in exact big-rational arithmetic; see
//! [`NumericMode`].

// Negated float comparisons like `!(w >= 0.0)` are deliberate: they
// reject NaN along with the out-of-range sign.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod chain;
pub mod curvature;
pub mod error;
pub mod functional;
pub mod generators;
pub mod io;
pub mod measure;
pub mod rational;
pub mod transport;

pub use chain::{
    counterexample_chain, BirthDeathChain, ExactRates, HeatSemigroup, MarkovChain, NumericMode,
};
pub use error::{Error, Result};
pub use measure::Measure;

pub use capacity::{
    capacity_bd, capacity_bd_exact, capacity_bd_log, capacity_general, isocap_bound,
    isocap_bound_bd, isocap_profile_bd, CapacityProblem, IsoCapBound,
};
pub use curvature::{
    bakry_emery_curvature, bd_monotone_rates, check_log_concavity, check_nonnegative_sectional,
    check_semigroup_contraction, gamma2_form, lipschitz_constant, min_ollivier_curvature,
    min_ollivier_curvature_bd, ollivier_curvature, ollivier_curvature_bd, w_infinity_distance,
    ContractionReport,
    CurvatureMethod, CurvatureReport, EdgeCurvature, LogConcavityReport, SectionalReport,
};
pub use functional::{
    dirichlet_energy, entropy, gamma_form, lsi_constant, modified_lsi_constant, relation_audit,
    spectral_gap, LiteratureConstants, LsiResult, OptimizerOptions, RelationAudit, RelationCheck,
};
pub use transport::{w1_distance, w1_path, TransportProblem};
