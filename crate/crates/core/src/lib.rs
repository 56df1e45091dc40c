//! Approximate uniform sampling of satisfying assignments of random k-CNF
//! formulas.
//!
//! The pipeline is:
//!
//! 1. [`classify`] splits variables and clauses into *bad* and *good* ones
//!    (high-degree variables and the clauses they contaminate).
//! 2. [`marking`] partitions the good variables into marked, auxiliary and
//!    control variables with a Moser–Tardos resampling loop.
//! 3. [`glauber`] runs a uniform-block Glauber dynamics on the marked
//!    variables. Each block update is an exact conditional draw produced by
//!    [`engine`], which counts satisfying assignments of the small connected
//!    components of the simplified formula with a spanning-forest dynamic
//!    program.
//! 4. The final assignment is extended to all variables with the same exact
//!    conditional sampler.
//!
//! [`coupling`] and [`oracle`] are instrumentation: the coupling process on
//! auxiliary variables, exact influences, brute-force ground truth and
//! total-variation machinery. [`analysis`] holds the experiment harnesses.

pub mod analysis;
pub mod classify;
pub mod coupling;
pub mod dimacs;
pub mod engine;
mod error;
pub mod exec;
pub mod formula;
pub mod glauber;
pub mod marking;
pub mod oracle;
pub mod rng;

pub use classify::{classify, degree_table, Classification, ClassifierParams};
pub use engine::PartialAssignment;
pub use error::{Error, Result};
pub use formula::{Clause, DependencyGraph, Formula, Literal};
pub use marking::{compute_marking, verify_marking, Marking, MarkingParams, Role};
