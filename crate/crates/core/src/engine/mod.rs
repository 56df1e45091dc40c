//! Simplification, component decomposition, exact counting and exact
//! conditional sampling.

mod assignment;
pub mod count;
mod decompose;
mod residual;
pub mod sample;
mod simplify;

pub use assignment::PartialAssignment;
pub use count::{count, count_component, count_tree, count_with_cap, Tally, DEFAULT_EXCESS_CAP};
pub use decompose::{components_of, decompose, Component, ComponentDecomposition};
pub use residual::{LocalComponent, ResidualState};
pub use sample::{
    marginal, sample_into, sample_law, sample_marginals, sample_marginals_with, Chooser, Marginal,
    RngChooser, SampleCaps,
};
pub use simplify::{condition_all, covered_vars, simplify, ResidualClause, SimplifiedFormula};
