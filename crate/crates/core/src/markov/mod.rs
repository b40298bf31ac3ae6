//! Markov kernels between finite sample spaces and the morphisms they induce
//! on measures, functions, tangent vectors and models.

mod kernel;
mod sufficiency;

pub use kernel::{compose_kernels, MarkovKernel, ROW_SUM_TOL};
pub use sufficiency::{
    check_sufficiency, conditional_for_statistic, conditionals, monotonicity_gap, SufficiencyReport, FIBER_MASS_TOL,
    MONOTONICITY_TOL,
};
