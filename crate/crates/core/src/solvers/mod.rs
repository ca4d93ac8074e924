//! Revenue bisection solvers.

mod bz;
mod capacitated;
mod search;

pub use bz::{
    assort_mnl_bz, bz_error_bound, bz_posterior_update, bz_required_rounds, bz_sample_selection, bz_search, BzOutcome,
    Posterior,
};
pub use capacitated::{
    assort_mnl_capacitated, compare_step_capacitated, compare_step_capacitated_lb, compare_step_partitioned,
    CapacityConstraint,
};
pub use search::{
    approx_iteration_bound, assort_mnl, assort_mnl_approx, assort_mnl_approx_simple, assort_mnl_approx_traced,
    assort_mnl_traced, compare_step_general, nu_slack, SearchState,
};
