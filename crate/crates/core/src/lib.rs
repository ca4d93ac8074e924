//! Revenue-optimal assortment search under the multinomial logit (MNL)
//! choice model.
//!
//! The feasible family is either an explicit [`AssortmentCollection`] or a
//! capacity constraint. Every solver is a bisection on revenue whose
//! comparison step asks "is there a feasible set with revenue at least K?".
//! For explicit collections that question is a maximum inner product search
//! (MIPS) over embedded sets, answered exactly by a linear scan or
//! approximately by a sign-projection LSH index. Capacity constraints reduce
//! it to a top-C selection.
//!
//! Data-parallel kernels (MIPS scans, exhaustive search, LSH hashing) run on
//! rayon when the `parallel` feature is enabled and fall back to sequential
//! loops otherwise; [`Exec`] selects the path explicitly.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod data;
pub mod error;
pub mod mips;
pub mod model;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{normalize, revenue, validate_collection, Assortment, AssortmentCollection, Instance, SolverResult};

/// Execution strategy for data-parallel kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

#[allow(clippy::derivable_impls)]
impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}
