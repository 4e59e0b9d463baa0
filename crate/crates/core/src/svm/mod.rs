//! Soft-margin support vector machines with a polynomial kernel, trained
//! by sequential minimal optimization and combined by pairwise voting.

mod kernel;
mod pairwise;
mod smo;

pub use kernel::{kernel, FULL_GRAM_LIMIT};
pub use pairwise::{train_pairwise, PairReport, PairwiseModel, PairwiseReport};
pub use smo::{
    compute_bias, dual_objective, solve_dual, train_smo, BinaryProblem, DualSolution, SmoReport,
    SupportVector, SvmBinaryModel, SvmConfig,
};
