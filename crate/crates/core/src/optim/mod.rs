//! Stochastic design search.

mod lhd;
mod llhd;

pub use lhd::{random_lhd, sa_optimize_lhd, sa_optimize_lhd_with, SaConfig, SaResult, SwapState};
pub use llhd::{
    korobov_search, llhd_optimize, llhd_restart, llhd_search, power_generator, sliced_objective,
    GeneratorLayout, LlhdResult, LlhdSearchConfig, RestartOutcome,
};
