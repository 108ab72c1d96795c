//! Finite-horizon sandwich bounds and single-letter baselines.

mod analytic;
mod sandwich;
mod shannon;

pub use analytic::{analytic_noisy_ising_bound, noisy_ising_quadratic, noisy_ising_root};
pub use sandwich::{
    sandwich_bounds, sandwich_bounds_with, SandwichOptions, SandwichResult, DEFAULT_MAX_HORIZON,
};
pub use shannon::{
    blahut_arimoto, shannon_strategy_capacity, shannon_strategy_capacity_with, strategy_channel,
    SingleLetterResult, CAPACITY_TOL,
};
