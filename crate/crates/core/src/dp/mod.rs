//! The belief-state dynamic program for feedback capacity.
//!
//! The state is the posterior `β(u, s) = P(u, s | y^i)` over the previous
//! strategy symbol and channel state, the action is `a(u⁺ | u)`, the
//! disturbance is the next output and the reward is `I(U⁺, U; Y | y^i)`.

mod belief;
mod grid;
mod vi;

pub use belief::{
    bcjr_update, dp_reward, output_marginal, reward_joint, ActionMatrix, Belief, OUTPUT_TOL,
};
pub use grid::{SimplexGrid, Stencil, MAX_GRID_POINTS};
pub use vi::{
    simulate_policy, value_iteration, value_iteration_with, Discretization, DpOptions, DpSolution,
    GridPolicy,
};
