//! Single-letter lower bounds from Q-graphs.
//!
//! A Q-graph quantizes output histories into nodes with `q⁺ = g(q, y)`. A
//! policy `P(u⁺ | u, q)` induces a Markov chain on `(s, u, q)`; when the chain
//! has a unique stationary law and the policy is BCJR-invariant, the average
//! of `I(U⁺, U; Y | Q = q)` is an achievable rate.

mod bound;
mod chain;
pub mod fixtures;
mod graph;
mod search;

pub use bound::{
    bound_joint, check_bcjr_invariance, invariance_residuals, node_joint, qgraph_bound, Invariance,
    Policy, QBoundResult, ANALYTIC_BCJR_TOL, SEARCH_BCJR_TOL,
};
pub use chain::{
    build_suq_chain, chain_structure, stationary_distribution, ChainStructure, SuqChain,
};
pub use graph::{builtin_qgraph, validate_qgraph, QGraph, QGraphFile, BUILTIN_QGRAPHS};
pub use search::{search_policy, SearchOptions, SearchOutcome};
