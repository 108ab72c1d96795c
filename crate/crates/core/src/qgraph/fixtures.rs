//! Closed-form policies for the worked examples, paired with their channel
//! and graph.

use super::bound::Policy;
use super::graph::{builtin_qgraph, QGraph};
use crate::channel::{
    builtin_channel, induce_strategy_channel, ChannelParams, InducedChannel, StrategyTable,
};
use crate::error::Result;
use crate::scalar::Real;

/// Channel, graph and policy evaluated together.
#[derive(Debug, Clone)]
pub struct Fixture<T> {
    pub channel: InducedChannel<T>,
    pub graph: QGraph,
    pub policy: Policy<T>,
}

fn induced<T: Real>(
    name: &str,
    params: ChannelParams,
    strategies: &StrategyTable,
) -> Result<InducedChannel<T>> {
    induce_strategy_channel(&builtin_channel::<T>(name, &params)?, strategies)
}

fn row<T: Real>(p0: T) -> Vec<T> {
    vec![p0, T::one() - p0]
}

/// `(√5 − 1)/2`, the probability of repeating `u = 0` in the trapdoor policy.
pub fn trapdoor_b3<T: Real>() -> T {
    (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0)
}

/// Trapdoor channel, `x = u ⊕ s`, four-node graph, the golden-ratio policy
/// `P(u⁺ = 0 | u = 0) = (√5 − 1)/2`, `P(u⁺ = 0 | u = 1) = 1` at every node.
pub fn trapdoor<T: Real>() -> Result<Fixture<T>> {
    let b3 = trapdoor_b3::<T>();
    let node = vec![row(b3), row(T::one())];
    Ok(Fixture {
        channel: induced("trapdoor", ChannelParams::default(), &StrategyTable::xor())?,
        graph: builtin_qgraph("trapdoor4")?,
        policy: Policy::from_rows(&vec![node; 4])?,
    })
}

/// Ising channel, `x = u`, four-node graph, policy parametrized by `a`.
pub fn ising<T: Real>(a: T) -> Result<Fixture<T>> {
    let repeat = vec![row(T::one()), row(T::zero())];
    let rows = vec![
        repeat.clone(),
        vec![row(a), row(T::zero())],
        repeat,
        vec![row(T::one()), row(T::one() - a)],
    ];
    Ok(Fixture {
        channel: induced(
            "ising",
            ChannelParams::default(),
            &StrategyTable::identity(2, 2),
        )?,
        graph: builtin_qgraph("ising4")?,
        policy: Policy::from_rows(&rows)?,
    })
}

/// Input-constrained erasure channel with strategies `{(0,0), (1,0)}`,
/// three-node graph, policy parametrized by `p ∈ [0, ½]`.
pub fn constrained_bec<T: Real>(eps: f64, p: T) -> Result<Fixture<T>> {
    let one = T::one();
    let rows = vec![
        vec![row(one), row(one)],
        vec![row(one - p), row(one)],
        vec![row((one - p - p) / (one - p)), row(one)],
    ];
    let params = ChannelParams {
        eps: Some(eps),
        ..Default::default()
    };
    Ok(Fixture {
        channel: induced("constrained_bec", params, &StrategyTable::constrained_bec())?,
        graph: builtin_qgraph("bec3")?,
        policy: Policy::from_rows(&rows)?,
    })
}

/// ZS channel with one step of look-ahead, the four look-ahead strategies,
/// the two-node graph, and the policy family with parameters `(α, β)`.
pub fn zs_lookahead<T: Real>(alpha: T, beta: T) -> Result<Fixture<T>> {
    let (o, z) = (T::one(), T::zero());
    let node1 = vec![
        vec![z, alpha, o - alpha, z],
        vec![o, z, z, z],
        vec![z, z, z, o],
        vec![z, beta, o - beta, z],
    ];
    let node2 = vec![
        vec![z, beta, o - beta, z],
        vec![z, z, z, o],
        vec![o, z, z, z],
        vec![z, alpha, o - alpha, z],
    ];
    let params = ChannelParams {
        lookahead: Some(1),
        ..Default::default()
    };
    Ok(Fixture {
        channel: induced("zs_iid_dmc", params, &StrategyTable::zs_lookahead())?,
        graph: builtin_qgraph("two_node")?,
        policy: Policy::from_rows(&[node1, node2])?,
    })
}

/// Noisy-Ising channel, `x = u`, two-node graph, the policy
/// `P(u⁺ = 1 | u = 0, q = 0) = P(u⁺ = 0 | u = 1, q = 1) = a` with the
/// remaining rows deterministic.
pub fn noisy_ising<T: Real>(eta: f64, a: T) -> Result<Fixture<T>> {
    let (o, z) = (T::one(), T::zero());
    let rows = vec![vec![row(o - a), row(z)], vec![row(o), row(a)]];
    let params = ChannelParams {
        eta: Some(eta),
        ..Default::default()
    };
    Ok(Fixture {
        channel: induced("noisy_ising", params, &StrategyTable::identity(2, 2))?,
        graph: builtin_qgraph("two_node")?,
        policy: Policy::from_rows(&rows)?,
    })
}
