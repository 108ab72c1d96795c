use serde::{Deserialize, Serialize};

use super::chain::{build_suq_chain, check_alphabets, SuqChain};
use super::graph::QGraph;
use crate::channel::InducedChannel;
use crate::error::{Error, Result};
use crate::info::{Axis, JointTable};
use crate::scalar::Real;

/// Invariance tolerance for closed-form policies.
pub const ANALYTIC_BCJR_TOL: f64 = 1e-8;
/// Invariance tolerance for searched policies.
pub const SEARCH_BCJR_TOL: f64 = 1e-5;
/// `(q, y)` pairs below this probability are ignored by the invariance check.
pub const NEGLIGIBLE_MASS: f64 = 1e-12;

/// A stochastic table `P(u⁺ | u, q)`, stored `[q][u][u⁺]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy<T> {
    nq: usize,
    nu: usize,
    probs: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    probs: Vec<Vec<Vec<f64>>>,
}

impl<T: Real> Policy<T> {
    pub fn new(nq: usize, nu: usize, probs: Vec<T>) -> Result<Self> {
        if probs.len() != nq * nu * nu || nq == 0 || nu == 0 {
            return Err(Error::DimensionMismatch(format!(
                "policy has {} entries, expected {}",
                probs.len(),
                nq * nu * nu
            )));
        }
        for (r, row) in probs.chunks(nu).enumerate() {
            crate::channel::check_pmf(
                row,
                1e-9,
                &format!("policy row (q={}, u={})", r / nu, r % nu),
            )?;
        }
        Ok(Self { nq, nu, probs })
    }

    /// Builds from nested rows `rows[q][u][u⁺]`.
    pub fn from_rows(rows: &[Vec<Vec<T>>]) -> Result<Self> {
        let nq = rows.len();
        let nu = rows.first().map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(nq * nu * nu);
        for (q, by_u) in rows.iter().enumerate() {
            if by_u.len() != nu || by_u.iter().any(|r| r.len() != nu) {
                return Err(Error::DimensionMismatch(format!(
                    "policy node {q} is not {nu}×{nu}"
                )));
            }
            for r in by_u {
                probs.extend_from_slice(r);
            }
        }
        Self::new(nq, nu, probs)
    }

    /// Every row uniform.
    pub fn uniform(nq: usize, nu: usize) -> Self {
        Self::new(nq, nu, vec![T::one() / T::count(nu); nq * nu * nu]).expect("uniform policy")
    }

    /// JSON `{"probs": [[[…]]]}` indexed `[q][u][u⁺]`.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: PolicyFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let rows: Vec<Vec<Vec<T>>> = f
            .probs
            .iter()
            .map(|a| {
                a.iter()
                    .map(|b| b.iter().map(|&v| T::lit(v)).collect())
                    .collect()
            })
            .collect();
        Self::from_rows(&rows)
    }

    pub fn to_json(&self) -> String {
        let probs = (0..self.nq)
            .map(|q| {
                (0..self.nu)
                    .map(|u| self.row(q, u).iter().map(|p| p.as_f64()).collect())
                    .collect()
            })
            .collect();
        serde_json::to_string(&PolicyFile { probs }).expect("policy serializes")
    }

    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, q: usize, u: usize, u_next: usize) -> T {
        self.probs[(q * self.nu + u) * self.nu + u_next]
    }

    pub fn row(&self, q: usize, u: usize) -> &[T] {
        let start = (q * self.nu + u) * self.nu;
        &self.probs[start..start + self.nu]
    }

    /// Wraps a table whose rows are already normalized.
    pub(crate) fn from_raw(nq: usize, nu: usize, probs: Vec<T>) -> Self {
        Self { nq, nu, probs }
    }
}

/// Outcome of the Markov check `(S⁺, U⁺) − Q⁺ − (Q, Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariance<T> {
    pub ok: bool,
    pub violation: T,
}

/// Largest `|P(s⁺, u⁺ | q, y) − π(s⁺, u⁺ | g(q, y))|` over pairs `(q, y)` of
/// positive probability under the stationary law `pi` on `(s, u, q)`.
pub fn check_bcjr_invariance<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
    pi: &[T],
    tol: f64,
) -> Result<Invariance<T>> {
    check_alphabets(ch, qg, pol)?;
    let violation = invariance_violation(ch, qg, pol, pi);
    Ok(Invariance {
        ok: violation <= T::lit(tol),
        violation,
    })
}

pub(crate) fn invariance_violation<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
    pi: &[T],
) -> T {
    let (ns, nu, nq, ny) = (ch.ns(), ch.nu(), qg.nq(), ch.ny());
    let idx = |s: usize, u: usize, q: usize| (s * nu + u) * nq + q;
    let node_mass: Vec<T> = (0..nq)
        .map(|q| {
            (0..ns)
                .flat_map(|s| (0..nu).map(move |u| (s, u)))
                .map(|(s, u)| pi[idx(s, u, q)])
                .sum()
        })
        .collect();
    let mut worst = T::zero();
    let mut post = vec![T::zero(); ns * nu];
    for q in 0..nq {
        for y in 0..ny {
            post.iter_mut().for_each(|v| *v = T::zero());
            for s in 0..ns {
                for u in 0..nu {
                    let w = pi[idx(s, u, q)];
                    if w == T::zero() {
                        continue;
                    }
                    for un in 0..nu {
                        let a = w * pol.prob(q, u, un);
                        if a == T::zero() {
                            continue;
                        }
                        for sn in 0..ns {
                            post[sn * nu + un] = post[sn * nu + un] + a * ch.prob(y, sn, un, s);
                        }
                    }
                }
            }
            let mass: T = post.iter().copied().sum();
            if mass <= T::lit(NEGLIGIBLE_MASS) {
                continue;
            }
            let qn = qg.next(q, y);
            for sn in 0..ns {
                for un in 0..nu {
                    let target = if node_mass[qn] > T::zero() {
                        pi[idx(sn, un, qn)] / node_mass[qn]
                    } else {
                        T::zero()
                    };
                    worst = worst.max((post[sn * nu + un] / mass - target).abs());
                }
            }
        }
    }
    worst
}

/// Smooth form of the invariance condition: for every `(q, y, s⁺, u⁺)` the
/// entry `P(s⁺, u⁺, q, y) − P(q, y) π(s⁺, u⁺ | g(q, y))`. All entries vanish
/// exactly when the policy is BCJR-invariant.
pub fn invariance_residuals<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
    pi: &[T],
) -> Vec<T> {
    let (ns, nu, nq, ny) = (ch.ns(), ch.nu(), qg.nq(), ch.ny());
    let idx = |s: usize, u: usize, q: usize| (s * nu + u) * nq + q;
    let node_mass: Vec<T> = (0..nq)
        .map(|q| {
            (0..ns)
                .flat_map(|s| (0..nu).map(move |u| (s, u)))
                .map(|(s, u)| pi[idx(s, u, q)])
                .sum()
        })
        .collect();
    let mut out = Vec::with_capacity(nq * ny * ns * nu);
    let mut joint = vec![T::zero(); ns * nu];
    for q in 0..nq {
        for y in 0..ny {
            joint.iter_mut().for_each(|v| *v = T::zero());
            for s in 0..ns {
                for u in 0..nu {
                    let w = pi[idx(s, u, q)];
                    if w == T::zero() {
                        continue;
                    }
                    for un in 0..nu {
                        let a = w * pol.prob(q, u, un);
                        if a == T::zero() {
                            continue;
                        }
                        for sn in 0..ns {
                            joint[sn * nu + un] = joint[sn * nu + un] + a * ch.prob(y, sn, un, s);
                        }
                    }
                }
            }
            let mass: T = joint.iter().copied().sum();
            let qn = qg.next(q, y);
            for sn in 0..ns {
                for un in 0..nu {
                    let target = if node_mass[qn] > T::zero() {
                        pi[idx(sn, un, qn)] / node_mass[qn]
                    } else {
                        T::zero()
                    };
                    out.push(joint[sn * nu + un] - mass * target);
                }
            }
        }
    }
    out
}

/// A Q-graph bound evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct QBoundResult<T> {
    /// `I(U⁺, U; Y | Q)` in bits.
    pub rate: T,
    pub bcjr_violation: T,
    /// `I(U⁺, U; Y | Q = q)`; zero for nodes of zero weight.
    pub per_node_rewards: Vec<T>,
    /// `π(q)`.
    pub node_weights: Vec<T>,
    pub aperiodic: bool,
    /// `π(s, u, q)` in chain order.
    pub stationary: Vec<T>,
}

impl<T: Real> QBoundResult<T> {
    /// The rate counts as a lower bound on capacity.
    pub fn is_certified(&self, tol: f64) -> bool {
        self.aperiodic && self.bcjr_violation <= T::lit(tol)
    }
}

/// `P(u⁺, u, y | q)` laid out `[u⁺][u][y]`, or `None` when `π(q) = 0`.
pub fn node_joint<T: Real>(
    ch: &InducedChannel<T>,
    pol: &Policy<T>,
    pi: &[T],
    nq: usize,
    q: usize,
) -> Option<Vec<T>> {
    let (ns, nu, ny) = (ch.ns(), ch.nu(), ch.ny());
    let idx = |s: usize, u: usize| (s * nu + u) * nq + q;
    let mass: T = (0..ns)
        .flat_map(|s| (0..nu).map(move |u| (s, u)))
        .map(|(s, u)| pi[idx(s, u)])
        .sum();
    if mass <= T::zero() {
        return None;
    }
    let mut joint = vec![T::zero(); nu * nu * ny];
    for s in 0..ns {
        for u in 0..nu {
            let w = pi[idx(s, u)] / mass;
            if w == T::zero() {
                continue;
            }
            for un in 0..nu {
                let a = w * pol.prob(q, u, un);
                if a == T::zero() {
                    continue;
                }
                for y in 0..ny {
                    let c = (un * nu + u) * ny + y;
                    joint[c] = joint[c] + a * ch.output_prob(y, un, s);
                }
            }
        }
    }
    Some(joint)
}

/// The full joint `P(u⁺, u, y, q)` behind the bound, axes `u_next, u, y, q`.
pub fn bound_joint<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
    pi: &[T],
) -> Result<JointTable<T>> {
    let (nu, ny, nq) = (ch.nu(), ch.ny(), qg.nq());
    let mut probs = vec![T::zero(); nu * nu * ny * nq];
    for q in 0..nq {
        let node_mass: T = (0..ch.ns())
            .flat_map(|s| (0..nu).map(move |u| (s, u)))
            .map(|(s, u)| pi[(s * nu + u) * nq + q])
            .sum();
        if let Some(j) = node_joint(ch, pol, pi, nq, q) {
            for (c, v) in j.into_iter().enumerate() {
                probs[c * nq + q] = v * node_mass;
            }
        }
    }
    JointTable::new(
        vec![
            Axis::new("u_next", nu),
            Axis::new("u", nu),
            Axis::new("y", ny),
            Axis::new("q", nq),
        ],
        probs,
    )
}

/// Evaluates `I(U⁺, U; Y | Q)` under the stationary law of the `(s, u, q)`
/// chain, together with the invariance violation.
pub fn qgraph_bound<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
) -> Result<QBoundResult<T>> {
    let chain = build_suq_chain(ch, qg, pol)?;
    bound_from_chain(ch, qg, pol, &chain)
}

pub(crate) fn bound_from_chain<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
    chain: &SuqChain<T>,
) -> Result<QBoundResult<T>> {
    let pi = match &chain.stationary {
        Some(pi) => pi.clone(),
        None => {
            let classes = crate::qgraph::chain_structure(&chain.transition, chain.size())
                .closed_classes
                .len();
            return Err(Error::NotUnique { classes });
        }
    };
    let nq = qg.nq();
    let nu = ch.nu();
    let mut per_node_rewards = vec![T::zero(); nq];
    let mut node_weights = vec![T::zero(); nq];
    for q in 0..nq {
        node_weights[q] = (0..ch.ns())
            .flat_map(|s| (0..nu).map(move |u| (s, u)))
            .map(|(s, u)| pi[(s * nu + u) * nq + q])
            .sum();
        if let Some(j) = node_joint(ch, pol, &pi, nq, q) {
            per_node_rewards[q] = crate::info::cmi_dense(&j, nu * nu, ch.ny(), 1);
        }
    }
    let rate = node_weights
        .iter()
        .zip(&per_node_rewards)
        .map(|(&w, &r)| w * r)
        .sum();
    Ok(QBoundResult {
        rate,
        bcjr_violation: invariance_violation(ch, qg, pol, &pi),
        per_node_rewards,
        node_weights,
        aperiodic: chain.aperiodic,
        stationary: pi,
    })
}
