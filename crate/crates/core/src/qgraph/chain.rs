use petgraph::algo::kosaraju_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::bound::Policy;
use super::graph::QGraph;
use crate::channel::InducedChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Communicating-class summary of a finite chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStructure {
    /// Closed (recurrent) classes, each sorted ascending; classes ordered by
    /// their smallest state.
    pub closed_classes: Vec<Vec<usize>>,
    /// Period of each closed class.
    pub periods: Vec<usize>,
}

/// Strongly connected components of the positive-transition graph of the
/// row-major `n × n` matrix `t`, keeping those with no edge leaving them.
pub fn chain_structure<T: Real>(t: &[T], n: usize) -> ChainStructure {
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if t[i * n + j] > T::zero() {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut comp = vec![0usize; n];
    let sccs = kosaraju_scc(&graph);
    for (c, members) in sccs.iter().enumerate() {
        for m in members {
            comp[m.index()] = c;
        }
    }
    let mut closed_classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, members)| {
            members
                .iter()
                .all(|m| (0..n).all(|j| t[m.index() * n + j] <= T::zero() || comp[j] == *c))
        })
        .map(|(_, members)| {
            let mut v: Vec<usize> = members.iter().map(|m| m.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    closed_classes.sort();
    let periods = closed_classes.iter().map(|c| period(t, n, c)).collect();
    ChainStructure {
        closed_classes,
        periods,
    }
}

/// Period of a communicating class: gcd of `level(i) + 1 − level(j)` over the
/// class edges, with BFS levels from the first state.
fn period<T: Real>(t: &[T], n: usize, class: &[usize]) -> usize {
    let mut level = vec![usize::MAX; n];
    level[class[0]] = 0;
    let mut queue = std::collections::VecDeque::from([class[0]]);
    let mut g = 0usize;
    while let Some(i) = queue.pop_front() {
        for &j in class {
            if t[i * n + j] <= T::zero() {
                continue;
            }
            if level[j] == usize::MAX {
                level[j] = level[i] + 1;
                queue.push_back(j);
            } else {
                let diff = (level[i] + 1).abs_diff(level[j]);
                g = gcd(g, diff);
            }
        }
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The unique stationary law of a row-stochastic `n × n` matrix. Transient
/// states get mass 0.
pub fn stationary_distribution<T: Real>(t: &[T], n: usize) -> Result<Vec<T>> {
    if t.len() != n * n || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {n}×{n} matrix",
            t.len()
        )));
    }
    let structure = chain_structure(t, n);
    if structure.closed_classes.len() != 1 {
        return Err(Error::NotUnique {
            classes: structure.closed_classes.len(),
        });
    }
    let class = &structure.closed_classes[0];
    let m = class.len();
    // (T_Cᵀ − I) π = 0 with the last equation replaced by Σ π = 1
    let mut a = vec![T::zero(); m * m];
    for (r, &j) in class.iter().enumerate() {
        for (c, &i) in class.iter().enumerate() {
            a[r * m + c] = t[i * n + j] - if r == c { T::one() } else { T::zero() };
        }
    }
    for c in 0..m {
        a[(m - 1) * m + c] = T::one();
    }
    let mut b = vec![T::zero(); m];
    b[m - 1] = T::one();
    linalg::solve(&mut a, &mut b, m, T::epsilon()).ok_or(Error::NotUnique { classes: 1 })?;
    let mut pi = vec![T::zero(); n];
    for (k, &i) in class.iter().enumerate() {
        pi[i] = b[k].max(T::zero());
    }
    let total: T = pi.iter().copied().sum();
    for p in &mut pi {
        *p = *p / total;
    }
    Ok(pi)
}

/// The product chain on `(s, u, q)`, states indexed `(s·|U| + u)·|Q| + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuqChain<T> {
    pub ns: usize,
    pub nu: usize,
    pub nq: usize,
    /// Row-major `n × n` transition matrix with `n = |S||U||Q|`.
    pub transition: Vec<T>,
    pub stationary: Option<Vec<T>>,
    pub unique: bool,
    pub aperiodic: bool,
}

impl<T: Real> SuqChain<T> {
    pub fn size(&self) -> usize {
        self.ns * self.nu * self.nq
    }

    #[inline]
    pub fn index(&self, s: usize, u: usize, q: usize) -> usize {
        (s * self.nu + u) * self.nq + q
    }

    /// `max_j |(πT)_j − π_j|`, if a stationary law exists.
    pub fn stationarity_residual(&self) -> Option<T> {
        let pi = self.stationary.as_ref()?;
        let n = self.size();
        Some(
            (0..n)
                .map(|j| {
                    let v: T = (0..n).map(|i| pi[i] * self.transition[i * n + j]).sum();
                    (v - pi[j]).abs()
                })
                .fold(T::zero(), T::max),
        )
    }
}

pub(crate) fn check_alphabets<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
) -> Result<()> {
    if qg.ny() != ch.ny() {
        return Err(Error::AlphabetMismatch(format!(
            "graph labels {} outputs, channel has {}",
            qg.ny(),
            ch.ny()
        )));
    }
    if pol.nq() != qg.nq() || pol.nu() != ch.nu() {
        return Err(Error::AlphabetMismatch(format!(
            "policy is over |Q|={}, |U|={}; graph has {} nodes and channel {} strategies",
            pol.nq(),
            pol.nu(),
            qg.nq(),
            ch.nu()
        )));
    }
    Ok(())
}

/// `P(s⁺, u⁺, q⁺ | s, u, q) = Σ_y P(u⁺|u,q) P(y, s⁺ | u⁺, s) 1{q⁺ = g(q, y)}`.
pub fn build_suq_chain<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    pol: &Policy<T>,
) -> Result<SuqChain<T>> {
    check_alphabets(ch, qg, pol)?;
    let (ns, nu, nq, ny) = (ch.ns(), ch.nu(), qg.nq(), ch.ny());
    let n = ns * nu * nq;
    let mut transition = vec![T::zero(); n * n];
    let idx = |s: usize, u: usize, q: usize| (s * nu + u) * nq + q;
    for s in 0..ns {
        for u in 0..nu {
            for q in 0..nq {
                let row = idx(s, u, q) * n;
                for un in 0..nu {
                    let a = pol.prob(q, u, un);
                    if a == T::zero() {
                        continue;
                    }
                    for y in 0..ny {
                        let qn = qg.next(q, y);
                        for sn in 0..ns {
                            let k = ch.prob(y, sn, un, s);
                            if k > T::zero() {
                                let c = row + idx(sn, un, qn);
                                transition[c] = transition[c] + a * k;
                            }
                        }
                    }
                }
            }
        }
    }
    let structure = chain_structure(&transition, n);
    let unique = structure.closed_classes.len() == 1;
    let aperiodic = unique && structure.periods[0] == 1;
    let stationary = if unique {
        stationary_distribution(&transition, n).ok()
    } else {
        None
    };
    Ok(SuqChain {
        ns,
        nu,
        nq,
        transition,
        stationary,
        unique,
        aperiodic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubly_stochastic_is_uniform() {
        let t: Vec<f64> = vec![
            0.1, 0.2, 0.3, 0.4, //
            0.4, 0.1, 0.2, 0.3, //
            0.3, 0.4, 0.1, 0.2, //
            0.2, 0.3, 0.4, 0.1,
        ];
        let pi = stationary_distribution(&t, 4).unwrap();
        for p in pi {
            assert!((p - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_is_not_unique() {
        let t = vec![1.0, 0.0, 0.0, 1.0];
        assert_eq!(
            stationary_distribution(&t, 2),
            Err(Error::NotUnique { classes: 2 })
        );
    }

    #[test]
    fn transient_state_gets_zero_mass() {
        let t: Vec<f64> = vec![0.5, 0.5, 0.0, 0.0, 0.2, 0.8, 0.0, 0.6, 0.4];
        let pi = stationary_distribution(&t, 3).unwrap();
        assert_eq!(pi[0], 0.0);
        assert!((pi[1] - 3.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn period_of_cycle() {
        let t = vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(chain_structure(&t, 3).periods, vec![3]);
        let lazy = vec![0.5, 0.5, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(chain_structure(&lazy, 3).periods, vec![1]);
    }
}
