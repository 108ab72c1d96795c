//! Finite-state channel kernels `P(y, s⁺ | x, s)`.
//!
//! Every table in this crate uses the index order `[y][s_next][x][s]`,
//! flattened row-major. [`Fsc`] is the validated kernel plus an initial-state
//! distribution; [`InducedChannel`] is the same kernel after Shannon
//! strategies have replaced the input alphabet.

mod builtin;
mod file;
mod lookahead;
mod strategy;

pub use builtin::{builtin_channel, ChannelParams, StateDmc, BUILTIN_CHANNELS};
pub use file::ChannelFile;
pub use lookahead::{make_lookahead_fsc, MAX_LOOKAHEAD};
pub use strategy::{
    enumerate_strategies, enumerate_strategies_filtered, induce_strategy_channel, InducedChannel,
    StrategyTable, DEFAULT_ENUMERATION_CAP,
};

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-sum tolerance for kernels built in code.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Row-sum tolerance for kernels parsed from text.
pub const FILE_TOL: f64 = 1e-9;

/// A validated finite-state channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Fsc<T> {
    nx: usize,
    ns: usize,
    ny: usize,
    kernel: Vec<T>,
    initial_state: Vec<T>,
}

impl<T: Real> Fsc<T> {
    /// Validates a flat `[y][s_next][x][s]` kernel at the construction tolerance.
    pub fn new(
        nx: usize,
        ns: usize,
        ny: usize,
        kernel: Vec<T>,
        initial_state: Vec<T>,
    ) -> Result<Self> {
        Self::with_tolerance(nx, ns, ny, kernel, initial_state, CONSTRUCTION_TOL)
    }

    pub fn with_tolerance(
        nx: usize,
        ns: usize,
        ny: usize,
        kernel: Vec<T>,
        initial_state: Vec<T>,
        tol: f64,
    ) -> Result<Self> {
        check_kernel(nx, ns, ny, &kernel, tol, "x")?;
        if initial_state.len() != ns {
            return Err(Error::DimensionMismatch(format!(
                "initial_state has {} entries, expected {ns}",
                initial_state.len()
            )));
        }
        check_pmf(&initial_state, tol, "initial_state")?;
        Ok(Self {
            nx,
            ns,
            ny,
            kernel,
            initial_state,
        })
    }

    /// Builds a kernel from a closure `(y, s_next, x, s) -> probability` with a
    /// uniform initial state.
    pub fn from_fn(
        nx: usize,
        ns: usize,
        ny: usize,
        f: impl Fn(usize, usize, usize, usize) -> T,
    ) -> Result<Self> {
        let kernel = tabulate(nx, ns, ny, f);
        let init = vec![T::one() / T::count(ns); ns];
        Self::new(nx, ns, ny, kernel, init)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }

    pub fn initial_state(&self) -> &[T] {
        &self.initial_state
    }

    /// Replaces the initial-state distribution.
    pub fn with_initial_state(mut self, initial_state: Vec<T>) -> Result<Self> {
        if initial_state.len() != self.ns {
            return Err(Error::DimensionMismatch(format!(
                "initial_state has {} entries, expected {}",
                initial_state.len(),
                self.ns
            )));
        }
        check_pmf(&initial_state, CONSTRUCTION_TOL, "initial_state")?;
        self.initial_state = initial_state;
        Ok(self)
    }

    #[inline]
    pub fn prob(&self, y: usize, s_next: usize, x: usize, s: usize) -> T {
        self.kernel[((y * self.ns + s_next) * self.nx + x) * self.ns + s]
    }

    /// `P(y | x, s)`.
    pub fn output_prob(&self, y: usize, x: usize, s: usize) -> T {
        (0..self.ns).map(|sn| self.prob(y, sn, x, s)).sum()
    }

    /// `P(s_next | x, s)`.
    pub fn state_prob(&self, s_next: usize, x: usize, s: usize) -> T {
        (0..self.ny).map(|y| self.prob(y, s_next, x, s)).sum()
    }
}

/// Validates a nested `[y][s_next][x][s]` kernel.
pub fn validate_fsc<T: Real>(kernel: &[Vec<Vec<Vec<T>>>], initial_state: &[T]) -> Result<Fsc<T>> {
    validate_fsc_with_tolerance(kernel, initial_state, CONSTRUCTION_TOL)
}

pub fn validate_fsc_with_tolerance<T: Real>(
    kernel: &[Vec<Vec<Vec<T>>>],
    initial_state: &[T],
    tol: f64,
) -> Result<Fsc<T>> {
    let ny = kernel.len();
    let ns = kernel.first().map_or(0, Vec::len);
    let nx = kernel.first().and_then(|k| k.first()).map_or(0, Vec::len);
    let ns_inner = kernel
        .first()
        .and_then(|k| k.first())
        .and_then(|k| k.first())
        .map_or(0, Vec::len);
    if ny == 0 || ns == 0 || nx == 0 {
        return Err(Error::DimensionMismatch("empty kernel".into()));
    }
    if ns_inner != ns {
        return Err(Error::DimensionMismatch(format!(
            "state axis sizes differ: s_next has {ns}, s has {ns_inner}"
        )));
    }
    let mut flat = Vec::with_capacity(ny * ns * nx * ns);
    for (y, by_sn) in kernel.iter().enumerate() {
        if by_sn.len() != ns {
            return Err(Error::DimensionMismatch(format!(
                "kernel[{y}] has {} rows",
                by_sn.len()
            )));
        }
        for (sn, by_x) in by_sn.iter().enumerate() {
            if by_x.len() != nx {
                return Err(Error::DimensionMismatch(format!(
                    "kernel[{y}][{sn}] has {} rows",
                    by_x.len()
                )));
            }
            for (x, by_s) in by_x.iter().enumerate() {
                if by_s.len() != ns {
                    return Err(Error::DimensionMismatch(format!(
                        "kernel[{y}][{sn}][{x}] has {} entries",
                        by_s.len()
                    )));
                }
                flat.extend_from_slice(by_s);
            }
        }
    }
    Fsc::with_tolerance(nx, ns, ny, flat, initial_state.to_vec(), tol)
}

/// `true` iff every state reaches every other state in the graph with an edge
/// `s -> s⁺` whenever some input moves `s` to `s⁺` with positive probability.
pub fn is_strongly_connected<T: Real>(fsc: &Fsc<T>) -> bool {
    state_graph_connected(fsc.ns, |s, sn| {
        (0..fsc.nx).any(|x| fsc.state_prob(sn, x, s) > T::zero())
    })
}

pub(crate) fn state_graph_connected(ns: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut graph = DiGraph::<(), ()>::with_capacity(ns, ns * ns);
    let nodes: Vec<_> = (0..ns).map(|_| graph.add_node(())).collect();
    for s in 0..ns {
        for sn in 0..ns {
            if edge(s, sn) {
                graph.add_edge(nodes[s], nodes[sn], ());
            }
        }
    }
    kosaraju_scc(&graph).len() == 1
}

pub fn tabulate<T: Real>(
    nx: usize,
    ns: usize,
    ny: usize,
    f: impl Fn(usize, usize, usize, usize) -> T,
) -> Vec<T> {
    let mut kernel = Vec::with_capacity(ny * ns * nx * ns);
    for y in 0..ny {
        for sn in 0..ns {
            for x in 0..nx {
                for s in 0..ns {
                    kernel.push(f(y, sn, x, s));
                }
            }
        }
    }
    kernel
}

/// Shared validation for `[y][s_next][input][s]` tables; `input` names the
/// third axis in error messages.
pub(crate) fn check_kernel<T: Real>(
    n_in: usize,
    ns: usize,
    ny: usize,
    kernel: &[T],
    tol: f64,
    input: &str,
) -> Result<()> {
    if n_in == 0 || ns == 0 || ny == 0 {
        return Err(Error::DimensionMismatch(
            "alphabet sizes must be positive".into(),
        ));
    }
    let expected = ny * ns * n_in * ns;
    if kernel.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "kernel has {} entries, expected {expected}",
            kernel.len()
        )));
    }
    let at = |y: usize, sn: usize, x: usize, s: usize| ((y * ns + sn) * n_in + x) * ns + s;
    for y in 0..ny {
        for sn in 0..ns {
            for x in 0..n_in {
                for s in 0..ns {
                    let p = kernel[at(y, sn, x, s)];
                    if p.is_nan() || p < T::zero() {
                        return Err(Error::NegativeProbability {
                            location: format!("[y={y}][s_next={sn}][{input}={x}][s={s}]"),
                            value: p.as_f64(),
                        });
                    }
                }
            }
        }
    }
    let tol = T::tol(tol);
    for x in 0..n_in {
        for s in 0..ns {
            let mut total = T::zero();
            for y in 0..ny {
                for sn in 0..ns {
                    total = total + kernel[at(y, sn, x, s)];
                }
            }
            if (total - T::one()).abs() > tol {
                return Err(Error::RowSumError {
                    x,
                    s,
                    sum: total.as_f64(),
                });
            }
        }
    }
    Ok(())
}

pub fn check_pmf<T: Real>(p: &[T], tol: f64, what: &str) -> Result<()> {
    if let Some((i, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || **v < T::zero())
    {
        return Err(Error::NegativeProbability {
            location: format!("{what}[{i}]"),
            value: v.as_f64(),
        });
    }
    let total: T = p.iter().copied().sum();
    if (total - T::one()).abs() > T::tol(tol) {
        return Err(Error::NotAPmf(format!("{what} sums to {total}")));
    }
    Ok(())
}
