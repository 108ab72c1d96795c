use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bound::{bound_from_chain, invariance_residuals, Policy, QBoundResult, SEARCH_BCJR_TOL};
use super::chain::{build_suq_chain, check_alphabets};
use super::graph::QGraph;
use crate::channel::InducedChannel;
use crate::error::{Error, Result};
use crate::linalg::damped_least_squares;
use crate::scalar::Real;

/// Settings for [`search_policy`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Number of starting policies (the first is uniform, the rest random).
    pub restarts: usize,
    /// Initial weight `λ` of the squared-violation penalty, in bits.
    pub penalty: f64,
    pub seed: u64,
    /// Invariance tolerance a candidate must meet to count as feasible.
    pub tol: f64,
    /// Cap on coordinate-search sweeps per penalty level.
    pub max_sweeps: usize,
    /// Cap on feasible-direction ascent steps.
    pub polish_iters: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            penalty: 100.0,
            seed: 0,
            tol: SEARCH_BCJR_TOL,
            max_sweeps: 60,
            polish_iters: 300,
        }
    }
}

/// Best policy found by [`search_policy`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<T> {
    pub policy: Policy<T>,
    pub result: QBoundResult<T>,
    /// `result.bcjr_violation <= tol`.
    pub feasible: bool,
    pub tol: f64,
}

impl<T: Real> SearchOutcome<T> {
    /// Turns an infeasible outcome into [`Error::NoFeasiblePolicy`].
    pub fn into_result(self) -> Result<Self> {
        if self.feasible {
            Ok(self)
        } else {
            Err(Error::NoFeasiblePolicy {
                violation: self.result.bcjr_violation.as_f64(),
                tol: self.tol,
            })
        }
    }
}

/// Maximizes the Q-graph rate over BCJR-invariant policies.
///
/// Each start runs a penalized coordinate search on `rate − λ·violation²`
/// (with `λ` raised twice by a factor 100), then a feasible-direction ascent:
/// Levenberg–Marquardt projection onto the zero set of
/// [`invariance_residuals`] alternating with steps along the projected rate
/// gradient. The best feasible candidate wins, ties going to the
/// lexicographically smallest policy; if none is feasible the least-violating
/// candidate is returned with `feasible = false`.
pub fn search_policy<T: Real>(
    ch: &InducedChannel<T>,
    qg: &QGraph,
    opts: &SearchOptions,
) -> Result<SearchOutcome<T>> {
    let probe = Policy::uniform(qg.nq(), ch.nu());
    check_alphabets(ch, qg, &probe)?;
    let problem = Problem {
        ch,
        qg,
        nq: qg.nq(),
        nu: ch.nu(),
    };
    let starts = problem.starts(opts.restarts.max(1), opts.seed);
    let candidates: Vec<Option<(Vec<T>, QBoundResult<T>)>> = starts
        .into_par_iter()
        .map(|x0| problem.run_start(x0, opts))
        .collect();
    let tol = T::lit(opts.tol);
    let mut best: Option<(Vec<T>, QBoundResult<T>)> = None;
    for (x, r) in candidates.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some((bx, br)) => {
                let (f_new, f_old) = (r.bcjr_violation <= tol, br.bcjr_violation <= tol);
                if f_new != f_old {
                    f_new
                } else if !f_new {
                    r.bcjr_violation < br.bcjr_violation
                } else if (r.rate - br.rate).abs() > T::lit(1e-12) {
                    r.rate > br.rate
                } else {
                    x.partial_cmp(bx) == Some(std::cmp::Ordering::Less)
                }
            }
        };
        if better {
            best = Some((x, r));
        }
    }
    let (x, result) = best.ok_or(Error::NoFeasiblePolicy {
        violation: f64::INFINITY,
        tol: opts.tol,
    })?;
    Ok(SearchOutcome {
        feasible: result.bcjr_violation <= tol,
        policy: Policy::from_raw(problem.nq, problem.nu, x),
        result,
        tol: opts.tol,
    })
}

struct Problem<'a, T> {
    ch: &'a InducedChannel<T>,
    qg: &'a QGraph,
    nq: usize,
    nu: usize,
}

struct Eval<T> {
    result: QBoundResult<T>,
}

impl<T: Real> Problem<'_, T> {
    fn starts(&self, count: usize, seed: u64) -> Vec<Vec<T>> {
        let len = self.nq * self.nu * self.nu;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![vec![T::one() / T::count(self.nu); len]];
        while out.len() < count {
            // rows uniform on the simplex via normalized exponentials
            let mut x: Vec<T> = (0..len)
                .map(|_| T::lit(-(1.0 - rng.gen::<f64>()).ln()))
                .collect();
            normalize(&mut x, self.nu);
            out.push(x);
        }
        out
    }

    fn policy(&self, x: &[T]) -> Policy<T> {
        Policy::from_raw(self.nq, self.nu, x.to_vec())
    }

    fn eval(&self, x: &[T]) -> Option<Eval<T>> {
        let pol = self.policy(x);
        let chain = build_suq_chain(self.ch, self.qg, &pol).ok()?;
        let result = bound_from_chain(self.ch, self.qg, &pol, &chain).ok()?;
        Some(Eval { result })
    }

    fn residuals(&self, x: &[T]) -> Option<Vec<T>> {
        let pol = self.policy(x);
        let chain = build_suq_chain(self.ch, self.qg, &pol).ok()?;
        let pi = chain.stationary?;
        Some(invariance_residuals(self.ch, self.qg, &pol, &pi))
    }

    fn penalized(&self, x: &[T], lambda: T) -> T {
        match self.eval(x) {
            Some(e) => e.result.rate - lambda * e.result.bcjr_violation * e.result.bcjr_violation,
            None => T::neg_infinity(),
        }
    }

    fn run_start(&self, mut x: Vec<T>, opts: &SearchOptions) -> Option<(Vec<T>, QBoundResult<T>)> {
        for k in 0..3 {
            let lambda = T::lit(opts.penalty * 100f64.powi(k));
            self.coordinate_search(&mut x, lambda, opts.max_sweeps);
        }
        self.polish(&mut x, opts);
        let e = self.eval(&x)?;
        Some((x, e.result))
    }

    /// Moves mass between pairs of entries of one row at a time.
    fn coordinate_search(&self, x: &mut [T], lambda: T, max_sweeps: usize) {
        let nu = self.nu;
        let mut f = self.penalized(x, lambda);
        let mut delta = T::lit(0.1);
        let mut sweeps = 0;
        while delta > T::lit(1e-4) && sweeps < max_sweeps {
            sweeps += 1;
            let mut improved = false;
            for row in 0..self.nq * nu {
                for i in 0..nu {
                    for j in 0..nu {
                        if i == j {
                            continue;
                        }
                        let (a, b) = (row * nu + i, row * nu + j);
                        let step = delta.min(x[a]);
                        if step <= T::zero() {
                            continue;
                        }
                        x[a] = x[a] - step;
                        x[b] = x[b] + step;
                        let g = self.penalized(x, lambda);
                        if g > f + T::lit(1e-15) {
                            f = g;
                            improved = true;
                        } else {
                            x[a] = x[a] + step;
                            x[b] = x[b] - step;
                        }
                    }
                }
            }
            if !improved {
                delta = delta / T::lit(2.0);
            }
        }
    }

    fn fd_step() -> T {
        T::epsilon().sqrt() * T::lit(0.5)
    }

    /// Forward-difference Jacobian of the residuals over `free` coordinates,
    /// row-major `m × free.len()`, together with `r(x)`.
    fn jacobian(&self, x: &[T], free: &[usize]) -> Option<(Vec<T>, Vec<T>)> {
        let r0 = self.residuals(x)?;
        let m = r0.len();
        let n = free.len();
        let h = Self::fd_step();
        let mut jac = vec![T::zero(); m * n];
        let mut xp = x.to_vec();
        for (c, &k) in free.iter().enumerate() {
            xp.copy_from_slice(x);
            xp[k] = xp[k] + h;
            normalize(&mut xp, self.nu);
            let r1 = self.residuals(&xp)?;
            for row in 0..m {
                jac[row * n + c] = (r1[row] - r0[row]) / h;
            }
        }
        Some((jac, r0))
    }

    fn rate_gradient(&self, x: &[T], free: &[usize], base: T) -> Option<Vec<T>> {
        let h = Self::fd_step();
        let mut xp = x.to_vec();
        free.iter()
            .map(|&k| {
                xp.copy_from_slice(x);
                xp[k] = xp[k] + h;
                normalize(&mut xp, self.nu);
                Some((self.eval(&xp)?.result.rate - base) / h)
            })
            .collect()
    }

    /// Coordinates of rows that carry stationary mass.
    fn free_coords(&self, x: &[T]) -> Vec<usize> {
        let Some(e) = self.eval(x) else {
            return (0..x.len()).collect();
        };
        let (nq, nu, ns) = (self.nq, self.nu, self.ch.ns());
        let pi = &e.result.stationary;
        let mut free = Vec::new();
        for q in 0..nq {
            for u in 0..nu {
                let mass: T = (0..ns).map(|s| pi[(s * nu + u) * nq + q]).sum();
                if mass > T::lit(1e-12) {
                    free.extend((0..nu).map(|un| (q * nu + u) * nu + un));
                }
            }
        }
        free
    }

    /// Levenberg–Marquardt steps toward `residuals = 0`, reusing one
    /// Jacobian while it keeps halving the residual. Returns the final
    /// residual max-norm.
    fn project(
        &self,
        x: &mut Vec<T>,
        mut jac: Option<(Vec<T>, Vec<usize>)>,
        max_refresh: usize,
    ) -> Option<T> {
        let norm = |r: &[T]| r.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut r = self.residuals(x)?;
        let mut current = norm(&r);
        let mut mu = T::lit(1e-9);
        let mut refreshes = 0;
        for _ in 0..60 {
            if current < T::tol(1e-14) {
                break;
            }
            let (j, free) = match jac.take() {
                Some(pair) => pair,
                None => {
                    refreshes += 1;
                    let free = self.free_coords(x);
                    let (j, r0) = self.jacobian(x, &free)?;
                    r = r0;
                    (j, free)
                }
            };
            let mut trial = x.clone();
            let step = damped_least_squares(&j, &r, r.len(), free.len(), mu);
            let mut next = None;
            if let Some(step) = step {
                for (c, &k) in free.iter().enumerate() {
                    trial[k] = trial[k] - step[c];
                }
                normalize(&mut trial, self.nu);
                next = self.residuals(&trial).map(|rt| (norm(&rt), rt));
            }
            match next {
                Some((n, rt)) if n < current => {
                    let fast = n < current * T::lit(0.5);
                    *x = trial;
                    current = n;
                    r = rt;
                    if fast {
                        jac = Some((j, free));
                    } else if refreshes >= max_refresh {
                        break;
                    }
                }
                _ => {
                    mu = mu * T::lit(100.0);
                    if mu < T::lit(1e3) {
                        jac = Some((j, free));
                    } else if refreshes >= max_refresh {
                        break;
                    } else {
                        mu = T::lit(1e-9);
                    }
                }
            }
        }
        Some(current)
    }

    /// Feasible-direction ascent on the invariance manifold.
    fn polish(&self, x: &mut Vec<T>, opts: &SearchOptions) {
        let strict = T::lit(opts.tol * 1e-3);
        if self.project(x, None, 8).is_none() {
            return;
        }
        let Some(mut cur) = self.eval(x) else { return };
        let mut t = T::lit(0.05);
        let mut stalled = 0;
        for _ in 0..opts.polish_iters {
            let mut free = self.free_coords(x);
            let Some((dir, jac)) = self.tangent(x, &mut free, cur.result.rate) else {
                break;
            };
            let dnorm = dir.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if dnorm < T::lit(1e-10) {
                break;
            }
            let mut moved = false;
            while t * dnorm > T::lit(1e-12) {
                let mut trial = x.clone();
                for (c, &k) in free.iter().enumerate() {
                    trial[k] = trial[k] + t * dir[c];
                }
                normalize(&mut trial, self.nu);
                if self
                    .project(&mut trial, Some((jac.clone(), free.clone())), 1)
                    .is_some()
                {
                    if let Some(e) = self.eval(&trial) {
                        let feasible = e.result.bcjr_violation <= strict
                            || e.result.bcjr_violation <= cur.result.bcjr_violation;
                        if feasible && e.result.rate > cur.result.rate + T::lit(1e-15) {
                            stalled = if e.result.rate - cur.result.rate < T::lit(1e-12) {
                                stalled + 1
                            } else {
                                0
                            };
                            *x = trial;
                            cur = e;
                            t = (t * T::lit(2.0)).min(T::one());
                            moved = true;
                            break;
                        }
                    }
                }
                t = t / T::lit(4.0);
            }
            if !moved || stalled >= 3 {
                break;
            }
        }
    }

    /// Rate gradient projected onto the null space of the residual Jacobian,
    /// dropping coordinates pinned at zero that the direction would push
    /// negative.
    fn tangent(&self, x: &[T], free: &mut Vec<usize>, rate: T) -> Option<(Vec<T>, Vec<T>)> {
        for _ in 0..4 {
            let (jac, r) = self.jacobian(x, free)?;
            let m = r.len();
            let n = free.len();
            if n == 0 {
                return None;
            }
            let g = self.rate_gradient(x, free, rate)?;
            let jg: Vec<T> = (0..m)
                .map(|row| (0..n).map(|c| jac[row * n + c] * g[c]).sum())
                .collect();
            let w = damped_least_squares(&jac, &jg, m, n, T::lit(1e-12))?;
            let dir: Vec<T> = g.iter().zip(&w).map(|(&a, &b)| a - b).collect();
            let pinned: Vec<usize> = free
                .iter()
                .zip(&dir)
                .filter(|(&k, &d)| x[k] <= T::zero() && d < T::zero())
                .map(|(&k, _)| k)
                .collect();
            if pinned.is_empty() {
                return Some((dir, jac));
            }
            free.retain(|k| !pinned.contains(k));
        }
        None
    }
}

/// Clips each row to non-negative entries and rescales it to sum 1.
fn normalize<T: Real>(x: &mut [T], nu: usize) {
    for row in x.chunks_mut(nu) {
        for v in row.iter_mut() {
            if v.is_nan() || *v < T::zero() {
                *v = T::zero();
            }
        }
        let total: T = row.iter().copied().sum();
        if total > T::zero() {
            row.iter_mut().for_each(|v| *v = *v / total);
        } else {
            row.iter_mut().for_each(|v| *v = T::one() / T::count(nu));
        }
    }
}
