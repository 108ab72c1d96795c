use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::belief::{bcjr_update, dp_reward, output_marginal, ActionMatrix, Belief, OUTPUT_TOL};
use super::grid::{SimplexGrid, Stencil};
use crate::channel::InducedChannel;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest product action grid searched exhaustively at one belief.
const PRODUCT_LIMIT: usize = 4096;
/// Golden-section steps per refined coordinate after a full search.
const GOLDEN_STEPS: usize = 16;
/// Golden-section steps per coordinate when searching without a grid scan.
const LOCAL_GOLDEN_STEPS: usize = 20;
/// Coarsest grid used for warm starts.
const MIN_COARSE_RES: usize = 8;
/// Improvement sweeps between full action-grid searches.
const FULL_EVERY: usize = 8;
/// Policy evaluation stops once values move less than this fraction of `tol`.
const EVAL_TOL_FRACTION: f64 = 1e-2;
/// Margin, as a fraction of `tol`, a candidate needs to replace an action.
const HYSTERESIS_FRACTION: f64 = 0.1;

/// How successor beliefs are mapped onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discretization {
    /// Nearest grid point in total variation, ties to the lower index.
    Nearest,
    /// Barycentric weights on the Freudenthal simplex containing the belief.
    #[default]
    Interpolate,
}

/// Tuning for [`value_iteration_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpOptions {
    pub grid_res: usize,
    pub action_res: usize,
    /// Stop once the Bellman residual span is below this, in bits.
    pub tol: f64,
    /// Cap on Bellman improvement sweeps.
    pub max_iter: usize,
    /// Policy-evaluation sweeps between improvement sweeps.
    pub eval_sweeps: usize,
    pub discretization: Discretization,
    /// Warm-start from successively halved grids.
    pub multigrid: bool,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            grid_res: 64,
            action_res: 8,
            tol: 1e-4,
            max_iter: 2000,
            eval_sweeps: 2000,
            discretization: Discretization::default(),
            multigrid: true,
        }
    }
}

/// A stationary policy on the belief grid.
#[derive(Debug, Clone)]
pub struct GridPolicy<T> {
    grid: SimplexGrid,
    nu: usize,
    actions: Vec<T>,
}

impl<T: Real> GridPolicy<T> {
    pub fn grid(&self) -> &SimplexGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// The action at grid point `index`.
    pub fn action(&self, index: usize) -> ActionMatrix<T> {
        let k = self.nu * self.nu;
        ActionMatrix::from_raw(self.nu, self.actions[index * k..(index + 1) * k].to_vec())
    }

    /// The action at the grid point nearest to `beta`.
    pub fn lookup(&self, beta: &Belief<T>) -> ActionMatrix<T> {
        self.action(self.grid.project(beta.probs()))
    }
}

/// Output of [`value_iteration`].
#[derive(Debug, Clone)]
pub struct DpSolution<T> {
    /// Midpoint of the final bracket, bits per use.
    pub rate: T,
    pub lower: T,
    pub upper: T,
    /// Span of the last Bellman residual `T h − h`.
    pub residual_span: T,
    pub policy: GridPolicy<T>,
    /// Relative values, zero at the reference point.
    pub values: Vec<T>,
    /// Bellman improvement sweeps performed.
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> DpSolution<T> {
    /// `Err(NoConvergence)` unless the span fell below the tolerance.
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                rate: self.rate.as_f64(),
                residual_span: self.residual_span.as_f64(),
            })
        }
    }
}

/// Relative value iteration with default sweep settings; see
/// [`value_iteration_with`].
pub fn value_iteration<T: Real>(
    ch: &InducedChannel<T>,
    grid_res: usize,
    action_res: usize,
    tol: f64,
    max_iter: usize,
) -> Result<DpSolution<T>> {
    value_iteration_with(
        ch,
        &DpOptions {
            grid_res,
            action_res,
            tol,
            max_iter,
            ..DpOptions::default()
        },
    )
}

/// Average-reward value iteration on the belief simplex over `U × S`.
///
/// Each improvement sweep maximizes the Bellman backup at every grid point.
/// Every eighth sweep, and any sweep after a small residual,
/// scans the action grid and refines by golden section; the others refine
/// around the incumbent only. Incumbents are kept unless beaten by
/// `tol / 10`. Successor beliefs are mapped to the grid per
/// [`Discretization`]. The residual `T h − h` of a full sweep, widened by
/// that margin, brackets the optimal rate of the discretized problem.
/// Between improvement sweeps the greedy policy is evaluated by damped
/// sweeps. With `multigrid`, coarser grids at half the resolution supply
/// the starting values and policy.
///
/// A run that hits `max_iter` returns with `converged == false`; use
/// [`DpSolution::into_result`] to turn that into an error.
pub fn value_iteration_with<T: Real>(
    ch: &InducedChannel<T>,
    opts: &DpOptions,
) -> Result<DpSolution<T>> {
    if opts.grid_res < 2 {
        return Err(Error::ParamOutOfRange {
            name: "grid_res",
            value: opts.grid_res as f64,
            range: ">= 2",
        });
    }
    if opts.action_res < 2 {
        return Err(Error::ParamOutOfRange {
            name: "action_res",
            value: opts.action_res as f64,
            range: ">= 2",
        });
    }
    if !ch.is_strongly_connected() {
        return Err(Error::NotConnected);
    }
    let dim = ch.nu() * ch.ns();
    // fail fast on an oversized grid before any coarse work
    SimplexGrid::new(dim, opts.grid_res)?;
    let mut levels = vec![opts.grid_res];
    if opts.multigrid {
        while levels[levels.len() - 1] % 2 == 0 && levels[levels.len() - 1] / 2 >= MIN_COARSE_RES {
            levels.push(levels[levels.len() - 1] / 2);
        }
    }
    let mut iterations = 0;
    let mut prev: Option<DpSolution<T>> = None;
    for &res in levels.iter().rev() {
        let grid = SimplexGrid::new(dim, res)?;
        let mut sol = solve_level(ch, grid, opts, prev.as_ref())?;
        iterations += sol.iterations;
        sol.iterations = iterations;
        prev = Some(sol);
    }
    Ok(prev.expect("at least one level"))
}

/// Relative value iteration on one grid, warm-started from a coarser
/// solution when given.
fn solve_level<T: Real>(
    ch: &InducedChannel<T>,
    grid: SimplexGrid,
    opts: &DpOptions,
    warm: Option<&DpSolution<T>>,
) -> Result<DpSolution<T>> {
    let model = Model::new(ch, &grid, opts);
    let n = grid.len();
    let nu = ch.nu();
    let ny = ch.ny() * model.stencil_width();
    let reference = grid.barycenter();

    let mut h = vec![T::zero(); n];
    let mut actions = vec![T::zero(); n * nu * nu];
    match warm {
        Some(coarse) => {
            let cg = coarse.policy.grid();
            h.par_iter_mut()
                .zip(actions.par_chunks_mut(nu * nu))
                .enumerate()
                .for_each_init(
                    || Stencil::with_axes(state_major(nu, ch.ns())),
                    |st, (i, (v, a))| {
                        let p = grid.point::<T>(i);
                        let m = cg.interpolate(&p, st);
                        *v = (0..m)
                            .map(|k| st.weights[k] * coarse.values[st.verts[k]])
                            .sum();
                        a.copy_from_slice(coarse.policy.action(cg.project(&p)).probs());
                    },
                );
        }
        None => {
            for a in actions.chunks_mut(nu * nu) {
                a.copy_from_slice(ActionMatrix::<T>::uniform(nu).probs());
            }
        }
    }
    let mut rewards = vec![T::zero(); n];
    let mut succ = vec![0u32; n * ny];
    let mut weights = vec![T::zero(); n * ny];
    let mut th = vec![T::zero(); n];

    let tol = T::lit(opts.tol);
    let half = T::lit(0.5);
    let mut lower = T::zero();
    let mut upper = T::lit(f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    let mut full = true;

    while iterations < opts.max_iter {
        iterations += 1;
        th.par_iter_mut()
            .zip(actions.par_chunks_mut(nu * nu))
            .zip(rewards.par_iter_mut())
            .zip(succ.par_chunks_mut(ny).zip(weights.par_chunks_mut(ny)))
            .enumerate()
            .for_each_init(
                || (Scratch::new(&model), model.new_point()),
                |(scratch, point), (i, (((t, a), r), (sc, w)))| {
                    model.load(i, point, scratch);
                    let (value, reward) = model.improve(point, &h, a, full, scratch);
                    *t = value;
                    *r = reward;
                    model.successors(point, a, scratch, sc, w);
                },
            );
        let (lo, hi) = th
            .par_iter()
            .zip(h.par_iter())
            .map(|(&t, &v)| (t - v, t - v))
            .reduce(
                || (T::infinity(), T::neg_infinity()),
                |a, b| (a.0.min(b.0), a.1.max(b.1)),
            );
        // damped step keeps periodic belief chains from cycling
        let shift = half * (h[reference] + th[reference]);
        h.par_iter_mut()
            .zip(th.par_iter())
            .for_each(|(v, &t)| *v = half * (*v + t) - shift);
        if full {
            // only a full search certifies the upper end of the bracket,
            // up to the margin an incumbent may be kept by
            lower = lo;
            upper = hi + model.hysteresis;
            if upper - lower < tol {
                converged = true;
                break;
            }
        }
        // a local sweep that looks converged is confirmed by a full one
        full = hi - lo < tol || iterations % FULL_EVERY == 0;
        // damped evaluation of the greedy policy
        let eval_tol = tol * T::lit(EVAL_TOL_FRACTION);
        for _ in 0..opts.eval_sweeps {
            th.par_iter_mut().enumerate().for_each(|(i, t)| {
                let mut v = rewards[i];
                for k in 0..ny {
                    v = v + weights[i * ny + k] * h[succ[i * ny + k] as usize];
                }
                *t = half * (h[i] + v);
            });
            let shift = th[reference];
            let change = h
                .par_iter_mut()
                .zip(th.par_iter())
                .map(|(v, &t)| {
                    let next = t - shift;
                    let d = (next - *v).abs();
                    *v = next;
                    d
                })
                .reduce(T::zero, T::max);
            if change < eval_tol {
                break;
            }
        }
    }

    Ok(DpSolution {
        rate: half * (lower + upper),
        lower,
        upper,
        residual_span: upper - lower,
        policy: GridPolicy { grid, nu, actions },
        values: h,
        iterations,
        converged,
    })
}

/// Average of [`dp_reward`] along a sampled belief trajectory under the
/// grid policy, after `burn_in` unrecorded steps from the uniform belief.
pub fn simulate_policy<T: Real>(
    ch: &InducedChannel<T>,
    policy: &GridPolicy<T>,
    steps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<T> {
    if policy.grid.dim() != ch.nu() * ch.ns() || policy.nu != ch.nu() {
        return Err(Error::AlphabetMismatch(format!(
            "policy over {} belief coordinates, channel has |U||S|={}",
            policy.grid.dim(),
            ch.nu() * ch.ns()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beta = Belief::uniform(ch.nu(), ch.ns());
    let mut total = T::zero();
    for step in 0..burn_in + steps {
        let a = policy.lookup(&beta);
        if step >= burn_in {
            total = total + dp_reward(&beta, &a, ch)?;
        }
        let py = output_marginal(&beta, &a, ch)?;
        let mass: f64 = py
            .iter()
            .filter(|p| p.as_f64() > OUTPUT_TOL)
            .map(|p| p.as_f64())
            .sum();
        let mut draw = rng.gen::<f64>() * mass;
        let mut y = 0;
        for (k, p) in py.iter().enumerate() {
            let p = p.as_f64();
            if p <= OUTPUT_TOL {
                continue;
            }
            y = k;
            if draw < p {
                break;
            }
            draw -= p;
        }
        beta = bcjr_update(&beta, &a, y, ch)?;
    }
    Ok(total / T::count(steps.max(1)))
}

/// Belief coordinates `u * ns + s` listed with `s` outermost, so that the
/// triangulation respects hyperplanes of the state marginal.
pub(crate) fn state_major(nu: usize, ns: usize) -> Vec<usize> {
    (0..ns)
        .flat_map(|s| (0..nu).map(move |u| u * ns + s))
        .collect()
}

/// Channel tables and the per-row action grid shared by every grid point.
struct Model<'a, T> {
    disc: Discretization,
    nu: usize,
    ns: usize,
    ny: usize,
    grid: &'a SimplexGrid,
    kernel: &'a [T],
    row_grid: Vec<Vec<T>>,
    refine_width: T,
    hysteresis: T,
}

/// Quantities at one grid belief that do not depend on the action.
struct Point<T> {
    /// `g[y][u][u⁺][s⁺] = Σ_s β(u, s) P(y, s⁺ | u⁺, s)`.
    g: Vec<T>,
    /// `hc[u][u⁺] = β(u) H(Y | u, u⁺)`.
    hc: Vec<T>,
    active: Vec<usize>,
}

struct Scratch<T> {
    beta: Vec<T>,
    post: Vec<T>,
    py: Vec<T>,
    comp: Vec<u16>,
    frac: Vec<T>,
    best: Vec<T>,
    cand: Vec<T>,
    stencil: Stencil<T>,
}

impl<T: Real> Scratch<T> {
    fn new(m: &Model<'_, T>) -> Self {
        let d = m.nu * m.ns;
        Self {
            beta: vec![T::zero(); d],
            post: vec![T::zero(); m.ny * d],
            py: vec![T::zero(); m.ny],
            comp: vec![0; d],
            frac: vec![T::zero(); d],
            best: vec![T::zero(); m.nu * m.nu],
            cand: vec![T::zero(); m.nu * m.nu],
            stencil: Stencil::with_axes(state_major(m.nu, m.ns)),
        }
    }
}

impl<'a, T: Real> Model<'a, T> {
    fn new(ch: &'a InducedChannel<T>, grid: &'a SimplexGrid, opts: &DpOptions) -> Self {
        let row = SimplexGrid::new(ch.nu(), opts.action_res).expect("action grid is small");
        let row_grid = (0..row.len()).map(|i| row.point::<T>(i)).collect();
        Self {
            disc: opts.discretization,
            nu: ch.nu(),
            ns: ch.ns(),
            ny: ch.ny(),
            grid,
            kernel: ch.kernel(),
            row_grid,
            refine_width: T::one() / T::count(opts.action_res),
            hysteresis: T::lit(opts.tol * HYSTERESIS_FRACTION),
        }
    }

    fn new_point(&self) -> Point<T> {
        Point {
            g: vec![T::zero(); self.ny * self.nu * self.nu * self.ns],
            hc: vec![T::zero(); self.nu * self.nu],
            active: Vec::with_capacity(self.nu),
        }
    }

    /// Loads grid point `index` into `p`.
    fn load(&self, index: usize, p: &mut Point<T>, scratch: &mut Scratch<T>) {
        let (nu, ns, ny) = (self.nu, self.ns, self.ny);
        let r = T::count(self.grid.res());
        for (b, &c) in scratch.beta.iter_mut().zip(self.grid.composition(index)) {
            *b = T::count(c as usize) / r;
        }
        let beta = &scratch.beta;
        let g = &mut p.g;
        for y in 0..ny {
            for u in 0..nu {
                for un in 0..nu {
                    for sn in 0..ns {
                        let base = ((y * ns + sn) * nu + un) * ns;
                        let mut v = T::zero();
                        for s in 0..ns {
                            v = v + beta[u * ns + s] * self.kernel[base + s];
                        }
                        g[((y * nu + u) * nu + un) * ns + sn] = v;
                    }
                }
            }
        }
        p.active.clear();
        for u in 0..nu {
            let bu: T = beta[u * ns..(u + 1) * ns].iter().copied().sum();
            if bu > T::zero() {
                p.active.push(u);
            }
            for un in 0..nu {
                let mut acc = T::zero();
                for y in 0..ny {
                    let q: T = g[((y * nu + u) * nu + un) * ns..][..ns]
                        .iter()
                        .copied()
                        .sum();
                    acc = acc + q.neg_xlog2x();
                }
                p.hc[u * nu + un] = acc - bu.neg_xlog2x();
            }
        }
    }

    /// Fills `scratch.post` with unnormalized posteriors and `scratch.py`
    /// with output probabilities; returns the one-step reward.
    fn predict(&self, p: &Point<T>, a: &[T], scratch: &mut Scratch<T>) -> T {
        let (nu, ns, ny) = (self.nu, self.ns, self.ny);
        let d = nu * ns;
        let mut reward = T::zero();
        for y in 0..ny {
            let mut py = T::zero();
            for un in 0..nu {
                for sn in 0..ns {
                    let mut v = T::zero();
                    for &u in &p.active {
                        v = v + a[u * nu + un] * p.g[((y * nu + u) * nu + un) * ns + sn];
                    }
                    scratch.post[y * d + un * ns + sn] = v;
                    py = py + v;
                }
            }
            scratch.py[y] = py;
            reward = reward + py.neg_xlog2x();
        }
        for &u in &p.active {
            for un in 0..nu {
                reward = reward - a[u * nu + un] * p.hc[u * nu + un];
            }
        }
        reward
    }

    /// Grid vertices carrying the normalized posterior after output `y`,
    /// left in `scratch.stencil`; `0` if `y` is impossible.
    fn successor(&self, y: usize, scratch: &mut Scratch<T>) -> usize {
        let d = self.nu * self.ns;
        let py = scratch.py[y];
        if py <= T::lit(OUTPUT_TOL) {
            return 0;
        }
        let post = &mut scratch.post[y * d..(y + 1) * d];
        for v in post.iter_mut() {
            *v = *v / py;
        }
        match self.disc {
            Discretization::Nearest => {
                self.grid
                    .round_into(post, &mut scratch.comp, &mut scratch.frac);
                scratch.stencil.verts[0] = self.grid.rank(&scratch.comp);
                scratch.stencil.weights[0] = T::one();
                1
            }
            Discretization::Interpolate => self.grid.interpolate(post, &mut scratch.stencil),
        }
    }

    /// Successor slots stored per output.
    fn stencil_width(&self) -> usize {
        match self.disc {
            Discretization::Nearest => 1,
            Discretization::Interpolate => self.nu * self.ns,
        }
    }

    /// Bellman backup value and reward of action `a`.
    fn backup(&self, p: &Point<T>, a: &[T], h: &[T], scratch: &mut Scratch<T>) -> (T, T) {
        let reward = self.predict(p, a, scratch);
        let mut value = reward;
        for y in 0..self.ny {
            let m = self.successor(y, scratch);
            let st = &scratch.stencil;
            let mut next = T::zero();
            for k in 0..m {
                next = next + st.weights[k] * h[st.verts[k]];
            }
            value = value + scratch.py[y] * next;
        }
        (value, reward)
    }

    /// Maximizes the backup at one point; `a` holds the incumbent on entry
    /// and the maximizer on exit. Returns the value and reward.
    /// A `full` search scans the action grid before refining; otherwise only
    /// the neighbourhood of the incumbent is refined.
    fn improve(
        &self,
        p: &Point<T>,
        h: &[T],
        a: &mut [T],
        full: bool,
        scratch: &mut Scratch<T>,
    ) -> (T, T) {
        let nu = self.nu;
        let (inc_v, inc_r) = self.backup(p, a, h, scratch);
        // keep the incumbent unless beaten by a margin
        let eps = self.hysteresis;
        let (mut best_v, mut best_r) = (inc_v + eps, inc_r);
        scratch.best.copy_from_slice(a);

        let consider =
            |this: &Self, cand: &[T], scratch: &mut Scratch<T>, best_v: &mut T, best_r: &mut T| {
                let (v, r) = this.backup(p, cand, h, scratch);
                if v > *best_v {
                    *best_v = v;
                    *best_r = r;
                    scratch.best.copy_from_slice(cand);
                }
            };

        let rows = self.row_grid.len();
        let combos = rows
            .checked_pow(p.active.len() as u32)
            .filter(|&c| c <= PRODUCT_LIMIT);
        let mut cand = std::mem::take(&mut scratch.cand);
        cand.copy_from_slice(&scratch.best);
        match combos {
            _ if !full => {}
            Some(total) => {
                for k in 0..total {
                    let mut rest = k;
                    for &u in &p.active {
                        cand[u * nu..(u + 1) * nu].copy_from_slice(&self.row_grid[rest % rows]);
                        rest /= rows;
                    }
                    consider(self, &cand, scratch, &mut best_v, &mut best_r);
                }
            }
            _ => {
                for _ in 0..2 {
                    for &u in &p.active {
                        cand.copy_from_slice(&scratch.best);
                        for row in &self.row_grid {
                            cand[u * nu..(u + 1) * nu].copy_from_slice(row);
                            consider(self, &cand, scratch, &mut best_v, &mut best_r);
                        }
                    }
                }
            }
        }

        let steps = if full {
            GOLDEN_STEPS
        } else {
            LOCAL_GOLDEN_STEPS
        };
        // golden-section refinement on mass moved between pairs in each row
        let inv_phi = T::lit(0.618_033_988_749_894_9);
        for &u in &p.active {
            for i in 0..nu {
                for j in i + 1..nu {
                    cand.copy_from_slice(&scratch.best);
                    let (ci, cj) = (cand[u * nu + i], cand[u * nu + j]);
                    // after a grid scan refine within one cell, otherwise
                    // search the whole segment through the incumbent
                    let width = if full { self.refine_width } else { T::one() };
                    let mut lo = -ci.min(width);
                    let mut hi = cj.min(width);
                    if hi - lo <= T::zero() {
                        continue;
                    }
                    let eval = |t: T,
                                cand: &mut Vec<T>,
                                scratch: &mut Scratch<T>,
                                bv: &mut T,
                                br: &mut T| {
                        cand[u * nu + i] = (ci + t).max(T::zero());
                        cand[u * nu + j] = (cj - t).max(T::zero());
                        let (v, r) = self.backup(p, cand, h, scratch);
                        if v > *bv {
                            *bv = v;
                            *br = r;
                            scratch.best.copy_from_slice(cand);
                        }
                        v
                    };
                    let mut x1 = hi - inv_phi * (hi - lo);
                    let mut x2 = lo + inv_phi * (hi - lo);
                    let mut f1 = eval(x1, &mut cand, scratch, &mut best_v, &mut best_r);
                    let mut f2 = eval(x2, &mut cand, scratch, &mut best_v, &mut best_r);
                    for _ in 0..steps {
                        if f1 < f2 {
                            lo = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = lo + inv_phi * (hi - lo);
                            f2 = eval(x2, &mut cand, scratch, &mut best_v, &mut best_r);
                        } else {
                            hi = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = hi - inv_phi * (hi - lo);
                            f1 = eval(x1, &mut cand, scratch, &mut best_v, &mut best_r);
                        }
                    }
                }
            }
        }
        scratch.cand = cand;
        if scratch.best[..] == a[..] {
            return (inc_v, inc_r);
        }
        a.copy_from_slice(&scratch.best);
        (best_v, best_r)
    }

    /// Successor indices and probabilities of action `a`.
    fn successors(
        &self,
        p: &Point<T>,
        a: &[T],
        scratch: &mut Scratch<T>,
        succ: &mut [u32],
        weights: &mut [T],
    ) {
        self.predict(p, a, scratch);
        let width = self.stencil_width();
        succ.fill(0);
        weights.fill(T::zero());
        for y in 0..self.ny {
            let m = self.successor(y, scratch);
            let st = &scratch.stencil;
            for k in 0..m {
                succ[y * width + k] = st.verts[k] as u32;
                weights[y * width + k] = scratch.py[y] * st.weights[k];
            }
        }
    }
}
