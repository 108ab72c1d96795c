use super::joint::{conditional_mi, Axis, JointTable};
use crate::channel::InducedChannel;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default limit on `|U|^N · |Y|^N · |S|` for exact unrolling.
pub const DEFAULT_ATOM_BUDGET: u128 = 10_000_000;

/// Causally conditioned input law `Π_i P(u_i | u^{i-1}, y^{i-1})`.
///
/// Step `i` (0-based) is a table `[history][u]` where the history
/// `((u_1, y_1), …, (u_i, y_i))` is indexed base `|U|·|Y|` with the earliest
/// pair most significant and each pair coded `u·|Y| + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalConditioning<T> {
    nu: usize,
    ny: usize,
    steps: Vec<Vec<T>>,
}

impl<T: Real> CausalConditioning<T> {
    pub fn new(nu: usize, ny: usize, steps: Vec<Vec<T>>) -> Result<Self> {
        if nu == 0 || ny == 0 {
            return Err(Error::DimensionMismatch(
                "alphabet sizes must be positive".into(),
            ));
        }
        for (i, step) in steps.iter().enumerate() {
            let rows = Self::histories(nu, ny, i);
            if step.len() != rows * nu {
                return Err(Error::DimensionMismatch(format!(
                    "step {i} has {} entries, expected {}",
                    step.len(),
                    rows * nu
                )));
            }
            for (h, row) in step.chunks(nu).enumerate() {
                crate::channel::check_pmf(
                    row,
                    super::joint::MASS_TOL,
                    &format!("step {i} history {h}"),
                )?;
            }
        }
        Ok(Self { nu, ny, steps })
    }

    /// Every step draws `u` from `pmf` regardless of the past.
    pub fn iid(pmf: &[T], ny: usize, n: usize) -> Result<Self> {
        let nu = pmf.len();
        let steps = (0..n)
            .map(|i| pmf.repeat(Self::histories(nu, ny, i)))
            .collect();
        Self::new(nu, ny, steps)
    }

    pub fn uniform(nu: usize, ny: usize, n: usize) -> Self {
        Self::iid(&vec![T::one() / T::count(nu); nu], ny, n).expect("uniform law")
    }

    /// Number of histories before step `i` (0-based).
    pub fn histories(nu: usize, ny: usize, i: usize) -> usize {
        (nu * ny).pow(i as u32)
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[Vec<T>] {
        &self.steps
    }

    pub fn steps_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.steps
    }

    #[inline]
    pub fn prob(&self, step: usize, history: usize, u: usize) -> T {
        self.steps[step][history * self.nu + u]
    }
}

/// The exact joint of `(U_1, …, U_N, Y_1, …, Y_N)` given `S_0 = s0`, with axes
/// named `u1…uN` followed by `y1…yN`.
pub fn unrolled_joint<T: Real>(
    ch: &InducedChannel<T>,
    ccd: &CausalConditioning<T>,
    s0: usize,
    n: usize,
    budget: u128,
) -> Result<JointTable<T>> {
    if ccd.nu() != ch.nu() || ccd.ny() != ch.ny() {
        return Err(Error::AlphabetMismatch(format!(
            "input law is over |U|={}, |Y|={}; channel has |U|={}, |Y|={}",
            ccd.nu(),
            ccd.ny(),
            ch.nu(),
            ch.ny()
        )));
    }
    if ccd.horizon() < n || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "horizon {n} needs {n} conditional steps, law has {}",
            ccd.horizon()
        )));
    }
    if s0 >= ch.ns() {
        return Err(Error::DimensionMismatch(format!(
            "initial state {s0} >= |S|={}",
            ch.ns()
        )));
    }
    let (nu, ny, ns) = (ch.nu(), ch.ny(), ch.ns());
    let atoms = (nu as u128)
        .saturating_pow(n as u32)
        .saturating_mul((ny as u128).saturating_pow(n as u32))
        .saturating_mul(ns as u128);
    if atoms > budget {
        return Err(Error::BudgetExceeded { atoms, budget });
    }
    let mut probs = vec![T::zero(); nu.pow(n as u32) * ny.pow(n as u32)];
    let mut alpha = vec![T::zero(); ns];
    alpha[s0] = T::one();
    let ctx = Unroll {
        ch,
        ccd,
        n,
        yspan: ny.pow(n as u32),
    };
    ctx.descend(0, 0, 0, 0, &alpha, &mut probs);
    let axes = (1..=n)
        .map(|i| Axis::new(format!("u{i}"), nu))
        .chain((1..=n).map(|i| Axis::new(format!("y{i}"), ny)))
        .collect();
    JointTable::new(axes, probs)
}

struct Unroll<'a, T> {
    ch: &'a InducedChannel<T>,
    ccd: &'a CausalConditioning<T>,
    n: usize,
    yspan: usize,
}

impl<T: Real> Unroll<'_, T> {
    /// `alpha[s]` is `P(u^i, y^i, s_i)` for the prefix encoded by `history`
    /// (interleaved), `ucode` and `ycode` (separate base-|U| and base-|Y| codes).
    fn descend(
        &self,
        i: usize,
        history: usize,
        ucode: usize,
        ycode: usize,
        alpha: &[T],
        out: &mut [T],
    ) {
        let (nu, ny, ns) = (self.ch.nu(), self.ch.ny(), self.ch.ns());
        if i == self.n {
            out[ucode * self.yspan + ycode] = alpha.iter().copied().sum();
            return;
        }
        let mut next = vec![T::zero(); ns];
        for u in 0..nu {
            let pu = self.ccd.prob(i, history, u);
            if pu == T::zero() {
                continue;
            }
            for y in 0..ny {
                let mut mass = T::zero();
                for (sn, slot) in next.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for (s, &a) in alpha.iter().enumerate() {
                        acc = acc + a * self.ch.prob(y, sn, u, s);
                    }
                    *slot = acc * pu;
                    mass = mass + *slot;
                }
                if mass == T::zero() {
                    continue;
                }
                self.descend(
                    i + 1,
                    history * nu * ny + u * ny + y,
                    ucode * nu + u,
                    ycode * ny + y,
                    &next,
                    out,
                );
            }
        }
    }
}

/// `I(U^N → Y^N | s0) = Σ_i I(U^i; Y_i | Y^{i-1}, s0)` in bits.
pub fn directed_info<T: Real>(
    ch: &InducedChannel<T>,
    ccd: &CausalConditioning<T>,
    s0: usize,
    n: usize,
) -> Result<T> {
    let joint = unrolled_joint(ch, ccd, s0, n, DEFAULT_ATOM_BUDGET)?;
    directed_info_terms(&joint, n).map(|t| t.into_iter().sum())
}

/// The per-step terms `I(U^i; Y_i | Y^{i-1})` of an unrolled joint.
pub fn directed_info_terms<T: Real>(joint: &JointTable<T>, n: usize) -> Result<Vec<T>> {
    (0..n)
        .map(|i| {
            let us: Vec<usize> = (0..=i).collect();
            let past: Vec<usize> = (n..n + i).collect();
            conditional_mi(joint, &us, &[n + i], &past)
        })
        .collect()
}
