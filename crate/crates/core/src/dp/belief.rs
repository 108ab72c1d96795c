use crate::channel::InducedChannel;
use crate::error::{Error, Result};
use crate::info::{conditional_mi, Axis, JointTable};
use crate::scalar::Real;

/// Outputs with probability at or below this are treated as impossible.
pub const OUTPUT_TOL: f64 = 1e-14;

/// A distribution `β(u, s)` laid out `[u][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<T> {
    nu: usize,
    ns: usize,
    probs: Vec<T>,
}

impl<T: Real> Belief<T> {
    pub fn new(nu: usize, ns: usize, probs: Vec<T>) -> Result<Self> {
        if probs.len() != nu * ns || probs.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "belief has {} entries, expected {}",
                probs.len(),
                nu * ns
            )));
        }
        crate::channel::check_pmf(&probs, 1e-10, "belief")?;
        Ok(Self { nu, ns, probs })
    }

    pub fn uniform(nu: usize, ns: usize) -> Self {
        Self {
            nu,
            ns,
            probs: vec![T::one() / T::count(nu * ns); nu * ns],
        }
    }

    pub(crate) fn from_raw(nu: usize, ns: usize, probs: Vec<T>) -> Self {
        Self { nu, ns, probs }
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, u: usize, s: usize) -> T {
        self.probs[u * self.ns + s]
    }
}

/// A row-stochastic matrix `a(u⁺ | u)` laid out `[u][u⁺]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMatrix<T> {
    nu: usize,
    probs: Vec<T>,
}

impl<T: Real> ActionMatrix<T> {
    pub fn new(nu: usize, probs: Vec<T>) -> Result<Self> {
        if probs.len() != nu * nu || nu == 0 {
            return Err(Error::DimensionMismatch(format!(
                "action has {} entries, expected {}",
                probs.len(),
                nu * nu
            )));
        }
        for (u, row) in probs.chunks(nu).enumerate() {
            crate::channel::check_pmf(row, 1e-10, &format!("action row {u}"))?;
        }
        Ok(Self { nu, probs })
    }

    pub fn identity(nu: usize) -> Self {
        let probs = (0..nu * nu)
            .map(|k| {
                if k / nu == k % nu {
                    T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        Self { nu, probs }
    }

    pub fn uniform(nu: usize) -> Self {
        Self {
            nu,
            probs: vec![T::one() / T::count(nu); nu * nu],
        }
    }

    pub(crate) fn from_raw(nu: usize, probs: Vec<T>) -> Self {
        Self { nu, probs }
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, u: usize, u_next: usize) -> T {
        self.probs[u * self.nu + u_next]
    }
}

fn check_dims<T: Real>(
    beta: &Belief<T>,
    a: &ActionMatrix<T>,
    ch: &InducedChannel<T>,
) -> Result<()> {
    if beta.nu != ch.nu() || beta.ns != ch.ns() || a.nu != ch.nu() {
        return Err(Error::AlphabetMismatch(format!(
            "belief over |U|={}, |S|={} and action over |U|={} against a channel with |U|={}, |S|={}",
            beta.nu,
            beta.ns,
            a.nu,
            ch.nu(),
            ch.ns()
        )));
    }
    Ok(())
}

/// Unnormalized `P(y, u⁺, s⁺)` laid out `[y][u⁺][s⁺]`.
fn predictive<T: Real>(beta: &Belief<T>, a: &ActionMatrix<T>, ch: &InducedChannel<T>) -> Vec<T> {
    let (nu, ns, ny) = (ch.nu(), ch.ns(), ch.ny());
    let mut out = vec![T::zero(); ny * nu * ns];
    for u in 0..nu {
        for s in 0..ns {
            let b = beta.prob(u, s);
            if b == T::zero() {
                continue;
            }
            for un in 0..nu {
                let w = b * a.prob(u, un);
                if w == T::zero() {
                    continue;
                }
                for y in 0..ny {
                    for sn in 0..ns {
                        let c = (y * nu + un) * ns + sn;
                        out[c] = out[c] + w * ch.prob(y, sn, un, s);
                    }
                }
            }
        }
    }
    out
}

/// `P(y | β, a) = Σ β(u, s) a(u⁺ | u) P(y | u⁺, s)`.
pub fn output_marginal<T: Real>(
    beta: &Belief<T>,
    a: &ActionMatrix<T>,
    ch: &InducedChannel<T>,
) -> Result<Vec<T>> {
    check_dims(beta, a, ch)?;
    let joint = predictive(beta, a, ch);
    let block = ch.nu() * ch.ns();
    Ok(joint
        .chunks(block)
        .map(|c| c.iter().copied().sum())
        .collect())
}

/// Posterior `β⁺(u⁺, s⁺) ∝ Σ_{u,s} β(u, s) a(u⁺ | u) P(y, s⁺ | u⁺, s)`.
pub fn bcjr_update<T: Real>(
    beta: &Belief<T>,
    a: &ActionMatrix<T>,
    y: usize,
    ch: &InducedChannel<T>,
) -> Result<Belief<T>> {
    check_dims(beta, a, ch)?;
    if y >= ch.ny() {
        return Err(Error::DimensionMismatch(format!(
            "output {y} >= |Y|={}",
            ch.ny()
        )));
    }
    let block = ch.nu() * ch.ns();
    let joint = predictive(beta, a, ch);
    let slice = &joint[y * block..(y + 1) * block];
    let py: T = slice.iter().copied().sum();
    if py <= T::lit(OUTPUT_TOL) {
        return Err(Error::ImpossibleOutput {
            y,
            prob: py.as_f64(),
        });
    }
    Ok(Belief::from_raw(
        ch.nu(),
        ch.ns(),
        slice.iter().map(|&v| v / py).collect(),
    ))
}

/// The joint `P(u⁺, u, y)` behind the one-step reward, axes `u_next, u, y`.
pub fn reward_joint<T: Real>(
    beta: &Belief<T>,
    a: &ActionMatrix<T>,
    ch: &InducedChannel<T>,
) -> Result<JointTable<T>> {
    check_dims(beta, a, ch)?;
    let (nu, ns, ny) = (ch.nu(), ch.ns(), ch.ny());
    let mut probs = vec![T::zero(); nu * nu * ny];
    for un in 0..nu {
        for u in 0..nu {
            let a_uu = a.prob(u, un);
            for s in 0..ns {
                let w = beta.prob(u, s) * a_uu;
                if w == T::zero() {
                    continue;
                }
                for y in 0..ny {
                    let c = (un * nu + u) * ny + y;
                    probs[c] = probs[c] + w * ch.output_prob(y, un, s);
                }
            }
        }
    }
    JointTable::new(
        vec![
            Axis::new("u_next", nu),
            Axis::new("u", nu),
            Axis::new("y", ny),
        ],
        probs,
    )
}

/// `I(U⁺, U; Y)` under `β` and `a`, in bits.
pub fn dp_reward<T: Real>(
    beta: &Belief<T>,
    a: &ActionMatrix<T>,
    ch: &InducedChannel<T>,
) -> Result<T> {
    let joint = reward_joint(beta, a, ch)?;
    conditional_mi(&joint, &[0, 1], &[2], &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::tabulate;

    fn copy_channel() -> InducedChannel<f64> {
        // y = u, state flips deterministically
        let k = tabulate(
            2,
            2,
            2,
            |y, sn, u, s| if y == u && sn == 1 - s { 1.0 } else { 0.0 },
        );
        InducedChannel::new(2, 2, 2, k).unwrap()
    }

    #[test]
    fn copy_channel_posterior() {
        let ch = copy_channel();
        let beta = Belief::uniform(2, 2);
        let post = bcjr_update(&beta, &ActionMatrix::identity(2), 1, &ch).unwrap();
        assert_eq!(post.probs(), &[0.0, 0.0, 0.5, 0.5]);
        let py = output_marginal(&beta, &ActionMatrix::identity(2), &ch).unwrap();
        assert_eq!(py, vec![0.5, 0.5]);
    }

    #[test]
    fn point_mass_output() {
        let ch = copy_channel();
        let beta = Belief::new(2, 2, vec![0.0, 0.0, 0.3, 0.7]).unwrap();
        let py = output_marginal(&beta, &ActionMatrix::identity(2), &ch).unwrap();
        assert_eq!(py, vec![0.0, 1.0]);
        let err = bcjr_update(&beta, &ActionMatrix::identity(2), 0, &ch).unwrap_err();
        assert!(matches!(err, Error::ImpossibleOutput { y: 0, .. }));
    }

    #[test]
    fn uninformative_output() {
        // output uniform regardless of (u, s); state copies u⁺
        let k = tabulate(2, 2, 2, |_, sn, u, _| if sn == u { 0.5 } else { 0.0 });
        let ch = InducedChannel::new(2, 2, 2, k).unwrap();
        let beta = Belief::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let a = ActionMatrix::new(2, vec![0.6, 0.4, 0.25, 0.75]).unwrap();
        let pu0: f64 = 0.3 * 0.6 + 0.7 * 0.25;
        for y in 0..2 {
            let post = bcjr_update(&beta, &a, y, &ch).unwrap();
            assert!((post.prob(0, 0) - pu0).abs() < 1e-15);
            assert!((post.prob(1, 1) - (1.0 - pu0)).abs() < 1e-15);
        }
        assert_eq!(dp_reward(&beta, &a, &ch).unwrap(), 0.0);
    }
}
