use crate::channel::{enumerate_strategies, StateDmc, StrategyTable};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stopping threshold on the capacity duality gap, in bits.
pub const CAPACITY_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 1_000_000;

/// A single-letter capacity and its maximizing input law.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleLetterResult<T> {
    pub rate: T,
    pub input_pmf: Vec<T>,
    pub iterations: usize,
}

/// Capacity of the memoryless channel `w[u][y]` by Blahut–Arimoto, stopped
/// when `max_u D(W(·|u) ‖ q) − I < tol`.
pub fn blahut_arimoto<T: Real>(
    w: &[T],
    nu: usize,
    ny: usize,
    tol: f64,
) -> Result<SingleLetterResult<T>> {
    if w.len() != nu * ny || nu == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {nu}×{ny} channel",
            w.len()
        )));
    }
    for row in w.chunks(ny) {
        crate::channel::check_pmf(row, 1e-12, "channel row")?;
    }
    let mut p = vec![T::one() / T::count(nu); nu];
    let mut d = vec![T::zero(); nu];
    let mut q = vec![T::zero(); ny];
    let tol = T::tol(tol);
    for it in 1..=MAX_ITERATIONS {
        for (y, qy) in q.iter_mut().enumerate() {
            *qy = (0..nu).map(|u| p[u] * w[u * ny + y]).sum();
        }
        for (u, du) in d.iter_mut().enumerate() {
            *du = (0..ny)
                .filter(|&y| w[u * ny + y] > T::zero())
                .map(|y| w[u * ny + y] * (w[u * ny + y] / q[y]).log2())
                .sum();
        }
        let rate: T = p.iter().zip(&d).map(|(&a, &b)| a * b).sum();
        let upper = d.iter().copied().fold(T::neg_infinity(), T::max);
        if upper - rate < tol {
            return Ok(SingleLetterResult {
                rate: rate.max(T::zero()),
                input_pmf: p,
                iterations: it,
            });
        }
        let weights: Vec<T> = p
            .iter()
            .zip(&d)
            .map(|(&a, &b)| a * (b - upper).exp2())
            .collect();
        let total: T = weights.iter().copied().sum();
        for (pu, wu) in p.iter_mut().zip(weights) {
            *pu = wu / total;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        rate: f64::NAN,
        residual_span: f64::NAN,
    })
}

/// The strategy channel `P(y | u) = Σ_s P(s) P(y | f_u(s), s)`, laid out `[u][y]`.
pub fn strategy_channel<T: Real>(dmc: &StateDmc<T>, strategies: &StrategyTable) -> Result<Vec<T>> {
    if strategies.nx() != dmc.nx || strategies.ns() != dmc.ns {
        return Err(Error::AlphabetMismatch(format!(
            "strategies map |S|={} to |X|={}, channel has |S|={} and |X|={}",
            strategies.ns(),
            strategies.nx(),
            dmc.ns,
            dmc.nx
        )));
    }
    let ny = dmc.ny;
    let mut w = vec![T::zero(); strategies.nu() * ny];
    for u in 0..strategies.nu() {
        for y in 0..ny {
            w[u * ny + y] = (0..dmc.ns)
                .map(|s| dmc.state_pmf[s] * dmc.prob(y, strategies.input(u, s), s))
                .sum();
        }
    }
    Ok(w)
}

/// Capacity with the state known causally at the encoder and i.i.d. over
/// time: the capacity of the strategy channel over all `|X|^|S|` strategies.
pub fn shannon_strategy_capacity<T: Real>(dmc: &StateDmc<T>) -> Result<SingleLetterResult<T>> {
    shannon_strategy_capacity_with(dmc, &enumerate_strategies(dmc.nx, dmc.ns)?)
}

/// As [`shannon_strategy_capacity`] over a given strategy set.
pub fn shannon_strategy_capacity_with<T: Real>(
    dmc: &StateDmc<T>,
    strategies: &StrategyTable,
) -> Result<SingleLetterResult<T>> {
    let w = strategy_channel(dmc, strategies)?;
    blahut_arimoto(&w, strategies.nu(), dmc.ny, CAPACITY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::h2;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zs_iid_strategies() {
        let r = shannon_strategy_capacity(&StateDmc::<f64>::zs()).unwrap();
        assert_abs_diff_eq!(r.rate, 1.0 - h2(0.25), epsilon = 1e-8);
        assert_abs_diff_eq!(r.input_pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zs_without_state_knowledge() {
        let dmc = StateDmc::<f64>::zs();
        let r = shannon_strategy_capacity_with(&dmc, &StrategyTable::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(r.rate, 1.0 - h2(0.25), epsilon = 1e-8);
    }

    #[test]
    fn noiseless() {
        let dmc =
            StateDmc::stateless(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let r = shannon_strategy_capacity(&dmc).unwrap();
        assert_abs_diff_eq!(r.rate, 3f64.log2(), epsilon = 1e-9);
    }

    #[test]
    fn binary_symmetric() {
        let dmc = StateDmc::stateless(2, 2, vec![0.9, 0.1, 0.1, 0.9]).unwrap();
        let r = shannon_strategy_capacity(&dmc).unwrap();
        assert_abs_diff_eq!(r.rate, 1.0 - h2(0.1), epsilon = 1e-9);
    }

    #[test]
    fn permutation_invariant() {
        let dmc = StateDmc::<f64>::zs();
        let all = enumerate_strategies(2, 2).unwrap();
        let mut rev = all.tables().to_vec();
        rev.reverse();
        let rev = StrategyTable::new(2, 2, rev).unwrap();
        let a = shannon_strategy_capacity_with(&dmc, &all).unwrap().rate;
        let b = shannon_strategy_capacity_with(&dmc, &rev).unwrap().rate;
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }
}
