use serde::{Deserialize, Serialize};

use super::{check_kernel, Fsc, CONSTRUCTION_TOL};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default upper limit on the number of enumerated strategies.
pub const DEFAULT_ENUMERATION_CAP: usize = 4096;

/// A list of Shannon strategies `u ↦ (s ↦ x)`.
///
/// `tables[u][s]` is the input sent under strategy `u` in state `s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyTable {
    nx: usize,
    ns: usize,
    tables: Vec<Vec<usize>>,
}

impl StrategyTable {
    /// Validates an explicit list of strategies.
    pub fn new(nx: usize, ns: usize, tables: Vec<Vec<usize>>) -> Result<Self> {
        if nx == 0 || ns == 0 || tables.is_empty() {
            return Err(Error::DimensionMismatch("empty strategy table".into()));
        }
        for (u, t) in tables.iter().enumerate() {
            if t.len() != ns {
                return Err(Error::AlphabetMismatch(format!(
                    "strategy {u} has {} entries, expected {ns}",
                    t.len()
                )));
            }
            if let Some(&x) = t.iter().find(|&&x| x >= nx) {
                return Err(Error::AlphabetMismatch(format!(
                    "strategy {u} sends x={x} but |X|={nx}"
                )));
            }
        }
        for a in 0..tables.len() {
            for b in a + 1..tables.len() {
                if tables[a] == tables[b] {
                    return Err(Error::AlphabetMismatch(format!(
                        "strategies {a} and {b} are identical"
                    )));
                }
            }
        }
        Ok(Self { nx, ns, tables })
    }

    /// `f(u, s) = u`: the state is ignored.
    pub fn identity(nx: usize, ns: usize) -> Self {
        Self::new(nx, ns, (0..nx).map(|u| vec![u; ns]).collect()).expect("identity strategies")
    }

    /// `f(u, s) = u ⊕ s` for binary input and state.
    pub fn xor() -> Self {
        Self::new(2, 2, vec![vec![0, 1], vec![1, 0]]).expect("xor strategies")
    }

    /// Binary strategies that never send 1 from state 1.
    pub fn constrained_bec() -> Self {
        enumerate_strategies_filtered(2, 2, DEFAULT_ENUMERATION_CAP, |t| t[1] != 1)
            .expect("constrained strategies")
    }

    /// The four strategies used for the ZS channel with one step of
    /// look-ahead, on tuple states `(s_prev, s_cur)` indexed `2·s_prev + s_cur`:
    /// always 0, `x = s_cur`, `x = 1 − s_cur`, always 1.
    pub fn zs_lookahead() -> Self {
        Self::new(
            2,
            4,
            vec![
                vec![0, 0, 0, 0],
                vec![0, 1, 0, 1],
                vec![1, 0, 1, 0],
                vec![1, 1, 1, 1],
            ],
        )
        .expect("look-ahead strategies")
    }

    /// Resolves a named strategy family for the given alphabets.
    pub fn named(name: &str, nx: usize, ns: usize) -> Result<Self> {
        match name {
            "all" | "full" => enumerate_strategies(nx, ns),
            "identity" | "u" => Ok(Self::identity(nx, ns)),
            "xor" if nx == 2 && ns == 2 => Ok(Self::xor()),
            "bec" | "constrained_bec" if nx == 2 && ns == 2 => Ok(Self::constrained_bec()),
            "zs_la" | "zs_lookahead" if nx == 2 && ns == 4 => Ok(Self::zs_lookahead()),
            _ => Err(Error::Parse(format!(
                "strategy family `{name}` is not defined for |X|={nx}, |S|={ns}"
            ))),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn nu(&self) -> usize {
        self.tables.len()
    }

    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    #[inline]
    pub fn input(&self, u: usize, s: usize) -> usize {
        self.tables[u][s]
    }
}

/// All `nx^ns` functions `S → X`, lexicographic in `(f(0), f(1), …)`.
pub fn enumerate_strategies(nx: usize, ns: usize) -> Result<StrategyTable> {
    enumerate_strategies_filtered(nx, ns, DEFAULT_ENUMERATION_CAP, |_| true)
}

/// The strategies accepted by `keep`, in canonical order. The cap applies to
/// the unfiltered count.
pub fn enumerate_strategies_filtered(
    nx: usize,
    ns: usize,
    cap: usize,
    keep: impl Fn(&[usize]) -> bool,
) -> Result<StrategyTable> {
    if nx == 0 || ns == 0 {
        return Err(Error::DimensionMismatch(
            "alphabet sizes must be positive".into(),
        ));
    }
    let count = (nx as u128).checked_pow(ns as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::EnumerationCapExceeded { count, cap });
    }
    let mut tables = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; ns];
    for _ in 0..count {
        if keep(&digits) {
            tables.push(digits.clone());
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < nx {
                break;
            }
            *d = 0;
        }
    }
    StrategyTable::new(nx, ns, tables)
}

/// The channel seen by the strategy symbol: `P(y, s⁺ | u, s)`, laid out
/// `[y][s_next][u][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChannel<T> {
    nu: usize,
    ns: usize,
    ny: usize,
    kernel: Vec<T>,
}

impl<T: Real> InducedChannel<T> {
    /// Validates a flat kernel directly.
    pub fn new(nu: usize, ns: usize, ny: usize, kernel: Vec<T>) -> Result<Self> {
        check_kernel(nu, ns, ny, &kernel, CONSTRUCTION_TOL, "u")?;
        Ok(Self { nu, ns, ny, kernel })
    }

    pub fn nu(&self) -> usize {
        self.nu
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

    #[inline]
    pub fn prob(&self, y: usize, s_next: usize, u: usize, s: usize) -> T {
        self.kernel[((y * self.ns + s_next) * self.nu + u) * self.ns + s]
    }

    /// `P(y | u, s)`.
    pub fn output_prob(&self, y: usize, u: usize, s: usize) -> T {
        (0..self.ns).map(|sn| self.prob(y, sn, u, s)).sum()
    }

    /// `P(s⁺ | u, s)`.
    pub fn state_prob(&self, s_next: usize, u: usize, s: usize) -> T {
        (0..self.ny).map(|y| self.prob(y, s_next, u, s)).sum()
    }

    /// `true` iff the state graph over all strategies is strongly connected.
    pub fn is_strongly_connected(&self) -> bool {
        super::state_graph_connected(self.ns, |s, sn| {
            (0..self.nu).any(|u| self.state_prob(sn, u, s) > T::zero())
        })
    }
}

/// Substitutes `x = f_u(s)` into the channel kernel.
pub fn induce_strategy_channel<T: Real>(
    fsc: &Fsc<T>,
    strategies: &StrategyTable,
) -> Result<InducedChannel<T>> {
    if strategies.nx() != fsc.nx() || strategies.ns() != fsc.ns() {
        return Err(Error::AlphabetMismatch(format!(
            "strategies map |S|={} to |X|={}, channel has |S|={} and |X|={}",
            strategies.ns(),
            strategies.nx(),
            fsc.ns(),
            fsc.nx()
        )));
    }
    let (nu, ns, ny) = (strategies.nu(), fsc.ns(), fsc.ny());
    let kernel = super::tabulate(nu, ns, ny, |y, sn, u, s| {
        fsc.prob(y, sn, strategies.input(u, s), s)
    });
    Ok(InducedChannel { nu, ns, ny, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{builtin_channel, ChannelParams};
    use proptest::prelude::*;

    #[test]
    fn binary_two_state_order() {
        let t = enumerate_strategies(2, 2).unwrap();
        assert_eq!(
            t.tables(),
            &[vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn singleton_state() {
        assert_eq!(enumerate_strategies(2, 1).unwrap().nu(), 2);
    }

    #[test]
    fn ternary_input() {
        assert_eq!(enumerate_strategies(3, 2).unwrap().nu(), 9);
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_strategies(2, 13).unwrap_err();
        assert_eq!(
            err,
            Error::EnumerationCapExceeded {
                count: 8192,
                cap: 4096
            }
        );
    }

    #[test]
    fn bec_filter_keeps_zero_in_state_one() {
        let t = StrategyTable::constrained_bec();
        assert_eq!(t.tables(), &[vec![0, 0], vec![1, 0]]);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(StrategyTable::new(2, 1, vec![vec![0], vec![0]]).is_err());
    }

    #[test]
    fn singleton_state_induction_relabels() {
        let fsc =
            Fsc::<f64>::from_fn(2, 1, 2, |y, _, x, _| if y == x { 0.9 } else { 0.1 }).unwrap();
        let ind = induce_strategy_channel(&fsc, &StrategyTable::identity(2, 1)).unwrap();
        assert_eq!(ind.kernel(), fsc.kernel());
    }

    #[test]
    fn zs_always_zero_strategy() {
        let params = ChannelParams::default();
        let fsc: Fsc<f64> = builtin_channel("zs_iid_dmc", &params).unwrap();
        let ind = induce_strategy_channel(&fsc, &enumerate_strategies(2, 2).unwrap()).unwrap();
        assert_eq!(ind.output_prob(1, 0, 0), 0.0);
        assert_eq!(ind.output_prob(1, 0, 1), 0.5);
    }

    #[test]
    fn trapdoor_xor_substitution() {
        let fsc: Fsc<f64> = builtin_channel("trapdoor", &ChannelParams::default()).unwrap();
        let ind = induce_strategy_channel(&fsc, &StrategyTable::xor()).unwrap();
        for y in 0..2 {
            for sn in 0..2 {
                for u in 0..2 {
                    for s in 0..2 {
                        let x = u ^ s;
                        let zs = match (s, x) {
                            (0, 0) => f64::from(y == 0),
                            (1, 1) => f64::from(y == 1),
                            _ => 0.5,
                        };
                        let expected = if sn == s ^ x ^ y { zs } else { 0.0 };
                        assert_eq!(ind.prob(y, sn, u, s), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn mismatched_alphabets() {
        let fsc: Fsc<f64> = builtin_channel("trapdoor", &ChannelParams::default()).unwrap();
        let err = induce_strategy_channel(&fsc, &StrategyTable::identity(3, 2)).unwrap_err();
        assert!(matches!(err, Error::AlphabetMismatch(_)));
    }

    proptest! {
        #[test]
        fn enumeration_is_complete_and_distinct(nx in 1usize..5, ns in 1usize..6) {
            prop_assume!((nx as u64).pow(ns as u32) <= 4096);
            let t = enumerate_strategies(nx, ns).unwrap();
            prop_assert_eq!(t.nu(), nx.pow(ns as u32));
            let mut sorted = t.tables().to_vec();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), t.nu());
        }

        #[test]
        fn induction_stays_stochastic(eta in 0.0f64..=1.0, pick in proptest::collection::vec(0usize..4, 1..4)) {
            let params = ChannelParams { eta: Some(eta), ..Default::default() };
            let fsc: Fsc<f64> = builtin_channel("noisy_ising", &params).unwrap();
            let all = enumerate_strategies(2, 2).unwrap();
            let mut tables: Vec<Vec<usize>> = pick.iter().map(|&i| all.tables()[i].clone()).collect();
            tables.sort();
            tables.dedup();
            let st = StrategyTable::new(2, 2, tables).unwrap();
            let ind = induce_strategy_channel(&fsc, &st).unwrap();
            for u in 0..ind.nu() {
                for s in 0..2 {
                    let total: f64 = (0..2).flat_map(|y| (0..2).map(move |sn| (y, sn)))
                        .map(|(y, sn)| ind.prob(y, sn, u, s)).sum();
                    prop_assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
