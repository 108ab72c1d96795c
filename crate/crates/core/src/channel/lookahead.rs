use super::{Fsc, StateDmc};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest look-ahead depth accepted; the tuple alphabet has `|S|^(l+1)` states.
pub const MAX_LOOKAHEAD: usize = 8;

/// Reduces a channel whose encoder sees `l` future i.i.d. states to an FSC
/// with causal state.
///
/// The new state is the tuple `(s_{i-1}, …, s_{i-1+l})` indexed base `|S|`
/// with the oldest component most significant. Each use emits through the
/// oldest component, drops it, and appends a fresh draw from the state pmf.
/// For `l = 0` the kernel is `P(y | x, s) · P(s⁺)`.
pub fn make_lookahead_fsc<T: Real>(dmc: &StateDmc<T>, l: usize) -> Result<Fsc<T>> {
    if l > MAX_LOOKAHEAD {
        return Err(Error::ParamOutOfRange {
            name: "lookahead",
            value: l as f64,
            range: "[0, 8]",
        });
    }
    let ns = dmc.ns;
    let width = l + 1;
    let nt = ns
        .checked_pow(width as u32)
        .filter(|&n| n <= 1 << 16)
        .ok_or(Error::ParamOutOfRange {
            name: "lookahead",
            value: l as f64,
            range: "|S|^(l+1) <= 65536",
        })?;
    let stride = nt / ns;
    // probability of the tuple under the i.i.d. law, used for the initial state
    let tuple_prob = |t: usize| {
        let mut p = T::one();
        let mut rest = t;
        for _ in 0..width {
            p = p * dmc.state_pmf[rest % ns];
            rest /= ns;
        }
        p
    };
    let init = (0..nt).map(tuple_prob).collect();
    let kernel = super::tabulate(dmc.nx, nt, dmc.ny, |y, tn, x, t| {
        let oldest = t / stride;
        let shifted = (t % stride) * ns;
        if tn - tn % ns != shifted {
            return T::zero();
        }
        dmc.prob(y, x, oldest) * dmc.state_pmf[tn % ns]
    });
    Fsc::new(dmc.nx, nt, dmc.ny, kernel, init)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zs_one_step_has_four_states() {
        let fsc = make_lookahead_fsc(&StateDmc::<f64>::zs(), 1).unwrap();
        assert_eq!(fsc.ns(), 4);
        // from (0,1): output through s=0, next tuple (1, fresh)
        assert_eq!(fsc.prob(0, 2, 0, 1), 0.5);
        assert_eq!(fsc.prob(0, 3, 0, 1), 0.5);
        assert_eq!(fsc.prob(0, 0, 0, 1), 0.0);
        // from (1,0) with x=1: output 1 surely, next tuple (0, fresh)
        assert_eq!(fsc.prob(1, 0, 1, 2), 0.5);
        assert_eq!(fsc.prob(1, 1, 1, 2), 0.5);
        assert_eq!(fsc.prob(0, 1, 1, 2), 0.0);
    }

    #[test]
    fn zero_depth_factorizes() {
        let dmc = StateDmc::<f64>::zs();
        let fsc = make_lookahead_fsc(&dmc, 0).unwrap();
        for y in 0..2 {
            for sn in 0..2 {
                for x in 0..2 {
                    for s in 0..2 {
                        assert_eq!(fsc.prob(y, sn, x, s), dmc.prob(y, x, s) * dmc.state_pmf[sn]);
                    }
                }
            }
        }
    }

    #[test]
    fn tuple_state_evolves_autonomously() {
        for l in 0..=3 {
            let fsc = make_lookahead_fsc(&StateDmc::<f64>::zs(), l).unwrap();
            let ns = fsc.ns();
            for t in 0..ns {
                for tn in 0..ns {
                    let shift = if tn / 2 == t % (ns / 2) { 0.5 } else { 0.0 };
                    for x in 0..2 {
                        assert!((fsc.state_prob(tn, x, t) - shift).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn depth_limit() {
        assert!(make_lookahead_fsc(&StateDmc::<f64>::zs(), 9).is_err());
    }
}
