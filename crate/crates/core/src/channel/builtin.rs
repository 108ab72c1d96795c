use super::{check_pmf, make_lookahead_fsc, Fsc, CONSTRUCTION_TOL};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Names accepted by [`builtin_channel`].
pub const BUILTIN_CHANNELS: [&str; 5] = [
    "trapdoor",
    "ising",
    "noisy_ising",
    "constrained_bec",
    "zs_iid_dmc",
];

/// Scalar parameters of the built-in channels.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelParams {
    /// Noisy-Ising state crossover, in `[0, 1]`.
    pub eta: Option<f64>,
    /// Erasure probability, in `[0, 1]`.
    pub eps: Option<f64>,
    /// Look-ahead depth for `zs_iid_dmc`; absent means 0.
    pub lookahead: Option<usize>,
}

impl ChannelParams {
    fn unit(value: Option<f64>, name: &'static str) -> Result<f64> {
        let v = value.ok_or(Error::MissingParam(name))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::ParamOutOfRange {
                name,
                value: v,
                range: "[0, 1]",
            });
        }
        Ok(v)
    }
}

/// A state-dependent memoryless channel `P(y | x, s)` with an i.i.d. state.
///
/// `probs` is laid out `[y][x][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDmc<T> {
    pub nx: usize,
    pub ns: usize,
    pub ny: usize,
    pub probs: Vec<T>,
    pub state_pmf: Vec<T>,
}

impl<T: Real> StateDmc<T> {
    pub fn new(nx: usize, ns: usize, ny: usize, probs: Vec<T>, state_pmf: Vec<T>) -> Result<Self> {
        if probs.len() != ny * nx * ns || state_pmf.len() != ns {
            return Err(Error::DimensionMismatch(format!(
                "expected {} channel entries and {ns} state entries",
                ny * nx * ns
            )));
        }
        super::check_kernel(
            nx,
            ns,
            ny,
            &expand(nx, ns, ny, &probs),
            CONSTRUCTION_TOL,
            "x",
        )?;
        check_pmf(&state_pmf, CONSTRUCTION_TOL, "state_pmf")?;
        Ok(Self {
            nx,
            ns,
            ny,
            probs,
            state_pmf,
        })
    }

    /// The ZS law with a uniform binary state.
    pub fn zs() -> Self {
        let probs = (0..2)
            .flat_map(|y| (0..2).flat_map(move |x| (0..2).map(move |s| zs_law::<T>(y, x, s))))
            .collect();
        let half = T::lit(0.5);
        Self::new(2, 2, 2, probs, vec![half, half]).expect("ZS law is stochastic")
    }

    /// A state-independent channel `P(y | x)` (one state), `probs_yx` laid
    /// out `[y][x]`.
    pub fn stateless(nx: usize, ny: usize, probs_yx: Vec<T>) -> Result<Self> {
        Self::new(nx, 1, ny, probs_yx, vec![T::one()])
    }

    #[inline]
    pub fn prob(&self, y: usize, x: usize, s: usize) -> T {
        self.probs[(y * self.nx + x) * self.ns + s]
    }
}

/// Lifts `[y][x][s]` to `[y][s_next][x][s]` with a single dummy next state,
/// only for validation.
fn expand<T: Real>(nx: usize, ns: usize, ny: usize, probs: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); ny * ns * nx * ns];
    for y in 0..ny {
        for x in 0..nx {
            for s in 0..ns {
                out[((y * ns) * nx + x) * ns + s] = probs[(y * nx + x) * ns + s];
            }
        }
    }
    out
}

/// State 0 is a Z-channel, state 1 an S-channel.
fn zs_law<T: Real>(y: usize, x: usize, s: usize) -> T {
    match (s, x) {
        (0, 0) => T::lit(if y == 0 { 1.0 } else { 0.0 }),
        (1, 1) => T::lit(if y == 1 { 1.0 } else { 0.0 }),
        _ => T::lit(0.5),
    }
}

fn bsc<T: Real>(eta: f64, a: usize, b: usize) -> T {
    T::lit(if a == b { 1.0 - eta } else { eta })
}

fn indicator<T: Real>(cond: bool) -> T {
    if cond {
        T::one()
    } else {
        T::zero()
    }
}

/// Builds one of the channels in [`BUILTIN_CHANNELS`] with a uniform initial
/// state.
pub fn builtin_channel<T: Real>(name: &str, params: &ChannelParams) -> Result<Fsc<T>> {
    match name {
        "trapdoor" => Fsc::from_fn(2, 2, 2, |y, sn, x, s| {
            zs_law::<T>(y, x, s) * indicator::<T>(sn == s ^ x ^ y)
        }),
        "ising" => Fsc::from_fn(2, 2, 2, |y, sn, x, s| {
            zs_law::<T>(y, x, s) * indicator::<T>(sn == x)
        }),
        "noisy_ising" => {
            let eta = ChannelParams::unit(params.eta, "eta")?;
            Fsc::from_fn(2, 2, 2, |y, sn, x, s| {
                zs_law::<T>(y, x, s) * bsc::<T>(eta, x, sn)
            })
        }
        "constrained_bec" => {
            let eps = ChannelParams::unit(params.eps, "eps")?;
            Fsc::from_fn(2, 2, 3, |y, sn, x, _s| {
                let py = if y == 2 {
                    T::lit(eps)
                } else if y == x {
                    T::lit(1.0 - eps)
                } else {
                    T::zero()
                };
                py * indicator::<T>(sn == x)
            })
        }
        "zs_iid_dmc" => make_lookahead_fsc(&StateDmc::<T>::zs(), params.lookahead.unwrap_or(0)),
        other => Err(Error::UnknownChannel(other.to_string())),
    }
}
