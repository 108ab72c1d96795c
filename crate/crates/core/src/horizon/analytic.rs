use crate::error::{Error, Result};
use crate::scalar::{h2, Real};

/// Coefficients `(A, B, C)` of `A a² + B a + C = 0` whose stable root is the
/// noisy-Ising policy parameter.
pub fn noisy_ising_quadratic<T: Real>(eta: T) -> (T, T, T) {
    let two = T::lit(2.0);
    let a = two - T::lit(5.0) * eta + two * eta * eta;
    let b = (T::lit(5.0) - T::lit(4.0) * eta) * eta;
    let c = -two * (T::one() - eta) * eta;
    (a, b, c)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&eta) {
        return Err(Error::ParamOutOfRange {
            name: "eta",
            value: eta,
            range: "[0, 0.5]",
        });
    }
    Ok(())
}

/// The root in `[0, 1]` of the noisy-Ising quadratic, written as
/// `−2C / (B + √(B² − 4AC))` so that it stays accurate near `η = 0`.
pub fn noisy_ising_root<T: Real>(eta: f64) -> Result<T> {
    check_eta(eta)?;
    let e = T::lit(eta);
    let (a, b, c) = noisy_ising_quadratic(e);
    let disc = (b * b - T::lit(4.0) * a * c).max(T::zero());
    let denom = b + disc.sqrt();
    if denom == T::zero() {
        return Ok(T::zero());
    }
    Ok(-(c + c) / denom)
}

/// Closed-form noisy-Ising lower bound in bits for `η ∈ [0, ½]`.
pub fn analytic_noisy_ising_bound<T: Real>(eta: f64) -> Result<T> {
    let a = noisy_ising_root::<T>(eta)?;
    let (qa, qb, qc) = noisy_ising_quadratic(T::lit(eta));
    let residual = qa * a * a + qb * a + qc;
    if residual.abs() > T::tol(1e-12) {
        return Err(Error::ParamOutOfRange {
            name: "eta",
            value: eta,
            range: "root residual above 1e-12",
        });
    }
    let e = T::lit(eta);
    let (one, two) = (T::one(), T::lit(2.0));
    let eb = one - e;
    let d = a - two * a * e + two;
    let rate = h2((two - e) * (a * eb + e) / d)
        - ((two - a * e - a) / d) * h2(e / two)
        - (a * (two - e) / d) * h2(eb / two);
    Ok(rate.max(T::zero()))
}
