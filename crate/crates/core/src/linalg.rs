//! Small dense linear solves used by the chain and policy code.

use crate::scalar::Real;

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`; on success `b` holds `x`. Returns `None` when a
/// pivot falls below `pivot_tol` times the largest entry of `A`.
pub fn solve<T: Real>(a: &mut [T], b: &mut [T], n: usize, pivot_tol: T) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    for col in 0..n {
        let (piv, best) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold(
                    (col, -T::one()),
                    |acc, cur| if cur.1 > acc.1 { cur } else { acc },
                );
        if best <= pivot_tol * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                a[r * n + k] = a[r * n + k] - f * a[col * n + k];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc = acc - a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Some(())
}

/// Minimum-norm-regularized least squares `min ‖J x − r‖² + μ‖x‖²` for a
/// row-major `m × n` matrix `J`, via the normal equations.
pub fn damped_least_squares<T: Real>(
    j: &[T],
    r: &[T],
    m: usize,
    n: usize,
    mu: T,
) -> Option<Vec<T>> {
    let mut ata = vec![T::zero(); n * n];
    let mut atr = vec![T::zero(); n];
    for row in 0..m {
        let jr = &j[row * n..(row + 1) * n];
        for a in 0..n {
            if jr[a] == T::zero() {
                continue;
            }
            atr[a] = atr[a] + jr[a] * r[row];
            for b in 0..n {
                ata[a * n + b] = ata[a * n + b] + jr[a] * jr[b];
            }
        }
    }
    for a in 0..n {
        ata[a * n + a] = ata[a * n + a] + mu;
    }
    solve(&mut ata, &mut atr, n, T::epsilon()).map(|_| atr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        let mut a: Vec<f64> = vec![0.0, 2.0, 1.0, 1.0];
        let mut b = vec![4.0, 3.0];
        solve(&mut a, &mut b, 2, 1e-14).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-14 && (b[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert!(solve(&mut a, &mut b, 2, 1e-12).is_none());
    }

    #[test]
    fn least_squares_overdetermined() {
        // fit x to three equal observations
        let x = damped_least_squares::<f64>(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0], 3, 1, 0.0).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
    }
}
