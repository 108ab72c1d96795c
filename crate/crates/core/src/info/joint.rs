use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance on the total mass of a pmf or joint table.
pub const MASS_TOL: f64 = 1e-10;

/// Entropy `−Σ p log₂ p` with `0 log 0 = 0`.
pub fn entropy<T: Real>(pmf: &[T]) -> Result<T> {
    check_mass(pmf, "pmf")?;
    Ok(pmf.iter().map(|&p| p.neg_xlog2x()).sum())
}

fn check_mass<T: Real>(probs: &[T], what: &str) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| p.is_nan() || **p < T::zero()) {
        return Err(Error::NotAPmf(format!("{what} has entry {p}")));
    }
    let total: T = probs.iter().copied().sum();
    if (total - T::one()).abs() > T::tol(MASS_TOL) {
        return Err(Error::NotAPmf(format!("{what} sums to {total}")));
    }
    Ok(())
}

/// A named variable of a [`JointTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// A pmf over a product of finite alphabets, row-major in axis order (the
/// last axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<T> {
    axes: Vec<Axis>,
    probs: Vec<T>,
}

impl<T: Real> JointTable<T> {
    pub fn new(axes: Vec<Axis>, probs: Vec<T>) -> Result<Self> {
        let size: usize = axes.iter().map(|a| a.size).product();
        if size != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "axes span {size} atoms, table has {}",
                probs.len()
            )));
        }
        check_mass(&probs, "joint table")?;
        Ok(Self { axes, probs })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Index of the axis with the given name.
    pub fn axis(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    /// Marginal over `keep` (in the given order), flattened row-major.
    pub fn marginal(&self, keep: &[usize]) -> Result<Vec<T>> {
        if keep.iter().any(|&k| k >= self.axes.len()) || has_duplicates(keep) {
            return Err(Error::AxisOverlap);
        }
        let sizes: Vec<usize> = self.axes.iter().map(|a| a.size).collect();
        let out_len: usize = keep.iter().map(|&k| sizes[k]).product();
        let mut out = vec![T::zero(); out_len];
        // stride of each source axis inside the output index
        let mut out_stride = vec![0usize; sizes.len()];
        let mut st = 1;
        for &k in keep.iter().rev() {
            out_stride[k] = st;
            st *= sizes[k];
        }
        let mut digits = vec![0usize; sizes.len()];
        let mut target = 0usize;
        for &p in &self.probs {
            out[target] = out[target] + p;
            for ax in (0..sizes.len()).rev() {
                digits[ax] += 1;
                target += out_stride[ax];
                if digits[ax] < sizes[ax] {
                    break;
                }
                target -= out_stride[ax] * sizes[ax];
                digits[ax] = 0;
            }
        }
        Ok(out)
    }
}

fn has_duplicates(xs: &[usize]) -> bool {
    xs.iter().enumerate().any(|(i, a)| xs[..i].contains(a))
}

/// `I(A; B | C)` in bits. Axes outside the three groups are summed out.
/// Terms with `P(c) = 0` contribute nothing.
pub fn conditional_mi<T: Real>(
    joint: &JointTable<T>,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<T> {
    let all: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    if has_duplicates(&all) || all.iter().any(|&k| k >= joint.axes.len()) {
        return Err(Error::AxisOverlap);
    }
    let size = |g: &[usize]| g.iter().map(|&k| joint.axes[k].size).product::<usize>();
    let (na, nb, nc) = (size(a), size(b), size(c));
    let p = joint.marginal(&all)?;
    Ok(cmi_dense(&p, na, nb, nc))
}

/// `I(A; B | C)` for a dense table laid out `[a][b][c]`.
pub(crate) fn cmi_dense<T: Real>(p: &[T], na: usize, nb: usize, nc: usize) -> T {
    let mut pc = vec![T::zero(); nc];
    let mut pac = vec![T::zero(); na * nc];
    let mut pbc = vec![T::zero(); nb * nc];
    for ia in 0..na {
        for ib in 0..nb {
            for ic in 0..nc {
                let v = p[(ia * nb + ib) * nc + ic];
                pc[ic] = pc[ic] + v;
                pac[ia * nc + ic] = pac[ia * nc + ic] + v;
                pbc[ib * nc + ic] = pbc[ib * nc + ic] + v;
            }
        }
    }
    let mut total = T::zero();
    for ia in 0..na {
        for ib in 0..nb {
            for ic in 0..nc {
                let v = p[(ia * nb + ib) * nc + ic];
                if v > T::zero() {
                    let ratio = v * pc[ic] / (pac[ia * nc + ic] * pbc[ib * nc + ic]);
                    total = total + v * ratio.log2();
                }
            }
        }
    }
    total.max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table(sizes: &[usize], probs: Vec<f64>) -> JointTable<f64> {
        let axes = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| Axis::new(format!("v{i}"), n))
            .collect();
        JointTable::new(axes, probs).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        let h = entropy(&[0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(h, 0.811278, epsilon = 1e-6);
        assert_abs_diff_eq!(1.0 - h, 0.188722, epsilon = 1e-6);
        assert!(matches!(entropy(&[0.5, 0.4]), Err(Error::NotAPmf(_))));
    }

    #[test]
    fn independent_and_copy() {
        let indep = table(&[2, 2, 1], vec![0.25; 4]);
        assert_eq!(conditional_mi(&indep, &[0], &[1], &[2]).unwrap(), 0.0);
        let copy = table(&[2, 2, 1], vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(conditional_mi(&copy, &[0], &[1], &[2]).unwrap(), 1.0);
        assert_eq!(conditional_mi(&copy, &[0], &[1], &[]).unwrap(), 1.0);
    }

    #[test]
    fn overlap_rejected() {
        let t = table(&[2, 2], vec![0.25; 4]);
        assert_eq!(conditional_mi(&t, &[0], &[0], &[]), Err(Error::AxisOverlap));
        assert_eq!(conditional_mi(&t, &[0], &[2], &[]), Err(Error::AxisOverlap));
    }

    #[test]
    fn marginal_reorders() {
        let t = table(&[2, 3], vec![0.1, 0.2, 0.05, 0.15, 0.3, 0.2]);
        let m = t.marginal(&[1, 0]).unwrap();
        assert_eq!(m, vec![0.1, 0.15, 0.2, 0.3, 0.05, 0.2]);
        let m = t.marginal(&[1]).unwrap();
        assert_abs_diff_eq!(m[2], 0.25, epsilon = 1e-15);
    }

    fn pmf(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, n).prop_filter_map("nonzero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn entropy_is_concave(lambda in 0.0f64..=1.0, p in pmf(4), q in pmf(4)) {
            let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
            let lhs = entropy(&mix).unwrap();
            let rhs = lambda * entropy(&p).unwrap() + (1.0 - lambda) * entropy(&q).unwrap();
            prop_assert!(lhs >= rhs - 1e-12);
        }

        #[test]
        fn cmi_relabeling_invariant(p in pmf(12), perm_a in Just([1usize, 0]), shift in 0usize..3) {
            let t = table(&[2, 3, 2], p.clone());
            let base = conditional_mi(&t, &[0], &[1], &[2]).unwrap();
            let mut q = vec![0.0; 12];
            for a in 0..2 {
                for b in 0..3 {
                    for c in 0..2 {
                        q[(perm_a[a] * 3 + (b + shift) % 3) * 2 + (1 - c)] = p[(a * 3 + b) * 2 + c];
                    }
                }
            }
            let relabeled = conditional_mi(&table(&[2, 3, 2], q), &[0], &[1], &[2]).unwrap();
            prop_assert!((base - relabeled).abs() < 1e-12);
            prop_assert!(base >= 0.0);
        }
    }
}
