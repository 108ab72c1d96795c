use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest number of grid points [`SimplexGrid::new`] accepts.
pub const MAX_GRID_POINTS: usize = 20_000_000;

/// All compositions of `res` into `dim` non-negative parts, in lexicographic
/// order, read as the points `c / res` of the probability simplex.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    dim: usize,
    res: usize,
    len: usize,
    // offset[i][m][c]: rank contribution of part i taking value c with m left
    offset: Vec<usize>,
    points: Vec<u16>,
}

/// Scratch and output for [`SimplexGrid::interpolate`].
///
/// The triangulation is the Freudenthal one in the coordinate order `axes`
/// (a permutation of `0..dim`): its cells are bounded by hyperplanes on
/// which a suffix sum over that order is an integer multiple of `1/res`.
#[derive(Debug, Clone)]
pub struct Stencil<T> {
    pub verts: Vec<usize>,
    pub weights: Vec<T>,
    axes: Vec<usize>,
    frac: Vec<T>,
    base: Vec<usize>,
    comp: Vec<u16>,
    order: Vec<usize>,
}

impl<T: Real> Stencil<T> {
    pub fn new(dim: usize) -> Self {
        Self::with_axes((0..dim).collect())
    }

    /// Triangulates along the coordinate order `axes`.
    pub fn with_axes(axes: Vec<usize>) -> Self {
        let dim = axes.len();
        Self {
            verts: vec![0; dim],
            weights: vec![T::zero(); dim],
            axes,
            frac: vec![T::zero(); dim],
            base: vec![0; dim],
            comp: vec![0; dim],
            order: vec![0; dim.saturating_sub(1)],
        }
    }
}

/// Number of compositions of `m` into `k` parts, saturating.
fn compositions(k: usize, m: usize) -> u128 {
    if k == 0 {
        return u128::from(m == 0);
    }
    // C(m + k - 1, k - 1)
    let mut c: u128 = 1;
    for i in 1..k as u128 {
        c = c.saturating_mul(m as u128 + i) / i;
    }
    c
}

impl SimplexGrid {
    pub fn new(dim: usize, res: usize) -> Result<Self> {
        if dim == 0 || res == 0 || res > u16::MAX as usize {
            return Err(Error::ParamOutOfRange {
                name: "grid_res",
                value: res as f64,
                range: "[1, 65535] with a non-empty simplex",
            });
        }
        let total = compositions(dim, res);
        if total > MAX_GRID_POINTS as u128 {
            return Err(Error::BudgetExceeded {
                atoms: total,
                budget: MAX_GRID_POINTS as u128,
            });
        }
        let len = total as usize;
        let side = res + 1;
        let mut offset = vec![0usize; dim * side * side];
        for i in 0..dim {
            let rest = dim - i - 1;
            for m in 0..=res {
                let mut acc = 0usize;
                for c in 0..=m {
                    offset[(i * side + m) * side + c] = acc;
                    acc += compositions(rest, m - c) as usize;
                }
            }
        }
        let mut points = Vec::with_capacity(len * dim);
        let mut cur = vec![0u16; dim];
        cur[dim - 1] = res as u16;
        loop {
            points.extend_from_slice(&cur);
            // next composition in lexicographic order
            let Some(j) = (0..dim - 1)
                .rev()
                .find(|&j| cur[j + 1..].iter().any(|&v| v > 0))
            else {
                break;
            };
            cur[j] += 1;
            let left: u16 = res as u16 - cur[..=j].iter().sum::<u16>();
            for v in cur[j + 1..].iter_mut() {
                *v = 0;
            }
            cur[dim - 1] = left;
        }
        debug_assert_eq!(points.len(), len * dim);
        Ok(Self {
            dim,
            res,
            len,
            offset,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The composition at `index`.
    pub fn composition(&self, index: usize) -> &[u16] {
        &self.points[index * self.dim..(index + 1) * self.dim]
    }

    /// The belief at `index`.
    pub fn point<T: Real>(&self, index: usize) -> Vec<T> {
        let r = T::count(self.res);
        self.composition(index)
            .iter()
            .map(|&c| T::count(c as usize) / r)
            .collect()
    }

    /// Lexicographic rank of a composition of `res`.
    pub fn rank(&self, comp: &[u16]) -> usize {
        let side = self.res + 1;
        let mut left = self.res;
        let mut r = 0;
        for (i, &c) in comp[..self.dim - 1].iter().enumerate() {
            r += self.offset[(i * side + left) * side + c as usize];
            left -= c as usize;
        }
        r
    }

    /// Rounds a pmf to the nearest composition in total variation by largest
    /// remainders, ties to the lower index. `comp` and `frac` are scratch of
    /// length `dim`.
    pub fn round_into<T: Real>(&self, p: &[T], comp: &mut [u16], frac: &mut [T]) {
        let r = T::count(self.res);
        let mut used = 0usize;
        for i in 0..self.dim {
            let v = (p[i] * r).max(T::zero());
            let f = v.floor();
            let fi = f.to_usize().unwrap_or(0).min(self.res);
            comp[i] = fi as u16;
            frac[i] = v - f;
            used += fi;
        }
        while used > self.res {
            // only reachable through rounding noise above the total
            let i = (0..self.dim)
                .filter(|&i| comp[i] > 0)
                .min_by(|&a, &b| frac[a].partial_cmp(&frac[b]).unwrap())
                .unwrap();
            comp[i] -= 1;
            used -= 1;
        }
        for _ in used..self.res {
            let mut best = 0;
            for i in 1..self.dim {
                if frac[i] > frac[best] {
                    best = i;
                }
            }
            comp[best] += 1;
            frac[best] = T::lit(-1.0);
        }
    }

    /// Index of the grid point nearest to `p`.
    pub fn project<T: Real>(&self, p: &[T]) -> usize {
        let mut comp = vec![0u16; self.dim];
        let mut frac = vec![T::zero(); self.dim];
        self.round_into(p, &mut comp, &mut frac);
        self.rank(&comp)
    }

    /// Barycentric coordinates of `p` in the Freudenthal simplex containing
    /// it, written to `st.verts` / `st.weights` (positive, summing to one).
    /// Returns how many vertices were written.
    pub fn interpolate<T: Real>(&self, p: &[T], st: &mut Stencil<T>) -> usize {
        let d = self.dim;
        let r = T::count(self.res);
        let z = &mut st.frac;
        // suffix sums z_i = res Σ_{j ≥ i} p_j, non-increasing, z_0 = res
        let mut acc = T::zero();
        for i in (1..d).rev() {
            acc = acc + p[st.axes[i]].max(T::zero()) * r;
            z[i] = acc;
        }
        z[0] = r;
        for i in 1..d {
            z[i] = z[i].min(z[i - 1]).max(T::zero());
        }
        for (zi, base) in z.iter_mut().zip(st.base.iter_mut()).take(d) {
            // z is non-negative, so truncation is the floor
            let fi = (zi.as_f64() as usize).min(self.res);
            *base = fi;
            *zi = *zi - T::count(fi);
        }
        z[0] = T::zero();
        for (k, o) in st.order.iter_mut().enumerate() {
            *o = k + 1;
        }
        // insertion sort by decreasing fraction, stable so ties keep index order
        for k in 1..st.order.len() {
            let cur = st.order[k];
            let mut j = k;
            while j > 0 && st.frac[st.order[j - 1]] < st.frac[cur] {
                st.order[j] = st.order[j - 1];
                j -= 1;
            }
            st.order[j] = cur;
        }
        let mut count = 0;
        let mut prev = T::one();
        for k in 0..d {
            let next = if k < d - 1 {
                st.frac[st.order[k]]
            } else {
                T::zero()
            };
            let w = prev - next;
            if w > T::zero() {
                for i in 0..d {
                    let lo = if i + 1 < d { st.base[i + 1] } else { 0 };
                    st.comp[st.axes[i]] = (st.base[i] - lo) as u16;
                }
                st.verts[count] = self.rank(&st.comp);
                st.weights[count] = w;
                count += 1;
            }
            if next <= T::zero() {
                break;
            }
            st.base[st.order[k]] += 1;
            prev = next;
        }
        count
    }

    /// The grid point nearest to the uniform pmf.
    pub fn barycenter(&self) -> usize {
        self.project(&vec![1.0 / self.dim as f64; self.dim])
    }
}
