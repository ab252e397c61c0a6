//! Small direct solvers: tridiagonal (Thomas) and banded LU with partial
//! pivoting.

use num_complex::Complex64;

use crate::grid::Scalar;

/// LU factors of a real tridiagonal matrix (no pivoting; intended for
/// diagonally dominant systems).
#[derive(Debug, Clone)]
pub struct RealTridiagonal {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl RealTridiagonal {
    /// Factor the matrix with sub-diagonal `lower[1..]`, diagonal `diag` and
    /// super-diagonal `upper[..n-1]`.
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = diag[i] - if i > 0 { lower[i] * prev } else { 0.0 };
            inv_pivot[i] = 1.0 / pivot;
            prev = upper[i] * inv_pivot[i];
            upper_mod[i] = prev;
        }
        RealTridiagonal {
            lower: lower.to_vec(),
            upper_mod,
            inv_pivot,
        }
    }

    pub fn solve_in_place<T: Scalar>(&self, rhs: &mut [T]) {
        let n = rhs.len();
        let mut prev = T::default();
        for i in 0..n {
            let v = if i > 0 { rhs[i] - prev * self.lower[i] } else { rhs[i] };
            prev = v * self.inv_pivot[i];
            rhs[i] = prev;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = rhs[i + 1];
            rhs[i] = rhs[i] - next * self.upper_mod[i];
        }
    }
}

/// LU factors of a complex tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct ComplexTridiagonal {
    lower: Vec<Complex64>,
    upper_mod: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl ComplexTridiagonal {
    pub fn new(lower: &[Complex64], diag: &[Complex64], upper: &[Complex64]) -> Self {
        let n = diag.len();
        let mut upper_mod = vec![Complex64::default(); n];
        let mut inv_pivot = vec![Complex64::default(); n];
        let mut prev = Complex64::default();
        for i in 0..n {
            let pivot = diag[i] - if i > 0 { lower[i] * prev } else { Complex64::default() };
            inv_pivot[i] = pivot.inv();
            prev = upper[i] * inv_pivot[i];
            upper_mod[i] = prev;
        }
        ComplexTridiagonal {
            lower: lower.to_vec(),
            upper_mod,
            inv_pivot,
        }
    }

    pub fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        let mut prev = Complex64::default();
        for i in 0..n {
            let v = if i > 0 { rhs[i] - self.lower[i] * prev } else { rhs[i] };
            prev = v * self.inv_pivot[i];
            rhs[i] = prev;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = rhs[i + 1];
            rhs[i] -= self.upper_mod[i] * next;
        }
    }
}

/// Real banded matrix with `kl` sub- and `ku` super-diagonals, stored with
/// room for the fill-in produced by row pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place LU factorization with partial pivoting. Returns `None` for a
    /// numerically singular matrix.
    pub fn factor(mut self) -> Option<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut perm = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            perm[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Some(BandLu { m: self, perm })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.m.n;
        let (kl, ku) = (self.m.kl, self.m.ku);
        for k in 0..n {
            let p = self.perm[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.m.data[self.m.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                acc -= self.m.data[self.m.idx(k, j)] * b[j];
            }
            b[k] = acc / self.m.data[self.m.idx(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn thomas_matches_direct_product() {
        let n = 50;
        let lower: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { -1.0 }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { -1.3 }).collect();
        let diag = vec![4.0; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += upper[i] * x[i + 1];
                }
                v
            })
            .collect();
        RealTridiagonal::new(&lower, &diag, &upper).solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_lu_needs_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut m = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // zero diagonal forces row exchanges
                let v = if i == j { 0.0 } else { rng.random_range(-1.0..1.0) };
                m.add(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut b = m.mul_vec(&x);
        let lu = m.factor().expect("nonsingular");
        lu.solve(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-9, "{a} vs {e}");
        }
    }
}
