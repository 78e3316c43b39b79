//! Small dense and banded complex linear algebra.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::{Float, Zero};

pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat2_identity() -> Mat2 {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::zero());
    [[o, z], [z, o]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_conj(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[0][1].conj()],
        [a[1][0].conj(), a[1][1].conj()],
    ]
}

pub fn mat2_inverse(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

pub fn mat2_max_abs_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

/// Determinant of a small dense matrix by Gaussian elimination with partial
/// pivoting. The input is consumed.
pub fn det<const N: usize>(mut a: [[Complex64; N]; N]) -> Complex64 {
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[piv][col].is_zero() {
            return Complex64::zero();
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        d *= a[col][col];
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            for c in col..N {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
        }
    }
    d
}

/// Band matrix with `kl` sub- and `ku` super-diagonals, LU-factorized in
/// place with partial pivoting (LAPACK `gbtrf` layout: the factor needs
/// `kl` extra super-diagonals for fill-in).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    // row-major over the n rows, each holding 2*kl + ku + 1 entries for
    // columns i - kl ..= i + kl + ku
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("singular band matrix: zero pivot in column {0}")]
pub struct SingularMatrix(pub usize);

impl BandLu {
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        // j - i + kl in [0, width)
        i * self.width() + (j + self.kl - i)
    }

    /// Band matrix of size `n` built from `entry(i, j)` for `|i - j|` in the band.
    pub fn from_fn<F: Fn(usize, usize) -> Complex64>(
        n: usize,
        kl: usize,
        ku: usize,
        entry: F,
    ) -> Self {
        let w = 2 * kl + ku + 1;
        let mut m = BandLu {
            n,
            kl,
            ku,
            ab: vec![Complex64::zero(); n * w],
            piv: vec![0; n],
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                let k = m.idx(i, j);
                m.ab[k] = entry(i, j);
            }
        }
        m
    }

    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.ab[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    pub fn factorize(mut self) -> Result<Self, SingularMatrix> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last_row {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(SingularMatrix(k));
            }
            self.piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set(k, j, b);
                    self.set(p, j, a);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let f = self.get(i, k) / pivot;
                self.set(i, k, f);
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let v = self.get(i, j) - f * self.get(k, j);
                    self.set(i, j, v);
                }
            }
        }
        Ok(self)
    }

    pub fn solve(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.get(i, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.get(k, j) * b[j];
            }
            b[k] = s / self.get(k, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn det_of_permuted_diagonal() {
        let z = c(0.0, 0.0);
        let a = [
            [z, c(2.0, 0.0), z],
            [c(0.0, 1.0), z, z],
            [z, z, c(3.0, 0.0)],
        ];
        // swap of rows 0,1 -> det = -(i·2·3)
        assert!((det(a) - c(0.0, -6.0)).norm() < 1e-15);
    }

    #[test]
    fn band_solve_matches_dense_residual() {
        let n = 40;
        let entry = |i: usize, j: usize| {
            let d = i as f64 - j as f64;
            if i == j {
                c(0.1 + (i % 3) as f64, 0.5)
            } else {
                c(1.0 / (1.0 + d * d), 0.1 * d)
            }
        };
        let (kl, ku) = (3, 2);
        let lu = BandLu::from_fn(n, kl, ku, entry).factorize().unwrap();
        let x_true: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let mut b = vec![c(0.0, 0.0); n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                b[i] += entry(i, j) * x_true[j];
            }
        }
        lu.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x_true[i]).norm() < 1e-10, "row {i}");
        }
    }

    #[test]
    fn mat2_inverse_roundtrip() {
        let a = [[c(1.0, 2.0), c(0.5, 0.0)], [c(-1.0, 0.3), c(2.0, -1.0)]];
        let p = mat2_mul(&a, &mat2_inverse(&a));
        assert!(mat2_max_abs_diff(&p, &mat2_identity()) < 1e-15);
    }
}
