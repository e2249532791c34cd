//! Square banded matrices with an LU factorization using partial pivoting.
//!
//! Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl` super-diagonals
//! hold the fill-in produced by row interchanges.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

use crate::error::{Result, SphereError};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Complex64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            data: vec![Complex64::new(0.0, 0.0); n * width],
        }
    }

    /// Builds an `n x n` matrix from `(offset, diagonal)` pairs; `diagonal[i]` is entry `(i, i + offset)`
    /// for offsets `>= 0` and `(i - offset, i)` otherwise.
    pub fn from_diagonals(n: usize, diagonals: &[(isize, Vec<Complex64>)]) -> Self {
        let kl = diagonals
            .iter()
            .map(|(o, _)| (-o).max(0) as usize)
            .max()
            .unwrap_or(0);
        let ku = diagonals
            .iter()
            .map(|(o, _)| (*o).max(0) as usize)
            .max()
            .unwrap_or(0);
        let mut a = Self::zeros(n, kl, ku);
        for (offset, diag) in diagonals {
            for (t, v) in diag.iter().enumerate() {
                let (i, j) = if *offset >= 0 {
                    (t, t + *offset as usize)
                } else {
                    (t + (-offset) as usize, t)
                };
                if i < n && j < n {
                    a.set(i, j, *v);
                }
            }
        }
        a
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width() {
            None
        } else {
            Some(i * self.width() + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let d = j as isize - i as isize;
        if d < -(self.kl as isize) || d > self.ku as isize {
            return Complex64::new(0.0, 0.0);
        }
        self.data[self.slot(i, j).unwrap()]
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let d = j as isize - i as isize;
        assert!(
            d >= -(self.kl as isize) && d <= self.ku as isize,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).unwrap();
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Banded product `self * other`; bandwidths add.
    pub fn matmul(&self, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = BandedMatrix::zeros(n, self.kl + other.kl, self.ku + other.ku);
        for i in 0..n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(n - 1);
            for t in lo..=hi {
                let a = self.get(i, t);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let lo2 = t.saturating_sub(other.kl);
                let hi2 = (t + other.ku).min(n - 1);
                for j in lo2..=hi2 {
                    let s = out.slot(i, j).unwrap();
                    out.data[s] += a * other.get(t, j);
                }
            }
        }
        out
    }

    pub fn scale_columns(&mut self, s: &[Complex64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for (j, sj) in s.iter().enumerate().take(hi + 1).skip(lo) {
                let slot = self.slot(i, j).unwrap();
                self.data[slot] *= sj;
            }
        }
    }

    pub fn add_diagonal(&mut self, shift: Complex64) {
        for i in 0..self.n {
            let s = self.slot(i, i).unwrap();
            self.data[s] += shift;
        }
    }

    pub fn add(&self, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandedMatrix::zeros(self.n, self.kl.max(other.kl), self.ku.max(other.ku));
        for i in 0..self.n {
            let lo = i.saturating_sub(out.kl);
            let hi = (i + out.ku).min(self.n - 1);
            for j in lo..=hi {
                out.set(i, j, self.get(i, j) + other.get(i, j));
            }
        }
        out
    }

    /// Dense row-major copy, mostly for tests.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// LU factorization with partial pivoting, `O(n (kl + ku) kl)` work.
    pub fn lu(&self) -> Result<BandedLu> {
        self.clone().into_lu()
    }

    /// Factorizes in place, reusing this matrix's storage for the factors.
    pub fn into_lu(self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut a = self;
        let mut piv = vec![0usize; n];
        for c in 0..n {
            let last = (c + kl).min(n - 1);
            let mut p = c;
            let mut best = a.data[a.slot(c, c).unwrap()].norm_sqr();
            for r in c + 1..=last {
                let v = a.data[a.slot(r, c).unwrap()].norm_sqr();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(SphereError::Singular { mode: c as i64 });
            }
            piv[c] = p;
            let jmax = (c + kl + ku).min(n - 1);
            if p != c {
                for j in c..=jmax {
                    let (s1, s2) = (a.slot(c, j).unwrap(), a.slot(p, j).unwrap());
                    a.data.swap(s1, s2);
                }
            }
            let pivot = a.data[a.slot(c, c).unwrap()];
            for r in c + 1..=last {
                let sr = a.slot(r, c).unwrap();
                let l = a.data[sr] / pivot;
                a.data[sr] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in c + 1..=jmax {
                    let u = a.data[a.slot(c, j).unwrap()];
                    let s = a.slot(r, j).unwrap();
                    a.data[s] -= l * u;
                }
            }
        }
        Ok(BandedLu { a, piv })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.lu()?.solve(rhs))
    }
}

/// Packed LU factors of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut b = rhs.to_vec();
        self.solve_in_place(&mut b);
        b
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let a = &self.a;
        let n = a.n;
        assert_eq!(b.len(), n);
        let (kl, ku) = (a.kl, a.ku);
        for c in 0..n {
            b.swap(c, self.piv[c]);
            let bc = b[c];
            for r in c + 1..=(c + kl).min(n.saturating_sub(1)) {
                b[r] -= a.data[a.slot(r, c).unwrap()] * bc;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                s -= a.data[a.slot(i, j).unwrap()] * b[j];
            }
            b[i] = s / a.data[a.slot(i, i).unwrap()];
        }
    }

    /// Smallest pivot magnitude encountered during elimination.
    pub fn min_pivot(&self) -> f64 {
        (0..self.a.n)
            .map(|i| self.a.data[self.a.slot(i, i).unwrap()].norm())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pentadiagonal(n: usize) -> BandedMatrix {
        let mut a = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                let v = ((i * 7 + j * 3) % 11) as f64 - 5.0;
                a.set(i, j, c(v, 0.5 * (i as f64 - j as f64)));
            }
        }
        a
    }

    #[test]
    fn solve_matches_matvec() {
        let a = pentadiagonal(23);
        let x: Vec<Complex64> = (0..23)
            .map(|i| c(i as f64 * 0.1, 1.0 - i as f64 * 0.03))
            .collect();
        let b = a.matvec(&x);
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-11, "{u} vs {v}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // tridiagonal with zero diagonal, even size: nonsingular
        let n = 10;
        let a = BandedMatrix::from_diagonals(
            n,
            &[(1, vec![c(0.0, 0.5); n - 1]), (-1, vec![c(0.0, -0.5); n - 1])],
        );
        let x: Vec<Complex64> = (0..n).map(|i| c(1.0 + i as f64, 0.0)).collect();
        let b = a.matvec(&x);
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let n = 5;
        let a = BandedMatrix::from_diagonals(
            n,
            &[(1, vec![c(1.0, 0.0); n - 1]), (-1, vec![c(1.0, 0.0); n - 1])],
        );
        assert!(matches!(a.lu(), Err(SphereError::Singular { .. })));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = pentadiagonal(9);
        let b = BandedMatrix::from_diagonals(9, &[(1, vec![c(1.0, 1.0); 8]), (-1, vec![c(2.0, 0.0); 8])]);
        let p = a.matmul(&b);
        let (da, db) = (a.to_dense(), b.to_dense());
        for i in 0..9 {
            for j in 0..9 {
                let want: Complex64 = (0..9).map(|t| da[i][t] * db[t][j]).sum();
                assert!((p.get(i, j) - want).norm() < 1e-14);
            }
        }
    }
}
