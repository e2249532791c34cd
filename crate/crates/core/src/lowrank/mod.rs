//! Low-rank representation of doubled sphere functions and the structure-preserving
//! Gaussian elimination that builds it.
//!
//! A [`LowRankSphereFun`] stores `f~(lambda, theta) = sum_j d_j c_j(theta) r_j(lambda)`
//! with every column `c_j` and row `r_j` kept as Fourier coefficients. Each term carries a
//! parity flag: even terms have `c_j` even in theta and `r_j` pi-periodic, odd terms have
//! `c_j` odd and `r_j` pi-antiperiodic.

mod construct;
mod pivot;

pub use construct::{
    compress, construct, construct_with_report, effective_tolerance, vscale_estimate, ConstructionReport,
    ConstructorConfig, StepGrowth,
};
pub use pivot::{ge_step, pinv_2x2, pivot_search, pole_zero_out, sv_2x2, PivotBlock, PoleZeroed};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Result, SphereError};
use crate::fourier::{CoeffMatrix, CoeffVector};
use crate::sphere_domain::{cart_to_sph, check_even, BmcGrid, CartPoint, SphereSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// `sum_j d_j c_j(theta) r_j(lambda)` with Fourier-coefficient columns and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankSphereFun {
    m: usize,
    n: usize,
    d: Vec<Complex64>,
    cols: Vec<CoeffVector>,
    rows: Vec<CoeffVector>,
    parity: Vec<Parity>,
    vscale: f64,
}

impl LowRankSphereFun {
    /// Checks that all columns have length `m`, all rows length `n`, and that the term lists agree.
    pub fn new(
        m: usize,
        n: usize,
        d: Vec<Complex64>,
        cols: Vec<CoeffVector>,
        rows: Vec<CoeffVector>,
        parity: Vec<Parity>,
        vscale: f64,
    ) -> Result<Self> {
        check_even(m, "m")?;
        check_even(n, "n")?;
        let k = d.len();
        if cols.len() != k || rows.len() != k || parity.len() != k {
            return Err(SphereError::Size(format!(
                "term count mismatch: {} weights, {} columns, {} rows, {} parity flags",
                k,
                cols.len(),
                rows.len(),
                parity.len()
            )));
        }
        if let Some(c) = cols.iter().find(|c| c.len() != m) {
            return Err(SphereError::Size(format!(
                "column of length {} in an m = {m} function",
                c.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(SphereError::Size(format!(
                "row of length {} in an n = {n} function",
                r.len()
            )));
        }
        Ok(Self {
            m,
            n,
            d,
            cols,
            rows,
            parity,
            vscale,
        })
    }

    pub fn zero(m: usize, n: usize) -> Result<Self> {
        Self::new(m, n, vec![], vec![], vec![], vec![], 0.0)
    }

    /// The constant function `value`.
    pub fn constant(value: Complex64, m: usize, n: usize) -> Result<Self> {
        if value == Complex64::new(0.0, 0.0) {
            return Self::zero(m, n);
        }
        Self::new(
            m,
            n,
            vec![value],
            vec![CoeffVector::mode(0, m)?],
            vec![CoeffVector::mode(0, n)?],
            vec![Parity::Even],
            value.norm(),
        )
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vscale(&self) -> f64 {
        self.vscale
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.d
    }

    pub fn cols(&self) -> &[CoeffVector] {
        &self.cols
    }

    pub fn rows(&self) -> &[CoeffVector] {
        &self.rows
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parity
    }

    pub fn count(&self, p: Parity) -> usize {
        self.parity.iter().filter(|&&q| q == p).count()
    }

    pub fn with_vscale(mut self, vscale: f64) -> Self {
        self.vscale = vscale;
        self
    }

    /// Replaces the stored vscale by the maximum over the `m x n` sample grid.
    pub fn refresh_vscale(mut self) -> Self {
        self.vscale = match self.sample(self.m, self.n) {
            Ok(g) => g.max_abs(),
            Err(_) => self.vscale,
        };
        self
    }

    /// `(column, row)` coefficient matrices `m x K` and `n x K`.
    pub fn factor_matrices(&self) -> (Array2<Complex64>, Array2<Complex64>) {
        let k = self.rank();
        let a = Array2::from_shape_fn((self.m, k), |(j, t)| self.cols[t].as_slice()[j]);
        let b = Array2::from_shape_fn((self.n, k), |(j, t)| self.rows[t].as_slice()[j]);
        (a, b)
    }

    /// The factored 2D coefficient matrix `X = A diag(d) B^T`.
    pub fn coeffs2(&self) -> CoeffMatrix {
        let (a, b) = self.factor_matrices();
        CoeffMatrix::Factored {
            a,
            d: self.d.clone(),
            b,
        }
    }

    /// `f~(lambda, theta)` anywhere on the doubled domain; `O(K (m + n))`.
    pub fn eval(&self, lambda: f64, theta: f64) -> Complex64 {
        self.d
            .iter()
            .zip(self.cols.iter().zip(&self.rows))
            .map(|(d, (c, r))| d * c.eval(theta) * r.eval(lambda))
            .sum()
    }

    pub fn eval_cart(&self, p: CartPoint) -> Result<Complex64> {
        let s = cart_to_sph(p)?;
        Ok(self.eval(s.lambda, s.theta))
    }

    /// Samples on the doubled `m x n` grid (at least the stored sizes).
    pub fn sample(&self, m: usize, n: usize) -> Result<BmcGrid> {
        check_even(m, "m")?;
        check_even(n, "n")?;
        if self.rank() == 0 {
            return BmcGrid::zeros(m, n);
        }
        self.coeffs2().sample_grid(m, n)
    }

    /// Zero-pads or truncates every factor.
    pub fn resized(&self, m: usize, n: usize) -> Result<Self> {
        let cols = self
            .cols
            .iter()
            .map(|c| c.resized(m))
            .collect::<Result<Vec<_>>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| r.resized(n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, n, self.d.clone(), cols, rows, self.parity.clone(), self.vscale)
    }

    /// Only the terms of parity `p`: `f+/2` for even, `f-/2` for odd.
    pub fn parity_part(&self, p: Parity) -> Self {
        let keep: Vec<usize> = (0..self.rank()).filter(|&t| self.parity[t] == p).collect();
        Self {
            m: self.m,
            n: self.n,
            d: keep.iter().map(|&t| self.d[t]).collect(),
            cols: keep.iter().map(|&t| self.cols[t].clone()).collect(),
            rows: keep.iter().map(|&t| self.rows[t].clone()).collect(),
            parity: keep.iter().map(|&t| self.parity[t]).collect(),
            vscale: self.vscale,
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for d in &mut out.d {
            *d *= s;
        }
        out.vscale *= s.norm();
        out
    }

    /// Concatenates the terms of both functions after padding to common sizes.
    /// The vscale is re-estimated by sampling.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let (m, n) = (self.m.max(other.m), self.n.max(other.n));
        let a = self.resized(m, n)?;
        let b = other.resized(m, n)?;
        let mut out = a;
        out.d.extend(b.d);
        out.cols.extend(b.cols);
        out.rows.extend(b.rows);
        out.parity.extend(b.parity);
        Ok(out.refresh_vscale())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Pushes one term; the column and row must already have the stored lengths.
    pub(crate) fn push_term(&mut self, d: Complex64, c: CoeffVector, r: CoeffVector, p: Parity) {
        debug_assert_eq!(c.len(), self.m);
        debug_assert_eq!(r.len(), self.n);
        self.d.push(d);
        self.cols.push(c);
        self.rows.push(r);
        self.parity.push(p);
    }

    /// Largest violation of the parity symmetries over the stored terms, measured on
    /// synthesized samples of each factor.
    pub fn parity_defect(&self) -> f64 {
        use crate::fourier::synthesize_1d;
        let mut worst = 0.0f64;
        for t in 0..self.rank() {
            let c = synthesize_1d(&self.cols[t], self.m).expect("even sizes");
            let r = synthesize_1d(&self.rows[t], self.n).expect("even sizes");
            let sign = match self.parity[t] {
                Parity::Even => 1.0,
                Parity::Odd => -1.0,
            };
            let scale = self.d[t].norm();
            let (cmax, rmax) = (
                c.iter().fold(0.0f64, |a, v| a.max(v.norm())),
                r.iter().fold(0.0f64, |a, v| a.max(v.norm())),
            );
            for j in 0..self.m {
                let e = (c[(self.m - j) % self.m] - sign * c[j]).norm();
                worst = worst.max(scale * e * rmax);
            }
            for k in 0..self.n {
                let e = (r[(k + self.n / 2) % self.n] - sign * r[k]).norm();
                worst = worst.max(scale * e * cmax);
            }
        }
        worst
    }
}

impl SphereSource for LowRankSphereFun {
    fn value(&self, lambda: f64, theta: f64) -> Complex64 {
        self.eval(lambda, theta)
    }

    fn doubled(&self, lambda: f64, theta: f64) -> Complex64 {
        self.eval(lambda, theta)
    }

    fn grid(&self, m: usize, n: usize) -> Result<BmcGrid> {
        if m >= self.m && n >= self.n {
            self.sample(m, n)
        } else {
            self.resized(m.min(self.m), n.min(self.n))?.sample(m, n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::analyze_1d;
    use crate::sphere_domain::grid_node;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn z_fun() -> LowRankSphereFun {
        let col = analyze_1d(&(0..8).map(|j| c(grid_node(j, 8).cos())).collect::<Vec<_>>()).unwrap();
        LowRankSphereFun::new(
            8,
            4,
            vec![c(1.0)],
            vec![col],
            vec![CoeffVector::mode(0, 4).unwrap()],
            vec![Parity::Even],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn constant_and_zero() {
        let one = LowRankSphereFun::constant(c(1.0), 4, 4).unwrap();
        assert_eq!(one.rank(), 1);
        assert!((one.eval(0.3, 2.0) - c(1.0)).norm() < 1e-15);
        let zero = LowRankSphereFun::zero(4, 4).unwrap();
        assert_eq!(zero.eval(1.0, 1.0), c(0.0));
        assert_eq!(zero.sample(8, 8).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn coeffs2_of_z() {
        let x = z_fun().coeffs2().to_dense();
        for j in 0..8 {
            for k in 0..4 {
                let want = if k == 2 && (j == 3 || j == 5) { 0.5 } else { 0.0 };
                assert!((x[[j, k]] - c(want)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn size_validation() {
        let r = LowRankSphereFun::new(
            8,
            4,
            vec![c(1.0)],
            vec![CoeffVector::mode(0, 6).unwrap()],
            vec![CoeffVector::mode(0, 4).unwrap()],
            vec![Parity::Even],
            1.0,
        );
        assert!(matches!(r, Err(SphereError::Size(_))));
    }

    #[test]
    fn add_and_parity_parts() {
        let z = z_fun();
        let sum = z.add(&LowRankSphereFun::constant(c(2.0), 4, 6).unwrap()).unwrap();
        assert_eq!((sum.m(), sum.n(), sum.rank()), (8, 6, 2));
        assert!((sum.eval(0.4, 0.0) - c(3.0)).norm() < 1e-14);
        assert!((sum.vscale() - 3.0).abs() < 1e-14);
        assert_eq!(sum.parity_part(Parity::Odd).rank(), 0);
        assert!(sum.parity_defect() < 1e-15);
        let diff = sum.sub(&z).unwrap();
        assert!((diff.eval(1.0, 2.0) - c(2.0)).norm() < 1e-14);
    }
}
