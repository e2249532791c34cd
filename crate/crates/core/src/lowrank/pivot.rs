//! One step of structure-preserving Gaussian elimination on a doubled grid.
//!
//! A pivot at `lambda* in [0, pi)`, `theta* in [0, pi]` couples four grid
//! points through the centrosymmetric matrix
//!
//! ```text
//!   M = [ a  b ]     a = f~(lambda* - pi, theta*),  b = f~(lambda*, theta*)
//!       [ b  a ]
//! ```
//!
//! whose eigenvalues are `a + b` (even part) and `a - b` (odd part).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Result, SphereError};
use crate::sphere_domain::{grid_node, BmcGrid, SphereSource};

use super::Parity;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Singular values of `[a b; b a]`.
pub fn sv_2x2(a: Complex64, b: Complex64) -> (f64, f64) {
    let (p, q) = ((a + b).norm(), (a - b).norm());
    (p.max(q), p.min(q))
}

/// The `alpha sigma_1`-pseudoinverse of `[a b; b a]`, as `(m_even, m_odd)` with
/// `M^+ = (m_even / 2) [1 1; 1 1] + (m_odd / 2) [1 -1; -1 1]`.
pub fn pinv_2x2(a: Complex64, b: Complex64, alpha: f64) -> Result<(Complex64, Complex64)> {
    let (p, q) = ((a + b).norm(), (a - b).norm());
    if p == 0.0 && q == 0.0 {
        return Err(SphereError::Pivot);
    }
    let one = Complex64::new(1.0, 0.0);
    if q == 0.0 || q < alpha * p {
        Ok((one / (a + b), ZERO))
    } else if p == 0.0 || p < alpha * q {
        Ok((ZERO, one / (a - b)))
    } else {
        Ok((one / (a + b), one / (a - b)))
    }
}

/// A pivot location on a doubled grid together with its pseudoinverse weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotBlock {
    /// Row index of `theta*`; `m/2 ..= m-1` or `0` for `theta* = pi`.
    pub row: usize,
    /// Column index of `lambda*`; `n/2 ..= n-1`.
    pub col: usize,
    pub lambda_star: f64,
    pub theta_star: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub m_even: Complex64,
    pub m_odd: Complex64,
}

impl PivotBlock {
    /// Builds the block at grid indices `(row, col)` of `g`.
    pub fn at(g: &BmcGrid, row: usize, col: usize, alpha: f64) -> Result<Self> {
        let (m, n) = (g.m(), g.n());
        check_pivot_index(row, col, m, n)?;
        let v = g.values();
        let a = v[[row, col - n / 2]];
        let b = v[[row, col]];
        let (m_even, m_odd) = pinv_2x2(a, b, alpha)?;
        Ok(Self {
            row,
            col,
            lambda_star: grid_node(col, n),
            theta_star: theta_of_row(row, m),
            a,
            b,
            m_even,
            m_odd,
        })
    }

    pub fn sigma1(&self) -> f64 {
        sv_2x2(self.a, self.b).0
    }

    /// Number of stored terms this step contributes.
    pub fn terms(&self) -> usize {
        (self.m_even != ZERO) as usize + (self.m_odd != ZERO) as usize
    }
}

fn theta_of_row(row: usize, m: usize) -> f64 {
    if row == 0 {
        std::f64::consts::PI
    } else {
        grid_node(row, m)
    }
}

fn check_pivot_index(row: usize, col: usize, m: usize, n: usize) -> Result<()> {
    let row_ok = row == 0 || (row >= m / 2 && row < m);
    let col_ok = col >= n / 2 && col < n;
    if row_ok && col_ok {
        Ok(())
    } else {
        Err(SphereError::Index {
            row,
            col,
            rows: m,
            cols: n,
        })
    }
}

/// Rows with `theta in [0, pi]`, from the pole `theta = 0` upward, `theta = pi` last.
fn search_rows(m: usize) -> impl Iterator<Item = usize> {
    (m / 2..m).chain(std::iter::once(0))
}

/// Complete pivoting over `[0, pi) x [0, pi]`: maximizes `sigma_1` of the 2x2 block.
///
/// Ties go to the smallest theta, then the smallest lambda. Returns `Ok(None)` for a zero grid.
pub fn pivot_search(g: &BmcGrid, alpha: f64) -> Result<Option<PivotBlock>> {
    let (m, n) = (g.m(), g.n());
    let v = g.values();
    let mut best = 0.0f64;
    let mut at = None;
    for j in search_rows(m) {
        for k in n / 2..n {
            let s = sv_2x2(v[[j, k - n / 2]], v[[j, k]]).0;
            if s > best {
                best = s;
                at = Some((j, k));
            }
        }
    }
    match at {
        None => Ok(None),
        Some((j, k)) => PivotBlock::at(g, j, k, alpha).map(Some),
    }
}

/// A rank-one term sampled on the grid: `d * col(theta_j) * row(lambda_k)`.
#[derive(Debug, Clone)]
pub(crate) struct GridTerm {
    pub d: Complex64,
    pub col: Vec<Complex64>,
    pub row: Vec<Complex64>,
    pub parity: Parity,
}

/// Even/odd combinations of the two skeleton columns and rows through a pivot.
///
/// `col_b[j] = e(theta_j, lambda*)`, `row_p[k] = e(theta*, lambda_k)`; the partner column
/// and row follow from the BMC symmetry.
pub(crate) fn split_terms(
    col_b: &[Complex64],
    row_p: &[Complex64],
    m_even: Complex64,
    m_odd: Complex64,
) -> Vec<GridTerm> {
    let (m, n) = (col_b.len(), row_p.len());
    let col_a = |j: usize| col_b[(m - j) % m];
    let row_m = |k: usize| row_p[(k + n / 2) % n];
    let mut out = Vec::with_capacity(2);
    if m_even != ZERO {
        out.push(GridTerm {
            d: 0.5 * m_even,
            col: (0..m).map(|j| col_a(j) + col_b[j]).collect(),
            row: (0..n).map(|k| row_p[k] + row_m(k)).collect(),
            parity: Parity::Even,
        });
    }
    if m_odd != ZERO {
        out.push(GridTerm {
            d: 0.5 * m_odd,
            col: (0..m).map(|j| col_a(j) - col_b[j]).collect(),
            row: (0..n).map(|k| row_p[k] - row_m(k)).collect(),
            parity: Parity::Odd,
        });
    }
    out
}

pub(crate) fn subtract_term(e: &mut Array2<Complex64>, t: &GridTerm) {
    for (j, cj) in t.col.iter().enumerate() {
        let s = t.d * cj;
        if s == ZERO {
            continue;
        }
        let mut row = e.row_mut(j);
        for (v, r) in row.iter_mut().zip(&t.row) {
            *v -= s * r;
        }
    }
}

/// Applies the step in place and returns the stored terms.
pub(crate) fn ge_step_in_place(e: &mut Array2<Complex64>, p: &PivotBlock) -> Result<Vec<GridTerm>> {
    let (m, n) = e.dim();
    check_pivot_index(p.row, p.col, m, n)?;
    let col_b: Vec<Complex64> = e.column(p.col).to_vec();
    let row_p: Vec<Complex64> = e.row(p.row).to_vec();
    let terms = split_terms(&col_b, &row_p, p.m_even, p.m_odd);
    for t in &terms {
        subtract_term(e, t);
    }
    Ok(terms)
}

/// `e - [e(., lambda* - pi) e(., lambda*)] M^+ [e(theta*, .); e(-theta*, .)]`.
pub fn ge_step(residual: &BmcGrid, p: &PivotBlock) -> Result<BmcGrid> {
    let mut e = residual.values().clone();
    ge_step_in_place(&mut e, p)?;
    BmcGrid::new(e)
}

/// Removes the pole values with the rank-one even term `c0(theta) * 1`, where
/// `c0(theta) = (f~(lambda0, theta) + f~(lambda0 + pi, theta)) / 2`.
///
/// For BMC-I input `c0` equals `f~` on the pole lines, so the residual vanishes there. The
/// two-meridian average keeps `c0` even in theta, which the residual needs to stay BMC.
pub struct PoleZeroed<S> {
    src: S,
    lambda0: f64,
}

impl<S: SphereSource> PoleZeroed<S> {
    /// The captured column `c0(theta)`; the row is `1` and the weight `1`.
    pub fn captured(&self, theta: f64) -> Complex64 {
        0.5 * (self.src.doubled(self.lambda0, theta) + self.src.doubled(self.lambda0, -theta))
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn source(&self) -> &S {
        &self.src
    }
}

impl<S: SphereSource> SphereSource for PoleZeroed<S> {
    fn value(&self, lambda: f64, theta: f64) -> Complex64 {
        self.src.value(lambda, theta) - self.captured(theta)
    }

    fn doubled(&self, lambda: f64, theta: f64) -> Complex64 {
        self.src.doubled(lambda, theta) - self.captured(theta)
    }
}

/// Wraps `src` as its pole-zeroed residual.
pub fn pole_zero_out<S: SphereSource>(src: S, lambda0: f64) -> PoleZeroed<S> {
    PoleZeroed { src, lambda0 }
}

/// Grid version of [`pole_zero_out`] around column `k0`; returns the captured column samples.
pub(crate) fn zero_out_grid(e: &mut Array2<Complex64>, k0: usize) -> Vec<Complex64> {
    let (m, n) = e.dim();
    let k1 = (k0 + n / 2) % n;
    let c0: Vec<Complex64> = (0..m).map(|j| 0.5 * (e[[j, k0]] + e[[j, k1]])).collect();
    for (j, cj) in c0.iter().enumerate() {
        for v in e.row_mut(j).iter_mut() {
            *v -= cj;
        }
    }
    c0
}
