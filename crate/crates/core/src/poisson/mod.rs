//! Spectral Poisson solver `lap_S u = f` on the unit sphere.
//!
//! Multiplying the doubled equation by `sin^2(theta)` removes the pole singularity:
//!
//! ```text
//!   sin^2 u_tt + cos sin u_t + u_ll = sin^2 f
//! ```
//!
//! In Fourier coefficients this is `L X + X D_n^2 = F` with a pentadiagonal `L`
//! (offsets -2, 0, 2), so every azimuthal mode `k` is an independent banded system.
//! The `k = 0` system is singular (constants); its `j = 0` row is replaced by the
//! integral constraint `2 pi w^T X_0 = 0`.

pub mod oracle;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::banded::BandedMatrix;
use crate::calculus::{integration_weight, sum2};
use crate::error::{Result, SphereError};
use crate::fourier::{div_sin, mcos_matrix, msin_matrix, mult_sin, CoeffMatrix, CoeffVector};
use crate::lowrank::{compress, ConstructorConfig, LowRankSphereFun};
use crate::sphere_domain::check_even;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square coefficient-space operators on modes `-m/2 .. m/2 - 1`.
#[derive(Debug, Clone)]
pub struct PoissonOperators {
    /// Diagonal of `D_m`: `i j`.
    pub dm: Vec<Complex64>,
    pub msin: BandedMatrix,
    pub mcos: BandedMatrix,
}

pub fn build_operators(m: usize) -> Result<PoissonOperators> {
    check_even(m, "m")?;
    let half = m as i64 / 2;
    Ok(PoissonOperators {
        dm: (0..m as i64)
            .map(|p| Complex64::new(0.0, (p - half) as f64))
            .collect(),
        msin: msin_matrix(m)?,
        mcos: mcos_matrix(m)?,
    })
}

/// `L = S2 D_m^2 + CS D_m`, where `S2`, `CS` are the truncated multiplication operators of
/// `sin^2` and `cos sin`. Column `p` (mode `j`) has `-j^2/2` on the diagonal,
/// `(j^2 + j)/4` two below and `(j^2 - j)/4` two above.
pub fn theta_operator(m: usize) -> Result<BandedMatrix> {
    check_even(m, "m")?;
    let half = m as i64 / 2;
    let mut l = BandedMatrix::zeros(m, 2, 2);
    for p in 0..m {
        let j = (p as i64 - half) as f64;
        l.set(p, p, Complex64::new(-0.5 * j * j, 0.0));
        if p + 2 < m {
            l.set(p + 2, p, Complex64::new(0.25 * (j * j + j), 0.0));
        }
        if p >= 2 {
            l.set(p - 2, p, Complex64::new(0.25 * (j * j - j), 0.0));
        }
    }
    Ok(l)
}

/// `2 pi w_j` in storage order, so that `sum_j W_j X_{j,0}` is the surface integral.
pub fn constraint_row(m: usize) -> Vec<f64> {
    let half = m as i64 / 2;
    (0..m as i64)
        .map(|p| 2.0 * std::f64::consts::PI * integration_weight(p - half))
        .collect()
}

/// `(sin theta)^2 f~` in coefficients, at `m x n`.
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    f: Array2<Complex64>,
    removed_mean: Complex64,
}

impl PoissonProblem {
    /// Assembles the right-hand side for `lap u = f`. A nonzero mean is subtracted
    /// (with a warning when it exceeds `1e-11 vscale`), since only mean-zero data are solvable.
    pub fn from_function(f: &LowRankSphereFun, m: usize, n: usize) -> Result<Self> {
        check_even(m, "m")?;
        check_even(n, "n")?;
        let mean = sum2(f) / (4.0 * std::f64::consts::PI);
        if mean.norm() > 1e-11 * f.vscale() {
            log::warn!(
                "right-hand side has mean {:.3e}{:+.3e}i; subtracting it",
                mean.re,
                mean.im
            );
        }
        let mut terms = f.clone();
        if mean != ZERO {
            terms = terms.add(&LowRankSphereFun::constant(-mean, 2, 2)?)?;
        }
        let (mm, nn) = (terms.m() + 4, terms.n());
        let mut sin2 = LowRankSphereFun::zero(mm, nn)?;
        for t in 0..terms.rank() {
            let c = mult_sin(&mult_sin(&terms.cols()[t]));
            sin2.push_term(
                terms.weights()[t],
                c,
                terms.rows()[t].clone(),
                terms.parities()[t],
            );
        }
        let x = sin2.coeffs2().resized(m, n)?.to_dense();
        Ok(Self {
            f: column_major(x),
            removed_mean: mean,
        })
    }

    /// Uses a given coefficient matrix of `sin^2 f~` directly. The mean of `f` is recovered
    /// from the zero mode by two divisions by `sin`; it must vanish.
    pub fn from_rhs(f: CoeffMatrix) -> Result<Self> {
        let x = f.to_dense();
        let (m, n) = x.dim();
        check_even(m, "m")?;
        check_even(n, "n")?;
        let f0 = CoeffVector::new(x.column(n / 2).to_vec())?;
        let y0 = div_sin(&div_sin(&f0)?)?;
        let w = constraint_row(m);
        let mean: Complex64 = y0.as_slice().iter().zip(&w).map(|(y, w)| y * w).sum();
        let scale: f64 = y0
            .as_slice()
            .iter()
            .zip(&w)
            .map(|(y, w)| y.norm() * w.abs())
            .sum();
        if mean.norm() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(SphereError::Precondition(format!(
                "right-hand side is not mean-zero (integral {:.3e})",
                mean.norm()
            )));
        }
        Ok(Self {
            f: column_major(x),
            removed_mean: ZERO,
        })
    }

    pub fn m(&self) -> usize {
        self.f.nrows()
    }

    pub fn n(&self) -> usize {
        self.f.ncols()
    }

    pub fn rhs(&self) -> &Array2<Complex64> {
        &self.f
    }

    /// Mean subtracted by [`PoissonProblem::from_function`].
    pub fn removed_mean(&self) -> Complex64 {
        self.removed_mean
    }
}

/// Coefficients `X` of the solution `u~`.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    x: Array2<Complex64>,
}

impl PoissonSolution {
    pub fn new(x: Array2<Complex64>) -> Self {
        Self { x }
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.x
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// `2 pi w^T X_0`, the surface integral of the solution.
    pub fn constraint_value(&self) -> Complex64 {
        let w = constraint_row(self.m());
        self.x
            .column(self.n() / 2)
            .iter()
            .zip(&w)
            .map(|(x, w)| x * w)
            .sum()
    }

    /// Direct evaluation of the double Fourier series, `O(m n)`.
    pub fn eval(&self, lambda: f64, theta: f64) -> Complex64 {
        let row: Vec<Complex64> = (0..self.n())
            .map(|k| {
                CoeffVector::new(self.x.column(k).to_vec())
                    .expect("even")
                    .eval(theta)
            })
            .collect();
        CoeffVector::new(row).expect("even").eval(lambda)
    }

    /// Low-rank form at the solution's own resolution.
    pub fn to_sphere_fun(&self, cfg: &ConstructorConfig) -> Result<LowRankSphereFun> {
        let (m, n) = self.x.dim();
        let grid = CoeffMatrix::Dense(self.x.clone()).sample_grid(m, n)?;
        compress(&grid, cfg)
    }
}

/// The `k = 0` system: rows of `L` except `j = 0`, bordered by the constraint row.
struct ZeroModeSolver {
    lu: crate::banded::BandedLu,
    w: Vec<f64>,
    p0: usize,
}

impl ZeroModeSolver {
    fn new(l: &BandedMatrix) -> Result<Self> {
        let m = l.size();
        let p0 = m / 2;
        // Column p0 of L vanishes (u = const), so the constrained unknown X_{0,0} decouples.
        let idx = |p: usize| if p < p0 { p } else { p - 1 };
        let mut reduced = BandedMatrix::zeros(m - 1, 2, 2);
        for i in (0..m).filter(|&i| i != p0) {
            for j in i.saturating_sub(2)..=(i + 2).min(m - 1) {
                if j != p0 {
                    reduced.set(idx(i), idx(j), l.get(i, j));
                }
            }
        }
        let lu = reduced.lu().map_err(|_| SphereError::Singular { mode: 0 })?;
        Ok(Self {
            lu,
            w: constraint_row(m),
            p0,
        })
    }

    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let m = rhs.len();
        let p0 = self.p0;
        let reduced: Vec<Complex64> = (0..m).filter(|&i| i != p0).map(|i| rhs[i]).collect();
        let xr = self.lu.solve(&reduced);
        let mut x = vec![ZERO; m];
        let mut acc = ZERO;
        for (t, v) in xr.into_iter().enumerate() {
            let p = if t < p0 { t } else { t + 1 };
            acc += v * self.w[p];
            x[p] = v;
        }
        x[p0] = -acc / self.w[p0];
        x
    }
}

// Each azimuthal mode is a contiguous column.
fn column_major(x: Array2<Complex64>) -> Array2<Complex64> {
    x.reversed_axes()
        .as_standard_layout()
        .into_owned()
        .reversed_axes()
}

/// Solves every azimuthal mode; columns run in parallel and the result does not depend on
/// the thread count.
pub fn solve(pb: &PoissonProblem) -> Result<PoissonSolution> {
    let (m, n) = (pb.m(), pb.n());
    let l = theta_operator(m)?;
    let zero_mode = ZeroModeSolver::new(&l)?;
    let half = n as i64 / 2;
    // Column-major output: chunk c holds mode k = c - n/2.
    let mut flat = vec![ZERO; m * n];
    flat.par_chunks_mut(m).enumerate().try_for_each(|(c, out)| {
        let k = c as i64 - half;
        out.iter_mut().zip(pb.f.column(c)).for_each(|(o, v)| *o = *v);
        if k == 0 {
            let x0 = zero_mode.solve(out);
            out.copy_from_slice(&x0);
            return Ok(());
        }
        let mut a = l.clone();
        a.add_diagonal(Complex64::new(-((k * k) as f64), 0.0));
        let lu = a.into_lu().map_err(|_| SphereError::Singular { mode: k })?;
        lu.solve_in_place(out);
        Ok::<(), SphereError>(())
    })?;
    let x = Array2::from_shape_vec((n, m), flat)
        .expect("n columns of length m")
        .reversed_axes();
    Ok(PoissonSolution { x })
}

/// Residual of `L X + X D_n^2 = F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonResidual {
    /// Max-abs over all equations except the replaced `(j, k) = (0, 0)` one.
    pub max: f64,
    /// The replaced equation's residual, reported separately.
    pub discarded_row: f64,
    /// `|2 pi w^T X_0|`.
    pub constraint: f64,
}

pub fn residual(pb: &PoissonProblem, sol: &PoissonSolution) -> Result<PoissonResidual> {
    let (m, n) = (pb.m(), pb.n());
    if sol.x.dim() != (m, n) {
        return Err(SphereError::Size(format!(
            "solution is {:?}, problem is {m}x{n}",
            sol.x.dim()
        )));
    }
    let l = theta_operator(m)?;
    let half = n as i64 / 2;
    let mut worst = 0.0f64;
    let mut discarded = 0.0;
    for c in 0..n {
        let k = (c as i64 - half) as f64;
        let col = sol.x.column(c).to_vec();
        let lx = l.matvec(&col);
        for j in 0..m {
            let r = (lx[j] - k * k * col[j] - pb.f[[j, c]]).norm();
            if c == n / 2 && j == m / 2 {
                discarded = r;
            } else {
                worst = worst.max(r);
            }
        }
    }
    Ok(PoissonResidual {
        max: worst,
        discarded_row: discarded,
        constraint: sol.constraint_value().norm(),
    })
}

/// Max-abs entry of the right-hand side, for relative residuals.
pub fn rhs_norm(pb: &PoissonProblem) -> f64 {
    pb.f.iter().fold(0.0, |a, v| a.max(v.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{analyze_1d, deriv_coeffs, mult_cos};
    use crate::lowrank::construct;
    use crate::sphere_domain::{cart_real, grid_node, SphereSource};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn coeffs_of(m: usize, f: impl Fn(f64) -> f64) -> CoeffVector {
        analyze_1d(&(0..m).map(|j| c(f(grid_node(j, m)))).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn operator_examples() {
        let ops = build_operators(16).unwrap();
        let cos = coeffs_of(16, f64::cos);
        let d: Vec<Complex64> = cos.as_slice().iter().zip(&ops.dm).map(|(a, b)| a * b).collect();
        let want = coeffs_of(16, |t| -t.sin());
        for (a, b) in d.iter().zip(want.as_slice()) {
            assert!((a - b).norm() < 1e-15);
        }
        let one = CoeffVector::mode(0, 16).unwrap();
        let mc = ops.mcos.matvec(one.as_slice());
        for (a, b) in mc.iter().zip(cos.as_slice()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(build_operators(7).is_err());
    }

    #[test]
    fn sin2_plus_cos2_is_identity_away_from_boundary() {
        let ops = build_operators(20).unwrap();
        let s2 = ops.msin.matmul(&ops.msin);
        let c2 = ops.mcos.matmul(&ops.mcos);
        let id = s2.add(&c2);
        for i in 0..20 {
            for j in 0..20 {
                let want = if i == j { 1.0 } else { 0.0 };
                let boundary = i == 0 || i == 19;
                if !boundary {
                    assert!((id.get(i, j) - c(want)).norm() < 1e-15, "({i},{j})");
                }
            }
        }
        // The boundary rows lose the partner outside the truncation.
        assert!((id.get(0, 0) - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn theta_operator_matches_coefficient_identities() {
        // L c = sin^2 c'' + cos sin c' computed by exact coefficient products.
        let m = 24;
        let l = theta_operator(m).unwrap();
        let c0 = coeffs_of(m, |t| (t.cos() * 0.7).exp() + (2.0 * t).sin())
            .resized(m - 8)
            .unwrap()
            .resized(m)
            .unwrap();
        let d1 = deriv_coeffs(&c0);
        let d2 = deriv_coeffs(&d1);
        let a = mult_sin(&mult_sin(&d2));
        let b = mult_cos(&mult_sin(&d1));
        let want: Vec<Complex64> = (0..m as i64)
            .map(|p| {
                let j = p - m as i64 / 2;
                a.get(j) + b.get(j)
            })
            .collect();
        let got = l.matvec(c0.as_slice());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
        assert!((l.get(m / 2, m / 2 + 2) - c(0.5)).norm() < 1e-15);
        assert!((l.get(m / 2, m / 2 - 2) - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn nonzero_modes_are_nonsingular() {
        for &m in &[16usize, 32, 64, 128] {
            let l = theta_operator(m).unwrap();
            for k in 1..=(m as i64 / 2) {
                let mut a = l.clone();
                a.add_diagonal(c(-((k * k) as f64)));
                assert!(a.lu().unwrap().min_pivot() > 1e-8, "m {m} k {k}");
            }
        }
    }

    #[test]
    fn z_is_an_eigenfunction() {
        let z = construct(&cart_real(|_, _, z| z), &ConstructorConfig::default()).unwrap();
        let pb = PoissonProblem::from_function(&z, 16, 16).unwrap();
        let sol = solve(&pb).unwrap();
        let r = residual(&pb, &sol).unwrap();
        assert!(r.max < 1e-12 && r.constraint < 1e-12 && r.discarded_row < 1e-12);
        for &(l, t) in &[(0.3, 0.2), (-2.0, 2.0), (1.0, 1.0)] {
            assert!((sol.eval(l, t) + c(0.5 * t.cos())).norm() < 1e-14);
        }
        let u = sol.to_sphere_fun(&ConstructorConfig::default()).unwrap();
        assert!((u.value(0.4, 0.9) + c(0.5 * 0.9f64.cos())).norm() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let pb = PoissonProblem::from_function(&LowRankSphereFun::zero(4, 4).unwrap(), 16, 16).unwrap();
        let sol = solve(&pb).unwrap();
        assert!(sol.coeffs().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn mean_is_removed() {
        let f = construct(&cart_real(|_, _, z| 1.0 + z), &ConstructorConfig::default()).unwrap();
        let pb = PoissonProblem::from_function(&f, 16, 16).unwrap();
        assert!((pb.removed_mean() - c(1.0)).norm() < 1e-14);
        let sol = solve(&pb).unwrap();
        assert!((sol.eval(0.0, 0.5) + c(0.5 * 0.5f64.cos())).norm() < 1e-14);
    }

    #[test]
    fn raw_rhs_must_be_mean_zero() {
        let mut f = Array2::<Complex64>::zeros((16, 16));
        // sin^2 * 1 = 1/2 - e^{2it}/4 - e^{-2it}/4
        f[[8, 8]] = c(0.5);
        f[[10, 8]] = c(-0.25);
        f[[6, 8]] = c(-0.25);
        assert!(matches!(
            PoissonProblem::from_rhs(CoeffMatrix::Dense(f)),
            Err(SphereError::Precondition(_))
        ));
    }

    #[test]
    fn perturbation_shows_in_residual() {
        let z = construct(&cart_real(|x, y, z| x * y + z), &ConstructorConfig::default()).unwrap();
        let pb = PoissonProblem::from_function(&z, 32, 32).unwrap();
        let sol = solve(&pb).unwrap();
        let base = residual(&pb, &sol).unwrap().max;
        let mut x = sol.coeffs().clone();
        x[[20, 10]] += c(1e-6);
        let bumped = residual(&pb, &PoissonSolution::new(x)).unwrap().max;
        assert!(base < 1e-12);
        assert!(bumped > 1e-6 && bumped < 1e-3);
    }
}
