//! Coordinates on the unit sphere and the double Fourier sphere (DFS) extension.
//!
//! A function `f(lambda, theta)` on `[-pi, pi] x [0, pi]` is doubled up to a
//! bi-periodic function on `[-pi, pi]^2` by a glide reflection:
//!
//! ```text
//!   f~ = [ g        h       ]      g(l, t) = f(l - pi, t),  h = f   on [0, pi]^2
//!        [ flip(h)  flip(g) ]
//! ```
//!
//! The doubled function is block-mirror-centrosymmetric (BMC): `f~(l, -t) = f~(l + pi, t)`.
//! Sphere functions are additionally constant along the pole lines `t = 0, +-pi` (BMC-I).

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Result, SphereError};

/// Relative tolerance used when a structural precondition has to be checked internally.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// A point in (azimuth, polar angle) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphPoint {
    pub lambda: f64,
    pub theta: f64,
}

impl SphPoint {
    pub fn new(lambda: f64, theta: f64) -> Self {
        Self { lambda, theta }
    }
}

/// A point in Cartesian coordinates, not necessarily on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_on_sphere(&self) -> bool {
        (self.x * self.x + self.y * self.y + self.z * self.z - 1.0).abs() <= 1e-10
    }
}

pub fn sph_to_cart(p: SphPoint) -> CartPoint {
    let (sl, cl) = p.lambda.sin_cos();
    let (st, ct) = p.theta.sin_cos();
    CartPoint::new(cl * st, sl * st, ct)
}

/// Inverse of [`sph_to_cart`]; points off the sphere are projected radially.
pub fn cart_to_sph(p: CartPoint) -> Result<SphPoint> {
    let r = p.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(SphereError::Domain(format!(
            "cannot project ({}, {}, {}) onto the sphere",
            p.x, p.y, p.z
        )));
    }
    let lambda = p.y.atan2(p.x);
    let theta = (p.z / r).clamp(-1.0, 1.0).acos();
    Ok(SphPoint::new(lambda, theta))
}

/// Node `k` of the uniform periodic grid with `n` points on `[-pi, pi)`.
#[inline]
pub fn grid_node(k: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * (k as f64) / (n as f64)
}

/// Evaluates the doubled function `f~(lambda, theta)` from `f` on the physical domain.
///
/// Seams are assigned as `lambda >= 0` to the `h` blocks and `theta >= 0` to the upper blocks.
pub fn dfs_extend<F>(f: &F, lambda: f64, theta: f64) -> Complex64
where
    F: Fn(f64, f64) -> Complex64 + ?Sized,
{
    let g = |l: f64, t: f64| f(l - PI, t);
    let h = |l: f64, t: f64| f(l, t);
    match (lambda >= 0.0, theta >= 0.0) {
        (false, true) => g(lambda + PI, theta),
        (true, true) => h(lambda, theta),
        (true, false) => g(lambda, -theta),
        (false, false) => h(lambda + PI, -theta),
    }
}

/// Anything that can be sampled as a function on the sphere.
///
/// Only [`SphereSource::value`] is required. The batched samplers have
/// pointwise defaults that go through [`dfs_extend`].
pub trait SphereSource {
    /// Value on the physical domain `[-pi, pi] x [0, pi]`.
    fn value(&self, lambda: f64, theta: f64) -> Complex64;

    /// Value of the doubled function on `[-pi, pi]^2`.
    fn doubled(&self, lambda: f64, theta: f64) -> Complex64 {
        dfs_extend(&|l: f64, t: f64| self.value(l, t), lambda, theta)
    }

    /// `f~(lambda, theta_j)` on the doubled `m`-point theta grid.
    fn meridian(&self, lambda: f64, m: usize) -> Vec<Complex64> {
        (0..m).map(|j| self.doubled(lambda, grid_node(j, m))).collect()
    }

    /// `f~(lambda_k, theta)` on the `n`-point lambda grid.
    fn latitude(&self, theta: f64, n: usize) -> Vec<Complex64> {
        (0..n).map(|k| self.doubled(grid_node(k, n), theta)).collect()
    }

    /// Samples of `f~` on the full doubled `m x n` grid.
    ///
    /// Only `theta in [0, pi]` is evaluated; the lower half is filled by the glide reflection.
    fn grid(&self, m: usize, n: usize) -> Result<BmcGrid> {
        check_even(m, "m")?;
        check_even(n, "n")?;
        let mut values = Array2::<Complex64>::zeros((m, n));
        let half = n / 2;
        // theta = -pi row: f~(l, -pi) = f(l + pi, pi).
        for k in 0..n {
            values[[0, k]] = self.doubled(grid_node(k, n), -PI);
        }
        for j in m / 2..m {
            let theta = grid_node(j, m);
            for k in 0..n {
                values[[j, k]] = self.value(grid_node(k, n), theta);
            }
        }
        for j in 1..m / 2 {
            for k in 0..n {
                values[[j, k]] = values[[m - j, (k + half) % n]];
            }
        }
        Ok(BmcGrid { values })
    }
}

impl<T: SphereSource + ?Sized> SphereSource for &T {
    fn value(&self, lambda: f64, theta: f64) -> Complex64 {
        (**self).value(lambda, theta)
    }
    fn doubled(&self, lambda: f64, theta: f64) -> Complex64 {
        (**self).doubled(lambda, theta)
    }
    fn meridian(&self, lambda: f64, m: usize) -> Vec<Complex64> {
        (**self).meridian(lambda, m)
    }
    fn latitude(&self, theta: f64, n: usize) -> Vec<Complex64> {
        (**self).latitude(theta, n)
    }
    fn grid(&self, m: usize, n: usize) -> Result<BmcGrid> {
        (**self).grid(m, n)
    }
}

/// A function given in spherical coordinates `(lambda, theta)`.
pub struct SphFn<F>(pub F);

impl<F: Fn(f64, f64) -> Complex64> SphereSource for SphFn<F> {
    fn value(&self, lambda: f64, theta: f64) -> Complex64 {
        (self.0)(lambda, theta)
    }
}

/// A function given in Cartesian coordinates, restricted to the sphere.
pub struct CartFn<F>(pub F);

impl<F: Fn(f64, f64, f64) -> Complex64> SphereSource for CartFn<F> {
    fn value(&self, lambda: f64, theta: f64) -> Complex64 {
        let p = sph_to_cart(SphPoint::new(lambda, theta));
        (self.0)(p.x, p.y, p.z)
    }
}

/// Wraps a real-valued spherical-coordinate closure.
pub fn sph_real<F: Fn(f64, f64) -> f64>(f: F) -> SphFn<impl Fn(f64, f64) -> Complex64> {
    SphFn(move |l, t| Complex64::new(f(l, t), 0.0))
}

/// Wraps a real-valued Cartesian closure.
pub fn cart_real<F: Fn(f64, f64, f64) -> f64>(f: F) -> CartFn<impl Fn(f64, f64, f64) -> Complex64> {
    CartFn(move |x, y, z| Complex64::new(f(x, y, z), 0.0))
}

pub(crate) fn check_even(n: usize, what: &str) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(SphereError::Size(format!(
            "{what} = {n} must be a positive even integer"
        )));
    }
    Ok(())
}

/// Samples of a doubled function on the uniform grid
/// `theta_j = -pi + 2 pi j / m` (rows) by `lambda_k = -pi + 2 pi k / n` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BmcGrid {
    values: Array2<Complex64>,
}

impl BmcGrid {
    pub fn new(values: Array2<Complex64>) -> Result<Self> {
        let (m, n) = values.dim();
        check_even(m, "m")?;
        check_even(n, "n")?;
        Ok(Self { values })
    }

    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        Self::new(Array2::zeros((m, n)))
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn theta(&self, j: usize) -> f64 {
        grid_node(j, self.m())
    }

    pub fn lambda(&self, k: usize) -> f64 {
        grid_node(k, self.n())
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.norm()))
    }

    /// Largest violation of `f~(l, -t) = f~(l + pi, t)` over the grid.
    pub fn bmc_mismatch(&self) -> f64 {
        let (m, n) = (self.m(), self.n());
        let v = &self.values;
        let mut worst = 0.0f64;
        for j in 0..m {
            let jr = (m - j) % m;
            for k in 0..n {
                worst = worst.max((v[[jr, k]] - v[[j, (k + n / 2) % n]]).norm());
            }
        }
        worst
    }

    /// Largest deviation from a constant along the pole rows `theta = 0` and `theta = -pi`.
    pub fn pole_mismatch(&self) -> f64 {
        let m = self.m();
        [0, m / 2]
            .iter()
            .map(|&j| {
                let row = self.values.row(j);
                let first = row[0];
                row.iter().fold(0.0f64, |acc, v| acc.max((v - first).norm()))
            })
            .fold(0.0, f64::max)
    }
}

/// True iff the grid has BMC structure to within `tol * max|g|`.
pub fn bmc_check(g: &BmcGrid, tol: f64) -> bool {
    g.bmc_mismatch() <= tol * g.max_abs()
}

/// True iff the grid is BMC and constant along the pole rows (BMC-I), to within `tol * max|g|`.
pub fn bmc_i_check(g: &BmcGrid, tol: f64) -> bool {
    bmc_check(g, tol) && g.pole_mismatch() <= tol * g.max_abs()
}

/// Splits `f~ = f+/2 + f-/2` into the even/pi-periodic and odd/pi-antiperiodic parts.
pub fn even_odd_split(g: &BmcGrid) -> Result<(BmcGrid, BmcGrid)> {
    let mismatch = g.bmc_mismatch();
    let allowed = STRUCTURE_TOL * g.max_abs();
    if mismatch > allowed {
        return Err(SphereError::Structure { mismatch, allowed });
    }
    let (m, n) = (g.m(), g.n());
    let v = &g.values;
    let mut even = Array2::<Complex64>::zeros((m, n));
    let mut odd = Array2::<Complex64>::zeros((m, n));
    for j in 0..m {
        for k in 0..n {
            let shifted = v[[j, (k + n / 2) % n]];
            even[[j, k]] = v[[j, k]] + shifted;
            odd[[j, k]] = v[[j, k]] - shifted;
        }
    }
    Ok((BmcGrid { values: even }, BmcGrid { values: odd }))
}
