//! Evaluation, integration and surface vector calculus on low-rank sphere functions.
//!
//! Tangential derivatives are the Cartesian components of the surface gradient,
//!
//! ```text
//!   dt/dx =  cos(l) cos(t) d/dt - sin(l) / sin(t) d/dl
//!   dt/dy =  sin(l) cos(t) d/dt + cos(l) / sin(t) d/dl
//!   dt/dz = -sin(t) d/dt
//! ```
//!
//! applied term by term in coefficient space. Every product with `sin` or `cos` adds two
//! modes, so derivatives have sizes `(m + 2, n + 2)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::fourier::{deriv_coeffs, div_sin, mult_cos, mult_sin, CoeffVector};
use crate::lowrank::{construct, ConstructorConfig, LowRankSphereFun, Parity};
use crate::sphere_domain::{CartPoint, SphPoint};

/// Cartesian direction of a tangential derivative or coordinate factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    X,
    Y,
    Z,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X, Direction::Y, Direction::Z];
}

pub fn evaluate(f: &LowRankSphereFun, p: SphPoint) -> Complex64 {
    f.eval(p.lambda, p.theta)
}

/// Evaluates at the radial projection of `p`.
pub fn evaluate_cart(f: &LowRankSphereFun, p: CartPoint) -> Result<Complex64> {
    f.eval_cart(p)
}

/// `int_0^pi e^{ik theta} sin(theta) d theta` restricted to terms that survive the symmetry:
/// zero for `k = +-1`, `(1 + (-1)^k) / (1 - k^2)` otherwise.
pub fn integration_weight(k: i64) -> f64 {
    if k.abs() == 1 || k % 2 != 0 {
        0.0
    } else {
        2.0 / (1.0 - (k * k) as f64)
    }
}

/// Surface integral over the unit sphere.
pub fn sum2(f: &LowRankSphereFun) -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut total = Complex64::new(0.0, 0.0);
    for (d, (c, r)) in f.weights().iter().zip(f.cols().iter().zip(f.rows())) {
        let theta_part: Complex64 = (c.min_mode()..=c.max_mode())
            .map(|k| c.get(k) * integration_weight(k))
            .sum();
        total += d * theta_part * (two_pi * r.get(0));
    }
    total
}

struct Term {
    d: Complex64,
    c: CoeffVector,
    r: CoeffVector,
    p: Parity,
}

fn assemble(m: usize, n: usize, terms: Vec<Term>) -> Result<LowRankSphereFun> {
    let mut out = LowRankSphereFun::zero(m, n)?;
    for t in terms {
        out.push_term(t.d, t.c.resized(m)?, t.r.resized(n)?, t.p);
    }
    Ok(out.refresh_vscale())
}

fn terms_of(
    f: &LowRankSphereFun,
) -> impl IndexedParallelIterator<Item = (Complex64, &CoeffVector, &CoeffVector, Parity)> {
    f.weights()
        .par_iter()
        .zip(f.cols().par_iter())
        .zip(f.rows().par_iter())
        .zip(f.parities().par_iter())
        .map(|(((d, c), r), p)| (*d, c, r, *p))
}

/// Tangential derivative in direction `dir`; rank at most `2K` (x, y) or `K` (z).
pub fn diff_tangential(f: &LowRankSphereFun, dir: Direction) -> Result<LowRankSphereFun> {
    let (m, n) = (f.m() + 2, f.n() + 2);
    let per_term: Vec<Result<Vec<Term>>> = terms_of(f)
        .map(|(d, c, r, p)| {
            let mut out = Vec::with_capacity(2);
            let dc = deriv_coeffs(c);
            let dr = deriv_coeffs(r);
            match dir {
                Direction::X | Direction::Y => {
                    let flipped = p.flipped();
                    if dr.max_abs() > 0.0 {
                        let q = div_sin(c)?;
                        let (rr, sign) = match dir {
                            Direction::X => (mult_sin(&dr), -1.0),
                            _ => (mult_cos(&dr), 1.0),
                        };
                        out.push(Term {
                            d: d * sign,
                            c: q,
                            r: rr,
                            p: flipped,
                        });
                    }
                    if dc.max_abs() > 0.0 {
                        let rr = match dir {
                            Direction::X => mult_cos(r),
                            _ => mult_sin(r),
                        };
                        out.push(Term {
                            d,
                            c: mult_cos(&dc),
                            r: rr,
                            p: flipped,
                        });
                    }
                }
                Direction::Z => {
                    if dc.max_abs() > 0.0 {
                        out.push(Term {
                            d: -d,
                            c: mult_sin(&dc),
                            r: r.clone(),
                            p,
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut terms = Vec::new();
    for t in per_term {
        terms.extend(t?);
    }
    assemble(m, n, terms)
}

/// `x f`, `y f` or `z f`, computed on the matching 1D factors.
pub fn mul_coord(f: &LowRankSphereFun, dir: Direction) -> Result<LowRankSphereFun> {
    let (m, n) = (f.m() + 2, f.n() + 2);
    let terms: Vec<Term> = terms_of(f)
        .map(|(d, c, r, p)| match dir {
            Direction::X => Term {
                d,
                c: mult_sin(c),
                r: mult_cos(r),
                p: p.flipped(),
            },
            Direction::Y => Term {
                d,
                c: mult_sin(c),
                r: mult_sin(r),
                p: p.flipped(),
            },
            Direction::Z => Term {
                d,
                c: mult_cos(c),
                r: r.clone(),
                p,
            },
        })
        .collect();
    assemble(m, n, terms)
}

/// Re-runs the constructor on `f` to reduce its rank.
pub fn recompress(f: &LowRankSphereFun, cfg: &ConstructorConfig) -> Result<LowRankSphereFun> {
    construct(f, cfg)
}

/// A Cartesian vector field on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSphereFun {
    pub fx: LowRankSphereFun,
    pub fy: LowRankSphereFun,
    pub fz: LowRankSphereFun,
}

impl VectorSphereFun {
    pub fn new(fx: LowRankSphereFun, fy: LowRankSphereFun, fz: LowRankSphereFun) -> Self {
        Self { fx, fy, fz }
    }

    pub fn zero(m: usize, n: usize) -> Result<Self> {
        let z = LowRankSphereFun::zero(m, n)?;
        Ok(Self::new(z.clone(), z.clone(), z))
    }

    pub fn component(&self, dir: Direction) -> &LowRankSphereFun {
        match dir {
            Direction::X => &self.fx,
            Direction::Y => &self.fy,
            Direction::Z => &self.fz,
        }
    }

    pub fn eval(&self, lambda: f64, theta: f64) -> [Complex64; 3] {
        [
            self.fx.eval(lambda, theta),
            self.fy.eval(lambda, theta),
            self.fz.eval(lambda, theta),
        ]
    }

    pub fn vscale(&self) -> f64 {
        self.fx.vscale().max(self.fy.vscale()).max(self.fz.vscale())
    }

    /// `n . v` with `n = (x, y, z)` the outward normal.
    pub fn normal_component(&self) -> Result<LowRankSphereFun> {
        mul_coord(&self.fx, Direction::X)?
            .add(&mul_coord(&self.fy, Direction::Y)?)?
            .add(&mul_coord(&self.fz, Direction::Z)?)
    }
}

/// Surface gradient.
pub fn gradient(f: &LowRankSphereFun) -> Result<VectorSphereFun> {
    Ok(VectorSphereFun::new(
        diff_tangential(f, Direction::X)?,
        diff_tangential(f, Direction::Y)?,
        diff_tangential(f, Direction::Z)?,
    ))
}

/// Surface divergence `dt/dx v1 + dt/dy v2 + dt/dz v3`.
pub fn divergence(v: &VectorSphereFun) -> Result<LowRankSphereFun> {
    diff_tangential(&v.fx, Direction::X)?
        .add(&diff_tangential(&v.fy, Direction::Y)?)?
        .add(&diff_tangential(&v.fz, Direction::Z)?)
}

/// Surface curl of a vector field.
pub fn curl_vec(v: &VectorSphereFun) -> Result<VectorSphereFun> {
    use Direction::*;
    let d = |f: &LowRankSphereFun, dir| diff_tangential(f, dir);
    Ok(VectorSphereFun::new(
        d(&v.fz, Y)?.sub(&d(&v.fy, Z)?)?,
        d(&v.fx, Z)?.sub(&d(&v.fz, X)?)?,
        d(&v.fy, X)?.sub(&d(&v.fx, Y)?)?,
    ))
}

/// `n x grad f`, tangent to the sphere.
pub fn curl_scalar(f: &LowRankSphereFun) -> Result<VectorSphereFun> {
    use Direction::*;
    let g = gradient(f)?;
    let xm = |h: &LowRankSphereFun, dir| mul_coord(h, dir);
    Ok(VectorSphereFun::new(
        xm(&g.fz, Y)?.sub(&xm(&g.fy, Z)?)?,
        xm(&g.fx, Z)?.sub(&xm(&g.fz, X)?)?,
        xm(&g.fy, X)?.sub(&xm(&g.fx, Y)?)?,
    ))
}

/// `(curl v) . n`.
pub fn vorticity(v: &VectorSphereFun) -> Result<LowRankSphereFun> {
    curl_vec(v)?.normal_component()
}
