//! Shared generators for integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use spherekit::SphereSource;

/// One separable term `c(theta) r(lambda)` of a synthetic doubled function.
#[derive(Debug, Clone)]
struct Term {
    odd: bool,
    // even: sin^2(t) * sum a_l cos(l t); odd: sum a_l sin((l + 1) t)
    theta: Vec<f64>,
    // (k, cos coefficient, sin coefficient)
    lambda: Vec<(usize, f64, f64)>,
}

impl Term {
    fn col(&self, t: f64) -> f64 {
        if self.odd {
            self.theta
                .iter()
                .enumerate()
                .map(|(l, a)| a * ((l + 1) as f64 * t).sin())
                .sum()
        } else {
            let s = t.sin();
            s * s
                * self
                    .theta
                    .iter()
                    .enumerate()
                    .map(|(l, a)| a * (l as f64 * t).cos())
                    .sum::<f64>()
        }
    }

    fn row(&self, x: f64) -> f64 {
        self.lambda
            .iter()
            .map(|&(k, a, b)| a * (k as f64 * x).cos() + b * (k as f64 * x).sin())
            .sum()
    }
}

/// A real band-limited BMC-I function of exact rank `K`, built from even and odd terms.
#[derive(Debug, Clone)]
pub struct Synthetic {
    terms: Vec<Term>,
}

impl Synthetic {
    /// `rank` terms with factors of degree at most `degree` (at most 7 terms of each parity).
    pub fn random<R: Rng>(rng: &mut R, rank: usize, degree: usize) -> Self {
        assert!(degree >= 2);
        let mut terms = Vec::with_capacity(rank);
        let mut n_even = 0;
        for _ in 0..rank {
            let room_even = n_even < degree.min(7);
            let room_odd = terms.len() - n_even < (degree - 1).min(7);
            let odd = if room_even && room_odd {
                rng.gen_bool(0.5)
            } else {
                !room_even
            };
            if !odd {
                n_even += 1;
            }
            let nt = if odd { degree } else { degree - 1 };
            let theta = (0..nt).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ks = (0..=degree).filter(|k| (k % 2 == 1) == odd);
            let lambda = ks
                .map(|k| {
                    let b = if k == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                    (k, rng.gen_range(-1.0..1.0), b)
                })
                .collect();
            terms.push(Term { odd, theta, lambda });
        }
        Self { terms }
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn eval(&self, lambda: f64, theta: f64) -> f64 {
        self.terms.iter().map(|t| t.col(theta) * t.row(lambda)).sum()
    }
}

impl SphereSource for Synthetic {
    fn value(&self, lambda: f64, theta: f64) -> Complex64 {
        Complex64::new(self.eval(lambda, theta), 0.0)
    }
    fn doubled(&self, lambda: f64, theta: f64) -> Complex64 {
        Complex64::new(self.eval(lambda, theta), 0.0)
    }
}

/// Uniform random point on the unit sphere as `(lambda, theta)`.
pub fn random_sph<R: Rng>(rng: &mut R) -> (f64, f64) {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let lambda = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    (lambda, z.acos())
}

pub fn max_diff(a: &ndarray::Array2<Complex64>, b: &ndarray::Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (p, q)| m.max((p - q).norm()))
}

pub fn max_abs(a: &ndarray::Array2<Complex64>) -> f64 {
    a.iter().fold(0.0, |m, p| m.max(p.norm()))
}
