//! Real spherical harmonics, mainly as test functions with known Laplacian eigenvalues.

use std::f64::consts::PI;

/// Associated Legendre function `P_l^m(x)` without the Condon-Shortley phase, `0 <= m <= l`.
pub fn legendre(l: usize, m: usize, x: f64) -> f64 {
    assert!(m <= l, "legendre: m = {m} > l = {l}");
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 0..m {
        pmm *= (2 * i + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    let mut pm2 = pmm;
    for ll in m + 2..=l {
        let p = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pm2) / (ll - m) as f64;
        pm2 = pm1;
        pm1 = p;
    }
    pm1
}

fn factorial_ratio(l: usize, m: usize) -> f64 {
    // (l - m)! / (l + m)!
    ((l - m + 1)..=(l + m)).fold(1.0, |acc, i| acc / i as f64)
}

/// Orthonormal real harmonic: `cos(m lambda)` for `m > 0`, `sin(|m| lambda)` for `m < 0`.
pub fn real_harmonic(l: usize, m: i64, lambda: f64, theta: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "real_harmonic: |m| = {am} > l = {l}");
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial_ratio(l, am)).sqrt();
    let p = norm * legendre(l, am, theta.cos());
    match m.signum() {
        0 => p,
        1 => std::f64::consts::SQRT_2 * p * (am as f64 * lambda).cos(),
        _ => std::f64::consts::SQRT_2 * p * (am as f64 * lambda).sin(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        for &x in &[-0.9f64, -0.2, 0.0, 0.4, 1.0] {
            let s = (1.0 - x * x).sqrt();
            assert!((legendre(0, 0, x) - 1.0).abs() < 1e-15);
            assert!((legendre(1, 0, x) - x).abs() < 1e-15);
            assert!((legendre(1, 1, x) - s).abs() < 1e-15);
            assert!((legendre(2, 0, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
            assert!((legendre(2, 1, x) - 3.0 * x * s).abs() < 1e-15);
            assert!((legendre(2, 2, x) - 3.0 * s * s).abs() < 1e-14);
            assert!((legendre(3, 0, x) - 0.5 * (5.0 * x.powi(3) - 3.0 * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn orthonormal_by_quadrature() {
        // Midpoint rule in theta, trapezoid in lambda: exact enough for low degrees.
        let (nt, nl) = (400, 64);
        let ip = |a: (usize, i64), b: (usize, i64)| {
            let mut s = 0.0;
            for i in 0..nt {
                let t = PI * (i as f64 + 0.5) / nt as f64;
                for k in 0..nl {
                    let l = 2.0 * PI * k as f64 / nl as f64;
                    s += real_harmonic(a.0, a.1, l, t) * real_harmonic(b.0, b.1, l, t) * t.sin();
                }
            }
            s * (PI / nt as f64) * (2.0 * PI / nl as f64)
        };
        assert!((ip((2, 1), (2, 1)) - 1.0).abs() < 1e-4);
        assert!((ip((3, -2), (3, -2)) - 1.0).abs() < 1e-4);
        assert!(ip((2, 1), (3, 1)).abs() < 1e-4);
        assert!(ip((2, 1), (2, -1)).abs() < 1e-10);
    }
}
