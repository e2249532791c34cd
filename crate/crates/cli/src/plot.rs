//! Sampling on the physical domain and export as CSV, PGM or PPM.

use std::io::{self, Write};

use num_complex::Complex64;
use spherekit::LowRankSphereFun;

use crate::colormap::VIRIDIS;

/// Values on `theta_i = pi i / (m - 1)` (rows, north pole first) by `lambda_k = -pi + 2 pi k / n`.
#[derive(Debug, Clone)]
pub struct PhysicalGrid {
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
}

/// Evaluates every factor once per node, then combines: `O(K (m + n) + K m n)` work.
pub fn sample_physical(f: &LowRankSphereFun, m: usize, n: usize) -> PhysicalGrid {
    use std::f64::consts::PI;
    let theta: Vec<f64> = (0..m)
        .map(|i| {
            if m == 1 {
                0.0
            } else {
                PI * i as f64 / (m - 1) as f64
            }
        })
        .collect();
    let lambda: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect();
    let mut values = vec![vec![Complex64::new(0.0, 0.0); n]; m];
    for ((d, c), r) in f.weights().iter().zip(f.cols()).zip(f.rows()) {
        let cv: Vec<Complex64> = theta.iter().map(|&t| d * c.eval(t)).collect();
        let rv: Vec<Complex64> = lambda.iter().map(|&l| r.eval(l)).collect();
        for (row, ci) in values.iter_mut().zip(&cv) {
            for (v, rk) in row.iter_mut().zip(&rv) {
                *v += ci * rk;
            }
        }
    }
    PhysicalGrid {
        theta,
        lambda,
        values,
    }
}

pub fn write_csv<W: Write>(g: &PhysicalGrid, out: &mut W) -> io::Result<()> {
    writeln!(out, "lambda,theta,re,im")?;
    for (t, row) in g.theta.iter().zip(&g.values) {
        for (l, v) in g.lambda.iter().zip(row) {
            writeln!(out, "{l:?},{t:?},{:?},{:?}", v.re, v.im)?;
        }
    }
    Ok(())
}

// Real parts mapped linearly onto 0..=255.
fn levels(g: &PhysicalGrid) -> Vec<Vec<u8>> {
    let (lo, hi) = g
        .values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v.re), hi.max(v.re))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    g.values
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| (((v.re - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8)
                .collect()
        })
        .collect()
}

pub fn write_pgm<W: Write>(g: &PhysicalGrid, out: &mut W) -> io::Result<()> {
    let lv = levels(g);
    write!(out, "P5\n{} {}\n255\n", g.lambda.len(), g.theta.len())?;
    for row in lv {
        out.write_all(&row)?;
    }
    Ok(())
}

pub fn write_ppm<W: Write>(g: &PhysicalGrid, out: &mut W) -> io::Result<()> {
    let lv = levels(g);
    write!(out, "P6\n{} {}\n255\n", g.lambda.len(), g.theta.len())?;
    for row in lv {
        for l in row {
            out.write_all(&VIRIDIS[l as usize])?;
        }
    }
    Ok(())
}
