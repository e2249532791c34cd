//! Dense reference solver used to check [`super::solve`].
//!
//! The full `mn x mn` system for `sin^2 u_tt + cos sin u_t + u_ll = F` is assembled
//! entry by entry from the action of the operator on a single mode `e^{ij theta} e^{ik lambda}`,
//! with the `(0, 0)` equation replaced by the integral constraint. The sparse system is split
//! into connected components, each solved by dense LU with full pivoting.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;

use super::{PoissonProblem, PoissonSolution};
use crate::calculus::integration_weight;
use crate::error::{Result, SphereError};

/// Largest `m` or `n` the oracle accepts.
pub const MAX_ORACLE_SIZE: usize = 64;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut a = a;
        while self.0[a] != r {
            let next = self.0[a];
            self.0[a] = r;
            a = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn solve_dense_oracle(pb: &PoissonProblem) -> Result<PoissonSolution> {
    let (m, n) = (pb.m(), pb.n());
    if m > MAX_ORACLE_SIZE || n > MAX_ORACLE_SIZE {
        return Err(SphereError::Size(format!(
            "dense oracle is limited to {MAX_ORACLE_SIZE}x{MAX_ORACLE_SIZE}, got {m}x{n}"
        )));
    }
    let idx = |p: usize, c: usize| p * n + c;
    let (hm, hn) = (m as i64 / 2, n as i64 / 2);
    let constrained = idx(m / 2, n / 2);

    // rows[eq] = [(unknown, value)]
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); m * n];
    for p in 0..m {
        for c in 0..n {
            let (j, k) = ((p as i64 - hm) as f64, (c as i64 - hn) as f64);
            let src = idx(p, c);
            let mut emit = |target_p: usize, v: f64| {
                let eq = idx(target_p, c);
                if eq != constrained && v != 0.0 {
                    rows[eq].push((src, Complex64::new(v, 0.0)));
                }
            };
            emit(p, -0.5 * j * j - k * k);
            if p + 2 < m {
                emit(p + 2, 0.25 * (j * j + j));
            }
            if p >= 2 {
                emit(p - 2, 0.25 * (j * j - j));
            }
        }
    }
    for p in 0..m {
        let w = 2.0 * std::f64::consts::PI * integration_weight(p as i64 - hm);
        if w != 0.0 {
            rows[constrained].push((idx(p, n / 2), Complex64::new(w, 0.0)));
        }
    }
    let mut rhs: Vec<Complex64> = (0..m * n).map(|e| pb.rhs()[[e / n, e % n]]).collect();
    rhs[constrained] = Complex64::new(0.0, 0.0);

    let mut uf = UnionFind((0..m * n).collect());
    for (eq, row) in rows.iter().enumerate() {
        for &(u, _) in row {
            uf.union(eq, u);
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..m * n {
        let r = uf.find(i);
        comps.entry(r).or_default().push(i);
    }

    let mut x = vec![Complex64::new(0.0, 0.0); m * n];
    for members in comps.values() {
        let local: BTreeMap<usize, usize> = members.iter().enumerate().map(|(a, &g)| (g, a)).collect();
        let s = members.len();
        let mut a = DMatrix::<Complex64>::zeros(s, s);
        let mut b = DVector::<Complex64>::zeros(s);
        for (r, &eq) in members.iter().enumerate() {
            b[r] = rhs[eq];
            for &(u, v) in &rows[eq] {
                a[(r, local[&u])] += v;
            }
        }
        let lu = a.full_piv_lu();
        let sol = lu.solve(&b).ok_or_else(|| SphereError::Singular {
            mode: (members[0] % n) as i64 - hn,
        })?;
        for (r, &g) in members.iter().enumerate() {
            x[g] = sol[r];
        }
    }
    Ok(PoissonSolution::new(Array2::from_shape_fn((m, n), |(p, c)| {
        x[idx(p, c)]
    })))
}
