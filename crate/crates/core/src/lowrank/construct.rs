//! Two-phase adaptive constructor.
//!
//! Phase 1 runs complete-pivoting GE on a doubled `g x g` sample grid to find the skeleton
//! (pivot locations and their even/odd case). Phase 2 samples the function only along the
//! skeleton lines, repeats the elimination on those lines at increasing resolution, and
//! stops once every column and row has a negligible Fourier tail.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Result, SphereError};
use crate::fourier::{analyze_1d, CoeffVector};
use crate::sphere_domain::{check_even, BmcGrid, SphereSource};

use super::pivot::{ge_step_in_place, pivot_search, split_terms, zero_out_grid, GridTerm, PivotBlock};
use super::{LowRankSphereFun, Parity};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fraction of the highest Fourier modes inspected by the resolution test.
const TAIL_FRACTION: f64 = 0.125;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructorConfig {
    /// Coupling parameter of the 2x2 pseudoinverse, in `[0, 1]`.
    pub alpha: f64,
    /// Relative tolerance; scaled by [`effective_tolerance`] before use.
    pub tol: f64,
    pub max_rank: usize,
    /// Largest sample count in either direction.
    pub max_grid: usize,
    /// Size of the first phase-1 grid.
    pub min_grid: usize,
}

impl Default for ConstructorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            tol: f64::EPSILON,
            max_rank: 512,
            max_grid: 4096,
            min_grid: 16,
        }
    }
}

impl ConstructorConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SphereError::Precondition(format!(
                "alpha = {} must lie in [0, 1]",
                self.alpha
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SphereError::Precondition(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        check_even(self.min_grid, "min_grid")?;
        Ok(())
    }
}

/// What happened during one call to the constructor.
#[derive(Debug, Clone, Default)]
pub struct ConstructionReport {
    /// Side of the accepted phase-1 grid.
    pub phase1_grid: usize,
    /// Phase-1 grids tried, in order.
    pub grids_tried: Vec<usize>,
    pub vscale: f64,
    /// Absolute residual threshold used in both phases.
    pub threshold: f64,
    /// Meridian used for the pole correction, if one was needed.
    pub pole_lambda: Option<f64>,
    pub pivots: Vec<PivotBlock>,
    /// One entry per elimination step of every phase-1 run, the pole correction included.
    pub growth: Vec<StepGrowth>,
    /// Final `(m, n)`.
    pub size: (usize, usize),
}

impl ConstructionReport {
    /// Largest growth per rank-one update over all steps.
    pub fn max_growth(&self) -> f64 {
        self.growth
            .iter()
            .map(StepGrowth::per_rank_one)
            .fold(0.0, f64::max)
    }
}

/// Residual growth `max|e_k| / max|e_{k-1}|` of one step that added `rank` terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGrowth {
    pub ratio: f64,
    pub rank: usize,
}

impl StepGrowth {
    /// A rank-2 step counts as two rank-one updates: `ratio^(1/rank)`.
    pub fn per_rank_one(&self) -> f64 {
        self.ratio.powf(1.0 / self.rank.max(1) as f64)
    }
}

fn max_abs(e: &Array2<Complex64>) -> f64 {
    e.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// Absolute threshold `g^(2/3) * pi * max(|grad f|, vscale) * tol` for a sampled grid.
///
/// The gradient is estimated by one-sided differences, so rounding in steep functions
/// does not force the elimination to chase noise.
pub fn effective_tolerance(g: &BmcGrid, tol: f64) -> f64 {
    let (m, n) = (g.m(), g.n());
    let v = g.values();
    let (ht, hl) = (2.0 * PI / m as f64, 2.0 * PI / n as f64);
    let mut jac = 0.0f64;
    for j in 0..m {
        for k in 0..n {
            let here = v[[j, k]];
            jac = jac
                .max((v[[j, (k + 1) % n]] - here).norm() / hl)
                .max((v[[(j + 1) % m, k]] - here).norm() / ht);
        }
    }
    let size = m.max(n) as f64;
    size.powf(2.0 / 3.0) * PI * jac.max(g.max_abs()) * tol
}

/// Maximum modulus over the `g x g` phase-1 grid.
pub fn vscale_estimate<S: SphereSource>(f: &S, g: usize) -> Result<f64> {
    Ok(f.grid(g, g)?.max_abs())
}

struct PhaseOne {
    pole_col: Option<usize>,
    pivots: Vec<PivotBlock>,
    terms: Vec<GridTerm>,
    growth: Vec<StepGrowth>,
    residual: f64,
    converged: bool,
}

/// GE with complete pivoting on a grid until `max|e| <= threshold` or more than `limit` terms.
fn phase_one(grid: &BmcGrid, threshold: f64, alpha: f64, limit: usize) -> Result<PhaseOne> {
    let (m, n) = (grid.m(), grid.n());
    let mut e = grid.values().clone();
    let mut out = PhaseOne {
        pole_col: None,
        pivots: vec![],
        terms: vec![],
        growth: vec![],
        residual: max_abs(&e),
        converged: false,
    };
    let mut prev = out.residual;

    let pole = (0..n)
        .map(|k| e[[0, k]].norm().max(e[[m / 2, k]].norm()))
        .fold(0.0, f64::max);
    if pole > threshold {
        let k0 = (n / 2..n)
            .max_by(|&p, &q| {
                let (a, b) = (col_max(&e, p), col_max(&e, q));
                // prefer the smaller index on ties
                a.partial_cmp(&b).unwrap().then(q.cmp(&p))
            })
            .unwrap();
        let c0 = zero_out_grid(&mut e, k0);
        out.terms.push(GridTerm {
            d: Complex64::new(1.0, 0.0),
            col: c0,
            row: vec![Complex64::new(1.0, 0.0); n],
            parity: Parity::Even,
        });
        out.pole_col = Some(k0);
        let now = max_abs(&e);
        out.growth.push(StepGrowth {
            ratio: ratio(now, prev),
            rank: 1,
        });
        prev = now;
    }

    loop {
        out.residual = prev;
        if prev <= threshold {
            out.converged = true;
            break;
        }
        if out.terms.len() > limit {
            break;
        }
        let g = BmcGrid::new(e)?;
        let found = pivot_search(&g, alpha)?;
        e = g.into_values();
        let Some(p) = found else {
            out.converged = true;
            break;
        };
        let added = ge_step_in_place(&mut e, &p)?;
        let rank = added.len();
        out.terms.extend(added);
        out.pivots.push(p);
        let now = max_abs(&e);
        out.growth.push(StepGrowth {
            ratio: ratio(now, prev),
            rank,
        });
        prev = now;
    }
    Ok(out)
}

fn col_max(e: &Array2<Complex64>, k: usize) -> f64 {
    e.column(k).iter().fold(0.0, |a, v| a.max(v.norm()))
}

fn ratio(now: f64, prev: f64) -> f64 {
    if prev == 0.0 {
        0.0
    } else {
        now / prev
    }
}

fn to_coeffs(terms: &[GridTerm], m: usize, n: usize, vscale: f64) -> Result<LowRankSphereFun> {
    let mut f = LowRankSphereFun::zero(m, n)?.with_vscale(vscale);
    for t in terms {
        f.push_term(t.d, analyze_1d(&t.col)?, analyze_1d(&t.row)?, t.parity);
    }
    Ok(f)
}

/// Elimination restricted to the skeleton lines on an `m x n` grid.
fn skeleton_terms<S: SphereSource>(
    src: &S,
    g: usize,
    pole_lambda: Option<f64>,
    pivots: &[PivotBlock],
    m: usize,
    n: usize,
) -> Vec<GridTerm> {
    let mut terms: Vec<GridTerm> = Vec::with_capacity(2 * pivots.len() + 1);
    if let Some(l0) = pole_lambda {
        let b = src.meridian(l0, m);
        terms.push(GridTerm {
            d: Complex64::new(1.0, 0.0),
            col: (0..m).map(|j| 0.5 * (b[j] + b[(m - j) % m])).collect(),
            row: vec![Complex64::new(1.0, 0.0); n],
            parity: Parity::Even,
        });
    }
    for p in pivots {
        let kb = p.col * (n / g);
        let jb = p.row * (m / g);
        let mut col_b = src.meridian(p.lambda_star, m);
        let mut row_p = src.latitude(p.theta_star, n);
        for t in &terms {
            let rk = t.d * t.row[kb];
            for (v, c) in col_b.iter_mut().zip(&t.col) {
                *v -= c * rk;
            }
            let cj = t.d * t.col[jb];
            for (v, r) in row_p.iter_mut().zip(&t.row) {
                *v -= cj * r;
            }
        }
        let a = col_b[(m - jb) % m];
        let b = col_b[jb];
        let one = Complex64::new(1.0, 0.0);
        let m_even = if p.m_even != ZERO && a + b != ZERO {
            one / (a + b)
        } else {
            ZERO
        };
        let m_odd = if p.m_odd != ZERO && a - b != ZERO {
            one / (a - b)
        } else {
            ZERO
        };
        terms.extend(split_terms(&col_b, &row_p, m_even, m_odd));
    }
    terms
}

/// Whether every term's column (resp. row) tail contributes less than `threshold`.
fn tails_resolved(
    terms: &[GridTerm],
    cols: &[CoeffVector],
    rows: &[CoeffVector],
    threshold: f64,
) -> (bool, bool) {
    let mut col_ok = true;
    let mut row_ok = true;
    for (t, (c, r)) in terms.iter().zip(cols.iter().zip(rows)) {
        let cmax = t.col.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        let rmax = t.row.iter().fold(0.0f64, |a, v| a.max(v.norm()));
        let w = t.d.norm();
        if w * c.tail_max(TAIL_FRACTION) * rmax >= threshold {
            col_ok = false;
        }
        if w * cmax * r.tail_max(TAIL_FRACTION) >= threshold {
            row_ok = false;
        }
    }
    (col_ok, row_ok)
}

/// The phase-1 grid is accepted only if its slices are resolved as well; otherwise a
/// coarse grid can look exactly low rank simply because it has few samples.
fn phase_one_resolved(terms: &[GridTerm], threshold: f64) -> Result<bool> {
    let cols = terms
        .iter()
        .map(|t| analyze_1d(&t.col))
        .collect::<Result<Vec<_>>>()?;
    let rows = terms
        .iter()
        .map(|t| analyze_1d(&t.row))
        .collect::<Result<Vec<_>>>()?;
    let (c, r) = tails_resolved(terms, &cols, &rows, threshold);
    Ok(c && r)
}

/// Builds a low-rank approximation of `src` to the configured tolerance.
pub fn construct<S: SphereSource>(src: &S, cfg: &ConstructorConfig) -> Result<LowRankSphereFun> {
    construct_with_report(src, cfg).map(|(f, _)| f)
}

pub fn construct_with_report<S: SphereSource>(
    src: &S,
    cfg: &ConstructorConfig,
) -> Result<(LowRankSphereFun, ConstructionReport)> {
    cfg.validate()?;
    let mut report = ConstructionReport::default();
    let mut g = cfg.min_grid;
    loop {
        report.grids_tried.push(g);
        let grid = src.grid(g, g)?;
        if grid
            .values()
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(SphereError::Domain(
                "function returned a non-finite sample".into(),
            ));
        }
        let vscale = grid.max_abs();
        if vscale == 0.0 {
            report.phase1_grid = g;
            report.size = (2, 2);
            return Ok((LowRankSphereFun::zero(2, 2)?, report));
        }
        let threshold = effective_tolerance(&grid, cfg.tol);
        let p1 = phase_one(&grid, threshold, cfg.alpha, (g / 2).min(cfg.max_rank))?;
        report.growth.extend(&p1.growth);
        report.vscale = vscale;
        report.threshold = threshold;
        let can_refine = 2 * g <= cfg.max_grid && p1.terms.len() <= cfg.max_rank;
        if !(p1.converged && phase_one_resolved(&p1.terms, threshold)?) {
            if can_refine {
                g *= 2;
                continue;
            }
            let best = to_coeffs(&p1.terms, g, g, vscale)?;
            return Err(SphereError::Unresolved {
                reason: format!(
                    "phase-1 rank {} on a {g}x{g} grid with residual {:.3e} (threshold {:.3e})",
                    p1.terms.len(),
                    p1.residual,
                    threshold
                ),
                best: Box::new(best),
            });
        }
        report.phase1_grid = g;
        report.pole_lambda = p1.pole_col.map(|k| grid.lambda(k));
        report.pivots = p1.pivots.clone();

        let f = phase_two(src, g, &report, cfg)?;
        if sample_test(src, &f, threshold) || !can_refine {
            report.size = (f.m(), f.n());
            return Ok((f, report));
        }
        log::debug!("sample test failed on the {g}x{g} skeleton; refining");
        g *= 2;
    }
}

/// Resamples the skeleton at doubling resolutions until every slice is resolved.
fn phase_two<S: SphereSource>(
    src: &S,
    g: usize,
    report: &ConstructionReport,
    cfg: &ConstructorConfig,
) -> Result<LowRankSphereFun> {
    let (threshold, vscale) = (report.threshold, report.vscale);
    let (mut m, mut n) = (g, g);
    loop {
        let terms = skeleton_terms(src, g, report.pole_lambda, &report.pivots, m, n);
        let cols = terms
            .iter()
            .map(|t| analyze_1d(&t.col))
            .collect::<Result<Vec<_>>>()?;
        let rows = terms
            .iter()
            .map(|t| analyze_1d(&t.row))
            .collect::<Result<Vec<_>>>()?;
        let (col_ok, row_ok) = tails_resolved(&terms, &cols, &rows, threshold);
        if col_ok && row_ok {
            let mut f = LowRankSphereFun::zero(m, n)?.with_vscale(vscale);
            for ((t, c), r) in terms.iter().zip(cols).zip(rows) {
                f.push_term(t.d, c, r, t.parity);
            }
            return Ok(f);
        }
        let (m2, n2) = (if col_ok { m } else { 2 * m }, if row_ok { n } else { 2 * n });
        if m2 > cfg.max_grid || n2 > cfg.max_grid {
            let best = to_coeffs(&terms, m, n, vscale)?;
            return Err(SphereError::Unresolved {
                reason: format!("skeleton not resolved with {m}x{n} samples"),
                best: Box::new(best),
            });
        }
        m = m2;
        n = n2;
    }
}

/// Compares the approximant with the source at a few fixed off-grid points.
fn sample_test<S: SphereSource>(src: &S, f: &LowRankSphereFun, threshold: f64) -> bool {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    (1..=12).all(|i| {
        let u = (i as f64 * GOLDEN).fract();
        let v = (i as f64 * GOLDEN * GOLDEN + 0.1).fract();
        let (l, t) = (-PI + 2.0 * PI * u, PI * v);
        (src.value(l, t) - f.eval(l, t)).norm() <= 1e3 * threshold
    })
}

/// Low-rank form of an already sampled doubled grid, at the grid's own resolution.
pub fn compress(grid: &BmcGrid, cfg: &ConstructorConfig) -> Result<LowRankSphereFun> {
    cfg.validate()?;
    let (m, n) = (grid.m(), grid.n());
    let vscale = grid.max_abs();
    if vscale == 0.0 {
        return LowRankSphereFun::zero(m, n);
    }
    let threshold = effective_tolerance(grid, cfg.tol);
    let p1 = phase_one(grid, threshold, cfg.alpha, m.max(n) + 2)?;
    to_coeffs(&p1.terms, m, n, vscale)
}
