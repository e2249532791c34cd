//! Command-line definitions and their implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use spherekit::calculus::{
    curl_scalar, curl_vec, diff_tangential, divergence, gradient, recompress, sum2, vorticity, Direction,
    VectorSphereFun,
};
use spherekit::poisson::{residual, rhs_norm, solve, PoissonProblem, PoissonSolution};
use spherekit::sphere_domain::{CartPoint, SphPoint};
use spherekit::{construct, ConstructorConfig, LowRankSphereFun};

use crate::error::CliError;
use crate::expr::{parse_expr, Coords, Expr};
use crate::plot::{sample_physical, write_csv, write_pgm, write_ppm};
use crate::sfun::SfunFile;

#[derive(Debug, Parser)]
#[command(
    name = "spherekit",
    version,
    about = "Low-rank approximation, calculus and Poisson solves on the unit sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoordsArg {
    Cart,
    Sph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirArg {
    X,
    Y,
    Z,
}

impl From<DirArg> for Direction {
    fn from(d: DirArg) -> Self {
        match d {
            DirArg::X => Direction::X,
            DirArg::Y => Direction::Y,
            DirArg::Z => Direction::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pgm,
    Ppm,
}

#[derive(Debug, Args)]
pub struct ExprArgs {
    /// Expression in x, y, z (or lam, th with --coords sph).
    #[arg(long, allow_hyphen_values = true)]
    pub expr: String,
    #[arg(long, value_enum, default_value_t = CoordsArg::Cart)]
    pub coords: CoordsArg,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("components").args(["x", "y", "z"]).multiple(true)))]
pub struct VectorArgs {
    /// x component file.
    #[arg(long, requires_all = ["y", "z"])]
    pub x: Option<PathBuf>,
    #[arg(long, requires_all = ["x", "z"])]
    pub y: Option<PathBuf>,
    #[arg(long, requires_all = ["x", "y"])]
    pub z: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a low-rank approximation from an expression.
    Construct {
        #[command(flatten)]
        expr: ExprArgs,
        /// Relative tolerance (default: machine epsilon).
        #[arg(long, allow_negative_numbers = true)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate at a point given as x,y,z (on the sphere) or lam,th.
    #[command(group(ArgGroup::new("where").required(true).args(["point", "sph"])))]
    Eval {
        file: PathBuf,
        #[arg(long, value_parser = parse_list::<3>, allow_hyphen_values = true)]
        point: Option<[f64; 3]>,
        #[arg(long, value_parser = parse_list::<2>, allow_hyphen_values = true)]
        sph: Option<[f64; 2]>,
    },
    /// Surface integral.
    Sum2 { file: PathBuf },
    /// Tangential derivative.
    Diff {
        file: PathBuf,
        #[arg(long, value_enum)]
        dir: DirArg,
        #[arg(long)]
        out: PathBuf,
        /// Re-run the constructor on the result to reduce its rank.
        #[arg(long)]
        recompress: bool,
    },
    /// Surface gradient; writes STEM_x.sfun, STEM_y.sfun, STEM_z.sfun.
    Grad {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        recompress: bool,
    },
    /// Surface divergence of a vector field.
    Div {
        #[command(flatten)]
        field: VectorArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        recompress: bool,
    },
    /// Surface curl: of a scalar file (n x grad f), or of a vector field given by --x --y --z.
    Curl {
        file: Option<PathBuf>,
        #[command(flatten)]
        field: VectorArgs,
        /// Output stem: writes STEM_x.sfun, STEM_y.sfun, STEM_z.sfun.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        recompress: bool,
    },
    /// Vorticity n . curl(v) of a vector field.
    Vort {
        #[command(flatten)]
        field: VectorArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        recompress: bool,
    },
    /// Solve lap u = f for mean-zero u with an m x n Fourier discretization.
    #[command(group(ArgGroup::new("source").required(true).args(["expr", "input"])))]
    Poisson {
        #[arg(long, allow_hyphen_values = true)]
        expr: Option<String>,
        #[arg(long, value_enum, default_value_t = CoordsArg::Cart)]
        coords: CoordsArg,
        /// Right-hand side as an sfun file.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the constructed right-hand side.
        #[arg(long)]
        rhs_out: Option<PathBuf>,
    },
    /// Sample on [-pi, pi] x [0, pi] (m latitudes including both poles, n longitudes).
    Sample {
        file: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Residual of a Poisson solution against its right-hand side.
    Residual {
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        sol: PathBuf,
    },
    /// Timings.
    Bench {
        #[command(subcommand)]
        target: BenchTarget,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchTarget {
    /// Poisson solve time for m = n in --sizes.
    Poisson {
        #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
        sizes: Vec<usize>,
        #[arg(long, default_value = "sin(50*x*y*z)", allow_hyphen_values = true)]
        expr: String,
        /// Repetitions per size; the minimum is reported.
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
}

/// `a,b,c` with exactly `N` numbers.
fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!(
            "expected {N} comma-separated numbers, got {}",
            parts.len()
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("'{p}' is not a number"))?;
    }
    Ok(out)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn parse_with_coords(text: &str, coords: CoordsArg) -> Result<Expr, CliError> {
    let e = parse_expr(text)?;
    let want = match coords {
        CoordsArg::Cart => Coords::Cart,
        CoordsArg::Sph => Coords::Sph,
    };
    match e.coords {
        Some(c) if c != want => Err(CliError::Usage(format!(
            "expression uses {c} variables but --coords is {want}"
        ))),
        _ => Ok(e),
    }
}

fn load(path: &Path) -> Result<(LowRankSphereFun, f64), CliError> {
    let file = SfunFile::load(path)?;
    Ok((file.to_fun()?, file.tolerance))
}

fn save(f: &LowRankSphereFun, tol: f64, path: &Path) -> Result<(), CliError> {
    SfunFile::from_fun(f, tol).save(path)?;
    Ok(())
}

fn config(tol: f64) -> ConstructorConfig {
    ConstructorConfig {
        tol,
        ..ConstructorConfig::default()
    }
}

fn finish(f: LowRankSphereFun, tol: f64, again: bool) -> Result<LowRankSphereFun, CliError> {
    if again {
        Ok(recompress(&f, &config(tol))?)
    } else {
        Ok(f)
    }
}

fn stem_path(stem: &Path, suffix: &str) -> PathBuf {
    let s = stem.to_string_lossy();
    let base = s.strip_suffix(".sfun").unwrap_or(&s);
    PathBuf::from(format!("{base}_{suffix}.sfun"))
}

fn load_vector(v: &VectorArgs) -> Result<(VectorSphereFun, f64), CliError> {
    let (Some(x), Some(y), Some(z)) = (&v.x, &v.y, &v.z) else {
        return Err(CliError::Usage("a vector field needs --x, --y and --z".into()));
    };
    let (fx, tx) = load(x)?;
    let (fy, ty) = load(y)?;
    let (fz, tz) = load(z)?;
    Ok((VectorSphereFun::new(fx, fy, fz), tx.max(ty).max(tz)))
}

fn save_vector(
    v: &VectorSphereFun,
    tol: f64,
    again: bool,
    stem: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    for (dir, name) in Direction::ALL.iter().zip(["x", "y", "z"]) {
        let f = finish(v.component(*dir).clone(), tol, again)?;
        let path = stem_path(stem, name);
        save(&f, tol, &path)?;
        report_written(out, &f, &path)?;
    }
    Ok(())
}

/// Shortest of `{:.5}`-style significant digits, like `%g`.
fn fmt_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{:.5e}", v);
    let parsed: f64 = s.parse().unwrap_or(v);
    let a = parsed.abs();
    if (1e-4..1e6).contains(&a) {
        let t = format!("{parsed:.6}");
        t.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Imaginary parts below `1e-13 scale` are rounding noise from complex arithmetic on real data.
fn fmt_complex(v: Complex64, scale: f64) -> String {
    if v.im.abs() <= 1e-13 * scale.max(v.re.abs()) {
        format!("{:?}", v.re)
    } else {
        format!(
            "{:?} {} {:?}i",
            v.re,
            if v.im < 0.0 { '-' } else { '+' },
            v.im.abs()
        )
    }
}

fn w(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text)
        .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    out.write_all(b"\n")
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

/// The summary block printed for a constructed function.
pub fn summary(f: &LowRankSphereFun) -> String {
    format!(
        "     spherefun object:\n         domain        rank    vertical scale\n       unit sphere  {:>6}    {:>14}",
        f.rank(),
        fmt_g(f.vscale())
    )
}

fn report_written(out: &mut dyn Write, f: &LowRankSphereFun, path: &Path) -> Result<(), CliError> {
    w(
        out,
        format_args!(
            "wrote {} (rank {}, {}x{})",
            path.display(),
            f.rank(),
            f.m(),
            f.n()
        ),
    )
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Construct { expr, tol, out: path } => {
            let e = parse_with_coords(&expr.expr, expr.coords)?;
            let tol = tol.unwrap_or(f64::EPSILON);
            let f = construct(&e, &config(tol))?;
            w(out, format_args!("f =\n{}", summary(&f)))?;
            save(&f, tol, &path)?;
            report_written(out, &f, &path)
        }
        Command::Eval { file, point, sph } => {
            let (f, _) = load(&file)?;
            let v = match (point, sph) {
                (Some(p), _) => {
                    let q = CartPoint::new(p[0], p[1], p[2]);
                    // typed-in coordinates are rarely exact; anything farther off is a mistake
                    let off = (q.norm() - 1.0).abs();
                    if off.is_nan() || off > 1e-6 {
                        return Err(CliError::Precondition(format!(
                            "point ({}, {}, {}) is not on the unit sphere (|p| = {})",
                            q.x,
                            q.y,
                            q.z,
                            q.norm()
                        )));
                    }
                    f.eval_cart(q)?
                }
                (None, Some(s)) => {
                    let p = SphPoint::new(s[0], s[1]);
                    if !(0.0..=std::f64::consts::PI).contains(&p.theta) {
                        return Err(CliError::Precondition(format!(
                            "th = {} is outside [0, pi]",
                            p.theta
                        )));
                    }
                    f.eval(p.lambda, p.theta)
                }
                (None, None) => unreachable!("clap requires --point or --sph"),
            };
            w(out, format_args!("{}", fmt_complex(v, f.vscale())))
        }
        Command::Sum2 { file } => {
            let (f, _) = load(&file)?;
            w(
                out,
                format_args!(
                    "{}",
                    fmt_complex(sum2(&f), 4.0 * std::f64::consts::PI * f.vscale())
                ),
            )
        }
        Command::Diff {
            file,
            dir,
            out: path,
            recompress,
        } => {
            let (f, tol) = load(&file)?;
            let g = finish(diff_tangential(&f, dir.into())?, tol, recompress)?;
            save(&g, tol, &path)?;
            report_written(out, &g, &path)
        }
        Command::Grad {
            file,
            out: stem,
            recompress,
        } => {
            let (f, tol) = load(&file)?;
            save_vector(&gradient(&f)?, tol, recompress, &stem, out)
        }
        Command::Div {
            field,
            out: path,
            recompress,
        } => {
            let (v, tol) = load_vector(&field)?;
            let g = finish(divergence(&v)?, tol, recompress)?;
            save(&g, tol, &path)?;
            report_written(out, &g, &path)
        }
        Command::Curl {
            file,
            field,
            out: stem,
            recompress,
        } => {
            let (v, tol) = match (&file, &field.x) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "give either a scalar file or --x --y --z, not both".into(),
                    ))
                }
                (Some(path), None) => {
                    let (f, tol) = load(path)?;
                    (curl_scalar(&f)?, tol)
                }
                (None, _) => {
                    let (v, tol) = load_vector(&field)?;
                    (curl_vec(&v)?, tol)
                }
            };
            save_vector(&v, tol, recompress, &stem, out)
        }
        Command::Vort {
            field,
            out: path,
            recompress,
        } => {
            let (v, tol) = load_vector(&field)?;
            let g = finish(vorticity(&v)?, tol, recompress)?;
            save(&g, tol, &path)?;
            report_written(out, &g, &path)
        }
        Command::Poisson {
            expr,
            coords,
            input,
            m,
            n,
            out: path,
            rhs_out,
        } => {
            let (f, tol) = match (expr, input) {
                (Some(text), _) => {
                    let e = parse_with_coords(&text, coords)?;
                    (construct(&e, &ConstructorConfig::default())?, f64::EPSILON)
                }
                (None, Some(p)) => load(&p)?,
                (None, None) => unreachable!("clap requires --expr or --in"),
            };
            if let Some(p) = &rhs_out {
                save(&f, tol, p)?;
                report_written(out, &f, p)?;
            }
            let t = Instant::now();
            let pb = PoissonProblem::from_function(&f, m, n)?;
            let sol = solve(&pb)?;
            let secs = t.elapsed().as_secs_f64();
            let r = residual(&pb, &sol)?;
            w(
                out,
                format_args!(
                    "solved {m}x{n} in {secs:.3} s: residual {:.3e} (relative {:.3e}), constraint {:.3e}",
                    r.max,
                    r.max / rhs_norm(&pb).max(f64::MIN_POSITIVE),
                    r.constraint
                ),
            )?;
            let u = sol.to_sphere_fun(&config(tol))?;
            save(&u, tol, &path)?;
            report_written(out, &u, &path)
        }
        Command::Sample {
            file,
            m,
            n,
            format,
            out: path,
        } => {
            if m < 2 || n < 1 {
                return Err(CliError::Precondition(format!(
                    "sample grid {m}x{n}: need m >= 2 latitudes and n >= 1 longitudes"
                )));
            }
            let (f, _) = load(&file)?;
            let g = sample_physical(&f, m, n);
            let mut file_out = create(&path)?;
            match format {
                Format::Csv => write_csv(&g, &mut file_out),
                Format::Pgm => write_pgm(&g, &mut file_out),
                Format::Ppm => write_ppm(&g, &mut file_out),
            }
            .and_then(|_| file_out.flush())
            .map_err(|e| io_err(&path, e))?;
            w(out, format_args!("wrote {} ({m}x{n} samples)", path.display()))
        }
        Command::Residual { rhs, sol } => {
            let (f, _) = load(&rhs)?;
            let (u, _) = load(&sol)?;
            let (m, n) = (u.m(), u.n());
            let pb = PoissonProblem::from_function(&f, m, n)?;
            let x = PoissonSolution::new(u.coeffs2().resized(m, n)?.to_dense());
            let r = residual(&pb, &x)?;
            let norm = rhs_norm(&pb).max(f64::MIN_POSITIVE);
            w(out, format_args!("grid              {m}x{n}"))?;
            w(out, format_args!("residual          {:.3e}", r.max))?;
            w(out, format_args!("relative residual {:.3e}", r.max / norm))?;
            w(out, format_args!("discarded row     {:.3e}", r.discarded_row))?;
            w(out, format_args!("constraint        {:.3e}", r.constraint))
        }
        Command::Bench {
            target: BenchTarget::Poisson { sizes, expr, reps },
        } => {
            let e = parse_expr(&expr)?;
            let f = construct(&e, &ConstructorConfig::default())?;
            w(
                out,
                format_args!("{:>8}  {:>12}  {:>12}", "size", "seconds", "assembly"),
            )?;
            for s in sizes {
                let t = Instant::now();
                let pb = PoissonProblem::from_function(&f, s, s)?;
                let assembly = t.elapsed().as_secs_f64();
                let mut best = f64::INFINITY;
                for _ in 0..reps.max(1) {
                    let t = Instant::now();
                    std::hint::black_box(solve(&pb)?);
                    best = best.min(t.elapsed().as_secs_f64());
                }
                w(out, format_args!("{s:>8}  {best:>12.6}  {assembly:>12.6}"))?;
            }
            Ok(())
        }
    }
}

/// Applies `SPHEREKIT_THREADS` to the global thread pool.
pub fn configure_threads() {
    let Ok(v) = std::env::var("SPHEREKIT_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("SPHEREKIT_THREADS: {e}");
            }
        }
        _ => log::warn!("ignoring SPHEREKIT_THREADS={v:?}: expected a positive integer"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<3>("0, -0.5,1e-1").unwrap(), [0.0, -0.5, 0.1]);
        assert!(parse_list::<2>("1,2,3").is_err());
        assert!(parse_list::<2>("1,a").is_err());
    }

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(0.99999999999), "1");
        assert_eq!(fmt_g(2.5), "2.5");
        assert_eq!(fmt_g(1.23456789e-7), "1.23457e-7");
    }

    #[test]
    fn stems() {
        assert_eq!(
            stem_path(Path::new("out/g.sfun"), "x"),
            PathBuf::from("out/g_x.sfun")
        );
        assert_eq!(stem_path(Path::new("g"), "z"), PathBuf::from("g_z.sfun"));
    }

    #[test]
    fn coords_flag_must_match() {
        assert!(parse_with_coords("sin(lam)", CoordsArg::Sph).is_ok());
        assert_eq!(
            parse_with_coords("sin(lam)", CoordsArg::Cart)
                .unwrap_err()
                .exit_code(),
            2
        );
        assert!(parse_with_coords("2*pi", CoordsArg::Sph).is_ok());
    }
}
