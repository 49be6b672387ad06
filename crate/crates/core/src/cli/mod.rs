//! Command-line front end: verification suites, pointwise queries,
//! geodesic traces, grid scans and navigation transforms.

pub mod verify;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::curvature::{flag_curvature_with, riemann, spray_for};
use crate::error::{FinslerError, Result};
use crate::gallery::{self, GalleryEntry};
use crate::measures::s_curvature;
use crate::metrics::{beta_norm, torsion_norms, RandersData};
use crate::navigation::{volume_preservation_check, zermelo_general, zermelo_riemannian};
use crate::spray::{geodesic_integrate, DEFAULT_DT};
use verify::{VerificationReport, VerifyOptions, DEFAULT_MC_SAMPLES, DEFAULT_POINTS, DEFAULT_SEED};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "finsler", version, about = "Curvature and navigation checks for Finsler metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the identity suite for a metric (or the whole gallery).
    Verify {
        /// Metric spec, e.g. `rotation2d` or `slab:kappa=0.5`.
        metric: Option<String>,
        /// Verify every default gallery entry.
        #[arg(long, conflicts_with = "metric")]
        all: bool,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        /// Defaults to $FINSLER_SEED, then 42.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: usize,
        /// Tolerance override `check_id=value`; repeatable.
        #[arg(long = "tol", value_name = "ID=VALUE")]
        tolerances: Vec<String>,
        /// Leave wall time out of the report.
        #[arg(long)]
        omit_timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Riemann operator, Ricci, flag and S-curvature at one point.
    Curvature {
        metric: String,
        /// Base point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        /// Flagpole `y`.
        #[arg(long, allow_hyphen_values = true)]
        dir: String,
        /// Transverse edge `u` of the flag.
        #[arg(long, allow_hyphen_values = true)]
        flag: Option<String>,
    },
    /// Integrate a geodesic and write it as CSV.
    Geodesic {
        metric: String,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        dir: String,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a quantity over a grid of base points.
    Scan {
        metric: String,
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Axes `lo:hi:count`, comma separated, for the leading coordinates.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Values of the remaining coordinates (default 0).
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
        /// Flagpole for K, S and Ric (default e1).
        #[arg(long, allow_hyphen_values = true)]
        dir: Option<String>,
        /// Flag edge for K (default e2).
        #[arg(long, allow_hyphen_values = true)]
        flag: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Navigation data of a Riemannian metric under a drift.
    Navigate {
        /// `euclidean[:n=2]`, `euclidean_cylinder[:n=3]`, `euclidean_whole[:n=2]`,
        /// `poincare[:r=0.5]` or `round_s3`.
        #[arg(long)]
        alpha: String,
        /// `zero`, `rotation[:c=1]`, `radial[:c=1]`, `constant:v0=..,v1=..` or `s3[:eps=0.3]`.
        #[arg(long)]
        drift: String,
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        dir: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "K")]
    K,
    #[value(name = "S")]
    S,
    #[value(name = "Ric")]
    Ric,
    #[value(name = "cartan")]
    Cartan,
    #[value(name = "cartan2")]
    Cartan2,
}

/// Errors caused by the input rather than by a failed computation.
fn is_usage(e: &FinslerError) -> bool {
    matches!(
        e,
        FinslerError::UnknownMetric(_)
            | FinslerError::InvalidParameter(_)
            | FinslerError::Dimension { .. }
            | FinslerError::OutsideDomain { .. }
            | FinslerError::ZeroVector
            | FinslerError::RandersBoundary { .. }
            | FinslerError::DriftTooStrong { .. }
            | FinslerError::DegenerateFlag
    )
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        // reader went away, e.g. `| head`
        Err(FinslerError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_PASS,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Verify {
            metric,
            all,
            points,
            seed,
            mc_samples,
            tolerances,
            omit_timing,
            out,
        } => {
            let opts = VerifyOptions {
                points,
                seed: resolve_seed(seed)?,
                mc_samples,
                tolerances: parse_tolerances(&tolerances)?,
                timing: !omit_timing,
            };
            cmd_verify(metric.as_deref(), all, &opts, out)
        }
        Command::Curvature { metric, at, dir, flag } => {
            let entry = gallery::make(&metric)?;
            let value = cmd_curvature(&entry, &parse_vector(&at)?, &parse_vector(&dir)?, flag.as_deref())?;
            emit(&pretty(&value), None)?;
            Ok(EXIT_PASS)
        }
        Command::Geodesic {
            metric,
            from,
            dir,
            time,
            dt,
            out,
        } => {
            let entry = gallery::make(&metric)?;
            let csv = cmd_geodesic(&entry, &parse_vector(&from)?, &parse_vector(&dir)?, time, dt)?;
            emit(&csv, out)?;
            Ok(EXIT_PASS)
        }
        Command::Scan {
            metric,
            quantity,
            grid,
            base,
            dir,
            flag,
            seed,
            out,
        } => {
            let entry = gallery::make(&metric)?;
            let opt_vec = |s: Option<String>| s.as_deref().map(parse_vector).transpose();
            let value = cmd_scan(
                &entry,
                quantity,
                &grid,
                opt_vec(base)?,
                opt_vec(dir)?,
                opt_vec(flag)?,
                resolve_seed(seed)?,
            )?;
            emit(&pretty(&value), out)?;
            Ok(EXIT_PASS)
        }
        Command::Navigate {
            alpha,
            drift,
            at,
            dir,
            mc_samples,
            seed,
        } => {
            let opt_vec = |s: Option<String>| s.as_deref().map(parse_vector).transpose();
            let value = cmd_navigate(&alpha, &drift, opt_vec(at)?, opt_vec(dir)?, mc_samples, resolve_seed(seed)?)?;
            emit(&pretty(&value), None)?;
            Ok(EXIT_PASS)
        }
    }
}

/// `--seed`, else `$FINSLER_SEED`, else the default.
pub fn resolve_seed(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("FINSLER_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| FinslerError::InvalidParameter(format!("FINSLER_SEED=`{v}` is not a u64"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn parse_tolerances(items: &[String]) -> Result<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|item| {
            let (id, v) = item
                .split_once('=')
                .ok_or_else(|| FinslerError::InvalidParameter(format!("--tol expects ID=VALUE, got `{item}`")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| FinslerError::InvalidParameter(format!("tolerance `{v}` is not a number")))?;
            if !(v >= 0.0) {
                return Err(FinslerError::InvalidParameter(format!("tolerance {v} must be >= 0")));
            }
            Ok((id.to_string(), v))
        })
        .collect()
}

/// Comma-separated decimal vector.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FinslerError::InvalidParameter(format!("`{c}` is not a finite number")))
        })
        .collect()
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(FinslerError::Dimension { expected: n, got: v.len() });
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn cmd_verify(metric: Option<&str>, all: bool, opts: &VerifyOptions, out: Option<PathBuf>) -> Result<i32> {
    let specs: Vec<String> = match (metric, all) {
        (Some(m), false) => vec![m.to_string()],
        (None, true) => gallery::default_specs().into_iter().map(String::from).collect(),
        _ => return Err(FinslerError::InvalidParameter("give a metric spec or --all".into())),
    };
    let entries = specs.iter().map(|s| gallery::make(s)).collect::<Result<Vec<_>>>()?;
    let reports = entries
        .iter()
        .map(|e| verify::verify(e, opts))
        .collect::<Result<Vec<VerificationReport>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let text = if all {
        let value = json!({ "pass": pass, "reports": reports });
        pretty(&value)
    } else {
        reports[0].to_json()
    };
    for r in &reports {
        for c in r.failed() {
            eprintln!(
                "FAIL {} {}: residual {} > tolerance {}{}",
                r.metric,
                c.id,
                c.max_residual,
                c.tolerance,
                c.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default()
            );
        }
    }
    emit(&text, out)?;
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

pub fn cmd_curvature(entry: &GalleryEntry, x: &[f64], y: &[f64], flag: Option<&str>) -> Result<Value> {
    let n = entry.dim();
    check_len(x, n)?;
    check_len(y, n)?;
    let spray = spray_for(entry.metric.clone());
    let r = riemann(spray.as_ref(), x, y)?;
    let k = match flag {
        Some(u) => {
            let u = parse_vector(u)?;
            check_len(&u, n)?;
            Some(flag_curvature_with(entry.metric.as_ref(), spray.as_ref(), x, y, &u)?)
        }
        None => None,
    };
    let s = match entry.density() {
        Some(d) => Some(s_curvature(spray.as_ref(), d.as_ref(), x, y)?),
        None => None,
    };
    Ok(json!({
        "metric": entry.spec(),
        "x": x,
        "y": y,
        "F": entry.metric.eval(x, y),
        "spray": spray.eval(x, y)?,
        "riemann": r.matrix,
        "ricci": r.ricci,
        "flag_curvature": k,
        "s_curvature": s,
    }))
}

pub fn cmd_geodesic(entry: &GalleryEntry, x: &[f64], y: &[f64], time: f64, dt: f64) -> Result<String> {
    let n = entry.dim();
    check_len(x, n)?;
    check_len(y, n)?;
    let spray = spray_for(entry.metric.clone());
    let traj = geodesic_integrate(spray.as_ref(), x, y, time, dt)?;
    let mut csv = String::from("t");
    for i in 1..=n {
        write!(csv, ",x{i}").unwrap();
    }
    for i in 1..=n {
        write!(csv, ",v{i}").unwrap();
    }
    csv.push_str(",F,exit\n");
    let last = traj.points.len() - 1;
    for (k, p) in traj.points.iter().enumerate() {
        write!(csv, "{}", p.t).unwrap();
        for v in p.x.iter().chain(&p.v) {
            write!(csv, ",{v}").unwrap();
        }
        let speed = p.speed.unwrap_or(f64::NAN);
        let exit = u8::from(traj.exited && k == last);
        writeln!(csv, ",{speed},{exit}").unwrap();
    }
    Ok(csv)
}

/// `lo:hi:count` per axis.
fn parse_grid(spec: &str) -> Result<Vec<Vec<f64>>> {
    spec.split(',')
        .map(|axis| {
            let parts: Vec<&str> = axis.split(':').collect();
            let bad = || FinslerError::InvalidParameter(format!("grid axis `{axis}` is not lo:hi:count"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
            if count == 0 || !lo.is_finite() || !hi.is_finite() {
                return Err(bad());
            }
            Ok(if count == 1 {
                vec![lo]
            } else {
                (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
            })
        })
        .collect()
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn cmd_scan(
    entry: &GalleryEntry,
    quantity: Quantity,
    grid: &str,
    base: Option<Vec<f64>>,
    dir: Option<Vec<f64>>,
    flag: Option<Vec<f64>>,
    seed: u64,
) -> Result<Value> {
    let n = entry.dim();
    let axes = parse_grid(grid)?;
    if axes.len() > n {
        return Err(FinslerError::Dimension { expected: n, got: axes.len() });
    }
    let base = base.unwrap_or_else(|| vec![0.0; n]);
    check_len(&base, n)?;
    let y = dir.unwrap_or_else(|| unit(n, 0));
    let u = flag.unwrap_or_else(|| unit(n, 1 % n));
    check_len(&y, n)?;
    check_len(&u, n)?;
    let density = entry.density();
    if quantity == Quantity::S && density.is_none() {
        return Err(FinslerError::InvalidParameter(format!("no volume density for {}", entry.spec())));
    }
    // row-major over the axes, first axis slowest
    let mut points = vec![base.clone()];
    for (a, values) in axes.iter().enumerate() {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q[a] = v;
                    q
                })
            })
            .collect();
    }
    let spray = spray_for(entry.metric.clone());
    let f = entry.metric.as_ref();
    let torsion_flags = if n == 3 { 128 } else { 4000 };
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|x| {
            if !f.domain().contains(x) {
                return None;
            }
            let v = match quantity {
                Quantity::K => flag_curvature_with(f, spray.as_ref(), x, &y, &u),
                Quantity::S => s_curvature(spray.as_ref(), density.as_deref().expect("checked above"), x, &y),
                Quantity::Ric => riemann(spray.as_ref(), x, &y).map(|r| r.ricci),
                Quantity::Cartan => torsion_norms(f, x, torsion_flags, seed).map(|t| t.0),
                Quantity::Cartan2 => torsion_norms(f, x, torsion_flags, seed).map(|t| t.1),
            };
            v.ok().filter(|v| v.is_finite())
        })
        .collect();
    let rows: Vec<Value> = points
        .iter()
        .zip(&values)
        .map(|(x, v)| json!({ "x": x, "value": v }))
        .collect();
    Ok(json!({
        "metric": entry.spec(),
        "quantity": format!("{quantity:?}"),
        "axes": axes,
        "dir": y,
        "flag": u,
        "seed": seed,
        "points": rows,
    }))
}

pub fn cmd_navigate(
    alpha: &str,
    drift: &str,
    at: Option<Vec<f64>>,
    dir: Option<Vec<f64>>,
    mc_samples: usize,
    seed: u64,
) -> Result<Value> {
    let source = gallery::riemannian_source(alpha)?;
    let domain = source.domain().clone();
    let n = domain.dim;
    let v = gallery::drift_field(drift, &domain)?;
    let x = at.unwrap_or_else(|| vec![0.0; n]);
    check_len(&x, n)?;
    if !domain.contains(&x) {
        return Err(FinslerError::OutsideDomain { x, domain: domain.name.clone() });
    }
    let nav = zermelo_riemannian(source.clone(), v.clone())?;
    let source_metric = RandersData::riemannian(source.clone());
    let pointwise = match dir {
        Some(y) => {
            check_len(&y, n)?;
            Some(json!({
                "y": y,
                "F": crate::metrics::FinslerMetric::eval(&source_metric, &x, &y),
                "F_tilde": crate::metrics::FinslerMetric::eval(&nav, &x, &y),
                "F_tilde_root_solve": zermelo_general(&source_metric, v.as_ref(), &x, &y)?,
            }))
        }
        None => None,
    };
    let volume = volume_preservation_check(&source_metric, v.as_ref(), &x, mc_samples, seed)?;
    Ok(json!({
        "alpha": alpha,
        "drift": drift,
        "x": x,
        "v": v.vector(&x),
        "a": source.coeffs(&x),
        "a_tilde": nav.alpha.coeffs(&x),
        "b_tilde": nav.beta.coeffs(&x),
        "b_tilde_norm": beta_norm(&nav, &x)?,
        "pointwise": pointwise,
        "volume": volume,
        "volume_pass": volume.pass(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_and_grids_parse() {
        assert_eq!(parse_vector("0.1, -2").unwrap(), vec![0.1, -2.0]);
        assert!(parse_vector("0.1,x").is_err());
        assert!(parse_vector("nan").is_err());
        assert_eq!(parse_grid("-1:1:3").unwrap(), vec![vec![-1.0, 0.0, 1.0]]);
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["finsler", "verify", "hilbert"]), EXIT_USAGE);
        assert_eq!(run(["finsler", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["finsler", "verify", "slab:kappa=2"]), EXIT_USAGE);
    }

    #[test]
    fn tolerance_overrides() {
        let t = parse_tolerances(&["riemann_zero=1e-9".into()]).unwrap();
        assert_eq!(t["riemann_zero"], 1e-9);
        assert!(parse_tolerances(&["riemann_zero".into()]).is_err());
    }

    #[test]
    fn navigation_shares_the_source_domain() {
        let v = cmd_navigate("euclidean", "zero", Some(vec![0.2, 0.1]), None, 10_000, 1).unwrap();
        assert_eq!(v["b_tilde"], json!([0.0, 0.0]));
        assert_eq!(v["a_tilde"], json!([[1.0, 0.0], [0.0, 1.0]]));
    }
}
