use serde::Serialize;

use super::Spray;
use crate::error::{FinslerError, Result};
use crate::metrics::{beta_norm, FinslerMetric};

pub const DEFAULT_DT: f64 = 1e-3;

/// Guard on `|beta|_alpha` while integrating.
const NEAR_BOUNDARY: f64 = 1.0 - 1e-4;

/// No RK4 substep moves farther than this fraction of the distance to the
/// chart boundary.
const BOUNDARY_FRACTION: f64 = 0.05;

/// Substeps per output step before the path counts as having left.
const MAX_SUBSTEPS: f64 = 4096.0;

/// Relative speed drift that aborts an integration.
const MAX_SPEED_DRIFT: f64 = 0.01;

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `F(x, v)` when the spray carries a metric.
    pub speed: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Integration stopped because the path reached the domain boundary.
    pub exited: bool,
}

impl Trajectory {
    /// Max relative deviation of `F(x, v)` from its initial value.
    pub fn speed_drift(&self) -> f64 {
        let Some(s0) = self.points.first().and_then(|p| p.speed) else {
            return 0.0;
        };
        self.points
            .iter()
            .filter_map(|p| p.speed)
            .map(|s| (s - s0).abs() / s0)
            .fold(0.0, f64::max)
    }
}

fn accel(spray: &dyn Spray, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    Ok(spray.eval(x, v)?.into_iter().map(|g| -2.0 * g).collect())
}

fn axpy(x: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

/// One classical Runge-Kutta step of `x'' = -2 G(x, x')`; `h` may be negative.
pub fn rk4_step(spray: &dyn Spray, x: &[f64], v: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let k1x = v.to_vec();
    let k1v = accel(spray, x, v)?;
    let x2 = axpy(x, h / 2.0, &k1x);
    let k2x = axpy(v, h / 2.0, &k1v);
    let k2v = accel(spray, &x2, &k2x)?;
    let x3 = axpy(x, h / 2.0, &k2x);
    let k3x = axpy(v, h / 2.0, &k2v);
    let k3v = accel(spray, &x3, &k3x)?;
    let x4 = axpy(x, h, &k3x);
    let k4x = axpy(v, h, &k3v);
    let k4v = accel(spray, &x4, &k4x)?;
    let n = x.len();
    let xn = (0..n)
        .map(|i| x[i] + h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
        .collect();
    let vn = (0..n)
        .map(|i| v[i] + h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]))
        .collect();
    Ok((xn, vn))
}

fn near_boundary(spray: &dyn Spray, x: &[f64]) -> bool {
    if !spray.domain().contains(x) {
        return true;
    }
    match spray.metric().and_then(FinslerMetric::as_randers) {
        Some(r) => beta_norm(r, x).map_or(true, |b| b > NEAR_BOUNDARY),
        None => false,
    }
}

/// Advances by `dt` in as many RK4 substeps as the distance to the
/// boundary requires; `None` once the path reaches the boundary.
fn substeps(spray: &dyn Spray, x: &[f64], v: &[f64], dt: f64) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let reach = BOUNDARY_FRACTION * spray.domain().boundary_distance(x);
    let m = (dt * len / reach).ceil().max(1.0);
    if !(m <= MAX_SUBSTEPS) {
        return Ok(None);
    }
    let h = dt / m;
    let (mut x, mut v) = (x.to_vec(), v.to_vec());
    for _ in 0..m as usize {
        (x, v) = match rk4_step(spray, &x, &v, h) {
            Ok(step) => step,
            Err(FinslerError::OutsideDomain { .. } | FinslerError::RandersBoundary { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if near_boundary(spray, &x) {
            return Ok(None);
        }
    }
    Ok(Some((x, v)))
}

/// RK4 geodesic from `(x0, y0)` over `[0, t_total]`.
///
/// Leaving the domain ends the trajectory with `exited = true`. When the
/// spray carries a metric, a relative speed drift above 1% is an error.
pub fn geodesic_integrate(
    spray: &dyn Spray,
    x0: &[f64],
    y0: &[f64],
    t_total: f64,
    dt: f64,
) -> Result<Trajectory> {
    if dt.is_nan() || dt <= 0.0 || t_total.is_nan() || t_total < 0.0 {
        return Err(FinslerError::InvalidParameter(format!(
            "need dt > 0 and T >= 0, got dt={dt}, T={t_total}"
        )));
    }
    if near_boundary(spray, x0) {
        return Err(FinslerError::OutsideDomain {
            x: x0.to_vec(),
            domain: spray.domain().name.clone(),
        });
    }
    let speed = |x: &[f64], v: &[f64]| spray.metric().map(|f| f.eval(x, v));
    let s0 = speed(x0, y0);
    let mut points = vec![TrajectoryPoint {
        t: 0.0,
        x: x0.to_vec(),
        v: y0.to_vec(),
        speed: s0,
    }];
    let steps = (t_total / dt).round() as usize;
    let mut exited = false;
    let (mut x, mut v) = (x0.to_vec(), y0.to_vec());
    for k in 1..=steps {
        let Some((xn, vn)) = substeps(spray, &x, &v, dt)? else {
            exited = true;
            break;
        };
        let s = speed(&xn, &vn);
        if let (Some(s), Some(s0)) = (s, s0) {
            let drift = (s - s0).abs() / s0;
            if !(drift <= MAX_SPEED_DRIFT) {
                return Err(FinslerError::SpeedDrift { t: k as f64 * dt, drift });
            }
        }
        x = xn;
        v = vn;
        points.push(TrajectoryPoint {
            t: k as f64 * dt,
            x: x.clone(),
            v: v.clone(),
            speed: s,
        });
    }
    Ok(Trajectory { points, exited })
}
