//! Built-in metrics with analytic reference data.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::diffcore::{dot, Jet, Real};
use crate::domain::ChartDomain;
use crate::error::{FinslerError, Result};
use crate::measures::{bh_density_mc, ConstantDensity, RandersDensity, VolumeDensity};
use crate::metrics::{
    AffineOneForm, Euclidean, FinslerExpr, FinslerMetric, OneFormExpr, RandersData, RiemannianExpr,
    RiemannianField,
};
use crate::navigation::{
    zermelo_riemannian, ConstantDrift, DriftExpr, DriftField, RadialDrift, RotationDrift,
};
use crate::spray::AnalyticSpray;

/// Known S-curvature of an entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SReference {
    Zero,
    /// `S = c F`
    MultipleOfF(f64),
}

/// Analytic data attached to a gallery entry.
#[derive(Clone, Default)]
pub struct Reference {
    /// Constant flag curvature.
    pub flag_curvature: Option<f64>,
    pub s_curvature: Option<SReference>,
    pub projectively_flat: Option<bool>,
    /// Closed-form (or constant) volume density.
    pub density: Option<Arc<dyn VolumeDensity>>,
    /// Constant value of the density, when known.
    pub density_value: Option<f64>,
    /// Closed-form geodesic coefficients of the metric.
    pub spray: Option<AnalyticSpray>,
    /// Closed-form geodesic coefficients of the Riemannian part.
    pub alpha_spray: Option<AnalyticSpray>,
    /// Gauss curvature of the Riemannian part (two-dimensional entries).
    pub alpha_gauss: Option<fn(&[f64]) -> f64>,
    /// Closed-form `b`, `r`, `s` tables.
    pub tables: Option<fn(&[f64]) -> RandersTables>,
    /// Riemannian source and drift the metric is the navigation metric of.
    pub navigation: Option<(Arc<dyn RiemannianField>, Arc<dyn DriftField>)>,
    /// Slab parameter; enables the exact second-torsion profile.
    pub slab_kappa: Option<f64>,
}

#[derive(Clone)]
pub struct GalleryEntry {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub metric: Arc<dyn FinslerMetric>,
    pub randers: Option<RandersData>,
    pub reference: Reference,
    /// Verification samples `x` from the domain shrunk by this factor.
    pub sample_fraction: f64,
    pub note: &'static str,
}

impl GalleryEntry {
    /// Canonical spec string, e.g. `cylinder:n=3`.
    pub fn spec(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let kv: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}:{}", self.name, kv.join(","))
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Density used for S-curvature: closed form when available.
    pub fn density(&self) -> Option<Arc<dyn VolumeDensity>> {
        self.reference.density.clone().or_else(|| {
            self.randers
                .clone()
                .map(|r| Arc::new(RandersDensity(r)) as Arc<dyn VolumeDensity>)
        })
    }
}

impl fmt::Debug for GalleryEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GalleryEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

pub const NAMES: [&str; 8] = [
    "euclidean",
    "minkowski",
    "funk",
    "shen_flat",
    "rotation2d",
    "cylinder",
    "bao_shen_s3",
    "slab_kappa",
];

/// Default spec of every entry, in gallery order.
pub fn default_specs() -> Vec<&'static str> {
    vec![
        "euclidean:n=3",
        "minkowski:n=2,eps=0.5",
        "funk:n=2",
        "funk:n=3",
        "shen_flat:n=2",
        "rotation2d",
        "cylinder:n=3",
        "bao_shen_s3:eps=0.3",
        "slab_kappa:kappa=0.5",
    ]
}

fn canonical(name: &str) -> Option<&'static str> {
    Some(match name {
        "euclidean" | "euclid" => "euclidean",
        "minkowski" => "minkowski",
        "funk" => "funk",
        "shen_flat" | "shen" => "shen_flat",
        "rotation2d" | "rotation" => "rotation2d",
        "cylinder" => "cylinder",
        "bao_shen_s3" | "s3" => "bao_shen_s3",
        "slab_kappa" | "slab" => "slab_kappa",
        _ => return None,
    })
}

/// Parses `name[:key=value,...]`.
pub fn parse_spec(spec: &str) -> Result<(String, BTreeMap<String, f64>)> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec.trim(), None),
    };
    let name = canonical(name).ok_or_else(|| FinslerError::UnknownMetric(name.to_string()))?;
    Ok((name.to_string(), parse_pairs(rest.unwrap_or(""))?))
}

/// `key=value` pairs separated by commas.
fn parse_pairs(rest: &str) -> Result<BTreeMap<String, f64>> {
    let mut params = BTreeMap::new();
    for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| FinslerError::InvalidParameter(format!("expected key=value, got `{pair}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| FinslerError::InvalidParameter(format!("`{v}` is not a number")))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok(params)
}

struct Params {
    map: BTreeMap<String, f64>,
    used: Vec<&'static str>,
}

impl Params {
    fn get(&mut self, key: &'static str, default: f64) -> f64 {
        self.used.push(key);
        let v = self.map.get(key).copied().unwrap_or(default);
        self.map.insert(key.to_string(), v);
        v
    }

    fn dim(&mut self, default: usize, min: usize) -> Result<usize> {
        let n = self.get("n", default as f64);
        if n.fract() != 0.0 || n < min as f64 || n > 8.0 {
            return Err(FinslerError::InvalidParameter(format!("n={n} must be an integer in {min}..=8")));
        }
        Ok(n as usize)
    }

    fn finish(self) -> Result<BTreeMap<String, f64>> {
        if let Some(k) = self.map.keys().find(|k| !self.used.contains(&k.as_str())) {
            return Err(FinslerError::InvalidParameter(format!("unknown parameter `{k}`")));
        }
        Ok(self.map)
    }
}

/// Builds the gallery entry for a spec such as `slab:kappa=0.5`.
pub fn make(spec: &str) -> Result<GalleryEntry> {
    let (name, map) = parse_spec(spec)?;
    let mut p = Params { map, used: Vec::new() };
    let (metric, randers, reference, note): (Arc<dyn FinslerMetric>, Option<RandersData>, Reference, &str) =
        match name.as_str() {
            "euclidean" => {
                let n = p.dim(2, 1)?;
                let r = RandersData::riemannian(Arc::new(Euclidean::new(n)));
                let reference = Reference {
                    flag_curvature: Some(0.0),
                    s_curvature: Some(SReference::Zero),
                    projectively_flat: Some(true),
                    density_value: Some(1.0),
                    ..Default::default()
                };
                (Arc::new(r.clone()), Some(r), reference, "flat space")
            }
            "minkowski" => {
                let n = p.dim(2, 2)?;
                let eps = p.get("eps", 0.5);
                if !(0.0..=4.0).contains(&eps) {
                    return Err(FinslerError::InvalidParameter(format!("eps={eps} must be in [0, 4]")));
                }
                let m = QuarticMinkowski { eps, domain: ChartDomain::whole(n) };
                let sigma = bh_density_mc(&m, &vec![0.0; n], 200_000, 0)?.sigma;
                let reference = Reference {
                    flag_curvature: Some(0.0),
                    s_curvature: Some(SReference::Zero),
                    projectively_flat: Some(true),
                    density: Some(Arc::new(ConstantDensity(sigma))),
                    ..Default::default()
                };
                (Arc::new(m), None, reference, "x-independent quartic norm (Minkowski space)")
            }
            "funk" => {
                let n = p.dim(2, 2)?;
                let d = ChartDomain::unit_ball(n);
                let r = RandersData::new(
                    Arc::new(FunkAlpha { domain: d.clone() }),
                    Arc::new(FunkBeta { domain: d.clone() }),
                );
                let reference = Reference {
                    flag_curvature: Some(-0.25),
                    s_curvature: Some(SReference::MultipleOfF((n as f64 + 1.0) / 2.0)),
                    projectively_flat: Some(true),
                    spray: Some(AnalyticSpray {
                        domain: d.clone(),
                        f: funk_spray,
                        metric: Some(Arc::new(r.clone())),
                    }),
                    navigation: Some((Arc::new(Euclidean::on(d.clone())), Arc::new(RadialDrift::new(1.0, d)))),
                    density_value: Some(1.0),
                    ..Default::default()
                };
                (Arc::new(r.clone()), Some(r), reference, "Funk metric on the unit ball: Euclidean navigation under v = -x")
            }
            "shen_flat" => {
                let n = p.dim(2, 2)?;
                let reference = Reference {
                    flag_curvature: Some(0.0),
                    projectively_flat: Some(true),
                    ..Default::default()
                };
                (
                    Arc::new(ShenFlat { domain: ChartDomain::unit_ball(n) }),
                    None,
                    reference,
                    "projectively flat metric of zero flag curvature on the unit ball",
                )
            }
            "rotation2d" => {
                let d = ChartDomain::unit_ball(2);
                let r = rotation_randers(d.clone());
                let reference = Reference {
                    flag_curvature: Some(0.0),
                    s_curvature: Some(SReference::Zero),
                    projectively_flat: Some(false),
                    density_value: Some(1.0),
                    spray: Some(AnalyticSpray {
                        domain: d.clone(),
                        f: rotation_spray,
                        metric: Some(Arc::new(r.clone())),
                    }),
                    alpha_spray: Some(AnalyticSpray {
                        domain: d.clone(),
                        f: rotation2d_alpha_spray,
                        metric: None,
                    }),
                    alpha_gauss: Some(rotation2d_gauss),
                    tables: Some(rotation2d_tables),
                    navigation: Some((Arc::new(Euclidean::on(d.clone())), Arc::new(RotationDrift::new(1.0, d)))),
                    ..Default::default()
                };
                (Arc::new(r.clone()), Some(r), reference, "rotating disk: Euclidean navigation under v = (-y, x)")
            }
            "cylinder" => {
                let n = p.dim(3, 3)?;
                let d = ChartDomain::unit_cylinder(n);
                let r = rotation_randers(d.clone());
                let reference = Reference {
                    flag_curvature: Some(0.0),
                    s_curvature: Some(SReference::Zero),
                    projectively_flat: Some(false),
                    density_value: Some(1.0),
                    spray: Some(AnalyticSpray {
                        domain: d.clone(),
                        f: rotation_spray,
                        metric: Some(Arc::new(r.clone())),
                    }),
                    navigation: Some((Arc::new(Euclidean::on(d.clone())), Arc::new(RotationDrift::new(1.0, d)))),
                    ..Default::default()
                };
                (Arc::new(r.clone()), Some(r), reference, "rotating cylinder: Euclidean navigation under v = (-y, x, 0, ...)")
            }
            "bao_shen_s3" => {
                let eps = p.get("eps", 0.3);
                if !(eps.abs() < 1.0) {
                    return Err(FinslerError::InvalidParameter(format!("|eps|={eps} must be < 1")));
                }
                let round: Arc<dyn RiemannianField> = Arc::new(RoundS3::default());
                let drift: Arc<dyn DriftField> = Arc::new(S3LeftInvariant {
                    eps,
                    domain: round.domain().clone(),
                });
                let r = zermelo_riemannian(round.clone(), drift.clone())?;
                let reference = Reference {
                    flag_curvature: Some(1.0),
                    navigation: Some((round, drift)),
                    ..Default::default()
                };
                (
                    Arc::new(r.clone()),
                    Some(r),
                    reference,
                    "round 3-sphere in a gnomonic chart, navigation under eps times a left-invariant unit field",
                )
            }
            "slab_kappa" => {
                let kappa = p.get("kappa", 0.5);
                if !(0.0..1.0).contains(&kappa) {
                    return Err(FinslerError::InvalidParameter(format!("kappa={kappa} must be in [0, 1)")));
                }
                let d = ChartDomain::whole(2);
                let r = RandersData::new(
                    Arc::new(Euclidean::on(d.clone())),
                    Arc::new(AffineOneForm::constant(vec![kappa, 0.0], d)),
                );
                let reference = Reference {
                    flag_curvature: Some(0.0),
                    s_curvature: Some(SReference::Zero),
                    projectively_flat: Some(true),
                    density_value: Some((1.0 - kappa * kappa).powf(1.5)),
                    slab_kappa: Some(kappa),
                    ..Default::default()
                };
                (Arc::new(r.clone()), Some(r), reference, "Minkowski-Randers norm |y| + kappa u")
            }
            _ => unreachable!("canonical names are exhaustive"),
        };
    let params = p.finish()?;
    let sample_fraction = match name.as_str() {
        "shen_flat" => 0.9,
        "bao_shen_s3" => 0.95 / S3_CHART_RADIUS,
        _ => 0.95,
    };
    Ok(GalleryEntry {
        name,
        params,
        metric,
        randers,
        reference,
        sample_fraction,
        note,
    })
}

/// Riemannian metric for navigation input: `euclidean[:n=2]` (unit
/// ball), `euclidean_cylinder[:n=3]`, `euclidean_whole[:n=2]`,
/// `poincare[:r=0.5]` or `round_s3`.
pub fn riemannian_source(spec: &str) -> Result<Arc<dyn RiemannianField>> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut p = Params {
        map: parse_pairs(rest)?,
        used: Vec::new(),
    };
    let out: Arc<dyn RiemannianField> = match name.trim() {
        "euclidean" | "euclid" => Arc::new(Euclidean::on(ChartDomain::unit_ball(p.dim(2, 1)?))),
        "euclidean_cylinder" => Arc::new(Euclidean::on(ChartDomain::unit_cylinder(p.dim(3, 3)?))),
        "euclidean_whole" => Arc::new(Euclidean::on(ChartDomain::whole(p.dim(2, 1)?))),
        "poincare" => {
            let r = p.get("r", 0.5);
            if !(r > 0.0 && r < 1.0) {
                return Err(FinslerError::InvalidParameter(format!("r={r} must be in (0, 1)")));
            }
            Arc::new(PoincareDisk::with_radius(r))
        }
        "round_s3" => Arc::new(RoundS3::default()),
        other => return Err(FinslerError::UnknownMetric(other.to_string())),
    };
    p.finish()?;
    Ok(out)
}

/// Drift field on `domain`: `zero`, `rotation[:c=1]`, `radial[:c=1]`,
/// `constant:v0=..,v1=..` or `s3[:eps=0.3]`.
pub fn drift_field(spec: &str, domain: &ChartDomain) -> Result<Arc<dyn DriftField>> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut p = Params {
        map: parse_pairs(rest)?,
        used: Vec::new(),
    };
    let d = domain.clone();
    let out: Arc<dyn DriftField> = match name.trim() {
        "zero" => Arc::new(ConstantDrift::zero(d)),
        "rotation" => {
            if domain.dim < 2 {
                return Err(FinslerError::InvalidParameter("rotation drift needs n >= 2".into()));
            }
            Arc::new(RotationDrift::new(p.get("c", 1.0), d))
        }
        "radial" => Arc::new(RadialDrift::new(p.get("c", 1.0), d)),
        "constant" => {
            const KEYS: [&str; 8] = ["v0", "v1", "v2", "v3", "v4", "v5", "v6", "v7"];
            let v = KEYS[..domain.dim].iter().map(|k| p.get(k, 0.0)).collect();
            Arc::new(ConstantDrift::new(v, d))
        }
        "s3" => {
            if domain.dim != 3 {
                return Err(FinslerError::InvalidParameter("s3 drift needs n = 3".into()));
            }
            Arc::new(S3LeftInvariant { eps: p.get("eps", 0.3), domain: d })
        }
        other => return Err(FinslerError::InvalidParameter(format!("unknown drift `{other}`"))),
    };
    p.finish()?;
    Ok(out)
}

fn sum_sq<S: Real>(v: &[S]) -> S {
    dot(v, v)
}

/// `F = (|y|^4 + eps sum y_i^4)^{1/4}`.
#[derive(Clone, Debug)]
pub struct QuarticMinkowski {
    pub eps: f64,
    domain: ChartDomain,
}

impl FinslerExpr for QuarticMinkowski {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, _x: &[S], y: &[S]) -> S {
        let quartic = y.iter().fold(S::zero(), |acc, c| acc + c.sq().sq());
        (sum_sq(y).sq() + quartic * self.eps).powf(0.25)
    }
}

/// `a_ij = ((1 - |x|^2) delta_ij + x_i x_j) / (1 - |x|^2)^2`.
#[derive(Clone, Debug)]
pub struct FunkAlpha {
    domain: ChartDomain,
}

impl RiemannianExpr for FunkAlpha {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<Vec<S>> {
        let d = -sum_sq(x) + 1.0;
        let d2 = d.sq();
        let n = x.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let diag = if i == j { d.clone() } else { S::zero() };
                        (diag + x[i].clone() * x[j].clone()) / d2.clone()
                    })
                    .collect()
            })
            .collect()
    }
}

/// `b_i = x_i / (1 - |x|^2)`.
#[derive(Clone, Debug)]
pub struct FunkBeta {
    domain: ChartDomain,
}

impl OneFormExpr for FunkBeta {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<S> {
        let d = -sum_sq(x) + 1.0;
        x.iter().map(|xi| xi.clone() / d.clone()).collect()
    }
}

/// The Funk metric written out:
/// `(sqrt(|y|^2 - (|x|^2 |y|^2 - <x,y>^2)) + <x,y>) / (1 - |x|^2)`.
pub fn funk_formula(x: &[f64], y: &[f64]) -> f64 {
    let (xx, yy, xy) = (dot(x, x), dot(y, y), dot(x, y));
    ((yy - (xx * yy - xy * xy)).sqrt() + xy) / (1.0 - xx)
}

/// `G^i = F y^i / 2`.
fn funk_spray(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    let (xx, yy, xy) = (sum_sq(x), sum_sq(y), dot(x, y));
    let f = ((yy.clone() - (xx.clone() * yy - xy.sq())).sqrt() + xy) / (-xx + 1.0);
    y.iter().map(|yi| f.clone() * yi.clone() * 0.5).collect()
}

/// The projectively flat metric
/// `(sqrt(Phi) + <x,y>)^2 / ((1 - |x|^2)^2 sqrt(Phi))`,
/// `Phi = |y|^2 - (|x|^2 |y|^2 - <x,y>^2)`.
#[derive(Clone, Debug)]
pub struct ShenFlat {
    domain: ChartDomain,
}

impl FinslerExpr for ShenFlat {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S], y: &[S]) -> S {
        let (xx, yy, xy) = (sum_sq(x), sum_sq(y), dot(x, y));
        let phi = yy.clone() - (xx.clone() * yy.clone() - xy.sq());
        // rounding guard at the singular set; larger negatives stay NaN
        let phi = if phi.value() < 0.0 && phi.value() >= -1e-12 * yy.value() {
            S::zero()
        } else {
            phi
        };
        let root = phi.sqrt();
        (root.clone() + xy).sq() / ((-xx + 1.0).sq() * root)
    }
}

/// `v = (-x^1, x^0, 0, ...)`, `D = 1 - (x^0)^2 - (x^1)^2`:
/// `a_ij = delta_ij / D + v_i v_j / D^2`.
#[derive(Clone, Debug)]
pub struct RotationAlpha {
    domain: ChartDomain,
}

impl RiemannianExpr for RotationAlpha {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<Vec<S>> {
        let n = x.len();
        let d = -(x[0].sq() + x[1].sq()) + 1.0;
        let mut v = vec![S::zero(); n];
        v[0] = -x[1].clone();
        v[1] = x[0].clone();
        let d2 = d.sq();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let diag = if i == j { d.recip() } else { S::zero() };
                        diag + v[i].clone() * v[j].clone() / d2.clone()
                    })
                    .collect()
            })
            .collect()
    }
}

/// `b = (x^1, -x^0, 0, ...) / D`.
#[derive(Clone, Debug)]
pub struct RotationBeta {
    domain: ChartDomain,
}

impl OneFormExpr for RotationBeta {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<S> {
        let d = -(x[0].sq() + x[1].sq()) + 1.0;
        let mut b = vec![S::zero(); x.len()];
        b[0] = x[1].clone() / d.clone();
        b[1] = -x[0].clone() / d;
        b
    }
}

fn rotation_randers(d: ChartDomain) -> RandersData {
    RandersData::new(
        Arc::new(RotationAlpha { domain: d.clone() }),
        Arc::new(RotationBeta { domain: d }),
    )
}

/// Shared pieces of the rotation closed forms:
/// `(D, |y|^2, x u + y v, alpha~, beta~)`.
fn rotation_pieces(x: &[Jet], y: &[Jet]) -> (Jet, Jet, Jet, Jet, Jet) {
    let d = -(x[0].sq() + x[1].sq()) + 1.0;
    let yy = sum_sq(y);
    let p = x[0].clone() * y[0].clone() + x[1].clone() * y[1].clone();
    let w = -x[1].clone() * y[0].clone() + x[0].clone() * y[1].clone();
    let alpha = (w.sq() + yy.clone() * d.clone()).sqrt() / d.clone();
    let beta = -w / d.clone();
    (d, yy, p, alpha, beta)
}

/// Closed-form geodesic coefficients of the rotation metrics; `G^k = 0`
/// for `k >= 2`.
fn rotation_spray(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    let (d, yy, p, alpha, beta) = rotation_pieces(x, y);
    let f = alpha + beta;
    let mut g = vec![Jet::constant(0.0); x.len()];
    g[0] = -x[0].clone() * yy.clone() / (d.clone() * 2.0)
        - (x[1].clone() * p.clone() - y[1].clone()) / d.clone() * f.clone();
    g[1] = -x[1].clone() * yy / (d.clone() * 2.0) + (x[0].clone() * p - y[0].clone()) / d * f;
    g
}

/// Closed-form Levi-Civita spray of `alpha~` for the rotating disk.
fn rotation2d_alpha_spray(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    let (d, yy, p, _alpha, beta) = rotation_pieces(x, y);
    vec![
        -x[0].clone() * yy.clone() / (d.clone() * 2.0)
            - (x[1].clone() * p.clone() - y[1].clone()) / d.clone() * beta.clone()
            + p.clone() / d.clone() * y[0].clone(),
        -x[1].clone() * yy / (d.clone() * 2.0) + (x[0].clone() * p.clone() - y[0].clone()) / d.clone() * beta
            + p / d * y[1].clone(),
    ]
}

/// `-(5 + x^2 + y^2) / (1 - x^2 - y^2)`.
pub fn rotation2d_gauss(x: &[f64]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    -(5.0 + r2) / (1.0 - r2)
}

/// Closed-form tables of a two-dimensional Randers metric.
#[derive(Clone, Debug)]
pub struct RandersTables {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    /// `s_i = b_r a^rh s_hi`
    pub s_low: Vec<f64>,
}

pub fn rotation2d_tables(p: &[f64]) -> RandersTables {
    let (x, y) = (p[0], p[1]);
    let d = 1.0 - x * x - y * y;
    let d2 = d * d;
    RandersTables {
        a: vec![vec![(1.0 - x * x) / d2, -x * y / d2], vec![-x * y / d2, (1.0 - y * y) / d2]],
        b: vec![y / d, -x / d],
        r: vec![
            vec![-2.0 * x * y / d2, (x * x - y * y) / d2],
            vec![(x * x - y * y) / d2, 2.0 * x * y / d2],
        ],
        s: vec![vec![0.0, 1.0 / d2], vec![-1.0 / d2, 0.0]],
        s_low: vec![x / d, y / d],
    }
}

/// `6 kappa (kappa + cos t) / (1 + kappa cos t) - 15/2 kappa cos t`: the
/// scale-free second torsion of the slab in the transverse direction.
pub fn slab_second_torsion(kappa: f64, theta: f64) -> f64 {
    let c = theta.cos();
    6.0 * kappa * (kappa + c) / (1.0 + kappa * c) - 7.5 * kappa * c
}

/// Upper bound `(3/sqrt 2) sqrt(1 - sqrt(1 - b^2))` on the first torsion
/// norm of a Randers metric with `|beta|_alpha = b`.
pub fn first_torsion_bound(b: f64) -> f64 {
    3.0 / 2f64.sqrt() * (1.0 - (1.0 - b * b).sqrt()).sqrt()
}

/// Upper bound `27/2 b` on the second torsion norm.
pub fn second_torsion_bound(b: f64) -> f64 {
    13.5 * b
}

/// Round metric of the unit 3-sphere in the gnomonic chart
/// `x -> (1, x) / sqrt(1 + |x|^2)`:
/// `a_ij = ((1 + |x|^2) delta_ij - x_i x_j) / (1 + |x|^2)^2`.
#[derive(Clone, Debug)]
pub struct RoundS3 {
    domain: ChartDomain,
}

/// Chart radius: geodesics leave the hemisphere the chart covers in
/// finite time, so the chart is cut off where its coefficients are still
/// moderate.
const S3_CHART_RADIUS: f64 = 2.0;

impl Default for RoundS3 {
    fn default() -> Self {
        Self {
            domain: ChartDomain::ball(3, S3_CHART_RADIUS),
        }
    }
}

impl RiemannianExpr for RoundS3 {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<Vec<S>> {
        let q = sum_sq(x) + 1.0;
        let q2 = q.sq();
        (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        let diag = if i == j { q.clone() } else { S::zero() };
                        (diag - x[i].clone() * x[j].clone()) / q2.clone()
                    })
                    .collect()
            })
            .collect()
    }
}

/// `eps` times the left-invariant unit field `p -> p i` of the unit
/// quaternions, in the gnomonic chart: `(1 + x0^2, x0 x1 + x2, x0 x2 - x1)`.
#[derive(Clone, Debug)]
pub struct S3LeftInvariant {
    pub eps: f64,
    domain: ChartDomain,
}

impl DriftExpr for S3LeftInvariant {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<S> {
        vec![
            (x[0].sq() + 1.0) * self.eps,
            (x[0].clone() * x[1].clone() + x[2].clone()) * self.eps,
            (x[0].clone() * x[2].clone() - x[1].clone()) * self.eps,
        ]
    }
}

/// Poincare disk `a = 4 delta / (1 - |x|^2)^2` (curvature -1).
#[derive(Clone, Debug)]
pub struct PoincareDisk {
    domain: ChartDomain,
}

impl Default for PoincareDisk {
    fn default() -> Self {
        Self { domain: ChartDomain::unit_ball(2) }
    }
}

impl PoincareDisk {
    /// Restriction to the Euclidean disk of the given radius.
    pub fn with_radius(radius: f64) -> Self {
        Self { domain: ChartDomain::ball(2, radius) }
    }
}

impl RiemannianExpr for PoincareDisk {
    fn domain(&self) -> &ChartDomain {
        &self.domain
    }
    fn value<S: Real>(&self, x: &[S]) -> Vec<Vec<S>> {
        let c = (-sum_sq(x) + 1.0).sq().recip() * 4.0;
        vec![vec![c.clone(), S::zero()], vec![S::zero(), c]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip() {
        for spec in default_specs() {
            let e = make(spec).unwrap();
            assert_eq!(make(&e.spec()).unwrap().spec(), e.spec());
        }
        assert_eq!(make("slab:kappa=0.5").unwrap().name, "slab_kappa");
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(matches!(make("hilbert"), Err(FinslerError::UnknownMetric(_))));
        assert!(matches!(make("slab:kappa=1.0"), Err(FinslerError::InvalidParameter(_))));
        assert!(matches!(make("slab:kappa"), Err(FinslerError::InvalidParameter(_))));
        assert!(matches!(make("funk:m=2"), Err(FinslerError::InvalidParameter(_))));
        assert!(matches!(make("cylinder:n=2"), Err(FinslerError::InvalidParameter(_))));
    }

    #[test]
    fn rotation_r11_at_reference_point() {
        let t = rotation2d_tables(&[0.3, 0.4]);
        assert!((t.r[0][0] + 0.24 / 0.5625).abs() < 1e-15);
    }

    #[test]
    fn funk_is_euclidean_at_center() {
        let e = make("funk:n=3").unwrap();
        let y = [0.3, -1.2, 0.5];
        assert!((e.metric.eval(&[0.0; 3], &y) - dot(&y, &y).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn slab_profile_at_zero() {
        assert!((slab_second_torsion(0.5, 0.0) + 0.75).abs() < 1e-15);
    }
}
