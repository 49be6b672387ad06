//! Python bindings: gallery metrics with their curvature quantities, the
//! verification suite and Zermelo navigation data.

use std::collections::BTreeMap;

use finsler::cli::verify::{verify as run_verify, VerifyOptions, DEFAULT_MC_SAMPLES, DEFAULT_POINTS, DEFAULT_SEED};
use finsler::curvature::{flag_curvature, riemann, spray_for};
use finsler::gallery::{self, GalleryEntry};
use finsler::measures::{bh_density_mc, s_curvature};
use finsler::metrics::{fundamental_tensor, torsion_norms};
use finsler::navigation::{zermelo_general, zermelo_riemannian};
use finsler::spray::{geodesic_integrate, DEFAULT_DT};
use finsler::FinslerError;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: FinslerError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A gallery metric, built from a spec such as `"rotation2d"` or
/// `"slab:kappa=0.5"`.
#[pyclass(name = "Metric", module = "finslerpy", frozen)]
struct Metric {
    entry: GalleryEntry,
}

#[pymethods]
impl Metric {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self {
            entry: gallery::make(spec).map_err(py_err)?,
        })
    }

    #[getter]
    fn spec(&self) -> String {
        self.entry.spec()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.entry.name
    }

    #[getter]
    fn dim(&self) -> usize {
        self.entry.dim()
    }

    #[getter]
    fn params(&self) -> BTreeMap<String, f64> {
        self.entry.params.clone()
    }

    #[getter]
    fn is_randers(&self) -> bool {
        self.entry.randers.is_some()
    }

    fn __repr__(&self) -> String {
        format!("Metric('{}')", self.entry.spec())
    }

    /// `F(x, y)`.
    fn __call__(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        finsler::metrics::check_site(self.entry.metric.as_ref(), &x, &y).map_err(py_err)?;
        Ok(self.entry.metric.eval(&x, &y))
    }

    fn fundamental_tensor(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(fundamental_tensor(self.entry.metric.as_ref(), &x, &y).map_err(py_err)?.rows())
    }

    /// Geodesic coefficients `G^i(x, y)`.
    fn spray(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        spray_for(self.entry.metric.clone()).eval(&x, &y).map_err(py_err)
    }

    /// Riemann curvature `R^i_k(x, y)` as a row-major matrix.
    fn riemann(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let spray = spray_for(self.entry.metric.clone());
        Ok(riemann(spray.as_ref(), &x, &y).map_err(py_err)?.matrix)
    }

    fn ricci(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        let spray = spray_for(self.entry.metric.clone());
        Ok(riemann(spray.as_ref(), &x, &y).map_err(py_err)?.ricci)
    }

    fn flag_curvature(&self, x: Vec<f64>, y: Vec<f64>, u: Vec<f64>) -> PyResult<f64> {
        flag_curvature(self.entry.metric.clone(), &x, &y, &u).map_err(py_err)
    }

    /// S-curvature for the Busemann-Hausdorff volume.
    fn s_curvature(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        let sigma = self
            .entry
            .density()
            .ok_or_else(|| PyValueError::new_err("no differentiable density for this metric"))?;
        let spray = spray_for(self.entry.metric.clone());
        s_curvature(spray.as_ref(), sigma.as_ref(), &x, &y).map_err(py_err)
    }

    /// Monte Carlo Busemann-Hausdorff density at `x`: `(sigma, std_error)`.
    #[pyo3(signature = (x, n_samples = 200_000, seed = DEFAULT_SEED))]
    fn density_mc(&self, py: Python<'_>, x: Vec<f64>, n_samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let f = self.entry.metric.clone();
        let est = py.detach(move || bh_density_mc(f.as_ref(), &x, n_samples, seed)).map_err(py_err)?;
        Ok((est.sigma, est.std_error))
    }

    /// `(|C|, |C~|)` at `x`, the first and second torsion norms.
    #[pyo3(signature = (x, samples = 128, seed = DEFAULT_SEED))]
    fn torsion_norms(&self, x: Vec<f64>, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        torsion_norms(self.entry.metric.as_ref(), &x, samples, seed).map_err(py_err)
    }

    /// RK4 geodesic as a list of `(t, x, v, F(x, v))`.
    #[pyo3(signature = (x, y, time = 1.0, dt = DEFAULT_DT))]
    #[allow(clippy::type_complexity)]
    fn geodesic(
        &self,
        py: Python<'_>,
        x: Vec<f64>,
        y: Vec<f64>,
        time: f64,
        dt: f64,
    ) -> PyResult<Vec<(f64, Vec<f64>, Vec<f64>, Option<f64>)>> {
        let spray = spray_for(self.entry.metric.clone());
        let traj = py
            .detach(move || geodesic_integrate(spray.as_ref(), &x, &y, time, dt))
            .map_err(py_err)?;
        Ok(traj.points.into_iter().map(|p| (p.t, p.x, p.v, p.speed)).collect())
    }

    /// Runs the identity suite and returns the report as a dict.
    #[pyo3(signature = (points = DEFAULT_POINTS, seed = DEFAULT_SEED, mc_samples = DEFAULT_MC_SAMPLES, timing = false))]
    fn verify(&self, py: Python<'_>, points: usize, seed: u64, mc_samples: usize, timing: bool) -> PyResult<Py<PyAny>> {
        let opts = VerifyOptions {
            points,
            seed,
            mc_samples,
            timing,
            ..VerifyOptions::default()
        };
        let entry = &self.entry;
        let report = py.detach(|| run_verify(entry, &opts)).map_err(py_err)?;
        json_to_py(py, &report.to_json())
    }
}

/// Default spec of every gallery entry.
#[pyfunction]
fn gallery_specs() -> Vec<&'static str> {
    gallery::default_specs()
}

/// Closed-form navigation data `(a~, b~)` at `x` of a Riemannian source
/// under a drift, e.g. `zermelo("euclidean", "rotation", [0.3, 0.4])`.
#[pyfunction]
fn zermelo(alpha: &str, drift: &str, x: Vec<f64>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let a = gallery::riemannian_source(alpha).map_err(py_err)?;
    let v = gallery::drift_field(drift, a.domain()).map_err(py_err)?;
    let data = zermelo_riemannian(a, v).map_err(py_err)?;
    Ok((data.alpha.coeffs(&x), data.beta.coeffs(&x)))
}

/// Navigation metric `F~(x, y)` of a gallery metric under a drift, by root
/// solving.
#[pyfunction]
fn navigate(metric: &Metric, drift: &str, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    let f = metric.entry.metric.as_ref();
    let v = gallery::drift_field(drift, f.domain()).map_err(py_err)?;
    zermelo_general(f, v.as_ref(), &x, &y).map_err(py_err)
}

#[pymodule]
fn finslerpy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Metric>()?;
    m.add_function(wrap_pyfunction!(gallery_specs, m)?)?;
    m.add_function(wrap_pyfunction!(zermelo, m)?)?;
    m.add_function(wrap_pyfunction!(navigate, m)?)?;
    Ok(())
}
