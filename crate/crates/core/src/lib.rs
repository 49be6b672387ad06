//! Chart-based computations for Finsler metrics: fundamental and Cartan
//! tensors, sprays, Riemann/Ricci/flag curvature, S-curvature, volume
//! densities and Zermelo navigation.

pub mod cli;
pub mod curvature;
pub mod diffcore;
pub mod domain;
pub mod error;
pub mod gallery;
pub mod linalg;
pub mod measures;
pub mod metrics;
pub mod navigation;
pub mod sampling;
pub mod spray;

pub use diffcore::{Jet, Real};
pub use domain::ChartDomain;
pub use error::{FinslerError, Result};
pub use metrics::{FinslerMetric, RandersData};
pub use spray::Spray;
