use rand::Rng;
use serde::Serialize;

/// Shape of a single-chart domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainShape {
    Whole,
    /// Open ball `|x| < radius`.
    Ball { radius: f64 },
    /// Open solid cylinder `x0^2 + x1^2 < radius^2`, other coordinates free.
    Cylinder { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartDomain {
    pub dim: usize,
    pub shape: DomainShape,
    pub name: String,
}

/// Interior margin used when drawing sample points.
pub const SAMPLING_MARGIN: f64 = 1e-9;

impl ChartDomain {
    pub fn whole(dim: usize) -> Self {
        Self {
            dim,
            shape: DomainShape::Whole,
            name: format!("R^{dim}"),
        }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Self {
            dim,
            shape: DomainShape::Ball { radius: 1.0 },
            name: format!("unit ball in R^{dim}"),
        }
    }

    pub fn ball(dim: usize, radius: f64) -> Self {
        Self {
            dim,
            shape: DomainShape::Ball { radius },
            name: format!("ball of radius {radius} in R^{dim}"),
        }
    }

    pub fn unit_cylinder(dim: usize) -> Self {
        Self {
            dim,
            shape: DomainShape::Cylinder { radius: 1.0 },
            name: format!("unit cylinder in R^{dim}"),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self.shape {
            DomainShape::Whole => true,
            DomainShape::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>() < radius * radius,
            DomainShape::Cylinder { radius } => x[0] * x[0] + x[1] * x[1] < radius * radius,
        }
    }

    /// Euclidean distance from `x` to the boundary (infinite for `Whole`).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self.shape {
            DomainShape::Whole => f64::INFINITY,
            DomainShape::Ball { radius } => radius - x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            DomainShape::Cylinder { radius } => radius - (x[0] * x[0] + x[1] * x[1]).sqrt(),
        }
    }

    /// Uniform point in the domain shrunk by `fraction` (in `(0, 1]`).
    /// Unbounded directions are drawn from `[-fraction, fraction]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, fraction: f64) -> Vec<f64> {
        let fraction = fraction.min(1.0 - SAMPLING_MARGIN);
        match self.shape {
            DomainShape::Whole => (0..self.dim)
                .map(|_| rng.random_range(-fraction..fraction))
                .collect(),
            DomainShape::Ball { radius } => {
                crate::sampling::uniform_in_ball(rng, self.dim, radius * fraction)
            }
            DomainShape::Cylinder { radius } => {
                let mut p = crate::sampling::uniform_in_ball(rng, 2, radius * fraction);
                p.extend((2..self.dim).map(|_| rng.random_range(-fraction..fraction)));
                p
            }
        }
    }
}
