//! Unit vectors and basic geometry of S^{d-1}.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::special::ln_gamma;

/// Tolerance of the unit-norm invariant.
pub const NORM_TOL: f64 = 1e-9;

/// A point on the unit sphere S^{d-1}, d ≥ 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Normalizes `coords`. Fails for d < 2, non-finite entries or the zero vector.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::domain(
                "UnitVector::new",
                format!("dimension must be at least 2, got {}", coords.len()),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("UnitVector::new", "non-finite coordinate"));
        }
        let norm = l2_norm(&coords);
        if norm == 0.0 {
            return Err(Error::domain("UnitVector::new", "cannot normalize the zero vector"));
        }
        Ok(Self {
            coords: coords.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// Standard basis vector e_{axis}.
    pub fn basis(dim: usize, axis: usize) -> Result<Self> {
        if axis >= dim {
            return Err(Error::domain(
                "UnitVector::basis",
                format!("axis {axis} out of range for dimension {dim}"),
            ));
        }
        let mut coords = vec![0.0; dim];
        coords[axis] = 1.0;
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Self {
        v.coords
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// ln of the (k-1)-dimensional measure of S^{k-1}: ln(2π^{k/2} / Γ(k/2)), k ≥ 1.
///
/// k = 1 is the two-point sphere S⁰ with counting measure 2.
pub(crate) fn ln_sphere_measure(k: usize) -> f64 {
    let half = 0.5 * k as f64;
    2f64.ln() + half * PI.ln() - ln_gamma(half)
}

/// Surface area of S^{d-1}: 2π^{d/2} / Γ(d/2).
pub fn surface_area(d: usize) -> Result<f64> {
    Ok(log_surface_area(d)?.exp())
}

pub fn log_surface_area(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(
            "surface_area",
            format!("dimension must be at least 2, got {d}"),
        ));
    }
    Ok(ln_sphere_measure(d))
}

/// Uniform direction in R^dim as a plain vector; dim = 1 yields ±1.
pub(crate) fn random_direction(dim: usize, rng: &mut SeededRng) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.bernoulli(0.5) { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let norm = l2_norm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Uniform sample on S^{d-1} (normalized standard Gaussian vector).
pub fn sample_uniform_sphere(d: usize, rng: &mut SeededRng) -> Result<UnitVector> {
    if d < 2 {
        return Err(Error::domain(
            "sample_uniform_sphere",
            format!("dimension must be at least 2, got {d}"),
        ));
    }
    UnitVector::new(random_direction(d, rng))
}

/// Applies the Householder map that sends e₁ to `target`:
/// (I − 2uuᵀ)y with u = (e₁ − target)/‖e₁ − target‖.
///
/// When target = e₁ the map is the identity and `y` is returned unchanged.
pub fn householder_reflect(y: &UnitVector, target: &UnitVector) -> Result<UnitVector> {
    if y.dim() != target.dim() {
        return Err(Error::shape("householder_reflect", &[y.dim()], &[target.dim()]));
    }
    let mut u: Vec<f64> = target.as_slice().iter().map(|c| -c).collect();
    u[0] += 1.0;
    let norm = l2_norm(&u);
    if norm < 1e-15 {
        return Ok(y.clone());
    }
    u.iter_mut().for_each(|c| *c /= norm);
    let proj = 2.0 * dot(&u, y.as_slice());
    let out: Vec<f64> = y
        .as_slice()
        .iter()
        .zip(&u)
        .map(|(yi, ui)| yi - proj * ui)
        .collect();
    // Reflections are isometries; renormalizing only removes rounding drift.
    UnitVector::new(out)
}
