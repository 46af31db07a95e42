//! Power Spherical and von Mises-Fisher distributions on S^{d-1}.
//!
//! The Power Spherical density is C(κ)(1 + μᵀz)^κ with
//!
//! ```text
//! log C(κ) = −[(α+β) log 2 + β log π + ln Γ(α) − ln Γ(α+β)],
//! α = (d−1)/2 + κ,  β = (d−1)/2.
//! ```
//!
//! Under PS(μ, κ) the cosine t = μᵀx satisfies (1 + t)/2 ~ Beta(α, β), which
//! gives both the sampler and the marginal density used to check it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::log_integrate_radial_kernel;
use crate::rng::SeededRng;
use crate::special::ln_gamma;
use crate::sphere::{householder_reflect, ln_sphere_measure, random_direction, UnitVector};

/// Floor applied to (1 ± μᵀz) before taking logs.
pub const ANTIPODAL_EPS: f64 = 1e-12;
/// Largest concentration a distribution is built with; larger values are clamped.
pub const KAPPA_MAX: f64 = 1.0e5;
/// Beyond this the normalizer is rejected outright.
pub const KAPPA_OVERFLOW: f64 = 1.0e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalParams {
    mu: UnitVector,
    kappa: f64,
}

impl SphericalParams {
    pub fn new(mu: UnitVector, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::domain(
                "SphericalParams::new",
                format!("kappa must be finite and non-negative, got {kappa}"),
            ));
        }
        Ok(Self { mu, kappa })
    }

    pub fn mu(&self) -> &UnitVector {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }
}

/// Beta-distribution shape parameters (α, β) of the PS cosine.
pub fn ps_shape(d: usize, kappa: f64) -> (f64, f64) {
    let beta = 0.5 * (d as f64 - 1.0);
    (beta + kappa, beta)
}

/// log C(κ) of the Power Spherical density on S^{d-1}.
pub fn ps_log_normalizer(d: usize, kappa: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(
            "ps_log_normalizer",
            format!("dimension must be at least 2, got {d}"),
        ));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::domain(
            "ps_log_normalizer",
            format!("kappa must be finite and non-negative, got {kappa}"),
        ));
    }
    if kappa > KAPPA_OVERFLOW {
        return Err(Error::domain(
            "ps_log_normalizer",
            format!("kappa {kappa} exceeds the supported maximum {KAPPA_OVERFLOW}"),
        ));
    }
    if kappa == 0.0 {
        // uniform density; the general formula only matches up to rounding
        return Ok(-ln_sphere_measure(d));
    }
    Ok(ps_log_normalizer_unchecked(d as f64, kappa))
}

/// Formula only, for callers that validated their inputs (autodiff kernels).
pub(crate) fn ps_log_normalizer_unchecked(d: f64, kappa: f64) -> f64 {
    let beta = 0.5 * (d - 1.0);
    let alpha = beta + kappa;
    -((alpha + beta) * std::f64::consts::LN_2
        + beta * std::f64::consts::PI.ln()
        + ln_gamma(alpha)
        - ln_gamma(alpha + beta))
}

/// d/dκ log C(κ) = −[log 2 + ψ(α) − ψ(α+β)].
pub(crate) fn ps_log_normalizer_grad(d: f64, kappa: f64) -> f64 {
    use crate::special::digamma;
    let beta = 0.5 * (d - 1.0);
    let alpha = beta + kappa;
    -(std::f64::consts::LN_2 + digamma(alpha) - digamma(alpha + beta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpherical {
    params: SphericalParams,
    log_normalizer: f64,
}

impl PowerSpherical {
    /// κ above [`KAPPA_MAX`] is clamped.
    pub fn new(params: SphericalParams) -> Result<Self> {
        let params = SphericalParams {
            kappa: params.kappa.min(KAPPA_MAX),
            ..params
        };
        let log_normalizer = ps_log_normalizer(params.dim(), params.kappa)?;
        Ok(Self {
            params,
            log_normalizer,
        })
    }

    pub fn from_parts(mu: UnitVector, kappa: f64) -> Result<Self> {
        Self::new(SphericalParams::new(mu, kappa)?)
    }

    pub fn params(&self) -> &SphericalParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa
    }

    pub fn alpha(&self) -> f64 {
        ps_shape(self.dim(), self.kappa()).0
    }

    pub fn beta(&self) -> f64 {
        ps_shape(self.dim(), self.kappa()).1
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// E[μᵀx] = (α − β)/(α + β).
    pub fn mean_cosine(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        (a - b) / (a + b)
    }

    /// log C(κ) + κ log(1 + μᵀz), with 1 + μᵀz floored at [`ANTIPODAL_EPS`].
    pub fn log_prob(&self, z: &UnitVector) -> Result<f64> {
        if z.dim() != self.dim() {
            return Err(Error::shape("ps_log_prob", &[self.dim()], &[z.dim()]));
        }
        Ok(self.log_prob_cosine(self.params.mu.dot(z)))
    }

    /// Log-density as a function of the cosine t = μᵀz.
    pub fn log_prob_cosine(&self, t: f64) -> f64 {
        if self.kappa() == 0.0 {
            return self.log_normalizer;
        }
        self.log_normalizer + self.kappa() * (1.0 + t).max(ANTIPODAL_EPS).ln()
    }

    /// Log-density of the scalar t = μᵀx on [−1, 1].
    pub fn marginal_t_log_density(&self, t: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::domain(
                "ps_marginal_t_log_density",
                format!("t must lie in [-1, 1], got {t}"),
            ));
        }
        let d = self.dim();
        let half = 0.5 * (d as f64 - 3.0);
        let one_minus = (1.0 - t).max(ANTIPODAL_EPS);
        let one_plus = (1.0 + t).max(ANTIPODAL_EPS);
        let radial = if half == 0.0 {
            0.0
        } else {
            half * (one_minus.ln() + one_plus.ln())
        };
        Ok(self.log_prob_cosine(t) + radial + ln_sphere_measure(d - 1))
    }

    /// Draws one sample: t from the Beta cosine law, a uniform tangent
    /// direction on S^{d-2}, then the Householder map e₁ ↦ μ.
    pub fn sample(&self, rng: &mut SeededRng) -> UnitVector {
        let d = self.dim();
        let (b, one_minus_b) = sample_beta_pair(self.alpha(), self.beta(), rng);
        let t = b - one_minus_b;
        let radius = 2.0 * (b * one_minus_b).sqrt();
        let tangent = random_direction(d - 1, rng);
        let mut y = Vec::with_capacity(d);
        y.push(t);
        y.extend(tangent.iter().map(|v| radius * v));
        let y = UnitVector::new(y).expect("sampled point is finite and non-zero");
        householder_reflect(&y, self.params.mu()).expect("dimensions agree by construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesFisher {
    params: SphericalParams,
}

impl VonMisesFisher {
    pub fn new(params: SphericalParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &SphericalParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// κ μᵀz. The normalizer is constant when κ is fixed and is left out.
    pub fn log_prob_unnormalized(&self, z: &UnitVector) -> Result<f64> {
        if z.dim() != self.dim() {
            return Err(Error::shape("vmf_log_prob", &[self.dim()], &[z.dim()]));
        }
        Ok(self.params.kappa() * self.params.mu().dot(z))
    }
}

/// −log ∫ exp(κ μᵀx) dx by quadrature. The closed form needs modified Bessel
/// functions; this numerical stand-in exists for tests and oracles.
pub fn vmf_log_normalizer_oracle(d: usize, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::domain(
            "vmf_log_normalizer_oracle",
            format!("kappa must be finite and non-negative, got {kappa}"),
        ));
    }
    Ok(-log_integrate_radial_kernel(|t| kappa * t, d, kappa)?)
}

/// −log ∫ (1 + μᵀx)^κ dx by quadrature: an independent check on the
/// closed-form [`ps_log_normalizer`].
pub fn ps_log_normalizer_oracle(d: usize, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::domain(
            "ps_log_normalizer_oracle",
            format!("kappa must be finite and non-negative, got {kappa}"),
        ));
    }
    let log_kernel = |t: f64| if kappa == 0.0 { 0.0 } else { kappa * (1.0 + t).max(0.0).ln() };
    Ok(-log_integrate_radial_kernel(log_kernel, d, kappa)?)
}

/// Gamma(shape, 1) by Marsaglia–Tsang, with the U^{1/a} boost for shape < 1.
pub fn sample_gamma(shape: f64, rng: &mut SeededRng) -> f64 {
    if shape < 1.0 {
        let g = sample_gamma(shape + 1.0, rng);
        let u: f64 = loop {
            let u = rng.uniform();
            if u > 0.0 {
                break u;
            }
        };
        return g * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return d * v;
        }
        if u > 0.0 && u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Returns (B, 1 − B) for B ~ Beta(a, b), each computed from the Gamma pair
/// so that neither loses precision near the ends of [0, 1].
pub fn sample_beta_pair(a: f64, b: f64, rng: &mut SeededRng) -> (f64, f64) {
    loop {
        let x = sample_gamma(a, rng);
        let y = sample_gamma(b, rng);
        let s = x + y;
        if s > 0.0 {
            return (x / s, y / s);
        }
    }
}
