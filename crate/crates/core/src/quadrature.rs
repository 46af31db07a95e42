//! Gauss-Legendre quadrature and integrals of zonal densities over the sphere.
//!
//! A density on S^{d-1} that depends on x only through t = μᵀx integrates as
//!
//! ```text
//! ∫_{S^{d-1}} f(μᵀx) dx = A(d-1) · ∫_{-1}^{1} f(t) (1 - t²)^{(d-3)/2} dt
//! ```
//!
//! where A(k) is the surface area of S^{k-1}. The routines here evaluate the
//! right-hand side with t = cos θ (smooth for every d ≥ 2), or, for sharply
//! concentrated kernels, with t = 1 - u²/κ.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::sphere::ln_sphere_measure;

pub const DEFAULT_NODES: usize = 128;
pub const MAX_NODES: usize = 8192;
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Above this concentration the integral is taken in the variable u = √(κ(1 - t)).
pub const SUBSTITUTION_THRESHOLD: f64 = 1.0e3;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// n-point Gauss-Legendre rule on (-1, 1).
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("gauss_legendre", "need at least one node"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    /// Shared, lazily built rule.
    pub fn cached(n: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&n) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(Self::gauss_legendre(n)?);
        cache
            .lock()
            .expect("quadrature cache poisoned")
            .insert(n, rule.clone());
        Ok(rule)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_a^b f.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn check_dim(op: &'static str, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(op, format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// A(d-1) · ∫ f(t)(1-t²)^{(d-3)/2} dt with a fixed rule.
pub fn integrate_radial_density(
    f: impl Fn(f64) -> f64,
    d: usize,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_dim("integrate_radial_density", d)?;
    let power = (d - 2) as i32;
    let mut acc = 0.0;
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        let theta = 0.5 * PI * (x + 1.0);
        let t = theta.cos();
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::numerical(
                "integrate_radial_density",
                format!("integrand is {v} at node t = {t}"),
            ));
        }
        acc += w * v * theta.sin().powi(power);
    }
    Ok(ln_sphere_measure(d - 1).exp() * 0.5 * PI * acc)
}

/// [`integrate_radial_density`] with node doubling from 128 until successive
/// estimates agree to 1e-10 relative.
pub fn integrate_radial_density_adaptive(f: impl Fn(f64) -> f64, d: usize) -> Result<f64> {
    let mut n = DEFAULT_NODES;
    let mut prev = integrate_radial_density(&f, d, &*QuadratureRule::cached(n)?)?;
    while n < MAX_NODES {
        n *= 2;
        let next = integrate_radial_density(&f, d, &*QuadratureRule::cached(n)?)?;
        if (next - prev).abs() <= CONVERGENCE_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::numerical(
        "integrate_radial_density",
        format!("no convergence with {MAX_NODES} nodes"),
    ))
}

/// log of the sphere integral of exp(log_f(μᵀx)), evaluated in log space.
///
/// `concentration` is the scale on which the kernel decays away from t = 1
/// (κ for the Power Spherical and vMF kernels); above 10³ the integral is
/// taken in u with t = 1 - u²/κ so that the mass near t = 1 is resolved.
pub fn log_integrate_radial_kernel(
    log_f: impl Fn(f64) -> f64,
    d: usize,
    concentration: f64,
) -> Result<f64> {
    check_dim("log_integrate_radial_kernel", d)?;
    let ln_area = ln_sphere_measure(d - 1);
    let mut n = DEFAULT_NODES;
    let mut prev = if concentration > SUBSTITUTION_THRESHOLD {
        log_integral_substituted(&log_f, d, concentration, n / 4)?
    } else {
        log_integral_angular(&log_f, d, n)?
    };
    while n < MAX_NODES {
        n *= 2;
        let next = if concentration > SUBSTITUTION_THRESHOLD {
            log_integral_substituted(&log_f, d, concentration, n / 4)?
        } else {
            log_integral_angular(&log_f, d, n)?
        };
        // Relative agreement of the integrals ⇔ absolute agreement of their logs.
        if (next - prev).abs() <= CONVERGENCE_TOL {
            return Ok(ln_area + next);
        }
        prev = next;
    }
    Err(Error::numerical(
        "log_integrate_radial_kernel",
        format!("no convergence with {MAX_NODES} nodes (concentration {concentration})"),
    ))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn log_integral_angular(log_f: &impl Fn(f64) -> f64, d: usize, n: usize) -> Result<f64> {
    let rule = QuadratureRule::cached(n)?;
    let exponent = (d - 2) as f64;
    let mut terms = Vec::with_capacity(n);
    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
        let theta = 0.5 * PI * (x + 1.0);
        let t = theta.cos();
        let v = log_f(t);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::numerical(
                "log_integrate_radial_kernel",
                format!("log integrand is {v} at node t = {t}"),
            ));
        }
        terms.push(w.ln() + (0.5 * PI).ln() + v + exponent * theta.sin().ln());
    }
    Ok(log_sum_exp(&terms))
}

/// Composite rule over u ∈ [0, √(2κ)] in panels of width ≤ 2 with
/// `per_panel` nodes each.
fn log_integral_substituted(
    log_f: &impl Fn(f64) -> f64,
    d: usize,
    kappa: f64,
    per_panel: usize,
) -> Result<f64> {
    let rule = QuadratureRule::cached(per_panel.max(8))?;
    let upper = (2.0 * kappa).sqrt();
    let panels = (upper / 2.0).ceil().max(1.0) as usize;
    let width = upper / panels as f64;
    let half_exp = 0.5 * (d as f64 - 3.0);
    let mut terms = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let a = p as f64 * width;
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let u = a + 0.5 * width * (x + 1.0);
            let s = u * u / kappa;
            let t = 1.0 - s;
            let v = log_f(t);
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::numerical(
                    "log_integrate_radial_kernel",
                    format!("log integrand is {v} at node t = {t}"),
                ));
            }
            // (1-t²)^{(d-3)/2} dt = s^{(d-3)/2} (2-s)^{(d-3)/2} · 2u/κ du
            let jac = half_exp * (s.ln() + (2.0 - s).ln()) + (2.0 * u / kappa).ln();
            terms.push((0.5 * width * w).ln() + v + jac);
        }
    }
    Ok(log_sum_exp(&terms))
}
