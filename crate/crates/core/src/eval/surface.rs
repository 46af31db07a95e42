use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::losses::{ps_pair_term, ps_pair_term_ds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub kappa: f64,
    pub s: f64,
    /// −[log C(κ) + κ·log(1+s)].
    pub value: f64,
    /// ∂value/∂s.
    pub ds: f64,
}

/// Evaluates the per-pair VI loss term over κ × s.
pub fn loss_surface_grid(d: usize, kappas: &[f64], s_grid: &[f64]) -> Result<Vec<SurfacePoint>> {
    if let Some(k) = kappas.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Error::domain("loss_surface_grid", format!("κ must be positive, got {k}")));
    }
    if let Some(s) = s_grid.iter().find(|s| !(-1.0..1.0).contains(*s)) {
        return Err(Error::domain("loss_surface_grid", format!("s must lie in [-1, 1), got {s}")));
    }
    let mut out = Vec::with_capacity(kappas.len() * s_grid.len());
    for &kappa in kappas {
        for &s in s_grid {
            out.push(SurfacePoint { kappa, s, value: ps_pair_term(d, kappa, s)?, ds: ps_pair_term_ds(kappa, s) });
        }
    }
    Ok(out)
}

pub fn write_loss_surface_csv(path: &Path, points: &[SurfacePoint]) -> Result<()> {
    let mut csv = String::from("kappa,s,loss,dloss_ds\n");
    for p in points {
        let _ = writeln!(csv, "{},{},{},{}", p.kappa, p.s, p.value, p.ds);
    }
    write_atomic(path, csv.as_bytes())
}
