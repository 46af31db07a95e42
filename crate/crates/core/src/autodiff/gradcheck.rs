use crate::error::Result;

use super::tape::{Tape, Var};
use super::tensor::Tensor;

/// Denominator floor of the relative error, so that coordinates whose true
/// gradient is zero are judged on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMismatch {
    pub input: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub failures: Vec<CoordinateMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares a claimed gradient against central differences of `value`.
pub fn grad_check_with(
    value: impl Fn(&[Tensor]) -> Result<f64>,
    gradient: impl Fn(&[Tensor]) -> Result<Vec<Tensor>>,
    point: &[Tensor],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let analytic = gradient(point)?;
    let mut work: Vec<Tensor> = point.to_vec();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        tolerance,
        failures: Vec::new(),
    };
    for (input, grad) in analytic.iter().enumerate() {
        for index in 0..point[input].len() {
            let x0 = point[input].data()[index];
            work[input].data_mut()[index] = x0 + step;
            let plus = value(&work)?;
            work[input].data_mut()[index] = x0 - step;
            let minus = value(&work)?;
            work[input].data_mut()[index] = x0;
            let numeric = (plus - minus) / (2.0 * step);
            let a = grad.data()[index];
            let rel_error = relative_error(a, numeric);
            report.checked += 1;
            report.max_rel_error = report.max_rel_error.max(rel_error);
            if !(rel_error <= tolerance) {
                report.failures.push(CoordinateMismatch {
                    input,
                    index,
                    analytic: a,
                    numeric,
                    rel_error,
                });
            }
        }
    }
    Ok(report)
}

/// Checks the tape's reverse pass for a scalar function of `point`.
///
/// `f` receives one trainable leaf per tensor in `point`.
pub fn grad_check<F>(f: F, point: &[Tensor], step: f64, tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let value = |inputs: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).data()[0])
    };
    let gradient = |inputs: &[Tensor]| -> Result<Vec<Tensor>> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let grads = tape.backward(out)?;
        Ok(vars
            .iter()
            .zip(inputs)
            .map(|(v, t)| grads.get(*v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
            .collect())
    };
    grad_check_with(value, gradient, point, step, tolerance)
}
