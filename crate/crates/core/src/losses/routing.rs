//! End-to-end check that gradients reach the predictor but never the
//! detached target branch, and that ∂loss/∂κ matches its closed form.

use serde::Serialize;

use crate::autodiff::{relative_error, Axis, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::{split_rows, Mode, Network, StatsUpdates};

use super::{ps_pair_term_dkappa, vi_simsiam_loss, LossOptions, ViewEmbeddings};

const FD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingReport {
    /// Largest |∂loss/∂z| over the target-branch latents.
    pub target_grad_max_abs: f64,
    /// ‖∂loss/∂θ‖ over the predictor parameters.
    pub predictor_grad_norm: f64,
    /// Tape κ-gradient vs the closed form.
    pub kappa_analytic_max_rel_error: f64,
    /// Tape κ-gradient vs central finite differences.
    pub kappa_fd_max_rel_error: f64,
}

impl RoutingReport {
    pub fn passed(&self) -> bool {
        self.target_grad_max_abs == 0.0
            && self.predictor_grad_norm > 0.0
            && self.kappa_analytic_max_rel_error < FD_TOLERANCE
            && self.kappa_fd_max_rel_error < FD_TOLERANCE
    }
}

/// Runs the VI loss through `network` on `views` (one [n × input_dim]
/// tensor per view, every view acting as a source).
pub fn gradient_routing_check(
    network: &Network,
    views: &[Tensor],
    options: &LossOptions,
) -> Result<RoutingReport> {
    if !network.has_kappa_head() {
        return Err(Error::domain("gradient_routing_check", "network has no κ head"));
    }
    if views.len() < 2 {
        return Err(Error::domain("gradient_routing_check", "need at least 2 views"));
    }
    let sizes: Vec<usize> = views.iter().map(Tensor::rows).collect();

    // Network pass: target latents re-enter as fresh leaves so any gradient
    // leaking through the stop-gradient would land on them.
    let mut tape = Tape::new();
    let bound = network.bind(&mut tape, true);
    let inputs: Vec<Var> = views.iter().map(|v| tape.constant(v.clone())).collect();
    let x = tape.concat(&inputs, Axis::Rows)?;
    let mut updates = StatsUpdates::default();
    let z = network.encode(&mut tape, &bound, x, Mode::Train, &mut updates)?;
    let pred = network.predict(&mut tape, &bound, z, Mode::Train, &mut updates)?;
    let kappa_all = pred.kappa.expect("κ head checked above");
    let mus = split_rows(&mut tape, pred.mu, &sizes)?;
    let kappas = split_rows(&mut tape, kappa_all, &sizes)?;
    let z_views = split_rows(&mut tape, z, &sizes)?;
    let targets: Vec<Var> =
        z_views.iter().map(|&zv| tape.leaf(tape.value(zv).clone())).collect();
    let e = ViewEmbeddings::new(
        targets.clone(),
        mus.iter().map(|&m| Some(m)).collect(),
        kappas.iter().map(|&k| Some(k)).collect(),
    );
    let out = vi_simsiam_loss(&mut tape, &e, options)?;
    let grads = tape.backward(out.loss)?;

    let target_grad_max_abs = targets
        .iter()
        .filter_map(|&t| grads.get(t))
        .flat_map(|g| g.data().iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let predictor_grad_norm = bound
        .iter()
        .filter(|(name, _)| name.starts_with("predictor."))
        .filter_map(|(_, &v)| grads.get(v))
        .flat_map(|g| g.data().iter().map(|v| v * v))
        .sum::<f64>()
        .sqrt();

    // κ pass on frozen values: κ is the only leaf.
    let mu_vals: Vec<Tensor> = mus.iter().map(|&m| tape.value(m).clone()).collect();
    let z_vals: Vec<Tensor> = targets.iter().map(|&t| tape.value(t).clone()).collect();
    let k_vals: Vec<Tensor> = kappas.iter().map(|&k| tape.value(k).clone()).collect();
    let d = network.latent_dim();

    let eval = |k_vals: &[Tensor], want_grad: bool| -> Result<(f64, Vec<Tensor>)> {
        let mut t = Tape::new();
        let ks: Vec<Var> = k_vals.iter().map(|k| t.leaf(k.clone())).collect();
        let ms: Vec<Option<Var>> = mu_vals.iter().map(|m| Some(t.constant(m.clone()))).collect();
        let zs: Vec<Var> = z_vals.iter().map(|z| t.constant(z.clone())).collect();
        let e = ViewEmbeddings::new(zs, ms, ks.iter().map(|&k| Some(k)).collect());
        let out = vi_simsiam_loss(&mut t, &e, options)?;
        let mut gs = Vec::new();
        if want_grad {
            let g = t.backward(out.loss)?;
            for &k in &ks {
                gs.push(g.get(k).cloned().unwrap_or_else(|| Tensor::zeros(t.value(k).shape())));
            }
        }
        Ok((out.total, gs))
    };
    let (_, tape_grads) = eval(&k_vals, true)?;

    let m = views.len();
    let n = sizes[0];
    let mut kappa_analytic_max_rel_error: f64 = 0.0;
    let mut kappa_fd_max_rel_error: f64 = 0.0;
    for i in 0..m {
        for r in 0..n {
            let kappa = k_vals[i].data()[r];
            let mut analytic = 0.0;
            for j in 0..m {
                if i == j && !options.include_same_view {
                    continue;
                }
                let s: f64 = mu_vals[i].row(r).iter().zip(z_vals[j].row(r)).map(|(a, b)| a * b).sum();
                analytic += ps_pair_term_dkappa(d, kappa, s);
            }
            analytic /= n as f64;
            let tape_g = tape_grads[i].data()[r];
            kappa_analytic_max_rel_error =
                kappa_analytic_max_rel_error.max(relative_error(tape_g, analytic));

            let h = 1e-5 * kappa.max(1.0);
            let mut plus = k_vals.to_vec();
            plus[i].data_mut()[r] += h;
            let mut minus = k_vals.to_vec();
            minus[i].data_mut()[r] = (kappa - h).max(0.0);
            let span = plus[i].data()[r] - minus[i].data()[r];
            let fd = (eval(&plus, false)?.0 - eval(&minus, false)?.0) / span;
            kappa_fd_max_rel_error = kappa_fd_max_rel_error.max(relative_error(tape_g, fd));
        }
    }

    Ok(RoutingReport {
        target_grad_max_abs,
        predictor_grad_norm,
        kappa_analytic_max_rel_error,
        kappa_fd_max_rel_error,
    })
}
