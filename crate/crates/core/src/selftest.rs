//! Fast oracle suite behind the `selftest` command: normalizer vs quadrature,
//! sampler moments, finite-difference gradients, objective equivalences and
//! the Welch test.

use serde::Serialize;

use crate::autodiff::{grad_check, Axis, Tape, Tensor, Var};
use crate::distributions::{ps_log_normalizer, ps_log_normalizer_oracle, PowerSpherical};
use crate::error::Result;
use crate::eval::welch_t_test;
use crate::losses::{
    gradient_routing_check, simsiam_loss, vi_simsiam_loss, vmf_constant_kappa_loss, LossOptions, ViewEmbeddings,
};
use crate::model::{ModelConfig, Network};
use crate::rng::SeededRng;
use crate::sphere::{log_surface_area, UnitVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn normalizer() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for d in [2usize, 3, 5, 16] {
        for kappa in [0.0, 0.5, 1.0, 10.0, 100.0, 1e3] {
            let rel = ((ps_log_normalizer(d, kappa)? - ps_log_normalizer_oracle(d, kappa)?).exp() - 1.0).abs();
            worst = worst.max(rel);
        }
    }
    let uniform_exact = (2..=16).all(|d| {
        matches!((ps_log_normalizer(d, 0.0), log_surface_area(d)), (Ok(a), Ok(b)) if a == -b)
    });
    Ok((worst < 1e-8 && uniform_exact, format!("max relative error {worst:.2e}; κ = 0 exact: {uniform_exact}")))
}

fn sampler() -> Result<(bool, String)> {
    let dist = PowerSpherical::from_parts(UnitVector::basis(3, 0)?, 10.0)?;
    let mut rng = SeededRng::new(0).split_named("selftest-sampler");
    let n = 20_000;
    let t: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng).as_slice()[0]).collect();
    let mean = t.iter().sum::<f64>() / n as f64;
    let var = t.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    let z = (mean - dist.mean_cosine()) / se;
    Ok((z.abs() < 3.0, format!("E[μᵀx] {mean:.5} vs {:.5} ({z:+.2} SE)", dist.mean_cosine())))
}

fn random(rng: &mut SeededRng, r: usize, c: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform_range(lo, hi)).collect()).expect("consistent shape")
}

type OpFn = fn(&mut Tape, &[Var]) -> Result<Var>;

fn op_gradients() -> Result<(bool, String)> {
    let ops: [(&str, OpFn, [usize; 2]); 10] = [
        ("mul", |t, v| t.mul(v[0], v[1]), [3, 3]),
        ("matmul", |t, v| t.matmul(v[0], v[1]), [3, 3]),
        ("relu", |t, v| Ok(t.relu(v[0])), [3, 0]),
        ("exp", |t, v| Ok(t.exp(v[0])), [3, 0]),
        ("log", |t, v| Ok(t.log(v[0])), [3, 0]),
        ("softplus", |t, v| Ok(t.softplus(v[0])), [3, 0]),
        ("l2_normalize", |t, v| t.l2_normalize_rows(v[0]), [3, 0]),
        ("batch_standardize", |t, v| Ok(t.batch_standardize(v[0], 1e-5)?.0), [3, 0]),
        ("concat", |t, v| t.concat(&[v[0], v[1]], Axis::Rows), [3, 3]),
        ("slice", |t, v| t.slice(v[0], Axis::Cols, 1, 3), [3, 0]),
    ];
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for seed in 0..3u64 {
        let mut rng = SeededRng::new(seed).split_named("selftest-ops");
        for (name, op, [rows, second]) in ops {
            // positive inputs keep log defined and stay away from the relu kink
            let a = random(&mut rng, rows, 3, 0.2, 1.5);
            let mut point = vec![a];
            if second > 0 {
                point.push(random(&mut rng, second, 3, -1.0, 1.0));
            }
            let weights = random(&mut rng, 6, 3, -1.0, 1.0);
            let report = grad_check(
                |tape, vars| {
                    let y = op(tape, vars)?;
                    let shape = tape.value(y).shape().to_vec();
                    let n = shape.iter().product::<usize>();
                    let w = tape.constant(Tensor::new(shape, weights.data()[..n].to_vec())?);
                    let p = tape.mul(y, w)?;
                    Ok(tape.sum(p))
                },
                &point,
                1e-5,
                1e-6,
            )?;
            worst = worst.max(report.max_rel_error);
            if !report.passed() {
                failed.push(format!("{name}/seed {seed}"));
            }
        }
    }
    Ok((failed.is_empty(), format!("max relative error {worst:.2e}; failures: {failed:?}")))
}

fn unit(tape: &mut Tape, x: Var) -> Result<Var> {
    tape.l2_normalize_rows(x)
}

fn vi_loss_gradient() -> Result<(bool, String)> {
    let (m, n, d) = (3, 4, 5);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for seed in 0..3u64 {
        let mut rng = SeededRng::new(seed).split_named("selftest-vi");
        let z: Vec<Tensor> = (0..m).map(|_| random(&mut rng, n, d, -1.0, 1.0)).collect();
        let mut point: Vec<Tensor> = (0..m).map(|_| random(&mut rng, n, d, -1.0, 1.0)).collect();
        point.extend((0..m).map(|_| random(&mut rng, n, 1, 0.5, 3.0)));
        let report = grad_check(
            |tape, vars| {
                let mut latents = Vec::new();
                for zi in &z {
                    let c = tape.constant(zi.clone());
                    latents.push(unit(tape, c)?);
                }
                let mut mu = Vec::new();
                let mut kappa = Vec::new();
                for i in 0..m {
                    mu.push(Some(unit(tape, vars[i])?));
                    kappa.push(Some(tape.softplus(vars[m + i])));
                }
                let e = ViewEmbeddings::new(latents, mu, kappa);
                Ok(vi_simsiam_loss(tape, &e, &LossOptions::default())?.loss)
            },
            &point,
            1e-5,
            1e-4,
        )?;
        worst = worst.max(report.max_rel_error);
        ok &= report.passed();
    }
    Ok((ok, format!("max relative error {worst:.2e}")))
}

fn equivalence() -> Result<(bool, String)> {
    let mut rng = SeededRng::new(0).split_named("selftest-equivalence");
    let mut tape = Tape::new();
    let mut rows = |tape: &mut Tape| -> Result<Var> {
        let c = tape.constant(random(&mut rng, 6, 8, -1.0, 1.0));
        unit(tape, c)
    };
    let latents = vec![rows(&mut tape)?, rows(&mut tape)?];
    let mu = vec![Some(rows(&mut tape)?), Some(rows(&mut tape)?)];
    let e = ViewEmbeddings::new(latents, mu, vec![None, None]);
    let a = simsiam_loss(&mut tape, &e)?.total;
    let b = vmf_constant_kappa_loss(&mut tape, &e, 1.0, &LossOptions::default())?.total;
    Ok((a.to_bits() == b.to_bits(), format!("simsiam {a} vs vmf(κ=1) {b}")))
}

fn routing() -> Result<(bool, String)> {
    let mut config = ModelConfig::default();
    config.encoder.input_dim = 6;
    config.encoder.hidden_dims = vec![8];
    config.encoder.latent_dim = 4;
    config.predictor_hidden = 6;
    let net = Network::init(config, 3)?;
    let mut rng = SeededRng::new(3).split_named("selftest-routing");
    let views: Vec<Tensor> = (0..3).map(|_| random(&mut rng, 5, 6, -1.0, 1.0)).collect();
    let r = gradient_routing_check(&net, &views, &LossOptions::default())?;
    Ok((
        r.passed(),
        format!(
            "target grad {:.1e}, predictor grad norm {:.2e}, κ-grad error {:.1e}",
            r.target_grad_max_abs,
            r.predictor_grad_norm,
            r.kappa_analytic_max_rel_error.max(r.kappa_fd_max_rel_error)
        ),
    ))
}

fn welch() -> Result<(bool, String)> {
    let a = [0.0, 0.0, 0.0, 0.0, 1.0];
    let b = [10.0, 10.0, 10.0, 11.0, 9.0];
    let ab = welch_t_test(&a, &b)?;
    let ba = welch_t_test(&b, &a)?;
    let same = welch_t_test(&a, &a)?;
    let ok = ab.p < 0.01 && ab.t == -ba.t && ab.p == ba.p && same.t == 0.0 && (same.p - 1.0).abs() < 1e-12;
    Ok((ok, format!("t {:.3}, dof {:.3}, p {:.2e}", ab.t, ab.dof, ab.p)))
}

/// Runs every check; the suite passes when all entries pass.
pub fn run_selftest() -> Vec<Check> {
    vec![
        check("ps-normalizer-vs-quadrature", normalizer()),
        check("ps-sampler-mean", sampler()),
        check("autodiff-op-gradients", op_gradients()),
        check("vi-loss-gradient", vi_loss_gradient()),
        check("simsiam-vmf-equivalence", equivalence()),
        check("stop-gradient-routing", routing()),
        check("welch-t-test", welch()),
    ]
}
