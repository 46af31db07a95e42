//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stdout so it shows even when test output is captured.
//!
//! Oracles live here, independent of the library: plain Simpson quadrature
//! for normalizers and t tails, statrs for Beta/χ² distributions and log-gamma,
//! hand-rolled central differences for gradients.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use vi_simsiam::autodiff::{Axis, Tape, Tensor, Var};
use vi_simsiam::data::{generate_dataset, Dataset, SynthConfig};
use vi_simsiam::distributions::{ps_log_normalizer, PowerSpherical};
use vi_simsiam::eval::{
    extract_features, linear_probe, loss_surface_grid, run_analysis, welch_t_test, AnalysisConfig, ProbeConfig,
};
use vi_simsiam::losses::{simsiam_loss, vi_simsiam_loss, vmf_constant_kappa_loss, LossKind, LossOptions, ViewEmbeddings};
use vi_simsiam::model::Network;
use vi_simsiam::rng::SeededRng;
use vi_simsiam::sphere::{log_surface_area, UnitVector};
use vi_simsiam::train::{train_run, TrainConfig};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Composite Simpson's rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    s * h / 3.0
}

// ---------------------------------------------------------------- 1

/// log ∫_{S^{d-1}} (1 + μᵀz)^κ dz via Simpson in the polar angle.
fn ps_log_integral_oracle(d: usize, kappa: f64) -> f64 {
    let k = (d - 1) as f64;
    let log_area_sub = std::f64::consts::LN_2 + 0.5 * k * std::f64::consts::PI.ln() - ln_gamma(0.5 * k);
    // scaled by the integrand maximum 2^κ (at θ = 0)
    let f = |th: f64| {
        let c = (1.0 + th.cos()) / 2.0;
        let radial = if d == 2 { 1.0 } else { th.sin().powi(d as i32 - 2) };
        if kappa == 0.0 {
            radial
        } else if c <= 0.0 {
            0.0
        } else {
            (kappa * c.ln()).exp() * radial
        }
    };
    log_area_sub + kappa * std::f64::consts::LN_2 + simpson(f, 0.0, std::f64::consts::PI, 400_000).ln()
}

fn criterion_1() -> Verdict {
    let mut worst: f64 = 0.0;
    for d in [2usize, 3, 5, 16] {
        for kappa in [0.0, 0.5, 1.0, 10.0, 100.0, 1e3] {
            let lib = ps_log_normalizer(d, kappa).unwrap();
            let oracle = -ps_log_integral_oracle(d, kappa);
            worst = worst.max(((lib - oracle).exp() - 1.0).abs());
        }
    }
    let exact = [2usize, 3, 5, 16].iter().all(|&d| ps_log_normalizer(d, 0.0).unwrap() == -log_surface_area(d).unwrap());
    let four_pi = (ps_log_normalizer(3, 0.0).unwrap() + (4.0 * std::f64::consts::PI).ln()).abs();
    verdict(
        worst < 1e-8 && exact && four_pi < 1e-15,
        format!("max relative error {worst:.2e}; κ = 0 equals −log area: {exact}; d = 3 vs −log 4π: {four_pi:.1e}"),
    )
}

// ---------------------------------------------------------------- 2

fn sampler_case(d: usize, kappa: f64, seed: u64) -> (bool, String) {
    let mut mu: Vec<f64> = (0..d).map(|i| (i as f64 + 1.0).sin()).collect();
    let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    mu.iter_mut().for_each(|v| *v /= norm);
    let mu = UnitVector::new(mu).unwrap();
    let ps = PowerSpherical::from_parts(mu.clone(), kappa).unwrap();
    let (alpha, beta) = ((d - 1) as f64 / 2.0 + kappa, (d - 1) as f64 / 2.0);

    let mut rng = SeededRng::new(seed);
    let n = 100_000;
    let t: Vec<f64> = (0..n).map(|_| ps.sample(&mut rng).dot(&mu)).collect();
    let mean = t.iter().sum::<f64>() / n as f64;
    let var = t.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let z = (mean - (alpha - beta) / (alpha + beta)) / (var / n as f64).sqrt();

    // 40 equiprobable bins under the Beta law of (1 + t)/2; expected
    // counts integrate the library's marginal t density over each bin.
    let law = Beta::new(alpha, beta).unwrap();
    let bins = 40;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| match i {
            0 => -1.0,
            i if i == bins => 1.0,
            i => 2.0 * law.inverse_cdf(i as f64 / bins as f64) - 1.0,
        })
        .collect();
    let density = |x: f64| ps.marginal_t_log_density(x).map_or(0.0, f64::exp);
    let mut chi2 = 0.0;
    let mut density_err: f64 = 0.0;
    let mut counts = vec![0usize; bins];
    for &x in &t {
        counts[edges[1..].partition_point(|&e| e < x).min(bins - 1)] += 1;
    }
    for b in 0..bins {
        let p = simpson(density, edges[b], edges[b + 1], 2_000);
        let p_beta = law.cdf((edges[b + 1] + 1.0) / 2.0) - law.cdf((edges[b] + 1.0) / 2.0);
        density_err = density_err.max((p - p_beta).abs());
        let expected = p * n as f64;
        chi2 += (counts[b] as f64 - expected).powi(2) / expected;
    }
    let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    let ok = z.abs() < 3.0 && p_value > 0.01 && density_err < 1e-6;
    (ok, format!("(d={d}, κ={kappa}) mean {z:+.2} SE, χ² p {p_value:.3}, density vs Beta {density_err:.1e}"))
}

fn criterion_2() -> Verdict {
    let (a_ok, a) = sampler_case(3, 10.0, 11);
    let (b_ok, b) = sampler_case(5, 100.0, 12);
    verdict(a_ok && b_ok, format!("{a}; {b}"))
}

// ---------------------------------------------------------------- 3

type Graph<'a> = Box<dyn Fn(&mut Tape, &[Var]) -> vi_simsiam::Result<Var> + 'a>;

/// Max relative error between backward() and central differences; relative
/// errors use a 1e-3 absolute floor so near-zero gradients are compared
/// absolutely.
fn fd_check(f: &Graph, point: &[Tensor], h: f64) -> f64 {
    let eval = |inputs: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
        let out = f(&mut tape, &vars).unwrap();
        tape.value(out).data()[0]
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = point.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = f(&mut tape, &vars).unwrap();
    let grads = tape.backward(out).unwrap();
    let mut worst: f64 = 0.0;
    for (k, v) in vars.iter().enumerate() {
        let analytic = grads.get(*v).map(|g| g.data().to_vec()).unwrap_or_else(|| vec![0.0; point[k].len()]);
        for i in 0..point[k].len() {
            let mut plus = point.to_vec();
            let mut minus = point.to_vec();
            plus[k].data_mut()[i] += h;
            minus[k].data_mut()[i] -= h;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    worst
}

fn rand_matrix(rng: &mut SeededRng, r: usize, c: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform_range(lo, hi)).collect()).unwrap()
}

/// Values bounded away from zero with random signs (keeps relu/clamp kinks
/// out of the finite-difference stencil).
fn signed_matrix(rng: &mut SeededRng, r: usize, c: usize) -> Tensor {
    let data = (0..r * c)
        .map(|_| {
            let m = rng.uniform_range(0.2, 1.5);
            if rng.bernoulli(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::matrix(r, c, data).unwrap()
}

/// Σ w ⊙ op(...) with fixed random weights, so every output element matters.
fn weighted<'a>(op: impl Fn(&mut Tape, &[Var]) -> vi_simsiam::Result<Var> + 'a, seed: u64) -> Graph<'a> {
    Box::new(move |tape: &mut Tape, v: &[Var]| {
        let y = op(tape, v)?;
        let shape = tape.value(y).shape().to_vec();
        let n: usize = shape.iter().product::<usize>().max(1);
        let mut r = SeededRng::new(seed).split_named("weights");
        let w = tape.constant(Tensor::new(shape, (0..n).map(|_| r.uniform_range(-1.0, 1.0)).collect())?);
        let p = tape.mul(y, w)?;
        Ok(tape.sum(p))
    })
}

fn criterion_3() -> Verdict {
    let mut op_worst: (f64, &str) = (0.0, "");
    let mut detach_ok = true;
    let mut loss_worst: f64 = 0.0;
    for seed in 0..3u64 {
        let mut rng = SeededRng::new(100 + seed);
        let a = signed_matrix(&mut rng, 4, 3);
        let b = signed_matrix(&mut rng, 4, 3);
        let sq = signed_matrix(&mut rng, 3, 3);
        let pos = rand_matrix(&mut rng, 4, 3, 0.3, 2.0);
        let bias = rand_matrix(&mut rng, 1, 3, -1.0, 1.0);
        let kap = rand_matrix(&mut rng, 4, 1, 0.5, 60.0);
        let (mean, var) = (vec![0.1, -0.2, 0.3], vec![0.5, 1.5, 2.0]);

        let cases: Vec<(&str, Graph, Vec<Tensor>)> = vec![
            ("add", weighted(|t, v| t.add(v[0], v[1]), seed), vec![a.clone(), b.clone()]),
            ("sub", weighted(|t, v| t.sub(v[0], v[1]), seed), vec![a.clone(), b.clone()]),
            ("mul", weighted(|t, v| t.mul(v[0], v[1]), seed), vec![a.clone(), b.clone()]),
            ("add_row", weighted(|t, v| t.add_row(v[0], v[1]), seed), vec![a.clone(), bias.clone()]),
            ("scale", weighted(|t, v| Ok(t.scale(v[0], -2.5)), seed), vec![a.clone()]),
            ("neg", weighted(|t, v| Ok(t.neg(v[0])), seed), vec![a.clone()]),
            ("add_scalar", weighted(|t, v| Ok(t.add_scalar(v[0], 0.7)), seed), vec![a.clone()]),
            ("matmul", weighted(|t, v| t.matmul(v[0], v[1]), seed), vec![a.clone(), sq.clone()]),
            ("relu", weighted(|t, v| Ok(t.relu(v[0])), seed), vec![a.clone()]),
            ("sum", Box::new(|t: &mut Tape, v: &[Var]| Ok(t.sum(v[0]))), vec![a.clone()]),
            ("mean", Box::new(|t: &mut Tape, v: &[Var]| Ok(t.mean(v[0]))), vec![a.clone()]),
            ("row_sum", weighted(|t, v| t.row_sum(v[0]), seed), vec![a.clone()]),
            ("row_dot", weighted(|t, v| t.row_dot(v[0], v[1]), seed), vec![a.clone(), b.clone()]),
            ("log", weighted(|t, v| Ok(t.log(v[0])), seed), vec![pos.clone()]),
            ("exp", weighted(|t, v| Ok(t.exp(v[0])), seed), vec![a.clone()]),
            ("softplus", weighted(|t, v| Ok(t.softplus(v[0])), seed), vec![a.clone()]),
            ("clamp_min", weighted(|t, v| Ok(t.clamp_min(v[0], 0.0)), seed), vec![a.clone()]),
            ("clamp_max", weighted(|t, v| Ok(t.clamp_max(v[0], 0.0)), seed), vec![a.clone()]),
            ("l2_normalize_rows", weighted(|t, v| t.l2_normalize_rows(v[0]), seed), vec![a.clone()]),
            ("batch_standardize", weighted(|t, v| Ok(t.batch_standardize(v[0], 1e-5)?.0), seed), vec![a.clone()]),
            (
                "standardize_with",
                weighted(move |t, v| t.standardize_with(v[0], &mean, &var, 1e-5), seed),
                vec![a.clone()],
            ),
            ("concat_rows", weighted(|t, v| t.concat(&[v[0], v[1]], Axis::Rows), seed), vec![a.clone(), b.clone()]),
            ("concat_cols", weighted(|t, v| t.concat(&[v[0], v[1]], Axis::Cols), seed), vec![a.clone(), b.clone()]),
            ("slice_rows", weighted(|t, v| t.slice(v[0], Axis::Rows, 1, 3), seed), vec![a.clone()]),
            ("slice_cols", weighted(|t, v| t.slice(v[0], Axis::Cols, 1, 3), seed), vec![a.clone()]),
            ("ps_log_normalizer", weighted(|t, v| t.ps_log_normalizer(v[0], 16), seed), vec![kap.clone()]),
        ];
        for (name, graph, point) in &cases {
            let e = fd_check(graph, point, 1e-5);
            if e > op_worst.0 {
                op_worst = (e, name);
            }
        }

        // detach: a detached path contributes no gradient
        let mut tape = Tape::new();
        let x = tape.leaf(a.clone());
        let d = tape.detach(x);
        let p = tape.mul(x, d).unwrap();
        let s = tape.sum(p);
        let g = tape.backward(s).unwrap();
        let got = g.get(x).unwrap().data().to_vec();
        detach_ok &= got.iter().zip(a.data()).all(|(g, x)| g == x);

        // the full VI loss, including through non-detached latents
        let (m, n, dim) = (3, 4, 5);
        let mut point: Vec<Tensor> = (0..2 * m).map(|_| rand_matrix(&mut rng, n, dim, -1.0, 1.0)).collect();
        point.extend((0..m).map(|_| rand_matrix(&mut rng, n, 1, 0.5, 20.0)));
        let loss: Graph = Box::new(move |tape: &mut Tape, v: &[Var]| {
            let mut z = Vec::new();
            let mut mu = Vec::new();
            for i in 0..m {
                z.push(tape.l2_normalize_rows(v[i])?);
                mu.push(Some(tape.l2_normalize_rows(v[m + i])?));
            }
            let kappa = v[2 * m..].iter().map(|&k| Some(k)).collect();
            let options = LossOptions { detach_targets: false, ..LossOptions::default() };
            Ok(vi_simsiam_loss(tape, &ViewEmbeddings::new(z, mu, kappa), &options)?.loss)
        });
        loss_worst = loss_worst.max(fd_check(&loss, &point, 1e-6));
    }
    verdict(
        op_worst.0 < 1e-6 && loss_worst < 1e-4 && detach_ok,
        format!(
            "26 op cases × 3 seeds, worst {:.2e} ({}); vi_simsiam_loss {loss_worst:.2e}; detach blocks gradient: {detach_ok}",
            op_worst.0, op_worst.1
        ),
    )
}

// ---------------------------------------------------------------- 4

fn unit_rows(rng: &mut SeededRng, n: usize, d: usize) -> Tensor {
    let mut rows = Vec::new();
    for _ in 0..n {
        let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        rows.push(v.iter().map(|x| x / norm).collect());
    }
    Tensor::from_rows(&rows).unwrap()
}

fn criterion_4() -> Verdict {
    let mut rng = SeededRng::new(44);
    let (n, d) = (16, 8);
    let mut bitwise = true;
    for _ in 0..5 {
        let mut tape = Tape::new();
        let z: Vec<Var> = (0..2).map(|_| tape.constant(unit_rows(&mut rng, n, d))).collect();
        let mu: Vec<Option<Var>> = (0..2).map(|_| Some(tape.constant(unit_rows(&mut rng, n, d)))).collect();
        let e = ViewEmbeddings::new(z, mu, vec![None, None]);
        let a = simsiam_loss(&mut tape, &e).unwrap().total;
        let b = vmf_constant_kappa_loss(&mut tape, &e, 1.0, &LossOptions::default()).unwrap().total;
        bitwise &= a.to_bits() == b.to_bits();
    }

    let mut worst: f64 = 0.0;
    for (m, kappa) in [(2usize, 1.0), (3, 10.0), (4, 0.5), (8, 250.0)] {
        let zs: Vec<Tensor> = (0..m).map(|_| unit_rows(&mut rng, n, d)).collect();
        let mus: Vec<Tensor> = (0..m).map(|_| unit_rows(&mut rng, n, d)).collect();
        let mut tape = Tape::new();
        let z = zs.iter().map(|t| tape.constant(t.clone())).collect();
        let mu = mus.iter().map(|t| Some(tape.constant(t.clone()))).collect();
        let k = (0..m).map(|_| Some(tape.constant(Tensor::full(&[n, 1], kappa)))).collect();
        let vi = vi_simsiam_loss(&mut tape, &ViewEmbeddings::new(z, mu, k), &LossOptions::default()).unwrap().total;

        // −mean_b Σ_{i≠j} log(1 + μ_iᵀ z_j) and the closed-form log C(κ)
        let mut analog = 0.0;
        let mut pairs = 0.0;
        for i in 0..m {
            for j in (0..m).filter(|&j| j != i) {
                pairs += 1.0;
                for r in 0..n {
                    let s: f64 = mus[i].row(r).iter().zip(zs[j].row(r)).map(|(a, b)| a * b).sum();
                    analog -= (1.0 + s).ln() / n as f64;
                }
            }
        }
        let (alpha, beta) = ((d - 1) as f64 / 2.0 + kappa, (d - 1) as f64 / 2.0);
        let log_c = -((alpha + beta) * std::f64::consts::LN_2 + beta * std::f64::consts::PI.ln() + ln_gamma(alpha)
            - ln_gamma(alpha + beta));
        worst = worst.max((vi - kappa * analog - (-pairs * log_c)).abs());
    }
    verdict(
        bitwise && worst < 1e-10,
        format!("vMF(κ=1) ≡ SimSiam bitwise: {bitwise}; VI − κ·analog + P·log C residual {worst:.1e}"),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let kappas = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];
    let s: Vec<f64> = (0..200).map(|i| -0.9 + 1.89 * i as f64 / 199.0).collect();
    let grid = loss_surface_grid(16, &kappas, &s).unwrap();
    let rows: Vec<_> = grid.chunks(s.len()).collect();
    let monotone = rows.iter().all(|r| r.windows(2).all(|w| w[1].value < w[0].value));
    let flat = rows[0].iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max)
        - rows[0].iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let steeper = (0..s.len()).all(|i| rows.windows(2).all(|w| w[1][i].ds.abs() > w[0][i].ds.abs()));
    // values and slopes against the closed form −[log C(κ) + κ log(1+s)]
    let d = 16.0;
    let closed_err = grid
        .iter()
        .map(|p| {
            let (alpha, beta) = ((d - 1.0) / 2.0 + p.kappa, (d - 1.0) / 2.0);
            let log_c = -((alpha + beta) * std::f64::consts::LN_2 + beta * std::f64::consts::PI.ln() + ln_gamma(alpha)
                - ln_gamma(alpha + beta));
            let value = -(log_c + p.kappa * (1.0 + p.s).ln());
            let slope = -p.kappa / (1.0 + p.s);
            ((p.value - value).abs() / value.abs().max(1.0)).max((p.ds - slope).abs() / slope.abs())
        })
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        monotone && flat < 0.1 && steeper && closed_err < 1e-9 && secs < 1.0,
        format!(
            "monotone {monotone}; κ=0.01 range {flat:.4}; |∂/∂s| increasing in κ {steeper}; closed-form error {closed_err:.1e}; {secs:.3} s"
        ),
    )
}

// ---------------------------------------------------------------- 6–8

struct RunResult {
    config: &'static str,
    loss: LossKind,
    seed: u64,
    baseline: f64,
    top1: f64,
    min_dim_std: f64,
}

fn min_dim_std(network: &Network, data: &Dataset) -> f64 {
    let f = extract_features(network, &data.test).unwrap().features;
    let (n, d) = (f.rows(), f.cols());
    (0..d)
        .map(|j| {
            let col: Vec<f64> = (0..n).map(|i| f.row(i)[j]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

fn mean(x: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = x.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn criteria_6_to_8() -> [Verdict; 3] {
    let start = Instant::now();
    let probe = ProbeConfig::default();
    let configs: [(&str, SynthConfig); 2] = [
        ("default", SynthConfig::default()),
        ("high-ambiguity", SynthConfig { ambiguity_fraction: 0.3, ambiguity_mix: 0.55, ..SynthConfig::default() }),
    ];
    let mut runs = Vec::new();
    let mut analysed = None;
    for (name, synth) in &configs {
        for seed in 0..3u64 {
            let data = generate_dataset(&SynthConfig { seed, ..synth.clone() }).unwrap();
            for loss in [LossKind::Simsiam, LossKind::ViSimsiam] {
                let config = TrainConfig { loss, seed, checkpoint_every: 0, ..TrainConfig::default() };
                let untrained = Network::init(config.resolved_model(), seed).unwrap();
                let baseline = linear_probe(&untrained, &data, &probe).unwrap().top1;
                let trained = train_run(&config, &data, None).unwrap().network;
                let top1 = linear_probe(&trained, &data, &probe).unwrap().top1;
                let r = RunResult { config: name, loss, seed, baseline, top1, min_dim_std: min_dim_std(&trained, &data) };
                emit(&format!(
                    "    {:<14} {:<10} seed {} untrained {:.3} trained {:.3} min per-dim std {:.3}",
                    r.config,
                    r.loss.as_str(),
                    r.seed,
                    r.baseline,
                    r.top1,
                    r.min_dim_std
                ));
                if *name == "default" && seed == 0 && loss == LossKind::ViSimsiam {
                    analysed = Some((trained, data.clone()));
                }
                runs.push(r);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let avg = |config: &str, loss: LossKind, f: fn(&RunResult) -> f64| {
        mean(runs.iter().filter(|r| r.config == config && r.loss == loss).map(f))
    };
    let gain = |loss| avg("default", loss, |r| r.top1) - avg("default", loss, |r| r.baseline);
    let (gain_ss, gain_vi) = (gain(LossKind::Simsiam), gain(LossKind::ViSimsiam));
    let (ss, vi) = (avg("default", LossKind::Simsiam, |r| r.top1), avg("default", LossKind::ViSimsiam, |r| r.top1));
    let (ss_hi, vi_hi) =
        (avg("high-ambiguity", LossKind::Simsiam, |r| r.top1), avg("high-ambiguity", LossKind::ViSimsiam, |r| r.top1));
    let floor = 0.1 / 16f64.sqrt();
    let min_std = runs.iter().map(|r| r.min_dim_std).fold(f64::INFINITY, f64::min);
    let c6 = verdict(
        gain_ss >= 0.20 && gain_vi >= 0.20 && vi >= ss - 0.02 && vi_hi > ss_hi && min_std > floor && secs < 1200.0,
        format!(
            "(a) gain over untrained simsiam {:+.1} / vi-simsiam {:+.1} pts; (b) default vi {:.1} vs simsiam {:.1}, \
             high-ambiguity vi {:.1} vs simsiam {:.1}; (c) min per-dim std {min_std:.3} > {floor:.3}; {secs:.0} s",
            100.0 * gain_ss,
            100.0 * gain_vi,
            100.0 * vi,
            100.0 * ss,
            100.0 * vi_hi,
            100.0 * ss_hi
        ),
    );

    let (network, data) = analysed.expect("seed-0 VI run");
    let report = run_analysis(&network, &data, &AnalysisConfig::default()).unwrap();
    let amb = &report.kappa.ambiguity;
    let cor = &report.correctness;
    let p = |c: &vi_simsiam::eval::GroupComparison| c.welch.as_ref().map_or(f64::NAN, |w| w.p);
    let c7 = verdict(
        amb.a.mean < amb.b.mean && p(amb) < 0.01 && cor.a.mean < cor.b.mean && p(cor) < 0.05,
        format!(
            "ambiguous κ {:.3} < clean {:.3} (p {:.1e}); incorrect κ {:.3} < correct {:.3} (p {:.1e}, n = {}/{})",
            amb.a.mean,
            amb.b.mean,
            p(amb),
            cor.a.mean,
            cor.b.mean,
            p(cor),
            cor.a.count,
            cor.b.count
        ),
    );
    let aug = &report.augmentation;
    let variance = |name: &str| aug.groups.iter().find(|g| g.name == name).map_or(f64::NAN, |g| g.variance);
    let c8 = verdict(
        aug.mask_noise_variance_ratio > 1.5,
        format!(
            "var κ heavy-mask {:.3} / noise {:.3} = {:.2}",
            variance("heavy-mask"),
            variance("noise"),
            aug.mask_noise_variance_ratio
        ),
    );
    [c6, c7, c8]
}

// ---------------------------------------------------------------- 9

fn vissl(cwd: &Path, args: &[&str]) -> PathBuf {
    let out = Command::new(env!("CARGO_BIN_EXE_vissl"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(out.status.success(), "vissl {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    cwd.join(String::from_utf8_lossy(&out.stdout).trim())
}

fn tree(dir: &Path, prefix: &str, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        let file = p.file_name().unwrap().to_string_lossy().into_owned();
        let name = format!("{prefix}{file}");
        if p.is_dir() {
            tree(&p, &format!("{name}/"), out);
        } else if file != "manifest.json" {
            out.push((name, std::fs::read(&p).unwrap()));
        }
    }
}

fn pipeline(cwd: &Path, out: &str) -> Vec<(String, Vec<u8>)> {
    let data = vissl(cwd, &["gen-data", "--out", out, "--seed", "3"]);
    let data = data.to_string_lossy().into_owned();
    let train = vissl(cwd, &["train", "--data", &data, "--out", out, "--seed", "3", "--epochs", "20"]);
    let ckpt = train.join("checkpoints/final.ckpt").to_string_lossy().into_owned();
    let probe = vissl(cwd, &["probe", "--checkpoint", &ckpt, "--data", &data, "--out", out, "--seed", "3"]);
    let analyze = vissl(cwd, &["analyze", "--checkpoint", &ckpt, "--data", &data, "--out", out, "--seed", "3"]);
    let mut files = Vec::new();
    for (stage, dir) in [("gen-data", &PathBuf::from(&data)), ("train", &train), ("probe", &probe), ("analyze", &analyze)] {
        tree(dir, &format!("{stage}/"), &mut files);
    }
    files
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let a = pipeline(tmp.path(), "first");
    let b = pipeline(tmp.path(), "second");
    let names_equal = a.iter().map(|f| &f.0).eq(b.iter().map(|f| &f.0));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    verdict(
        names_equal && differing.is_empty() && a.len() > 10,
        format!(
            "gen-data → train (20 epochs) → probe → analyze twice: {} files compared, differing {:?}",
            a.len(),
            differing
        ),
    )
}

// ---------------------------------------------------------------- 10

/// Two-sided Student-t tail by Simpson in θ = atan(x), normalized by the
/// same integral over the whole half-line.
fn t_two_sided_oracle(t: f64, dof: f64) -> f64 {
    let f = |th: f64| {
        let x = th.tan();
        let c = th.cos();
        if c <= 0.0 {
            return 0.0;
        }
        (1.0 + x * x / dof).powf(-(dof + 1.0) / 2.0) / (c * c)
    };
    let half = std::f64::consts::FRAC_PI_2;
    let n = 200_000;
    simpson(f, t.abs().atan(), half, n) / simpson(f, 0.0, half, n)
}

fn criterion_10() -> Verdict {
    let mut rng = SeededRng::new(1010);
    let mut worst: f64 = 0.0;
    let mut stats_worst: f64 = 0.0;
    for _ in 0..50 {
        let na = 2 + rng.below(30);
        let nb = 2 + rng.below(30);
        let shift = rng.uniform_range(-1.5, 1.5);
        let (sa, sb) = (rng.uniform_range(0.2, 3.0), rng.uniform_range(0.2, 3.0));
        let a: Vec<f64> = (0..na).map(|_| rng.normal() * sa).collect();
        let b: Vec<f64> = (0..nb).map(|_| shift + rng.normal() * sb).collect();
        let moments = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64)
        };
        let ((ma, va), (mb, vb)) = (moments(&a), moments(&b));
        let (qa, qb) = (va / na as f64, vb / nb as f64);
        let t = (ma - mb) / (qa + qb).sqrt();
        let dof = (qa + qb).powi(2) / (qa * qa / (na - 1) as f64 + qb * qb / (nb - 1) as f64);
        let w = welch_t_test(&a, &b).unwrap();
        worst = worst.max((w.p - t_two_sided_oracle(t, dof)).abs());
        stats_worst = stats_worst.max((w.t - t).abs() / t.abs().max(1.0)).max((w.dof - dof).abs() / dof);
    }
    verdict(
        worst < 1e-6 && stats_worst < 1e-10,
        format!("50 cases: max |p − oracle| {worst:.1e}; t and dof max relative error {stats_worst:.1e}"),
    )
}

// ----------------------------------------------------------------

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    let mut record = |id: usize, v: Verdict, secs: f64| {
        emit(&format!("{} criterion {id}: {} [{secs:.1} s]", if v.passed { "PASS" } else { "FAIL" }, v.detail));
        if !v.passed {
            failed.push(id);
        }
    };
    let timed = |f: fn() -> Verdict| {
        let s = Instant::now();
        let v = f();
        (v, s.elapsed().as_secs_f64())
    };

    let (v, s) = timed(criterion_1);
    record(1, Verdict { passed: v.passed && s < 5.0, ..v }, s);
    let (v, s) = timed(criterion_2);
    record(2, Verdict { passed: v.passed && s < 30.0, ..v }, s);
    let (v, s) = timed(criterion_3);
    record(3, Verdict { passed: v.passed && s < 60.0, ..v }, s);
    let (v, s) = timed(criterion_4);
    record(4, v, s);
    let (v, s) = timed(criterion_5);
    record(5, v, s);
    let start = Instant::now();
    let [c6, c7, c8] = criteria_6_to_8();
    let s = start.elapsed().as_secs_f64();
    record(6, c6, s);
    record(7, c7, s);
    record(8, c8, s);
    let (v, s) = timed(criterion_9);
    record(9, v, s);
    let (v, s) = timed(criterion_10);
    record(10, v, s);

    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
