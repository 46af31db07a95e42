use super::*;
use crate::error::Result;
use crate::rng::SeededRng;

fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| {
            let v = rng.uniform_range(-2.0, 2.0);
            // keep clear of relu / clamp kinks
            if v.abs() < 1e-2 {
                v + 0.05
            } else {
                v
            }
        })
        .collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

fn weighted_sum(tape: &mut Tape, y: Var, w: &Tensor) -> Result<Var> {
    let wv = tape.constant(w.clone());
    let p = tape.mul(y, wv)?;
    Ok(tape.sum(p))
}

type OpFn = fn(&mut Tape, &[Var]) -> Result<Var>;

fn unary_ops() -> Vec<(&'static str, OpFn, fn(f64) -> f64)> {
    let id: fn(f64) -> f64 = |v| v;
    let positive: fn(f64) -> f64 = |v| v.abs() + 0.5;
    vec![
        ("relu", |t, v| Ok(t.relu(v[0])), id),
        ("log", |t, v| Ok(t.log(v[0])), positive),
        ("exp", |t, v| Ok(t.exp(v[0])), id),
        ("softplus", |t, v| Ok(t.softplus(v[0])), id),
        ("scale", |t, v| Ok(t.scale(v[0], -1.7)), id),
        ("add_scalar", |t, v| Ok(t.add_scalar(v[0], 0.3)), id),
        ("clamp_min", |t, v| Ok(t.clamp_min(v[0], 0.25)), id),
        ("clamp_max", |t, v| Ok(t.clamp_max(v[0], -0.25)), id),
        ("l2_normalize_rows", |t, v| t.l2_normalize_rows(v[0]), id),
        ("batch_standardize", |t, v| Ok(t.batch_standardize(v[0], 1e-5)?.0), id),
        ("standardize_with", |t, v| t.standardize_with(v[0], &[0.1, -0.2, 0.3, 0.0], &[1.0, 2.0, 0.5, 4.0], 1e-5), id),
        ("row_sum", |t, v| t.row_sum(v[0]), id),
        ("slice_rows", |t, v| t.slice(v[0], Axis::Rows, 1, 3), id),
        ("slice_cols", |t, v| t.slice(v[0], Axis::Cols, 1, 3), id),
        ("ps_log_normalizer", |t, v| t.ps_log_normalizer(v[0], 16), positive),
    ]
}

#[test]
fn every_op_matches_central_differences() {
    for seed in [1u64, 2, 3] {
        let mut rng = SeededRng::new(seed);
        for (name, op, prep) in unary_ops() {
            let x = random_matrix(&mut rng, 5, 4).map(prep);
            let out_shape = {
                let mut tape = Tape::new();
                let v = tape.constant(x.clone());
                let y = op(&mut tape, &[v]).unwrap();
                tape.value(y).shape().to_vec()
            };
            let n: usize = out_shape.iter().product();
            let w = Tensor::new(out_shape, (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap();
            let report = grad_check(
                |tape, vars| {
                    let y = op(tape, vars)?;
                    weighted_sum(tape, y, &w)
                },
                &[x],
                1e-5,
                1e-6,
            )
            .unwrap();
            assert!(report.passed(), "{name} seed {seed}: {report:?}");
        }
        let binary: Vec<(&str, OpFn, [usize; 4])> = vec![
            ("add", |t, v| t.add(v[0], v[1]), [3, 4, 3, 4]),
            ("sub", |t, v| t.sub(v[0], v[1]), [3, 4, 3, 4]),
            ("mul", |t, v| t.mul(v[0], v[1]), [3, 4, 3, 4]),
            ("matmul", |t, v| t.matmul(v[0], v[1]), [3, 4, 4, 2]),
            ("add_row", |t, v| t.add_row(v[0], v[1]), [3, 4, 1, 4]),
            ("row_dot", |t, v| t.row_dot(v[0], v[1]), [3, 4, 3, 4]),
            ("concat_rows", |t, v| t.concat(&[v[0], v[1]], Axis::Rows), [3, 4, 2, 4]),
            ("concat_cols", |t, v| t.concat(&[v[0], v[1]], Axis::Cols), [3, 4, 3, 2]),
        ];
        for (name, op, [r1, c1, r2, c2]) in binary {
            let a = random_matrix(&mut rng, r1, c1);
            let b = random_matrix(&mut rng, r2, c2);
            let out_shape = {
                let mut tape = Tape::new();
                let va = tape.constant(a.clone());
                let vb = tape.constant(b.clone());
                let y = op(&mut tape, &[va, vb]).unwrap();
                tape.value(y).shape().to_vec()
            };
            let n: usize = out_shape.iter().product();
            let w = Tensor::new(out_shape, (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap();
            let report = grad_check(
                |tape, vars| {
                    let y = op(tape, vars)?;
                    weighted_sum(tape, y, &w)
                },
                &[a, b],
                1e-5,
                1e-6,
            )
            .unwrap();
            assert!(report.passed(), "{name} seed {seed}: {report:?}");
        }
        // reductions straight to a scalar
        let x = random_matrix(&mut rng, 4, 3);
        for (name, op) in [("sum", (|t: &mut Tape, v: &[Var]| Ok(t.sum(v[0]))) as OpFn), ("mean", |t, v| Ok(t.mean(v[0])))] {
            let report = grad_check(op, &[x.clone()], 1e-5, 1e-6).unwrap();
            assert!(report.passed(), "{name}: {report:?}");
        }
    }
}

#[test]
fn closed_form_values() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::matrix(1, 2, vec![3.0, 4.0]).unwrap());
    let y = tape.l2_normalize_rows(x).unwrap();
    assert_eq!(tape.value(y).data(), &[0.6, 0.8]);
    let z = tape.constant(Tensor::scalar(0.0));
    let sp = tape.softplus(z);
    assert!((tape.value(sp).data()[0] - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn matmul_hand_computed() {
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
    let b = tape.constant(Tensor::matrix(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap());
    let c = tape.matmul(a, b).unwrap();
    assert_eq!(tape.value(c).data(), &[1.0, 2.0, 4.0, 5.0]);
    let b2 = tape.constant(Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
    let c2 = tape.matmul(a, b2).unwrap();
    // [1 2 3]·cols = 1+6+15, 2+8+18 ; [4 5 6]·cols = 4+15+30, 8+20+36
    assert_eq!(tape.value(c2).data(), &[22.0, 28.0, 49.0, 64.0]);
}

#[test]
fn square_gradient() {
    let mut tape = Tape::new();
    let w = tape.leaf(Tensor::scalar(3.0));
    let y = tape.mul(w, w).unwrap();
    let g = tape.backward(y).unwrap();
    assert_eq!(g.get(w).unwrap().data(), &[6.0]);
}

#[test]
fn detach_blocks_gradient_and_keeps_value() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, -2.0, 0.5]));
    let w = tape.leaf(Tensor::vector(vec![0.3, 0.7, -1.1]));
    let xd = tape.detach(x);
    assert_eq!(tape.value(xd), tape.value(x));
    let p = tape.mul(xd, w).unwrap();
    let loss = tape.sum(p);
    let g = tape.backward(loss).unwrap();
    assert!(g.get(x).is_none());
    assert_eq!(g.get(w).unwrap().data(), &[1.0, -2.0, 0.5]);
}

#[test]
fn fully_detached_loss_has_no_gradient() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]));
    let a = tape.detach(x);
    let b = tape.detach(x);
    let p = tape.mul(a, b).unwrap();
    let loss = tape.sum(p);
    assert!(!tape.requires_grad(loss));
    let g = tape.backward(loss).unwrap();
    assert!(g.get(x).is_none());
}

#[test]
fn backward_requires_scalar() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]));
    let y = tape.exp(x);
    assert!(tape.backward(y).is_err());
}

#[test]
fn shape_errors_name_op_and_shapes() {
    let mut tape = Tape::new();
    let a = tape.leaf(Tensor::zeros(&[2, 3]));
    let b = tape.leaf(Tensor::zeros(&[2, 3]));
    let msg = tape.matmul(a, b).unwrap_err().to_string();
    assert!(msg.contains("matmul") && msg.contains("[2, 3]"), "{msg}");
    let c = tape.leaf(Tensor::zeros(&[3, 2]));
    let msg = tape.add(a, c).unwrap_err().to_string();
    assert!(msg.contains("add") && msg.contains("[3, 2]"), "{msg}");
}

#[test]
fn gradients_are_bit_deterministic() {
    let run = || {
        let mut rng = SeededRng::new(4);
        let x = random_matrix(&mut rng, 6, 5);
        let w = random_matrix(&mut rng, 5, 3);
        let mut tape = Tape::new();
        let xv = tape.leaf(x);
        let wv = tape.leaf(w);
        let h = tape.matmul(xv, wv).unwrap();
        let (h, _) = tape.batch_standardize(h, 1e-5).unwrap();
        let h = tape.softplus(h);
        let h = tape.l2_normalize_rows(h).unwrap();
        let loss = tape.mean(h);
        let g = tape.backward(loss).unwrap();
        (g.get(xv).unwrap().clone(), g.get(wv).unwrap().clone())
    };
    let (a1, b1) = run();
    let (a2, b2) = run();
    let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a1), bits(&a2));
    assert_eq!(bits(&b1), bits(&b2));
}

#[test]
fn batch_standardize_moments() {
    let mut rng = SeededRng::new(5);
    let x = random_matrix(&mut rng, 32, 6).map(|v| 3.0 * v + 1.0);
    let mut tape = Tape::new();
    let xv = tape.constant(x);
    let (y, stats) = tape.batch_standardize(xv, 1e-5).unwrap();
    let t = tape.value(y);
    for j in 0..6 {
        let col: Vec<f64> = (0..32).map(|i| t.row(i)[j]).collect();
        let mean = col.iter().sum::<f64>() / 32.0;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 32.0;
        let want = stats.var[j] / (stats.var[j] + 1e-5);
        assert!(mean.abs() < 1e-6);
        assert!((var - want).abs() < 1e-6);
    }
    let single = tape.constant(Tensor::zeros(&[1, 3]));
    assert!(tape.batch_standardize(single, 1e-5).is_err());
}

#[test]
fn grad_check_flags_wrong_gradient() {
    let point = [Tensor::vector(vec![0.5, -1.0, 2.0])];
    let value = |x: &[Tensor]| -> Result<f64> { Ok(x[0].data().iter().map(|v| v * v).sum()) };
    let wrong = |x: &[Tensor]| -> Result<Vec<Tensor>> { Ok(vec![x[0].map(|v| 3.0 * v)]) };
    let report = grad_check_with(value, wrong, &point, 1e-5, 1e-4).unwrap();
    assert!(!report.passed());
    assert_eq!(report.failures.len(), 3);
}

#[test]
fn grad_check_linear_map_is_tight() {
    let mut rng = SeededRng::new(6);
    let a = random_matrix(&mut rng, 4, 3);
    let w = random_matrix(&mut rng, 3, 2);
    let report = grad_check(
        |tape, v| {
            let wv = tape.constant(w.clone());
            let y = tape.matmul(v[0], wv)?;
            Ok(tape.sum(y))
        },
        &[a],
        1e-5,
        1e-6,
    )
    .unwrap();
    assert!(report.passed());
    assert!(report.max_rel_error < 1e-9, "{}", report.max_rel_error);
}

#[test]
fn ps_log_normalizer_rejects_negative_kappa() {
    let mut tape = Tape::new();
    let k = tape.leaf(Tensor::vector(vec![1.0, -0.5]));
    assert!(tape.ps_log_normalizer(k, 3).is_err());
}
