//! The reverse-mode tape: a small projection-normalize-score graph, its
//! gradients, a finite-difference check, and stop-gradient.

use vi_simsiam::autodiff::{grad_check, Tape, Tensor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = Tensor::matrix(2, 3, vec![0.3, -1.2, 0.8, 1.1, 0.4, -0.5])?;
    let w = Tensor::matrix(3, 3, vec![0.5, -0.2, 0.1, 0.3, 0.9, -0.4, -0.7, 0.2, 0.6])?;
    let target = Tensor::matrix(2, 3, vec![0.0, 1.0, 0.0, 0.6, 0.0, 0.8])?;

    // loss = −mean_i log(1 + ⟨normalize(x_i W), t_i⟩)
    let graph = |tape: &mut Tape, v: &[vi_simsiam::autodiff::Var]| {
        let h = tape.matmul(v[0], v[1])?;
        let u = tape.l2_normalize_rows(h)?;
        let t = tape.constant(target.clone());
        let cos = tape.row_dot(u, t)?;
        let shifted = tape.add_scalar(cos, 1.0);
        let logs = tape.log(shifted);
        let m = tape.mean(logs);
        Ok(tape.neg(m))
    };

    let mut tape = Tape::new();
    let vx = tape.leaf(x.clone());
    let vw = tape.leaf(w.clone());
    let loss = graph(&mut tape, &[vx, vw])?;
    let grads = tape.backward(loss)?;
    println!("loss = {:.6}", tape.value(loss).item().unwrap_or(f64::NAN));
    println!("∂loss/∂W = {:?}", grads.get(vw).map(|g| g.data().to_vec()));

    let report = grad_check(graph, &[x.clone(), w.clone()], 1e-6, 1e-6)?;
    println!(
        "finite differences: {} coordinates, max relative error {:.2e} → {}",
        report.checked,
        report.max_rel_error,
        if report.passed() { "ok" } else { "MISMATCH" }
    );

    // Detaching the weights cuts them out of the backward pass.
    let mut tape = Tape::new();
    let vx = tape.leaf(x);
    let vw = tape.leaf(w);
    let frozen = tape.detach(vw);
    let loss = graph(&mut tape, &[vx, frozen])?;
    let grads = tape.backward(loss)?;
    println!("after detach: W has gradient = {}", grads.get(vw).is_some_and(|g| g.data().iter().any(|&v| v != 0.0)));
    Ok(())
}
