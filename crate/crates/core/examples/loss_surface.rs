//! The per-pair VI loss −[log C(κ) + κ log(1 + s)] over κ and cosine
//! similarity s: where the optimal concentration sits for each s.

use vi_simsiam::eval::loss_surface_grid;
use vi_simsiam::losses::ps_pair_term;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 16;
    let kappas = [0.01, 1.0, 10.0, 100.0, 1000.0];
    let s_grid = [-0.5, 0.0, 0.5, 0.9, 0.99];
    let grid = loss_surface_grid(d, &kappas, &s_grid)?;

    print!("{:>8}", "κ \\ s");
    for s in s_grid {
        print!("{s:>11}");
    }
    println!();
    for row in grid.chunks(s_grid.len()) {
        print!("{:>8}", row[0].kappa);
        for p in row {
            print!("{:>11.3}", p.value);
        }
        println!();
    }

    // Minimizing κ on a log grid: confident (large κ) only for aligned pairs.
    let log_kappas: Vec<f64> = (0..=800).map(|i| 10f64.powf(-3.0 + i as f64 * 0.01)).collect();
    println!("\n{:>6} {:>12}", "s", "argmin κ");
    for s in [-0.5, 0.0, 0.5, 0.9, 0.99, 0.999] {
        let mut best = (f64::INFINITY, 0.0);
        for &k in &log_kappas {
            let v = ps_pair_term(d, k, s)?;
            if v < best.0 {
                best = (v, k);
            }
        }
        println!("{s:>6} {:>12.4}", best.1);
    }
    Ok(())
}
