//! Power Spherical vs von Mises-Fisher: normalizers, log-densities and
//! sampler moments on S².

use vi_simsiam::distributions::{vmf_log_normalizer_oracle, PowerSpherical, SphericalParams, VonMisesFisher};
use vi_simsiam::rng::SeededRng;
use vi_simsiam::sphere::UnitVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 3;
    let mu = UnitVector::new(vec![0.0, 0.6, 0.8])?;
    let mut rng = SeededRng::new(7);
    let n = 20_000;

    println!("{:>7} {:>10} {:>10} {:>12} {:>12} {:>11}", "κ", "log C_ps", "log C_vmf", "E[μᵀx]", "sampled", "log p(μ)");
    for kappa in [0.5, 2.0, 10.0, 50.0, 250.0] {
        let ps = PowerSpherical::from_parts(mu.clone(), kappa)?;
        let sampled: f64 = (0..n).map(|_| ps.sample(&mut rng).dot(&mu)).sum::<f64>() / n as f64;
        println!(
            "{kappa:>7} {:>10.4} {:>10.4} {:>12.5} {:>12.5} {:>11.4}",
            ps.log_normalizer(),
            vmf_log_normalizer_oracle(d, kappa)?,
            ps.mean_cosine(),
            sampled,
            ps.log_prob(&mu)?
        );
    }

    // Same mode, same κ: the families differ mostly far from the mode, where
    // the PS density falls to zero at the antipode.
    let kappa = 10.0;
    let ps = PowerSpherical::from_parts(mu.clone(), kappa)?;
    let vmf = VonMisesFisher::new(SphericalParams::new(mu.clone(), kappa)?);
    let log_c_vmf = vmf_log_normalizer_oracle(d, kappa)?;
    println!("\nκ = {kappa}: log-density by cosine to the mode");
    println!("{:>6} {:>10} {:>10}", "t", "PS", "vMF");
    let phi = 0.6f64.atan2(0.8);
    for angle in [0.0f64, 0.5, 1.0, 2.0, 3.0] {
        let z = UnitVector::new(vec![0.0, (phi + angle).sin(), (phi + angle).cos()])?;
        println!(
            "{:>6.3} {:>10.4} {:>10.4}",
            z.dot(&mu),
            ps.log_prob(&z)?,
            log_c_vmf + vmf.log_prob_unnormalized(&z)?
        );
    }
    Ok(())
}
