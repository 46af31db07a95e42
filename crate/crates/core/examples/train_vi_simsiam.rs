//! Train VI-SimSiam on the default synthetic data and watch loss, κ and the
//! collapse monitor. Usage: `train_vi_simsiam [epochs]` (default 40).

use vi_simsiam::data::{generate_dataset, SynthConfig};
use vi_simsiam::model::Checkpoint;
use vi_simsiam::train::{train_run, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(40);
    let data = generate_dataset(&SynthConfig::default())?;
    let config = TrainConfig { epochs, checkpoint_every: 0, ..TrainConfig::default() };
    let out = std::env::temp_dir().join(format!("vi-simsiam-train-example-{}", std::process::id()));

    let outcome = train_run(&config, &data, Some(&out))?;
    println!("{:>5} {:>12} {:>10} {:>10} {:>9}", "epoch", "loss", "Σ cos", "κ mean", "feat std");
    for m in outcome.metrics.iter().filter(|m| m.epoch == 1 || m.epoch % 5 == 0) {
        println!(
            "{:>5} {:>12.4} {:>10.4} {:>10.3} {:>9.4}",
            m.epoch,
            m.train_loss,
            m.similarity_sum,
            m.kappa.map_or(f64::NAN, |k| k.mean),
            m.feature_std
        );
    }
    println!("best epoch {} in {:.1} s", outcome.best_epoch, outcome.wall_seconds);

    let ckpt = Checkpoint::load(&out.join("checkpoints/final.ckpt"))?;
    println!(
        "final checkpoint: epoch {}, {} tensors, weights identical to the in-memory network: {}",
        ckpt.header.epoch,
        ckpt.header.tensors.len(),
        ckpt.network.store() == outcome.network.store()
    );
    std::fs::remove_dir_all(&out)?;
    Ok(())
}
