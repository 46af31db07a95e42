//! Linear-probe top-1 of an untrained encoder, SimSiam and VI-SimSiam on the
//! same data and seed. Usage: `linear_probe [epochs]` (default 40).

use vi_simsiam::data::{generate_dataset, SynthConfig};
use vi_simsiam::eval::{linear_probe, ProbeConfig};
use vi_simsiam::losses::LossKind;
use vi_simsiam::model::Network;
use vi_simsiam::train::{train_run, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(40);
    let data = generate_dataset(&SynthConfig::default())?;
    let probe = ProbeConfig::default();

    let base = TrainConfig { epochs, checkpoint_every: 0, ..TrainConfig::default() };
    let untrained = Network::init(base.resolved_model(), base.seed)?;
    println!("{:<12} top-1 {:.3}", "untrained", linear_probe(&untrained, &data, &probe)?.top1);

    for loss in [LossKind::Simsiam, LossKind::ViSimsiam] {
        let config = TrainConfig { loss, ..base.clone() };
        let trained = train_run(&config, &data, None)?;
        let r = linear_probe(&trained.network, &data, &probe)?;
        println!(
            "{:<12} top-1 {:.3}  top-5 {:.3}  (best val {:.3} at probe epoch {})",
            loss.as_str(),
            r.top1,
            r.top5.unwrap_or(f64::NAN),
            r.best_val_top1,
            r.best_epoch
        );
    }
    Ok(())
}
