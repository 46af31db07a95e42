//! What the learned concentration κ tracks: ambiguous vs clean inputs,
//! probe mistakes vs hits, and augmentation kind.
//! Usage: `kappa_analysis [epochs]` (default 40).

use vi_simsiam::data::{generate_dataset, SynthConfig};
use vi_simsiam::eval::{run_analysis, AnalysisConfig, GroupComparison};
use vi_simsiam::train::{train_run, TrainConfig};

fn show(title: &str, c: &GroupComparison) {
    let p = c.welch.as_ref().map_or_else(|| c.inapplicable.clone().unwrap_or_default(), |w| format!("p = {:.2e}", w.p));
    println!(
        "{title:<28} {} {:.3} (n={}) vs {} {:.3} (n={})  {p}",
        c.a.name, c.a.mean, c.a.count, c.b.name, c.b.mean, c.b.count
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(40);
    let data = generate_dataset(&SynthConfig::default())?;
    let trained = train_run(&TrainConfig { epochs, checkpoint_every: 0, ..TrainConfig::default() }, &data, None)?;
    let report = run_analysis(&trained.network, &data, &AnalysisConfig::default())?;

    println!("probe top-1 {:.3}", report.probe.top1);
    let k = &report.train_kappa;
    println!("train κ: mean {:.3} std {:.3} median {:.3} [{:.3}, {:.3}]", k.mean, k.std, k.median, k.min, k.max);
    show("ambiguity", &report.kappa.ambiguity);
    show("probe correctness", &report.correctness);
    show("correctness (view mean)", &report.correctness_view_mean);

    println!("\nκ by augmentation:");
    for g in &report.augmentation.groups {
        println!("  {:<16} mean {:>8.3}  variance {:>10.4}", g.name, g.mean, g.variance);
    }
    println!("heavy-mask / noise variance ratio {:.2}", report.augmentation.mask_noise_variance_ratio);
    Ok(())
}
