//! Synthetic multiview data: prototypes, ambiguous mixtures, and the views
//! a training step sees for one sample.

use vi_simsiam::data::{generate_dataset, make_viewset, nearest_prototype_accuracy, SynthConfig, ViewPolicy};
use vi_simsiam::rng::SeededRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SynthConfig { samples_per_class: 200, ..SynthConfig::default() };
    let data = generate_dataset(&config)?;
    println!(
        "{} classes × {} samples in R^{} ({} train / {} val / {} test)",
        config.num_classes,
        config.samples_per_class,
        config.input_dim,
        data.train.len(),
        data.val.len(),
        data.test.len()
    );

    let all: Vec<_> = data.train.iter().chain(&data.val).chain(&data.test).cloned().collect();
    let (ambiguous, clean): (Vec<_>, Vec<_>) = all.into_iter().partition(|s| s.ambiguous);
    println!(
        "nearest-prototype accuracy: clean {:.3}, ambiguous {:.3} ({} ambiguous samples)",
        nearest_prototype_accuracy(&data.prototypes, &clean),
        nearest_prototype_accuracy(&data.prototypes, &ambiguous),
        ambiguous.len()
    );

    let policy = ViewPolicy::default();
    let sample = &data.train[0];
    let views = make_viewset(sample, 8, &policy, &SeededRng::new(0).split(sample.id));
    println!("\nviews of sample {} (label {}):", sample.id, sample.label);
    for (v, (x, specs)) in views.views.iter().zip(&views.specs).enumerate() {
        let zeros = x.iter().filter(|&&c| c == 0.0).count();
        let applied: Vec<String> =
            specs.iter().map(|s| format!("{}@{:.2}", s.kind.as_str(), s.severity)).collect();
        let kind = if v < policy.standard_views { "standard" } else { "heavy" };
        println!("  {v} {kind:<8} zeros {zeros:>2}  [{}]", applied.join(", "));
    }
    Ok(())
}
