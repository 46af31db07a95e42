use std::collections::BTreeMap;

use super::*;
use crate::autodiff::Tensor;
use crate::data::{generate_dataset, SynthConfig};
use crate::losses::LossKind;
use crate::model::{Checkpoint, EncoderConfig, ModelConfig, KAPPA_BIAS};

fn tiny_data() -> crate::data::Dataset {
    generate_dataset(&SynthConfig {
        num_classes: 4,
        input_dim: 16,
        samples_per_class: 20,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn tiny_config(loss: LossKind) -> TrainConfig {
    TrainConfig {
        loss,
        epochs: 3,
        batch_size: 16,
        num_views: 4,
        checkpoint_every: 2,
        seed: 5,
        model: ModelConfig {
            encoder: EncoderConfig {
                input_dim: 16,
                hidden_dims: vec![32],
                latent_dim: 8,
                use_batch_standardize: true,
            },
            predictor_hidden: 16,
            ..ModelConfig::default()
        },
        ..TrainConfig::default()
    }
}

#[test]
fn cosine_schedule_endpoints() {
    assert_eq!(cosine_lr(0, 100, 0.3), 0.3);
    assert!(cosine_lr(100, 100, 0.3).abs() < 1e-17);
    assert!((cosine_lr(50, 100, 0.3) - 0.15).abs() < 1e-15);
}

fn single(name: &str, v: f64) -> BTreeMap<String, Tensor> {
    BTreeMap::from([(name.to_string(), Tensor::vector(vec![v]))])
}

#[test]
fn momentum_recurrence_by_hand() {
    let mut params = single("w", 1.0);
    let mut opt = SgdMomentum::new(0.9, 0.0);
    // f(w) = w²/2 ⇒ ∇f = w
    let g = single("w", params["w"].data()[0]);
    opt.step(&mut params, &g, 0.1).unwrap();
    assert!((params["w"].data()[0] - 0.9).abs() < 1e-15);
    let g = single("w", params["w"].data()[0]);
    opt.step(&mut params, &g, 0.1).unwrap();
    assert!((params["w"].data()[0] - 0.72).abs() < 1e-15);
}

#[test]
fn plain_descent_and_decay() {
    let mut params = single("w", 2.0);
    let mut opt = SgdMomentum::new(0.0, 0.0);
    opt.step(&mut params, &single("w", 0.5), 0.1).unwrap();
    assert!((params["w"].data()[0] - 1.95).abs() < 1e-15);

    let mut params = single("w", 1.0);
    let mut opt = SgdMomentum::new(0.0, 0.01);
    for _ in 0..3 {
        opt.step(&mut params, &single("w", 0.0), 1.0).unwrap();
    }
    assert!((params["w"].data()[0] - 0.99f64.powi(3)).abs() < 1e-15);

    let mut params = single(KAPPA_BIAS, 1.0);
    let mut opt = SgdMomentum::new(0.0, 0.01).exempt(KAPPA_BIAS);
    opt.step(&mut params, &single(KAPPA_BIAS, 0.0), 1.0).unwrap();
    assert_eq!(params[KAPPA_BIAS].data()[0], 1.0);
}

#[test]
fn nan_gradient_names_parameter() {
    let mut params = single("encoder.out.bias", 1.0);
    let mut opt = SgdMomentum::new(0.9, 0.0);
    let err = opt.step(&mut params, &single("encoder.out.bias", f64::NAN), 0.1).unwrap_err();
    assert!(err.to_string().contains("encoder.out.bias"), "{err}");
    assert_eq!(params["encoder.out.bias"].data()[0], 1.0);
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let data = tiny_data();
    let config = TrainConfig { epochs: 1, base_lr: 0.0, ..tiny_config(LossKind::ViSimsiam) };
    let out = train_run(&config, &data, None).unwrap();
    let init = crate::model::Network::init(config.resolved_model(), config.seed).unwrap();
    for (name, p) in &init.store().params {
        let q = &out.network.store().params[name];
        assert!(p.data().iter().zip(q.data()).all(|(a, b)| a.to_bits() == b.to_bits()), "{name}");
    }
}

#[test]
fn runs_are_reproducible_and_checkpoints_consistent() {
    let data = tiny_data();
    let config = tiny_config(LossKind::ViSimsiam);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = train_run(&config, &data, Some(a.path())).unwrap();
    let rb = train_run(&config, &data, Some(b.path())).unwrap();
    assert_eq!(ra.metrics, rb.metrics);
    for f in &ra.files {
        let rel = f.strip_prefix(a.path()).unwrap();
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.path().join(rel)).unwrap(), "{rel:?}");
    }
    let names: Vec<String> = ra
        .files
        .iter()
        .map(|f| f.strip_prefix(a.path()).unwrap().display().to_string())
        .collect();
    for expected in ["metrics.csv", "metrics.json", "checkpoints/epoch-0002.ckpt", "checkpoints/final.ckpt", "checkpoints/best.ckpt"] {
        assert!(names.iter().any(|n| n == expected), "{expected} missing from {names:?}");
    }

    // κ statistics logged at epoch 2 recompute from that epoch's checkpoint.
    let ckpt = Checkpoint::load(&a.path().join("checkpoints/epoch-0002.ckpt")).unwrap();
    assert_eq!(ckpt.header.epoch, 2);
    let clean = Tensor::from_rows(&data.train.iter().map(|s| s.features.clone()).collect::<Vec<_>>()).unwrap();
    let inf = ckpt.network.infer(&clean).unwrap();
    let k = kappa_summary(inf.kappa.as_deref().unwrap());
    assert_eq!(Some(k), ra.metrics[1].kappa);
    assert_eq!(feature_std(&inf.latents), ra.metrics[1].feature_std);
    for m in &ra.metrics {
        let k = m.kappa.unwrap();
        assert!(k.min >= config.model.kappa_min && k.max <= config.model.kappa_max);
    }

    let csv = std::fs::read_to_string(a.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), config.epochs + 1);
}

#[test]
fn every_loss_kind_trains() {
    let data = tiny_data();
    for kind in [LossKind::Simsiam, LossKind::VmfConstKappa, LossKind::ViSimsiam] {
        let out = train_run(&tiny_config(kind), &data, None).unwrap();
        assert_eq!(out.metrics.len(), 3);
        assert!(out.metrics.iter().all(|m| m.train_loss.is_finite()));
        assert_eq!(out.metrics[0].kappa.is_some(), kind == LossKind::ViSimsiam);
    }
}

#[test]
fn two_view_simsiam_runs() {
    let data = tiny_data();
    let mut config = tiny_config(LossKind::Simsiam);
    config.num_views = 2;
    let out = train_run(&config, &data, None).unwrap();
    // two views, two ordered pairs, cosines in [−1, 1]
    assert!(out.metrics.iter().all(|m| m.train_loss.abs() <= 2.0));
}

#[test]
fn runaway_learning_rate_reports_divergence() {
    let data = tiny_data();
    let config = TrainConfig { base_lr: 1e200, epochs: 3, ..tiny_config(LossKind::ViSimsiam) };
    match train_run(&config, &data, None) {
        Err(crate::Error::Diverged { epoch, step, reason }) => {
            assert!(epoch >= 1 && step >= 1);
            assert!(reason.contains("κ"), "{reason}");
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let data = tiny_data();
    let bad = [
        TrainConfig { batch_size: 1, ..tiny_config(LossKind::ViSimsiam) },
        TrainConfig { epochs: 0, ..tiny_config(LossKind::ViSimsiam) },
        TrainConfig { num_views: 1, ..tiny_config(LossKind::ViSimsiam) },
        TrainConfig { momentum: 1.0, ..tiny_config(LossKind::ViSimsiam) },
    ];
    for c in bad {
        assert!(matches!(train_run(&c, &data, None), Err(crate::Error::Config(_))));
    }
    let mut wrong_dim = tiny_config(LossKind::ViSimsiam);
    wrong_dim.model.encoder.input_dim = 17;
    assert!(train_run(&wrong_dim, &data, None).is_err());
}
