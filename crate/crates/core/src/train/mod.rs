//! Minibatch training: views → encoder → predictor → loss → backward →
//! momentum SGD with cosine learning-rate decay.

mod config;
mod metrics;
mod optim;
mod run;

pub use config::TrainConfig;
pub use metrics::{feature_std, kappa_summary, write_metrics, EpochMetrics, KappaSummary};
pub use optim::{cosine_lr, SgdMomentum};
pub use run::{batch_views, train_run, view_rng, TrainOutcome};

#[cfg(test)]
mod tests;
