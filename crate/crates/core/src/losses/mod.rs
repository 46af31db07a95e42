//! Self-supervised objectives over per-view embeddings recorded on a tape.
//!
//! All losses are negative log-likelihood style (lower is better), averaged
//! over the batch, and compare a view's predictor output against the
//! stop-gradient latents of the *other* views.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::distributions::{ps_log_normalizer_grad, ANTIPODAL_EPS};
use crate::error::{Error, Result};

mod routing;

pub use routing::{gradient_routing_check, RoutingReport};

const UNIT_NORM_TOL: f64 = 1e-6;

/// Which views act as sources (carry a predictor output) and which as
/// targets (supply detached latents).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Standard views predict every other view; heavy views are targets only.
    StandardToAll,
    /// Every view predicts every other view.
    AllPairs,
    /// Every view predicts the standard views; heavy views are sources only
    /// (the multi-crop arrangement: small crops are predicted *from*).
    #[default]
    AllToStandard,
}

impl Pairing {
    /// Per-view flag: does view `i` get a predictor output?
    pub fn sources(self, standard_views: usize, total_views: usize) -> Vec<bool> {
        match self {
            Pairing::StandardToAll => (0..total_views).map(|i| i < standard_views).collect(),
            Pairing::AllPairs | Pairing::AllToStandard => vec![true; total_views],
        }
    }

    /// Per-view flag: is view `j` predicted by the sources?
    pub fn targets(self, standard_views: usize, total_views: usize) -> Vec<bool> {
        match self {
            Pairing::AllToStandard => (0..total_views).map(|j| j < standard_views).collect(),
            Pairing::StandardToAll | Pairing::AllPairs => vec![true; total_views],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossOptions {
    /// Keep i = j terms (ablation; excluded by default).
    pub include_same_view: bool,
    /// Stop gradients through target latents. Disabling it is an ablation.
    pub detach_targets: bool,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self { include_same_view: false, detach_targets: true }
    }
}

/// Tape handles for one multiview batch.
#[derive(Debug, Clone)]
pub struct ViewEmbeddings {
    /// Encoder latents z_i, each [n × d] with unit rows.
    pub latents: Vec<Var>,
    /// Predictor directions μ_i ([n × d]); `None` for target-only views.
    pub mu: Vec<Option<Var>>,
    /// Predictor concentrations κ_i ([n × 1]); `None` when absent.
    pub kappa: Vec<Option<Var>>,
    /// Views whose latents are predicted; all views by default.
    pub targets: Vec<bool>,
}

impl ViewEmbeddings {
    pub fn new(latents: Vec<Var>, mu: Vec<Option<Var>>, kappa: Vec<Option<Var>>) -> Self {
        let targets = vec![true; latents.len()];
        Self { latents, mu, kappa, targets }
    }

    pub fn with_targets(mut self, targets: Vec<bool>) -> Self {
        self.targets = targets;
        self
    }

    pub fn num_views(&self) -> usize {
        self.latents.len()
    }

    /// Checks view count, shapes, unit norms and finiteness; returns (n, d).
    pub fn validate(&self, tape: &Tape) -> Result<(usize, usize)> {
        let m = self.latents.len();
        if m < 2 {
            return Err(Error::domain("view_embeddings", format!("need at least 2 views, got {m}")));
        }
        if self.mu.len() != m || self.kappa.len() != m || self.targets.len() != m {
            return Err(Error::domain(
                "view_embeddings",
                format!(
                    "{m} latent views but {} μ, {} κ and {} target entries",
                    self.mu.len(),
                    self.kappa.len(),
                    self.targets.len()
                ),
            ));
        }
        let first = tape.value(self.latents[0]);
        if !first.is_matrix() {
            return Err(Error::shape("view_embeddings", first.shape(), &[0, 0]));
        }
        let (n, d) = (first.rows(), first.cols());
        for (i, &z) in self.latents.iter().enumerate() {
            check_unit_rows(tape.value(z), n, d, i, "latent")?;
        }
        for (i, mu) in self.mu.iter().enumerate() {
            if let Some(mu) = mu {
                check_unit_rows(tape.value(*mu), n, d, i, "μ")?;
            }
        }
        for (i, k) in self.kappa.iter().enumerate() {
            if let Some(k) = k {
                let t = tape.value(*k);
                if t.shape() != [n, 1] {
                    return Err(Error::shape("view_embeddings", t.shape(), &[n, 1]));
                }
                if let Some(bad) = t.data().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::numerical(
                        "view_embeddings",
                        format!("view {i}: κ = {bad} is not a finite non-negative value"),
                    ));
                }
            }
        }
        Ok((n, d))
    }

    fn pairs(&self, options: &LossOptions) -> Vec<(usize, usize)> {
        let m = self.latents.len();
        let mut pairs = Vec::new();
        for i in 0..m {
            if self.mu[i].is_none() {
                continue;
            }
            for j in (0..m).filter(|&j| self.targets[j]) {
                if i != j || options.include_same_view {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }
}

fn check_unit_rows(t: &Tensor, n: usize, d: usize, view: usize, what: &str) -> Result<()> {
    if t.shape() != [n, d] {
        return Err(Error::shape("view_embeddings", t.shape(), &[n, d]));
    }
    if !t.all_finite() {
        return Err(Error::numerical("view_embeddings", format!("view {view}: non-finite {what}")));
    }
    for r in 0..n {
        let norm = t.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::domain(
                "view_embeddings",
                format!("view {view}: {what} row {r} has norm {norm}, expected 1"),
            ));
        }
    }
    Ok(())
}

/// One ordered (source, target) comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub source: usize,
    pub target: usize,
    /// Batch-mean cosine μ_sᵀz_t.
    pub mean_cosine: f64,
    /// Batch-mean log C(κ_s) for this pair (0 for non-probabilistic losses).
    pub log_normalizer: f64,
    /// Contribution to the total loss.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    /// Scalar loss on the tape.
    pub loss: Var,
    pub total: f64,
    pub pairs: Vec<PairTerm>,
    /// Batch-mean κ per view (`None` where a view has no κ).
    pub mean_kappa: Vec<Option<f64>>,
    /// Σ over pairs of the batch-mean log-normalizer.
    pub log_normalizer_sum: f64,
}

impl LossOutput {
    /// Total minus the sum of pair contributions.
    pub fn decomposition_residual(&self) -> f64 {
        self.total - self.pairs.iter().map(|p| p.value).sum::<f64>()
    }

    pub fn similarity_sum(&self) -> f64 {
        self.pairs.iter().map(|p| p.mean_cosine).sum()
    }
}

fn target(tape: &mut Tape, z: Var, options: &LossOptions) -> Var {
    if options.detach_targets {
        tape.detach(z)
    } else {
        z
    }
}

fn mean_of(t: &Tensor) -> f64 {
    t.data().iter().sum::<f64>() / t.len() as f64
}

fn kappa_means(tape: &Tape, e: &ViewEmbeddings) -> Vec<Option<f64>> {
    e.kappa.iter().map(|k| k.map(|k| mean_of(tape.value(k)))).collect()
}

fn finish(
    tape: &Tape,
    e: &ViewEmbeddings,
    loss: Var,
    pairs: Vec<PairTerm>,
    op: &'static str,
) -> Result<LossOutput> {
    let total = tape.value(loss).item().unwrap_or(f64::NAN);
    if !total.is_finite() {
        return Err(Error::numerical(op, format!("loss is {total}")));
    }
    let log_normalizer_sum = pairs.iter().map(|p| p.log_normalizer).sum();
    Ok(LossOutput { loss, total, pairs, mean_kappa: kappa_means(tape, e), log_normalizer_sum })
}

fn cosine_loss(
    tape: &mut Tape,
    e: &ViewEmbeddings,
    kappa: f64,
    options: &LossOptions,
    op: &'static str,
) -> Result<LossOutput> {
    e.validate(tape)?;
    let pairs = e.pairs(options);
    if pairs.is_empty() {
        return Err(Error::domain(op, "no view carries a predictor output"));
    }
    let mut acc: Option<Var> = None;
    let mut terms = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let mu = e.mu[i].expect("pairs only include predictor views");
        let tgt = target(tape, e.latents[j], options);
        let s = tape.row_dot(mu, tgt)?;
        let mean_cosine = mean_of(tape.value(s));
        terms.push(PairTerm {
            source: i,
            target: j,
            mean_cosine,
            log_normalizer: 0.0,
            value: -kappa * mean_cosine,
        });
        acc = Some(match acc {
            None => s,
            Some(a) => tape.add(a, s)?,
        });
    }
    let acc = acc.expect("non-empty pairs");
    let scaled = tape.scale(acc, kappa);
    let m = tape.mean(scaled);
    let loss = tape.neg(m);
    finish(tape, e, loss, terms, op)
}

/// Two-view cosine loss: −mean[μ₁ᵀ sg(z₂) + μ₂ᵀ sg(z₁)].
pub fn simsiam_loss(tape: &mut Tape, e: &ViewEmbeddings) -> Result<LossOutput> {
    if e.num_views() != 2 {
        return Err(Error::domain(
            "simsiam_loss",
            format!("defined for exactly 2 views, got {}; use the vMF loss for more", e.num_views()),
        ));
    }
    if e.mu.iter().any(Option::is_none) {
        return Err(Error::domain("simsiam_loss", "both views need a predictor output"));
    }
    cosine_loss(tape, e, 1.0, &LossOptions::default(), "simsiam_loss")
}

/// −κ·mean Σ_{i≠j} μ_iᵀ sg(z_j) with one fixed κ.
pub fn vmf_constant_kappa_loss(
    tape: &mut Tape,
    e: &ViewEmbeddings,
    kappa: f64,
    options: &LossOptions,
) -> Result<LossOutput> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::domain(
            "vmf_constant_kappa_loss",
            format!("kappa must be finite and positive, got {kappa}"),
        ));
    }
    cosine_loss(tape, e, kappa, options, "vmf_constant_kappa_loss")
}

/// Negative Power Spherical log-likelihood of detached cross-view latents:
/// −mean Σ_{i≠j} [log C(κ_i) + κ_i·log(1 + μ_iᵀ sg(z_j))].
pub fn vi_simsiam_loss(
    tape: &mut Tape,
    e: &ViewEmbeddings,
    options: &LossOptions,
) -> Result<LossOutput> {
    let (_, d) = e.validate(tape)?;
    let pairs = e.pairs(options);
    if pairs.is_empty() {
        return Err(Error::domain("vi_simsiam_loss", "no view carries a predictor output"));
    }
    // log C(κ_i) is shared by every pair with source i.
    let mut log_c: Vec<Option<Var>> = vec![None; e.num_views()];
    let mut acc: Option<Var> = None;
    let mut terms = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let mu = e.mu[i].expect("pairs only include predictor views");
        let kappa = e.kappa[i].ok_or_else(|| {
            Error::domain("vi_simsiam_loss", format!("view {i} has a predictor but no κ"))
        })?;
        let lc = match log_c[i] {
            Some(v) => v,
            None => {
                let v = tape.ps_log_normalizer(kappa, d)?;
                log_c[i] = Some(v);
                v
            }
        };
        let tgt = target(tape, e.latents[j], options);
        let s = tape.row_dot(mu, tgt)?;
        let shifted = tape.add_scalar(s, 1.0);
        let clamped = tape.clamp_min(shifted, ANTIPODAL_EPS);
        let log_sim = tape.log(clamped);
        let weighted = tape.mul(kappa, log_sim)?;
        let term = tape.add(lc, weighted)?;
        let mean_cosine = mean_of(tape.value(s));
        let log_normalizer = mean_of(tape.value(lc));
        terms.push(PairTerm {
            source: i,
            target: j,
            mean_cosine,
            log_normalizer,
            value: -mean_of(tape.value(term)),
        });
        acc = Some(match acc {
            None => term,
            Some(a) => tape.add(a, term)?,
        });
    }
    let acc = acc.expect("non-empty pairs");
    let m = tape.mean(acc);
    let loss = tape.neg(m);
    finish(tape, e, loss, terms, "vi_simsiam_loss")
}

/// Per-pair loss term −[log C(κ) + κ·log(1+s)] for scalar inputs.
pub fn ps_pair_term(d: usize, kappa: f64, s: f64) -> Result<f64> {
    let lc = crate::distributions::ps_log_normalizer(d, kappa)?;
    Ok(-(lc + kappa * (1.0 + s).max(ANTIPODAL_EPS).ln()))
}

/// ∂/∂κ of [`ps_pair_term`].
pub fn ps_pair_term_dkappa(d: usize, kappa: f64, s: f64) -> f64 {
    -(ps_log_normalizer_grad(d as f64, kappa) + (1.0 + s).max(ANTIPODAL_EPS).ln())
}

/// ∂/∂s of [`ps_pair_term`].
pub fn ps_pair_term_ds(kappa: f64, s: f64) -> f64 {
    -kappa / (1.0 + s).max(ANTIPODAL_EPS)
}

/// The objective selected for training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Simsiam,
    #[serde(rename = "vmf-const-kappa")]
    VmfConstKappa,
    ViSimsiam,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Simsiam => "simsiam",
            LossKind::VmfConstKappa => "vmf-const-kappa",
            LossKind::ViSimsiam => "vi-simsiam",
        }
    }

    pub fn uses_kappa_head(self) -> bool {
        matches!(self, LossKind::ViSimsiam)
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simsiam" => Ok(LossKind::Simsiam),
            "vmf-const-kappa" | "vmf" => Ok(LossKind::VmfConstKappa),
            "vi-simsiam" | "vi" => Ok(LossKind::ViSimsiam),
            other => Err(Error::Config(format!(
                "unknown loss kind {other:?} (expected simsiam, vmf-const-kappa or vi-simsiam)"
            ))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dispatches to the selected loss. With more than two views the SimSiam
/// objective is evaluated as the κ = 1 cross-view cosine loss.
pub fn compute_loss(
    tape: &mut Tape,
    kind: LossKind,
    e: &ViewEmbeddings,
    vmf_kappa: f64,
    options: &LossOptions,
) -> Result<LossOutput> {
    match kind {
        LossKind::Simsiam if e.num_views() == 2 && *options == LossOptions::default() => {
            simsiam_loss(tape, e)
        }
        LossKind::Simsiam => vmf_constant_kappa_loss(tape, e, 1.0, options),
        LossKind::VmfConstKappa => vmf_constant_kappa_loss(tape, e, vmf_kappa, options),
        LossKind::ViSimsiam => vi_simsiam_loss(tape, e, options),
    }
}
