use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample, Split, ViewPolicy};
use crate::error::Result;
use crate::io_util::write_atomic;
use crate::model::Network;

use super::kappa::{augmentation_kappa, kappa_statistics, AugmentationKappa, KappaReport};
use super::pca::{project_2d, Projection};
use super::probe::{extract_features, linear_probe, ProbeConfig, ProbeResult};
use super::stats::{compare_groups, GroupComparison, GroupStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub probe: ProbeConfig,
    /// Views per sample for κ estimation (training view policy).
    pub views_per_sample: usize,
    pub views: ViewPolicy,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { probe: ProbeConfig::default(), views_per_sample: 8, views: ViewPolicy::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub probe: ProbeResult,
    /// κ over every sample, in train, val, test order.
    pub kappa: KappaReport,
    pub sample_splits: Vec<Split>,
    /// Table-1 style summary over the training split.
    pub train_kappa: GroupStats,
    /// Test samples the probe got wrong (a) vs right (b), by the κ of the
    /// input the probe actually classified.
    pub correctness: GroupComparison,
    /// The same split using the multi-view mean κ.
    pub correctness_view_mean: GroupComparison,
    pub augmentation: AugmentationKappa,
    /// PCA of the test-split features.
    pub projection: Projection,
}

/// Probe, κ statistics, correctness and augmentation analyses, projection.
pub fn run_analysis(network: &Network, dataset: &Dataset, config: &AnalysisConfig) -> Result<AnalysisReport> {
    let probe = linear_probe(network, dataset, &config.probe)?;
    let mut all: Vec<Sample> = Vec::with_capacity(dataset.len());
    let mut sample_splits = Vec::with_capacity(dataset.len());
    for split in Split::ALL {
        all.extend_from_slice(dataset.split(split));
        sample_splits.extend(std::iter::repeat_n(split, dataset.split(split).len()));
    }
    let kappa = kappa_statistics(network, &all, config.views_per_sample, &config.views, config.seed)?;
    let of_split = |split: Split, input: bool| -> Vec<f64> {
        kappa
            .samples
            .iter()
            .zip(&sample_splits)
            .filter(|(_, s)| **s == split)
            .map(|(k, _)| if input { k.input_kappa } else { k.kappa })
            .collect()
    };
    let train_kappa = GroupStats::new("train", &of_split(Split::Train, false));
    let by_correctness = |values: Vec<f64>| {
        let (mut wrong, mut right) = (Vec::new(), Vec::new());
        for (k, ok) in values.into_iter().zip(&probe.correct) {
            if *ok { right.push(k) } else { wrong.push(k) }
        }
        compare_groups("incorrect", &wrong, "correct", &right)
    };
    let correctness = by_correctness(of_split(Split::Test, true));
    let correctness_view_mean = by_correctness(of_split(Split::Test, false));
    let augmentation = augmentation_kappa(network, &all, &config.views, config.seed)?;
    let projection = project_2d(&extract_features(network, &dataset.test)?.features)?;
    Ok(AnalysisReport {
        probe,
        kappa,
        sample_splits,
        train_kappa,
        correctness,
        correctness_view_mean,
        augmentation,
        projection,
    })
}

fn group_row(csv: &mut String, family: &str, g: &GroupStats) {
    let _ = writeln!(
        csv,
        "{family},{},{},{},{},{},{},{},{},{},{},{}",
        g.name, g.count, g.mean, g.std, g.variance, g.min, g.q1, g.median, g.q3, g.max, g.outliers
    );
}

#[derive(Serialize)]
struct Summary<'a> {
    top1: f64,
    top5: Option<f64>,
    best_val_top1: f64,
    best_epoch: usize,
    train_kappa: &'a GroupStats,
    overall_kappa: &'a GroupStats,
    ambiguity: &'a GroupComparison,
    correctness: &'a GroupComparison,
    correctness_view_mean: &'a GroupComparison,
    augmentation: &'a AugmentationKappa,
    pca_variances: [f64; 2],
}

/// Writes summary.json and the CSV tables; returns the paths.
pub fn write_analysis(dir: &Path, dataset: &Dataset, report: &AnalysisReport) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        files.push(path);
        Ok(())
    };
    let summary = Summary {
        top1: report.probe.top1,
        top5: report.probe.top5,
        best_val_top1: report.probe.best_val_top1,
        best_epoch: report.probe.best_epoch,
        train_kappa: &report.train_kappa,
        overall_kappa: &report.kappa.overall,
        ambiguity: &report.kappa.ambiguity,
        correctness: &report.correctness,
        correctness_view_mean: &report.correctness_view_mean,
        augmentation: &report.augmentation,
        pca_variances: report.projection.variances,
    };
    put("summary.json", &serde_json::to_vec_pretty(&summary)?)?;

    let mut csv = String::from("id,split,label,ambiguous,kappa,input_kappa,probe_correct\n");
    let mut test_rank = 0;
    for (s, split) in report.kappa.samples.iter().zip(&report.sample_splits) {
        let correct = if *split == Split::Test {
            test_rank += 1;
            (report.probe.correct[test_rank - 1] as u8).to_string()
        } else {
            String::new()
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            s.id,
            split.as_str(),
            s.label,
            s.ambiguous as u8,
            s.kappa,
            s.input_kappa,
            correct
        );
    }
    put("kappa_samples.csv", csv.as_bytes())?;

    let mut csv = String::from("family,group,count,mean,std,variance,min,q1,median,q3,max,outliers\n");
    group_row(&mut csv, "split", &report.train_kappa);
    group_row(&mut csv, "all", &report.kappa.overall);
    for g in &report.kappa.by_class {
        group_row(&mut csv, "class", g);
    }
    group_row(&mut csv, "ambiguity", &report.kappa.ambiguity.a);
    group_row(&mut csv, "ambiguity", &report.kappa.ambiguity.b);
    group_row(&mut csv, "correctness", &report.correctness.a);
    group_row(&mut csv, "correctness", &report.correctness.b);
    group_row(&mut csv, "correctness-view-mean", &report.correctness_view_mean.a);
    group_row(&mut csv, "correctness-view-mean", &report.correctness_view_mean.b);
    for g in &report.augmentation.groups {
        group_row(&mut csv, "augmentation", g);
    }
    put("kappa_groups.csv", csv.as_bytes())?;

    let mut csv = String::from("id,label,ambiguous,pc1,pc2\n");
    for (r, s) in dataset.test.iter().enumerate() {
        let c = report.projection.coords.row(r);
        let _ = writeln!(csv, "{},{},{},{},{}", s.id, s.label, s.ambiguous as u8, c[0], c[1]);
    }
    put("projection.csv", csv.as_bytes())?;

    let mut csv = String::from("id,label,prediction,correct\n");
    for ((s, p), ok) in dataset.test.iter().zip(&report.probe.predictions).zip(&report.probe.correct) {
        let _ = writeln!(csv, "{},{},{},{}", s.id, s.label, p, *ok as u8);
    }
    put("probe_predictions.csv", csv.as_bytes())?;
    Ok(files)
}
