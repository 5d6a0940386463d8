//! End-to-end size-prediction experiment: label cascades by lifetime size,
//! truncate to the observed prefix, extract morphology and baseline
//! features, and cross-validate both prediction arms on identical folds.
//!
//! Labels always come from the full cascade; features only ever see the
//! first `tau1` edges. By default all model selection (chain order, typical
//! states, information-gain ranking) runs inside each training fold; a
//! global-selection flag switches to one corpus-wide selection pass instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cascade::{build_cascade, ActionEvent, CascadeGraph, FollowerGraph};
use crate::classifier::{
    self, evaluate, train, Confusion, Likelihood, MetricsReport, RocPoint, ROC_THRESHOLDS,
};
use crate::encode::{dfs_encode, rle_encode, RunLengthSequence};
use crate::error::{Error, Result};
use crate::features::{
    klt_transform, presence_vector, rank_and_select_features, typical_states, StateFeature,
};
use crate::graphstats::baseline_features;
use crate::markov::{fit, select_global_order_with, OrderRule};
use crate::par::{map_slice, try_map_slice};

/// Which prediction arms to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    M4c,
    Baseline,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Observed edge prefix length.
    pub tau1: usize,
    /// Lifetime edge threshold separating the classes; must exceed `tau1`.
    pub tau2: usize,
    pub folds: usize,
    pub feature_mode: FeatureMode,
    pub max_order: usize,
    pub order_rule: OrderRule,
    pub alpha: f64,
    pub realization_count: usize,
    pub realization_length: usize,
    pub max_states: usize,
    pub top_k: usize,
    pub use_klt: bool,
    /// Global (cross-fold) feature selection instead of per-fold selection.
    /// Leaks test data into selection; off by default.
    pub global_selection: bool,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tau1: 10,
            tau2: 20,
            folds: 10,
            feature_mode: FeatureMode::Both,
            max_order: 5,
            order_rule: OrderRule::LargestSignificant,
            alpha: 1.0,
            realization_count: 200,
            realization_length: 50,
            max_states: 10_000,
            top_k: 100,
            use_klt: false,
            global_selection: false,
            threshold: 0.5,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau1 < 1 || self.tau2 <= self.tau1 {
            return Err(Error::Config(format!(
                "need tau2 > tau1 >= 1, got tau1 = {}, tau2 = {}",
                self.tau1, self.tau2
            )));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be >= 2".into()));
        }
        if self.top_k == 0 || self.max_states == 0 {
            return Err(Error::Config("top_k and max_states must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config("threshold must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Selected-feature manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub rank: usize,
    pub subsequence: Vec<u32>,
    pub info_gain: f64,
    pub typicality_rank: usize,
}

/// Results of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub eligible_class0: usize,
    pub eligible_class1: usize,
    pub rebalanced_per_class: usize,
    pub m4c: Option<MetricsReport>,
    pub baseline: Option<MetricsReport>,
    /// Global selection pass, for the manifest (and for training when
    /// `global_selection` is on).
    pub selected_features: Vec<SelectedFeature>,
}

fn sub_seed(seed: u64, purpose: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(purpose.wrapping_mul(0xc2b2_ae3d_27d4_eb4f))
        .wrapping_add(index)
}

struct M4cSelection {
    features: Vec<StateFeature>,
}

fn select_m4c_features(
    seqs: &[RunLengthSequence],
    labels: &[bool],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<M4cSelection> {
    let t_max = select_global_order_with(seqs, cfg.max_order, cfg.order_rule)?;
    let chain = fit(seqs, t_max, cfg.alpha)?;
    let candidates = typical_states(
        &chain,
        cfg.realization_count,
        cfg.realization_length,
        cfg.max_states,
        seed,
    )?;
    let features = rank_and_select_features(&candidates, seqs, labels, cfg.top_k)?;
    Ok(M4cSelection { features })
}

/// One arm's fold evaluation: returns the decision-threshold confusion and
/// per-ROC-threshold confusions.
fn evaluate_fold(
    train_x: &[Vec<f64>],
    train_y: &[bool],
    test_x: &[Vec<f64>],
    test_y: &[bool],
    likelihood: Likelihood,
    threshold: f64,
) -> Result<(Confusion, Vec<Confusion>)> {
    let model = train(train_x, train_y, likelihood)?;
    let decision = evaluate(&model, test_x, test_y, threshold)?;
    let roc = (0..ROC_THRESHOLDS)
        .map(|i| evaluate(&model, test_x, test_y, classifier::roc_threshold(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok((decision, roc))
}

fn report_from(parts: Vec<(Confusion, Vec<Confusion>)>) -> MetricsReport {
    let mut roc_totals = vec![Confusion::default(); ROC_THRESHOLDS];
    let mut folds = Vec::with_capacity(parts.len());
    for (decision, roc) in parts {
        folds.push(decision);
        for (slot, c) in roc_totals.iter_mut().zip(roc) {
            slot.add(c);
        }
    }
    let roc_points = roc_totals
        .iter()
        .enumerate()
        .map(|(i, c)| RocPoint {
            threshold: classifier::roc_threshold(i),
            fpr: c.false_positive_rate(),
            tpr: c.detection_rate(),
        })
        .collect();
    MetricsReport::from_folds(folds, roc_points)
}

/// Runs the full experiment over a follower graph and per-cascade action
/// events.
pub fn run_experiment(
    fg: &FollowerGraph,
    actions: &BTreeMap<String, Vec<ActionEvent>>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;

    let entries: Vec<(&String, &Vec<ActionEvent>)> = actions.iter().collect();
    let cascades: Vec<CascadeGraph> =
        try_map_slice(&entries, |(_, events)| build_cascade(fg, events))?;

    // Labels from FULL cascades; eligibility requires a full tau1 prefix.
    let mut eligible: Vec<usize> = Vec::new();
    let mut labels_all: Vec<bool> = Vec::new();
    for (i, c) in cascades.iter().enumerate() {
        labels_all.push(c.edge_count() >= cfg.tau2);
        if c.edge_count() >= cfg.tau1 {
            eligible.push(i);
        }
    }
    let class1 = eligible.iter().filter(|&&i| labels_all[i]).count();
    let class0 = eligible.len() - class1;
    if class0 < cfg.folds || class1 < cfg.folds {
        return Err(Error::Data(format!(
            "insufficient eligible cascades: {class0} below tau2, {class1} at or above tau2, \
             need at least {} per class",
            cfg.folds
        )));
    }

    let truncated: Vec<CascadeGraph> =
        map_slice(&eligible, |&i| cascades[i].truncate(cfg.tau1));
    let labels: Vec<bool> = eligible.iter().map(|&i| labels_all[i]).collect();
    let sequences: Vec<RunLengthSequence> =
        try_map_slice(&truncated, |c| dfs_encode(c).map(|b| rle_encode(&b)))?;
    let baseline_rows: Vec<Vec<f64>> =
        try_map_slice(&truncated, |c| baseline_features(c).map(|f| f.to_vec()))?;

    // Shared rebalancing and folds for both arms.
    let kept = classifier::rebalance_indices(&labels, sub_seed(cfg.seed, 1, 0));
    let folds = classifier::stratified_folds(&kept, &labels, cfg.folds, sub_seed(cfg.seed, 2, 0))?;
    let rebalanced_per_class = kept.len() / 2;

    // Global selection pass over the rebalanced set: the manifest, and the
    // feature set when global selection is enabled.
    let kept_seqs: Vec<RunLengthSequence> = kept.iter().map(|&i| sequences[i].clone()).collect();
    let kept_labels: Vec<bool> = kept.iter().map(|&i| labels[i]).collect();
    let global = select_m4c_features(&kept_seqs, &kept_labels, cfg, sub_seed(cfg.seed, 3, 0))?;
    let selected_features = global
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| SelectedFeature {
            rank: i + 1,
            subsequence: f.subsequence.clone(),
            info_gain: f.info_gain,
            typicality_rank: f.typicality_rank,
        })
        .collect();

    let run_m4c = matches!(cfg.feature_mode, FeatureMode::M4c | FeatureMode::Both);
    let run_baseline = matches!(cfg.feature_mode, FeatureMode::Baseline | FeatureMode::Both);

    let fold_ids: Vec<usize> = (0..folds.len()).collect();
    let m4c = if run_m4c {
        let parts = try_map_slice(&fold_ids, |&fi| {
            let test = &folds[fi];
            let train_idx: Vec<usize> = fold_ids
                .iter()
                .filter(|&&other| other != fi)
                .flat_map(|&other| folds[other].iter().copied())
                .collect();
            let train_seqs: Vec<RunLengthSequence> =
                train_idx.iter().map(|&i| sequences[i].clone()).collect();
            let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
            let features = if cfg.global_selection {
                global.features.clone()
            } else {
                select_m4c_features(&train_seqs, &train_y, cfg, sub_seed(cfg.seed, 4, fi as u64))?
                    .features
            };
            let mut train_x: Vec<Vec<f64>> = train_seqs
                .iter()
                .map(|s| presence_vector(s, &features))
                .collect();
            let mut test_x: Vec<Vec<f64>> = test
                .iter()
                .map(|&i| presence_vector(&sequences[i], &features))
                .collect();
            let test_y: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            let likelihood = if cfg.use_klt {
                let (transformed, basis) = klt_transform(&train_x)?;
                train_x = transformed;
                test_x = test_x.iter().map(|r| basis.apply(r)).collect();
                Likelihood::Gaussian
            } else {
                Likelihood::Bernoulli
            };
            evaluate_fold(&train_x, &train_y, &test_x, &test_y, likelihood, cfg.threshold)
        })?;
        Some(report_from(parts))
    } else {
        None
    };

    let baseline = if run_baseline {
        let parts = try_map_slice(&fold_ids, |&fi| {
            let test = &folds[fi];
            let train_idx: Vec<usize> = fold_ids
                .iter()
                .filter(|&&other| other != fi)
                .flat_map(|&other| folds[other].iter().copied())
                .collect();
            let train_x: Vec<Vec<f64>> =
                train_idx.iter().map(|&i| baseline_rows[i].clone()).collect();
            let train_y: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
            let test_x: Vec<Vec<f64>> = test.iter().map(|&i| baseline_rows[i].clone()).collect();
            let test_y: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            evaluate_fold(&train_x, &train_y, &test_x, &test_y, Likelihood::Gaussian, cfg.threshold)
        })?;
        Some(report_from(parts))
    } else {
        None
    };

    Ok(ExperimentReport {
        config: cfg.clone(),
        eligible_class0: class0,
        eligible_class1: class1,
        rebalanced_per_class,
        m4c,
        baseline,
        selected_features,
    })
}

/// Writes `metrics_*.json`, `roc_*.csv`, and `features_selected.json` into
/// `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(m) = &report.m4c {
        std::fs::write(dir.join("metrics_m4c.json"), m.to_json())?;
        std::fs::write(dir.join("roc_m4c.csv"), m.roc_csv())?;
    }
    if let Some(b) = &report.baseline {
        std::fs::write(dir.join("metrics_baseline.json"), b.to_json())?;
        std::fs::write(dir.join("roc_baseline.csv"), b.roc_csv())?;
    }
    std::fs::write(
        dir.join("features_selected.json"),
        serde_json::to_string_pretty(&report.selected_features)?,
    )?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    Ok(())
}

/// Deterministic DOT rendering: nodes in cascade order, edges in
/// `(timestamp, src, dst)` order, edge labels carrying timestamps.
pub fn export_dot(c: &CascadeGraph) -> String {
    let mut out = String::from("digraph cascade {\n");
    for n in c.nodes() {
        let _ = writeln!(out, "  \"{n}\";");
    }
    for e in c.edges() {
        let _ = writeln!(out, "  \"{}\" -> \"{}\" [label=\"{}\"];", e.src, e.dst, e.ts);
    }
    out.push_str("}\n");
    out
}
