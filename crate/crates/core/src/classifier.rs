//! Naive Bayes classification with stratified cross-validation and ROC
//! metrics.
//!
//! Bernoulli likelihoods (with Laplace smoothing) cover raw binary presence
//! features; Gaussian likelihoods cover continuous features such as
//! decorrelated columns or the baseline graph metrics. Note the headline
//! `accuracy` field is `(TP + TN) / total`; `precision_overall` mirrors it.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const VARIANCE_FLOOR: f64 = 1e-9;

/// Which conditional likelihood the model uses per feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Conditionals {
    /// Per feature: `[P(X=1 | Y=0), P(X=1 | Y=1)]`.
    Bernoulli(Vec<[f64; 2]>),
    /// Per feature: `[(mean, var) for Y=0, (mean, var) for Y=1]`.
    Gaussian(Vec<[(f64, f64); 2]>),
}

/// Trained naive Bayes parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    /// `[P(Y=0), P(Y=1)]`.
    priors: [f64; 2],
    conditionals: Conditionals,
}

/// Fits priors and per-feature conditionals from a feature matrix and binary
/// labels. Bernoulli conditionals use Laplace smoothing
/// `(count + 1) / (class_count + 2)`.
pub fn train(x: &[Vec<f64>], y: &[bool], likelihood: Likelihood) -> Result<TrainedModel> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n1 = y.iter().filter(|&&b| b).count();
    let n0 = y.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::DegenerateLabels);
    }
    let arity = x[0].len();
    if x.iter().any(|r| r.len() != arity) {
        return Err(Error::ArityMismatch { expected: arity, got: 0 });
    }
    let n = y.len() as f64;
    let priors = [n0 as f64 / n, n1 as f64 / n];
    let class_count = [n0 as f64, n1 as f64];
    let conditionals = match likelihood {
        Likelihood::Bernoulli => {
            let mut conds = vec![[0.0f64; 2]; arity];
            for (row, &label) in x.iter().zip(y) {
                for (j, &v) in row.iter().enumerate() {
                    if v > 0.5 {
                        conds[j][label as usize] += 1.0;
                    }
                }
            }
            for c in &mut conds {
                for cls in 0..2 {
                    c[cls] = (c[cls] + 1.0) / (class_count[cls] + 2.0);
                }
            }
            Conditionals::Bernoulli(conds)
        }
        Likelihood::Gaussian => {
            let mut conds = vec![[(0.0f64, 0.0f64); 2]; arity];
            for j in 0..arity {
                for cls in 0..2 {
                    let vals: Vec<f64> = x
                        .iter()
                        .zip(y)
                        .filter(|(_, &l)| l as usize == cls)
                        .map(|(r, _)| r[j])
                        .collect();
                    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                        / vals.len() as f64;
                    conds[j][cls] = (mean, var.max(VARIANCE_FLOOR));
                }
            }
            Conditionals::Gaussian(conds)
        }
    };
    Ok(TrainedModel { priors, conditionals })
}

impl TrainedModel {
    /// Builds a Bernoulli model directly from known parameters.
    pub fn from_bernoulli(priors: [f64; 2], conditionals: Vec<[f64; 2]>) -> Self {
        Self {
            priors,
            conditionals: Conditionals::Bernoulli(conditionals),
        }
    }

    pub fn arity(&self) -> usize {
        match &self.conditionals {
            Conditionals::Bernoulli(c) => c.len(),
            Conditionals::Gaussian(c) => c.len(),
        }
    }

    pub fn priors(&self) -> [f64; 2] {
        self.priors
    }

    fn class_log_likelihood(&self, x: &[f64], cls: usize) -> f64 {
        match &self.conditionals {
            Conditionals::Bernoulli(conds) => x
                .iter()
                .zip(conds)
                .map(|(&v, c)| {
                    let p = c[cls];
                    if v > 0.5 {
                        p.ln()
                    } else {
                        (1.0 - p).ln()
                    }
                })
                .sum(),
            Conditionals::Gaussian(conds) => x
                .iter()
                .zip(conds)
                .map(|(&v, c)| {
                    let (mean, var) = c[cls];
                    -0.5 * ((v - mean).powi(2) / var + var.ln() + (2.0 * std::f64::consts::PI).ln())
                })
                .sum(),
        }
    }

    /// Normalized posteriors `(P(Y=1|x), P(Y=0|x))`, computed in log space.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), got: x.len() });
        }
        let log0 = self.priors[0].ln() + self.class_log_likelihood(x, 0);
        let log1 = self.priors[1].ln() + self.class_log_likelihood(x, 1);
        let max = log0.max(log1);
        let e0 = (log0 - max).exp();
        let e1 = (log1 - max).exp();
        Ok((e1 / (e0 + e1), e0 / (e0 + e1)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Aggregated confusion counts for one fold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn detection_rate(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn false_positive_rate(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: u64, denom: u64) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Cross-validation results: aggregate confusion counts, the three headline
/// rates, a posterior-threshold ROC sweep, and per-fold breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub detection_rate: f64,
    pub false_positive_rate: f64,
    pub accuracy: f64,
    /// Alias for `accuracy`: `(TP + TN) / total`.
    /// Overall precision, defined here as `(TP + TN) / total` — identical to
    /// `accuracy`, kept as its own field for report compatibility.
    pub precision_overall: f64,
    pub roc_points: Vec<RocPoint>,
    pub folds: Vec<Confusion>,
}

impl MetricsReport {
    pub fn from_folds(folds: Vec<Confusion>, roc_points: Vec<RocPoint>) -> Self {
        let mut total = Confusion::default();
        for f in &folds {
            total.add(*f);
        }
        MetricsReport {
            tp: total.tp,
            fp: total.fp,
            tn: total.tn,
            fn_: total.fn_,
            detection_rate: total.detection_rate(),
            false_positive_rate: total.false_positive_rate(),
            accuracy: total.accuracy(),
            precision_overall: total.accuracy(),
            roc_points,
            folds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `threshold,fpr,tpr` CSV of the ROC sweep.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.roc_points {
            out.push_str(&format!("{:.2},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}

/// Number of evenly spaced thresholds in the ROC sweep (1.00 down to 0.00).
pub const ROC_THRESHOLDS: usize = 101;

pub fn roc_threshold(i: usize) -> f64 {
    (ROC_THRESHOLDS - 1 - i) as f64 / (ROC_THRESHOLDS - 1) as f64
}

/// Undersamples the majority class to the minority size, seeded and without
/// replacement. Returns the kept indices in ascending order; every minority
/// instance is preserved.
pub fn rebalance_indices(y: &[bool], seed: u64) -> Vec<usize> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i]).collect();
    let (mut majority, minority) = if pos.len() > neg.len() {
        (pos.clone(), neg)
    } else {
        (neg.clone(), pos)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    majority.shuffle(&mut rng);
    majority.truncate(minority.len());
    let mut kept: Vec<usize> = minority.into_iter().chain(majority).collect();
    kept.sort_unstable();
    kept
}

/// Stratified k-fold assignment over `items` (indices paired with labels):
/// shuffles within each class and deals round-robin, so fold class balance
/// is within one instance.
pub fn stratified_folds(
    indices: &[usize],
    y: &[bool],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for class in [false, true] {
        let mut members: Vec<usize> = indices.iter().copied().filter(|&i| y[i] == class).collect();
        if members.len() < k {
            return Err(Error::TooFewSamplesPerFold { per_class: members.len(), folds: k });
        }
        members.shuffle(&mut rng);
        for (pos, idx) in members.into_iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    Ok(folds)
}

/// Confusion counts of `model` on a labelled test set at a posterior
/// threshold (predict positive iff `P(Y=1|x) >= threshold`).
pub fn evaluate(
    model: &TrainedModel,
    x: &[Vec<f64>],
    y: &[bool],
    threshold: f64,
) -> Result<Confusion> {
    let mut c = Confusion::default();
    for (row, &label) in x.iter().zip(y) {
        let (p1, _) = model.posterior(row)?;
        let predicted = p1 >= threshold;
        match (predicted, label) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Stratified k-fold cross-validation with seeded class rebalancing.
///
/// The report aggregates confusion counts over folds at the decision
/// threshold and sweeps 101 posterior thresholds for the ROC curve.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[bool],
    k: usize,
    rebalance_seed: u64,
    threshold: f64,
    likelihood: Likelihood,
) -> Result<MetricsReport> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if !y.contains(&true) || !y.contains(&false) {
        return Err(Error::DegenerateLabels);
    }
    let kept = rebalance_indices(y, rebalance_seed);
    let folds = stratified_folds(&kept, y, k, rebalance_seed.wrapping_add(1))?;
    let mut fold_confusions = Vec::with_capacity(k);
    let mut roc_counts = vec![Confusion::default(); ROC_THRESHOLDS];
    for test in &folds {
        let train_idx: Vec<usize> = folds
            .iter()
            .filter(|f| !std::ptr::eq(*f, test))
            .flatten()
            .copied()
            .collect();
        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
        let train_y: Vec<bool> = train_idx.iter().map(|&i| y[i]).collect();
        let model = train(&train_x, &train_y, likelihood)?;
        let test_x: Vec<Vec<f64>> = test.iter().map(|&i| x[i].clone()).collect();
        let test_y: Vec<bool> = test.iter().map(|&i| y[i]).collect();
        fold_confusions.push(evaluate(&model, &test_x, &test_y, threshold)?);
        for (slot, t) in (0..ROC_THRESHOLDS).map(|i| (i, roc_threshold(i))) {
            roc_counts[slot].add(evaluate(&model, &test_x, &test_y, t)?);
        }
    }
    let roc_points = roc_counts
        .iter()
        .enumerate()
        .map(|(i, c)| RocPoint {
            threshold: roc_threshold(i),
            fpr: c.false_positive_rate(),
            tpr: c.detection_rate(),
        })
        .collect();
    Ok(MetricsReport::from_folds(fold_confusions, roc_points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn priors_and_smoothing() {
        let x = vec![
            vec![1.0],
            vec![1.0],
            vec![1.0],
            vec![0.0],
            vec![0.0],
            vec![1.0],
        ];
        let y = vec![true, true, true, false, false, false];
        let m = train(&x, &y, Likelihood::Bernoulli).unwrap();
        assert_eq!(m.priors(), [0.5, 0.5]);
        // Feature always 1 in class 1 with n1 = 3: (3 + 1) / (3 + 2).
        match &m.conditionals {
            Conditionals::Bernoulli(c) => {
                assert_abs_diff_eq!(c[0][1], 4.0 / 5.0, epsilon = 1e-12)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn degenerate_labels_error() {
        let x = vec![vec![1.0], vec![0.0]];
        assert!(matches!(
            train(&x, &[true, true], Likelihood::Bernoulli),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn posterior_hand_example() {
        let m = TrainedModel::from_bernoulli([0.5, 0.5], vec![[0.2, 0.8], [0.5, 0.5]]);
        let (p1, p0) = m.posterior(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p1, 0.8, epsilon = 1e-9);
        assert_abs_diff_eq!(p1 + p0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uninformative_features_return_prior() {
        let m = TrainedModel::from_bernoulli([0.3, 0.7], vec![[0.5, 0.5], [0.5, 0.5]]);
        let (p1, _) = m.posterior(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p1, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn arity_mismatch() {
        let m = TrainedModel::from_bernoulli([0.5, 0.5], vec![[0.2, 0.8]]);
        assert!(matches!(
            m.posterior(&[1.0, 0.0]),
            Err(Error::ArityMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn model_json_round_trip_is_byte_identical() {
        let x = vec![vec![1.0, 0.5], vec![0.0, 1.5], vec![1.0, -0.5], vec![0.0, 2.0]];
        let y = vec![true, false, true, false];
        for mode in [Likelihood::Bernoulli, Likelihood::Gaussian] {
            let m = train(&x, &y, mode).unwrap();
            let text = m.to_json();
            let back = TrainedModel::from_json(&text).unwrap();
            assert_eq!(m, back);
            assert_eq!(text, back.to_json());
        }
    }

    #[test]
    fn rebalance_keeps_minority_no_duplicates() {
        let y: Vec<bool> = (0..30).map(|i| i < 10).collect();
        let kept = rebalance_indices(&y, 5);
        assert_eq!(kept.len(), 20);
        let mut dedup = kept.clone();
        dedup.dedup();
        assert_eq!(dedup, kept);
        for i in 0..10 {
            assert!(kept.contains(&i), "minority instance {i} dropped");
        }
    }

    #[test]
    fn stratified_folds_balance() {
        let y: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let indices: Vec<usize> = (0..40).collect();
        let folds = stratified_folds(&indices, &y, 5, 1).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 8);
            assert_eq!(f.iter().filter(|&&i| y[i]).count(), 4);
        }
        assert!(matches!(
            stratified_folds(&indices[..6], &y[..6], 10, 1),
            Err(Error::TooFewSamplesPerFold { .. })
        ));
    }

    #[test]
    fn confusion_rates() {
        let c = Confusion { tp: 9, fp: 2, tn: 8, fn_: 1 };
        assert_abs_diff_eq!(c.detection_rate(), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(c.false_positive_rate(), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(c.accuracy(), 17.0 / 20.0, epsilon = 1e-12);
    }

    #[test]
    fn separable_corpus_is_perfect() {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i < 30) as u8 as f64, (i % 2) as f64])
            .collect();
        let y: Vec<bool> = (0..60).map(|i| i < 30).collect();
        let report = cross_validate(&x, &y, 5, 7, 0.5, Likelihood::Bernoulli).unwrap();
        assert_abs_diff_eq!(report.accuracy, 1.0, epsilon = 1e-12);
        assert_eq!(report.accuracy, report.precision_overall);
        assert!(report
            .roc_points
            .iter()
            .any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        // Counts cover the rebalanced set.
        assert_eq!(report.tp + report.fp + report.tn + report.fn_, 60);
    }

    #[test]
    fn roc_is_monotone() {
        let x: Vec<Vec<f64>> = (0..80).map(|i| vec![(i % 3) as f64, (i % 7) as f64]).collect();
        let y: Vec<bool> = (0..80).map(|i| (i / 2) % 2 == 0).collect();
        let report = cross_validate(&x, &y, 4, 3, 0.5, Likelihood::Gaussian).unwrap();
        for w in report.roc_points.windows(2) {
            assert!(w[1].threshold <= w[0].threshold);
            assert!(w[1].tpr >= w[0].tpr - 1e-12);
            assert!(w[1].fpr >= w[0].fpr - 1e-12);
        }
    }

    #[test]
    fn cross_validation_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 5) as f64]).collect();
        let y: Vec<bool> = (0..50).map(|i| i % 2 == 0).collect();
        let a = cross_validate(&x, &y, 5, 11, 0.5, Likelihood::Gaussian).unwrap();
        let b = cross_validate(&x, &y, 5, 11, 0.5, Likelihood::Gaussian).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
