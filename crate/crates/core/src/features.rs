//! Morphology features: typical Markov states ranked by information gain,
//! binary presence vectors, and optional decorrelation.
//!
//! Candidate features are contiguous symbol subsequences that show up in
//! realizations sampled from a fitted chain; frequency rank stands in for
//! typicality. Candidates are then scored by their information gain against
//! the class label and the top slice is kept.

use std::collections::{BTreeMap, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::encode::RunLengthSequence;
use crate::error::{Error, Result};
use crate::markov::MarkovChain;

/// A Markov-state subsequence used as a binary presence feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFeature {
    pub subsequence: Vec<u32>,
    /// 1-based position in the typicality (frequency) ranking.
    pub typicality_rank: usize,
    /// Bits of mutual information with the class label; 0 until scored.
    pub info_gain: f64,
}

/// Per-cascade feature values: 0/1 presence, or reals after decorrelation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub cascade_id: String,
    pub values: Vec<f64>,
}

/// Ranks candidate states by their empirical frequency across sampled
/// realizations of the chain. Subsequence lengths run from 1 to the chain
/// order; ties break lexicographically.
pub fn typical_states(
    m: &MarkovChain,
    realization_count: usize,
    realization_length: usize,
    max_states: usize,
    seed: u64,
) -> Result<Vec<StateFeature>> {
    if realization_count == 0 || realization_length == 0 {
        return Err(Error::Config("realization count and length must be >= 1".into()));
    }
    let paths = m.sample_realizations(realization_count, realization_length, seed)?;
    let max_len = m.order().max(1);
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for path in &paths {
        let runs = path.runs();
        for len in 1..=max_len.min(runs.len()) {
            for w in runs.windows(len) {
                *counts.entry(w.to_vec()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(Vec<u32>, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .take(max_states)
        .enumerate()
        .map(|(i, (subsequence, _))| StateFeature {
            subsequence,
            typicality_rank: i + 1,
            info_gain: 0.0,
        })
        .collect())
}

fn entropy_bits(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// `IG(X; Y) = H(Y) - H(Y | X)` in bits, for binary columns.
pub fn information_gain(feature: &[bool], labels: &[bool]) -> Result<f64> {
    if feature.len() != labels.len() {
        return Err(Error::LengthMismatch(feature.len(), labels.len()));
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::LengthMismatch(0, 0));
    }
    let mut joint = [[0usize; 2]; 2];
    for (&x, &y) in feature.iter().zip(labels) {
        joint[x as usize][y as usize] += 1;
    }
    let h_y = entropy_bits(&[joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]]);
    let mut h_y_given_x = 0.0;
    for x in 0..2 {
        let part = joint[x][0] + joint[x][1];
        h_y_given_x += part as f64 / n as f64 * entropy_bits(&joint[x]);
    }
    Ok((h_y - h_y_given_x).max(0.0))
}

/// True iff `needle` occurs contiguously in `haystack`.
pub fn contains_state(haystack: &RunLengthSequence, needle: &[u32]) -> bool {
    !needle.is_empty()
        && haystack
            .runs()
            .windows(needle.len())
            .any(|w| w == needle)
}

/// All distinct contiguous subsequences of `seq` up to `max_len` symbols.
fn subsequence_set(seq: &RunLengthSequence, max_len: usize) -> HashSet<Vec<u32>> {
    let runs = seq.runs();
    let mut set = HashSet::new();
    for len in 1..=max_len.min(runs.len()) {
        for w in runs.windows(len) {
            set.insert(w.to_vec());
        }
    }
    set
}

/// Scores each candidate's presence column against the labels and returns the
/// top `top_k` by information gain (ties: shorter state first, then
/// lexicographic).
pub fn rank_and_select_features(
    candidates: &[StateFeature],
    sequences: &[RunLengthSequence],
    labels: &[bool],
    top_k: usize,
) -> Result<Vec<StateFeature>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCollection);
    }
    if sequences.len() != labels.len() {
        return Err(Error::LengthMismatch(sequences.len(), labels.len()));
    }
    let max_len = candidates
        .iter()
        .map(|c| c.subsequence.len())
        .max()
        .unwrap_or(1);
    let sets: Vec<HashSet<Vec<u32>>> = sequences
        .iter()
        .map(|s| subsequence_set(s, max_len))
        .collect();
    let mut scored: Vec<StateFeature> = candidates
        .iter()
        .map(|c| {
            let presence: Vec<bool> = sets.iter().map(|s| s.contains(&c.subsequence)).collect();
            let ig = information_gain(&presence, labels)?;
            Ok(StateFeature {
                subsequence: c.subsequence.clone(),
                typicality_rank: c.typicality_rank,
                info_gain: ig,
            })
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| {
        b.info_gain
            .partial_cmp(&a.info_gain)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.subsequence.len().cmp(&b.subsequence.len()))
            .then_with(|| a.subsequence.cmp(&b.subsequence))
    });
    scored.truncate(top_k);
    Ok(scored)
}

/// Binary presence of each selected state in the sequence.
pub fn presence_vector(seq: &RunLengthSequence, features: &[StateFeature]) -> Vec<f64> {
    features
        .iter()
        .map(|f| contains_state(seq, &f.subsequence) as u8 as f64)
        .collect()
}

/// Eigenbasis of the sample covariance used to decorrelate feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KltBasis {
    pub means: Vec<f64>,
    /// Eigenvectors as rows, ordered by descending eigenvalue; the
    /// largest-magnitude component of each is positive.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl KltBasis {
    /// Projects one row into the decorrelated basis.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = row
            .iter()
            .zip(&self.means)
            .map(|(v, m)| v - m)
            .collect();
        self.components
            .iter()
            .map(|c| c.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Karhunen-Loeve transform: center columns, eigendecompose the sample
/// covariance, and project onto eigenvectors by descending eigenvalue.
pub fn klt_transform(rows: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, KltBasis)> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientSamples);
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::LengthMismatch(dim, 0));
    }
    let means: Vec<f64> = (0..dim)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, dim, |i, j| rows[i][j] - means[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut components = Vec::with_capacity(dim);
    let mut eigenvalues = Vec::with_capacity(dim);
    for &idx in &order {
        let col = eig.eigenvectors.column(idx);
        let mut v: DVector<f64> = col.into_owned();
        // Sign convention: largest-magnitude component positive.
        let dominant = v
            .iter()
            .cloned()
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap_or(1.0);
        if dominant < 0.0 {
            v.neg_mut();
        }
        components.push(v.iter().copied().collect::<Vec<f64>>());
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }
    let basis = KltBasis {
        means,
        components,
        eigenvalues,
    };
    let transformed: Vec<Vec<f64>> = rows.iter().map(|r| basis.apply(r)).collect();
    Ok((transformed, basis))
}
