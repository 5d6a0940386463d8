//! Multi-order Markov chain modeling of run-length sequences.
//!
//! The run-length encoding of a cascade is treated as a discrete random
//! process. Autocorrelation of the symbol sequence picks the chain order,
//! bounded by a cap; a chain of order `n` over `k` observed symbols has `k^n`
//! representable histories, stored sparsely.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::RunLengthSequence;
use crate::error::{Error, Result};

/// Sample autocorrelation of a symbol sequence with its 95% confidence
/// envelope `1.96 / sqrt(len)`.
#[derive(Debug, Clone)]
pub struct AcfResult {
    pub rho: Vec<f64>,
    pub envelope: f64,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.rho.len() - 1
    }
}

/// Standard biased sample ACF with the global mean and variance.
pub fn autocorrelation(seq: &RunLengthSequence, max_lag: usize) -> Result<AcfResult> {
    let n = seq.len();
    if n < 2 {
        return Err(Error::DegenerateSequence);
    }
    if max_lag == 0 || max_lag >= n {
        return Err(Error::Config(format!(
            "max_lag must be in [1, {}), got {max_lag}",
            n
        )));
    }
    let x: Vec<f64> = seq.runs().iter().map(|&r| r as f64).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::DegenerateSequence);
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    for t in 0..=max_lag {
        let num: f64 = (0..n - t).map(|i| (x[i] - mean) * (x[i + t] - mean)).sum();
        rho.push(num / denom);
    }
    Ok(AcfResult {
        rho,
        envelope: 1.96 / (n as f64).sqrt(),
    })
}

/// How to turn significant ACF lags into a chain order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRule {
    /// Largest lag whose ACF value escapes the envelope.
    #[default]
    LargestSignificant,
    /// First lag whose ACF value escapes the envelope.
    FirstSignificant,
}

/// Selects the chain order for one sequence; degenerate inputs default to 1.
pub fn select_order(seq: &RunLengthSequence, max_order: usize) -> usize {
    select_order_with(seq, max_order, OrderRule::LargestSignificant)
}

pub fn select_order_with(seq: &RunLengthSequence, max_order: usize, rule: OrderRule) -> usize {
    let max_order = max_order.max(1);
    let max_lag = max_order.min(seq.len().saturating_sub(1));
    if max_lag == 0 {
        return 1;
    }
    let acf = match autocorrelation(seq, max_lag) {
        Ok(acf) => acf,
        Err(_) => return 1,
    };
    let significant = (1..=max_lag).filter(|&t| acf.rho[t].abs() > acf.envelope);
    let picked = match rule {
        OrderRule::LargestSignificant => significant.last(),
        OrderRule::FirstSignificant => significant.min(),
    };
    picked.unwrap_or(1)
}

/// `T_max`: the maximum per-sequence selected order across a corpus.
pub fn select_global_order(seqs: &[RunLengthSequence], max_order: usize) -> Result<usize> {
    select_global_order_with(seqs, max_order, OrderRule::LargestSignificant)
}

pub fn select_global_order_with(
    seqs: &[RunLengthSequence],
    max_order: usize,
    rule: OrderRule,
) -> Result<usize> {
    if seqs.is_empty() {
        return Err(Error::EmptyCollection);
    }
    Ok(seqs
        .iter()
        .map(|s| select_order_with(s, max_order, rule))
        .max()
        .unwrap_or(1))
}

/// Order-`n` transition model over run-length symbols with additive
/// smoothing. Histories are stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    order: usize,
    alphabet: Vec<u32>,
    alpha: f64,
    transitions: BTreeMap<Vec<u32>, BTreeMap<u32, u64>>,
    initial_counts: BTreeMap<Vec<u32>, u64>,
    marginal_counts: BTreeMap<u32, u64>,
}

/// Fits an order-`n` chain from training sequences.
///
/// The alphabet is the union of observed symbols; sequences of length at
/// least `n + 1` contribute transitions, and length-`n` prefixes feed the
/// initial distribution. `P(x | h) = (count + alpha) / (total + alpha * k)`.
pub fn fit(seqs: &[RunLengthSequence], order: usize, alpha: f64) -> Result<MarkovChain> {
    if order == 0 {
        return Err(Error::Config("order must be >= 1".into()));
    }
    if alpha < 0.0 {
        return Err(Error::Config("alpha must be >= 0".into()));
    }
    let mut marginal_counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut initial_counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    let mut transitions: BTreeMap<Vec<u32>, BTreeMap<u32, u64>> = BTreeMap::new();
    let mut any_transition = false;
    for seq in seqs {
        let runs = seq.runs();
        for &s in runs {
            *marginal_counts.entry(s).or_default() += 1;
        }
        if runs.len() >= order {
            *initial_counts.entry(runs[..order].to_vec()).or_default() += 1;
        }
        if runs.len() > order {
            any_transition = true;
            for w in runs.windows(order + 1) {
                *transitions
                    .entry(w[..order].to_vec())
                    .or_default()
                    .entry(w[order])
                    .or_default() += 1;
            }
        }
    }
    if !any_transition {
        return Err(Error::InsufficientData(order + 1));
    }
    let alphabet: Vec<u32> = marginal_counts.keys().copied().collect();
    Ok(MarkovChain {
        order,
        alphabet,
        alpha,
        transitions,
        initial_counts,
        marginal_counts,
    })
}

impl MarkovChain {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> &[u32] {
        &self.alphabet
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `k^n`: the number of representable histories (saturating).
    pub fn state_count(&self) -> u128 {
        (self.alphabet.len() as u128).saturating_pow(self.order as u32)
    }

    /// Observed histories with at least one outgoing transition.
    pub fn histories(&self) -> impl Iterator<Item = &[u32]> {
        self.transitions.keys().map(Vec::as_slice)
    }

    /// Smoothed conditional probability `P(next | history)`.
    pub fn transition_prob(&self, history: &[u32], next: u32) -> f64 {
        let k = self.alphabet.len() as f64;
        let row = self.transitions.get(history);
        let count = row.and_then(|r| r.get(&next)).copied().unwrap_or(0) as f64;
        let total = row.map(|r| r.values().sum::<u64>()).unwrap_or(0) as f64;
        let denom = total + self.alpha * k;
        if denom == 0.0 {
            return 0.0;
        }
        (count + self.alpha) / denom
    }

    /// Smoothed probability of a length-`order` initial prefix; the smoothing
    /// support is the full `k^order` history space.
    pub fn initial_prob(&self, prefix: &[u32]) -> f64 {
        let count = self.initial_counts.get(prefix).copied().unwrap_or(0) as f64;
        let total = self.initial_counts.values().sum::<u64>() as f64;
        let support = (self.alphabet.len() as f64).powi(self.order as i32);
        let denom = total + self.alpha * support;
        if denom == 0.0 {
            return 0.0;
        }
        (count + self.alpha) / denom
    }

    /// Smoothed marginal symbol probability.
    pub fn marginal_prob(&self, symbol: u32) -> f64 {
        let k = self.alphabet.len() as f64;
        let count = self.marginal_counts.get(&symbol).copied().unwrap_or(0) as f64;
        let total = self.marginal_counts.values().sum::<u64>() as f64;
        let denom = total + self.alpha * k;
        if denom == 0.0 {
            return 0.0;
        }
        (count + self.alpha) / denom
    }

    /// Log-probability of a sequence under the chain factorization: initial
    /// prefix probability times the conditional of each later symbol.
    /// Sequences shorter than the order fall back to smoothed marginals.
    /// Returns `-inf` rather than erroring when `alpha = 0` and a transition
    /// is unseen.
    pub fn sequence_log_prob(&self, seq: &RunLengthSequence) -> f64 {
        let runs = seq.runs();
        if runs.is_empty() {
            return 0.0;
        }
        if runs.len() < self.order {
            return runs.iter().map(|&s| self.marginal_prob(s).ln()).sum();
        }
        let mut logp = self.initial_prob(&runs[..self.order]).ln();
        for w in runs.windows(self.order + 1) {
            logp += self.transition_prob(&w[..self.order], w[self.order]).ln();
        }
        logp
    }

    /// Draws `count` reproducible sample paths of the given length.
    pub fn sample_realizations(
        &self,
        count: usize,
        length: usize,
        seed: u64,
    ) -> Result<Vec<RunLengthSequence>> {
        if self.alphabet.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let initial: Vec<(&Vec<u32>, u64)> =
            self.initial_counts.iter().map(|(p, &c)| (p, c)).collect();
        let initial_dist = WeightedIndex::new(initial.iter().map(|(_, c)| *c))
            .map_err(|_| Error::InsufficientData(self.order))?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut path: Vec<u32> = Vec::with_capacity(length);
            let prefix = initial[initial_dist.sample(&mut rng)].0;
            path.extend(prefix.iter().take(length));
            while path.len() < length {
                let history = &path[path.len() - self.order..];
                path.push(self.sample_next(history, &mut rng));
            }
            out.push(RunLengthSequence::new(path).expect("symbols are positive"));
        }
        Ok(out)
    }

    fn sample_next(&self, history: &[u32], rng: &mut ChaCha8Rng) -> u32 {
        let row = self.transitions.get(history);
        let weights: Vec<f64> = self
            .alphabet
            .iter()
            .map(|s| {
                let c = row.and_then(|r| r.get(s)).copied().unwrap_or(0) as f64;
                c + self.alpha
            })
            .collect();
        if weights.iter().sum::<f64>() > 0.0 {
            let dist = WeightedIndex::new(&weights).expect("positive total weight");
            return self.alphabet[dist.sample(rng)];
        }
        // Unsmoothed chain at an unseen history: fall back to the marginal.
        let weights: Vec<f64> = self
            .alphabet
            .iter()
            .map(|s| self.marginal_counts.get(s).copied().unwrap_or(0) as f64)
            .collect();
        let dist = WeightedIndex::new(&weights).expect("marginals are non-empty");
        self.alphabet[dist.sample(rng)]
    }
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    order: usize,
    alphabet: Vec<u32>,
    alpha: f64,
    initial_counts: BTreeMap<String, u64>,
    marginal_counts: BTreeMap<String, u64>,
    transitions: BTreeMap<String, BTreeMap<String, u64>>,
}

fn join_key(symbols: &[u32]) -> String {
    symbols
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn parse_key(key: &str) -> Result<Vec<u32>> {
    key.split('-')
        .map(|p| {
            p.parse::<u32>()
                .map_err(|_| Error::Data(format!("bad model key {key:?}")))
        })
        .collect()
}

impl MarkovChain {
    /// Serializes to JSON with hyphen-joined history keys and deterministic
    /// key ordering.
    pub fn to_json(&self) -> String {
        let doc = ModelJson {
            order: self.order,
            alphabet: self.alphabet.clone(),
            alpha: self.alpha,
            initial_counts: self
                .initial_counts
                .iter()
                .map(|(k, &v)| (join_key(k), v))
                .collect(),
            marginal_counts: self
                .marginal_counts
                .iter()
                .map(|(k, &v)| (k.to_string(), v))
                .collect(),
            transitions: self
                .transitions
                .iter()
                .map(|(h, row)| {
                    (
                        join_key(h),
                        row.iter().map(|(s, &c)| (s.to_string(), c)).collect(),
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelJson = serde_json::from_str(text)?;
        let mut initial_counts = BTreeMap::new();
        for (k, v) in doc.initial_counts {
            initial_counts.insert(parse_key(&k)?, v);
        }
        let mut marginal_counts = BTreeMap::new();
        for (k, v) in doc.marginal_counts {
            marginal_counts.insert(
                k.parse::<u32>()
                    .map_err(|_| Error::Data(format!("bad symbol {k:?}")))?,
                v,
            );
        }
        let mut transitions = BTreeMap::new();
        for (h, row) in doc.transitions {
            let mut parsed = BTreeMap::new();
            for (s, c) in row {
                parsed.insert(
                    s.parse::<u32>()
                        .map_err(|_| Error::Data(format!("bad symbol {s:?}")))?,
                    c,
                );
            }
            transitions.insert(parse_key(&h)?, parsed);
        }
        Ok(Self {
            order: doc.order,
            alphabet: doc.alphabet,
            alpha: doc.alpha,
            transitions,
            initial_counts,
            marginal_counts,
        })
    }
}
