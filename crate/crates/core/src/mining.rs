//! n-gram usage models over action-token sequences: smoothed probabilities,
//! anomaly scoring, greedy / sampled generation, and closed frequent-pattern
//! mining.
//!
//! Sequences are padded with `n-1` start markers and one end marker, so a
//! sequence of `L` tokens contributes `L + 1` prediction factors. Smoothing
//! is add-k over the predictable vocabulary (seen tokens plus the end
//! marker); querying a token never seen anywhere falls back to a floor that
//! reserves one extra unknown slot in the denominator.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const START: &str = "<s>";
pub const END: &str = "</s>";
const CTX_SEP: char = '\u{0001}';
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("corpus must contain at least one sequence")]
    EmptyCorpus,
    #[error("n-gram order {0} outside 2..=5")]
    BadOrder(usize),
    #[error("smoothing constant {0} must be positive")]
    BadSmoothing(f64),
    #[error("sequence {seq} contains reserved token {token:?}")]
    ReservedToken { seq: usize, token: String },
    #[error("pattern bounds invalid: min_len {min_len}, max_len {max_len}, min_support {min_support}")]
    BadPatternBounds { min_len: usize, max_len: usize, min_support: usize },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    /// Mean of per-sequence mean per-token log-probabilities at train time.
    pub mean: f64,
    /// Population standard deviation of the same scores.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    n: usize,
    k: f64,
    /// Every token ever seen, including the reserved markers.
    vocab: BTreeSet<String>,
    /// context (n-1 tokens) -> successor -> count
    counts: HashMap<Vec<String>, BTreeMap<String, u64>>,
    totals: HashMap<Vec<String>, u64>,
    train_stats: TrainStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerationMode {
    /// Highest-probability successor, ties to the lexically smallest token.
    Greedy,
    /// Sample from the smoothed distribution with the given seed.
    Sample { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsagePattern {
    pub tokens: Vec<String>,
    /// Number of corpus sequences containing the pattern contiguously.
    pub support: usize,
    /// Mean within-pattern transition log-probability under a bigram model
    /// of the same corpus.
    pub mean_logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub sequence_index: usize,
    /// Mean per-token log-probability of the flagged sequence.
    pub score: f64,
}

fn check_corpus(corpus: &[Vec<String>]) -> Result<(), MiningError> {
    if corpus.is_empty() {
        return Err(MiningError::EmptyCorpus);
    }
    for (i, seq) in corpus.iter().enumerate() {
        for t in seq {
            if t == START || t == END {
                return Err(MiningError::ReservedToken { seq: i, token: t.clone() });
            }
        }
    }
    Ok(())
}

impl NGramModel {
    /// Count padded n-grams over the corpus and freeze anomaly statistics.
    pub fn train(corpus: &[Vec<String>], n: usize, k: f64) -> Result<Self, MiningError> {
        if !(2..=5).contains(&n) {
            return Err(MiningError::BadOrder(n));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(MiningError::BadSmoothing(k));
        }
        check_corpus(corpus)?;

        let mut model = NGramModel {
            n,
            k,
            vocab: BTreeSet::new(),
            counts: HashMap::new(),
            totals: HashMap::new(),
            train_stats: TrainStats { mean: 0.0, std: 0.0 },
        };
        model.vocab.insert(START.to_string());
        model.vocab.insert(END.to_string());
        for seq in corpus {
            for t in seq {
                model.vocab.insert(t.clone());
            }
            let padded = model.pad(seq);
            for w in padded.windows(n) {
                let ctx = w[..n - 1].to_vec();
                let tok = w[n - 1].clone();
                *model.counts.entry(ctx.clone()).or_default().entry(tok).or_insert(0) += 1;
                *model.totals.entry(ctx).or_insert(0) += 1;
            }
        }

        let scores: Vec<f64> = corpus.iter().map(|s| model.mean_logprob(s)).collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
        model.train_stats = TrainStats { mean, std: var.sqrt() };
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn train_stats(&self) -> TrainStats {
        self.train_stats
    }

    /// Tokens the model can predict: everything seen plus the end marker,
    /// minus the start marker (it is never a successor).
    pub fn predictable_vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(|s| s.as_str()).filter(|t| *t != START)
    }

    fn predictable_len(&self) -> usize {
        self.vocab.len() - 1
    }

    fn pad(&self, seq: &[String]) -> Vec<String> {
        let mut p = Vec::with_capacity(seq.len() + self.n);
        for _ in 0..self.n - 1 {
            p.push(START.to_string());
        }
        p.extend(seq.iter().cloned());
        p.push(END.to_string());
        p
    }

    fn ctx_counts(&self, ctx: &[String]) -> (u64, Option<&BTreeMap<String, u64>>) {
        let key = ctx.to_vec();
        (self.totals.get(&key).copied().unwrap_or(0), self.counts.get(&key))
    }

    /// Smoothed `P(token | ctx)`. `ctx` must hold exactly `n-1` tokens.
    pub fn prob(&self, ctx: &[String], token: &str) -> f64 {
        assert_eq!(ctx.len(), self.n - 1, "context must hold n-1 tokens");
        let (total, counts) = self.ctx_counts(ctx);
        let v = self.predictable_len() as f64;
        if token != START && self.vocab.contains(token) {
            let c = counts.and_then(|m| m.get(token)).copied().unwrap_or(0) as f64;
            (c + self.k) / (total as f64 + self.k * v)
        } else {
            // unknown (or start marker queried as successor): floor with a
            // reserved extra slot
            self.k / (total as f64 + self.k * (v + 1.0))
        }
    }

    /// Distribution over the predictable vocabulary, lexical order.
    /// Sums to 1 up to rounding.
    pub fn next_distribution(&self, ctx: &[String]) -> Vec<(String, f64)> {
        self.predictable_vocab()
            .map(|t| (t.to_string(), self.prob(ctx, t)))
            .collect()
    }

    /// Natural-log probability of the padded sequence: one factor per token
    /// plus one for the end marker.
    pub fn sequence_logprob(&self, seq: &[String]) -> f64 {
        let padded = self.pad(seq);
        let mut lp = 0.0;
        for w in padded.windows(self.n) {
            lp += self.prob(&w[..self.n - 1], &w[self.n - 1]).ln();
        }
        lp
    }

    /// `sequence_logprob` over the number of prediction factors (len + 1).
    pub fn mean_logprob(&self, seq: &[String]) -> f64 {
        self.sequence_logprob(seq) / (seq.len() + 1) as f64
    }

    /// Emit up to `max_len` tokens; stops early when the end marker wins.
    pub fn generate(&self, mode: GenerationMode, max_len: usize) -> Vec<String> {
        let mut ctx: Vec<String> = vec![START.to_string(); self.n - 1];
        let mut out = Vec::new();
        let mut rng = match mode {
            GenerationMode::Sample { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            GenerationMode::Greedy => None,
        };
        while out.len() < max_len {
            let dist = self.next_distribution(&ctx);
            let tok = match &mut rng {
                None => {
                    // argmax with lexically-smallest tie-break: the list is
                    // already lexically sorted, so strict > keeps the first
                    let mut best = &dist[0];
                    for cand in &dist[1..] {
                        if cand.1 > best.1 {
                            best = cand;
                        }
                    }
                    best.0.clone()
                }
                Some(rng) => {
                    let total: f64 = dist.iter().map(|(_, p)| p).sum();
                    let mut roll = rng.gen_range(0.0..total);
                    let mut chosen = dist.last().expect("nonempty vocab").0.clone();
                    for (t, p) in &dist {
                        if roll < *p {
                            chosen = t.clone();
                            break;
                        }
                        roll -= p;
                    }
                    chosen
                }
            };
            if tok == END {
                break;
            }
            ctx.remove(0);
            ctx.push(tok.clone());
            out.push(tok);
        }
        out
    }

    /// Sequences whose mean per-token log-probability falls more than
    /// `z` train-time standard deviations below the train-time mean.
    pub fn detect_anomalies(&self, corpus: &[Vec<String>], z: f64) -> Vec<Anomaly> {
        let cutoff = self.train_stats.mean - z * self.train_stats.std;
        corpus
            .iter()
            .enumerate()
            .filter_map(|(i, seq)| {
                let score = self.mean_logprob(seq);
                (score < cutoff).then_some(Anomaly { sequence_index: i, score })
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let counts: BTreeMap<String, BTreeMap<String, u64>> = self
            .counts
            .iter()
            .map(|(ctx, m)| {
                let key =
                    ctx.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(&CTX_SEP.to_string());
                (key, m.clone())
            })
            .collect();
        serde_json::json!({
            "version": MODEL_VERSION,
            "n": self.n,
            "k": self.k,
            "vocab": self.vocab.iter().collect::<Vec<_>>(),
            "counts": counts,
            "train_stats": { "mean": self.train_stats.mean, "std": self.train_stats.std },
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, MiningError> {
        #[derive(Deserialize)]
        struct ModelFile {
            version: u32,
            n: usize,
            k: f64,
            vocab: Vec<String>,
            counts: BTreeMap<String, BTreeMap<String, u64>>,
            train_stats: TrainStats,
        }
        let file: ModelFile = serde_json::from_value(value.clone())
            .map_err(|e| MiningError::ModelFormat(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(MiningError::UnsupportedVersion(file.version));
        }
        if !(2..=5).contains(&file.n) {
            return Err(MiningError::BadOrder(file.n));
        }
        if !(file.k > 0.0) {
            return Err(MiningError::BadSmoothing(file.k));
        }
        let mut counts = HashMap::new();
        let mut totals = HashMap::new();
        for (key, m) in file.counts {
            let ctx: Vec<String> = key.split(CTX_SEP).map(str::to_string).collect();
            if ctx.len() != file.n - 1 {
                return Err(MiningError::ModelFormat(format!(
                    "context {key:?} should hold {} tokens",
                    file.n - 1
                )));
            }
            let total: u64 = m.values().sum();
            totals.insert(ctx.clone(), total);
            counts.insert(ctx, m);
        }
        Ok(NGramModel {
            n: file.n,
            k: file.k,
            vocab: file.vocab.into_iter().collect(),
            counts,
            totals,
            train_stats: file.train_stats,
        })
    }
}

/// Contiguous closed frequent patterns: supported by at least `min_support`
/// sequences, no super-pattern of equal support, sorted by support then
/// length (both descending) then lexically.
pub fn mine_patterns(
    corpus: &[Vec<String>],
    min_support: usize,
    min_len: usize,
    max_len: usize,
) -> Result<Vec<UsagePattern>, MiningError> {
    if min_len < 1 || max_len < min_len || min_support < 1 {
        return Err(MiningError::BadPatternBounds { min_len, max_len, min_support });
    }
    check_corpus(corpus)?;

    let mut supports: HashMap<Vec<String>, BTreeSet<usize>> = HashMap::new();
    for (si, seq) in corpus.iter().enumerate() {
        for len in min_len..=max_len.min(seq.len()) {
            for start in 0..=seq.len() - len {
                supports.entry(seq[start..start + len].to_vec()).or_default().insert(si);
            }
        }
    }
    let frequent: Vec<(Vec<String>, usize)> = supports
        .into_iter()
        .map(|(pat, seqs)| (pat, seqs.len()))
        .filter(|(_, s)| *s >= min_support)
        .collect();

    let contains = |hay: &[String], needle: &[String]| -> bool {
        hay.len() > needle.len() && hay.windows(needle.len()).any(|w| w == needle)
    };
    let mut closed: Vec<(Vec<String>, usize)> = frequent
        .iter()
        .filter(|(pat, sup)| {
            !frequent.iter().any(|(other, osup)| *osup == *sup && contains(other, pat))
        })
        .cloned()
        .collect();
    closed.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(b.0.len().cmp(&a.0.len()))
            .then_with(|| a.0.cmp(&b.0))
    });

    // Score pattern-internal transitions under a bigram model of the corpus.
    let scorer = NGramModel::train(corpus, 2, 1.0)?;
    Ok(closed
        .into_iter()
        .map(|(tokens, support)| {
            let mut lp = 0.0;
            let mut factors = 0usize;
            for w in tokens.windows(2) {
                lp += scorer.prob(&w[..1], &w[1]).ln();
                factors += 1;
            }
            let mean_logprob = if factors == 0 { 0.0 } else { lp / factors as f64 };
            UsagePattern { tokens, support, mean_logprob }
        })
        .collect())
}
