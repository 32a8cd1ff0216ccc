//! Desk-scale autoregressive categorical policy.
//!
//! The policy is a dense logit table indexed by (context id, token id). A
//! context id is a stable hash of the last `k` tokens of the full history
//! (prompt plus generation so far), bucketed into `C` rows. Next-token
//! probabilities are the softmax of the active row at temperature 1; the
//! gradient of a sequence log-probability is therefore analytic — one-hot
//! minus softmax on each visited row — which lets every optimizer-side
//! gradient in this crate be checked against finite differences.
//!
//! Rows are read-shared during rollouts; only the optimizer's update step
//! mutates `theta`, and it validates the whole update before applying it.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{fnv1a_words, fnv1a};
use crate::vocab::{TokenId, TokenSeq, Vocabulary};

/// Contextual softmax parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    context_order: usize,
    num_contexts: usize,
    vocab_size: usize,
    vocab_hash: u64,
    theta: Vec<f64>,
}

impl PolicyParams {
    /// Zero-initialized table: the uniform policy.
    pub fn new(context_order: usize, num_contexts: usize, vocab_size: usize, vocab_hash: u64) -> Self {
        assert!(context_order >= 1 && num_contexts >= 1 && vocab_size >= 2);
        Self {
            context_order,
            num_contexts,
            vocab_size,
            vocab_hash,
            theta: vec![0.0; num_contexts * vocab_size],
        }
    }

    pub fn for_vocab(context_order: usize, num_contexts: usize, vocab: &Vocabulary) -> Self {
        Self::new(context_order, num_contexts, vocab.len(), vocab.content_hash())
    }

    pub fn context_order(&self) -> usize {
        self.context_order
    }

    pub fn num_contexts(&self) -> usize {
        self.num_contexts
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Uniform perturbation of every logit; used to build non-trivial test
    /// and demo policies.
    pub fn randomize(&mut self, seed: u64, amplitude: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut self.theta {
            *v = rng.gen_range(-amplitude..=amplitude);
        }
    }

    /// Hash of the last `k` history tokens, bucketed into the row table.
    pub fn context_id(&self, history: &[TokenId]) -> usize {
        let start = history.len().saturating_sub(self.context_order);
        let words: Vec<u64> = history[start..].iter().map(|&t| u64::from(t)).collect();
        (fnv1a_words(&words) % self.num_contexts as u64) as usize
    }

    pub fn row(&self, context: usize) -> &[f64] {
        &self.theta[context * self.vocab_size..(context + 1) * self.vocab_size]
    }

    /// Softmax of the active row at temperature 1. Entries are positive and
    /// sum to 1 within 1e-12.
    pub fn next_token_distribution(&self, history: &[TokenId]) -> Vec<f64> {
        softmax(self.row(self.context_id(history)), 1.0)
    }

    /// Draws a continuation of up to `max_len` tokens, stopping after EOS.
    ///
    /// `temperature` shapes only the sampling distribution (0 means greedy
    /// argmax with lowest-token-id tie-break); the returned log-probability
    /// is always the policy's own temperature-1 measure of the sequence and
    /// equals `sequence_logprob` on the result.
    pub fn sample_sequence(
        &self,
        prompt: &[TokenId],
        temperature: f64,
        max_len: usize,
        eos: TokenId,
        rng_seed: u64,
    ) -> (TokenSeq, f64) {
        assert!(max_len >= 1);
        assert!(temperature >= 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut history = prompt.to_vec();
        let mut tokens = Vec::new();
        let mut logprob = 0.0;
        let mut terminated = false;
        for _ in 0..max_len {
            let row = self.row(self.context_id(&history));
            let tok = if temperature == 0.0 {
                argmax_lowest(row)
            } else {
                sample_index(&softmax(row, temperature), &mut rng)
            };
            logprob += softmax(row, 1.0)[tok as usize].ln();
            tokens.push(tok);
            history.push(tok);
            if tok == eos {
                terminated = true;
                break;
            }
        }
        (TokenSeq { tokens, terminated }, logprob)
    }

    /// Log-probability of each continuation token under the temperature-1
    /// policy, conditioned on prompt plus preceding continuation tokens.
    pub fn token_logprobs(&self, prompt: &[TokenId], seq: &[TokenId]) -> Vec<f64> {
        let mut history = prompt.to_vec();
        let mut out = Vec::with_capacity(seq.len());
        for &tok in seq {
            let probs = self.next_token_distribution(&history);
            out.push(probs[tok as usize].ln());
            history.push(tok);
        }
        out
    }

    /// Sum of per-step log-probabilities; 0 for an empty continuation.
    pub fn sequence_logprob(&self, prompt: &[TokenId], seq: &[TokenId]) -> f64 {
        self.token_logprobs(prompt, seq).iter().sum()
    }

    /// Analytic gradient of `sequence_logprob` with respect to `theta`:
    /// one-hot(chosen) minus softmax on each visited row.
    pub fn logprob_gradient(&self, prompt: &[TokenId], seq: &[TokenId]) -> SparseGrad {
        let mut grad = SparseGrad::new(self.vocab_size);
        let mut history = prompt.to_vec();
        for &tok in seq {
            let ctx = self.context_id(&history);
            let probs = softmax(self.row(ctx), 1.0);
            let row = grad.row_mut(ctx);
            for (r, p) in row.iter_mut().zip(&probs) {
                *r -= p;
            }
            row[tok as usize] += 1.0;
            history.push(tok);
        }
        grad
    }

    /// Applies `lr * grad` after validating that every touched entry stays
    /// finite; on failure the parameters are untouched.
    pub fn apply_gradient(&mut self, grad: &SparseGrad, lr: f64) -> Result<()> {
        if !lr.is_finite() {
            return Err(Error::NonFinite("learning rate".into()));
        }
        for (&ctx, row) in grad.rows() {
            if ctx as usize >= self.num_contexts || row.len() != self.vocab_size {
                return Err(Error::NonFinite(format!("gradient row {ctx} out of shape")));
            }
            for (v, g) in row.iter().enumerate() {
                let updated = self.theta[ctx as usize * self.vocab_size + v] + lr * g;
                if !updated.is_finite() {
                    return Err(Error::NonFinite(format!("theta[{ctx},{v}]")));
                }
            }
        }
        for (&ctx, row) in grad.rows() {
            for (v, g) in row.iter().enumerate() {
                self.theta[ctx as usize * self.vocab_size + v] += lr * g;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }
}

/// Sparse gradient over the logit table: dense rows for visited contexts.
/// Rows are kept in a `BTreeMap` so accumulation order — and therefore the
/// float rounding of the final update — is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrad {
    vocab_size: usize,
    rows: BTreeMap<u32, Vec<f64>>,
}

impl SparseGrad {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            rows: BTreeMap::new(),
        }
    }

    pub fn row_mut(&mut self, context: usize) -> &mut Vec<f64> {
        self.rows
            .entry(context as u32)
            .or_insert_with(|| vec![0.0; self.vocab_size])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&u32, &Vec<f64>)> {
        self.rows.iter()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, context: usize, token: TokenId) -> f64 {
        self.rows
            .get(&(context as u32))
            .map(|r| r[token as usize])
            .unwrap_or(0.0)
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &SparseGrad, scale: f64) {
        for (&ctx, row) in &other.rows {
            let dst = self.row_mut(ctx as usize);
            for (d, s) in dst.iter_mut().zip(row) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.rows.values_mut() {
            for v in row.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rows.values().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .values()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn softmax(row: &[f64], temperature: f64) -> Vec<f64> {
    let t = temperature.max(f64::MIN_POSITIVE);
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&x| ((x - max) / t).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

fn argmax_lowest(row: &[f64]) -> TokenId {
    let mut best = 0usize;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best as TokenId
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> TokenId {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as TokenId;
        }
    }
    (probs.len() - 1) as TokenId
}

/// On-disk checkpoint: versioned JSON with an integrity checksum.
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    context_order: usize,
    num_contexts: usize,
    vocab_size: usize,
    vocab_hash: u64,
    theta: Vec<f64>,
    checksum: u64,
}

const CHECKPOINT_VERSION: u32 = 1;

fn checkpoint_checksum(cp: &CheckpointFile) -> u64 {
    let mut bytes = Vec::with_capacity(cp.theta.len() * 8 + 64);
    for v in [
        u64::from(cp.version),
        cp.context_order as u64,
        cp.num_contexts as u64,
        cp.vocab_size as u64,
        cp.vocab_hash,
    ] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for t in &cp.theta {
        bytes.extend_from_slice(&t.to_bits().to_le_bytes());
    }
    fnv1a(&bytes)
}

/// Serializes the parameters; the write is atomic (temp file + rename).
pub fn save_checkpoint(params: &PolicyParams, path: &Path) -> Result<()> {
    let mut cp = CheckpointFile {
        version: CHECKPOINT_VERSION,
        context_order: params.context_order,
        num_contexts: params.num_contexts,
        vocab_size: params.vocab_size,
        vocab_hash: params.vocab_hash,
        theta: params.theta.clone(),
        checksum: 0,
    };
    cp.checksum = checkpoint_checksum(&cp);
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_string(&cp)?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a checkpoint, rejecting version, checksum, shape, non-finite, or
/// vocabulary-hash mismatches.
pub fn load_checkpoint(path: &Path, expected_vocab_hash: Option<u64>) -> Result<PolicyParams> {
    let text = std::fs::read_to_string(path)?;
    let cp: CheckpointFile = serde_json::from_str(&text)?;
    if cp.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", cp.version)));
    }
    let want = checkpoint_checksum(&cp);
    if want != cp.checksum {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }
    if cp.theta.len() != cp.num_contexts * cp.vocab_size {
        return Err(Error::Checkpoint("theta shape mismatch".into()));
    }
    if !cp.theta.iter().all(|v| v.is_finite()) {
        return Err(Error::Checkpoint("non-finite parameters".into()));
    }
    if let Some(h) = expected_vocab_hash {
        if h != cp.vocab_hash {
            return Err(Error::Checkpoint(format!(
                "vocabulary hash mismatch: checkpoint {:#x}, expected {:#x}",
                cp.vocab_hash, h
            )));
        }
    }
    Ok(PolicyParams {
        context_order: cp.context_order,
        num_contexts: cp.num_contexts,
        vocab_size: cp.vocab_size,
        vocab_hash: cp.vocab_hash,
        theta: cp.theta,
    })
}
