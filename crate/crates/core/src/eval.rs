//! Evaluation harness: greedy accuracy, diverse-sampling aggregation
//! (majority vote and pass@1 over k samples), and reasoning-length quintile
//! analysis.
//!
//! Greedy accuracy ("Orig.") uses one temperature-0 sample per task; the
//! vote metrics draw k samples at the configured temperature. Length bins
//! come from the greedy transcript's think-span word count; transcripts
//! without a parsable think span cannot be ranked by length, so they are
//! excluded from the bins and tallied under `malformed_greedy` instead
//! (still scored as incorrect everywhere else).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parsing::{match_choice, parse_output, FallbackMatcher};
use crate::policy::PolicyParams;
use crate::seeds::derive_seed;
use crate::tasks::{render_prompt, OptionId, TaskInstance};
use crate::vocab::Vocabulary;

/// Most frequent non-`None` answer; ties break to the lowest option letter;
/// all-`None` yields `None`.
pub fn majority_vote(answers: &[Option<OptionId>]) -> Option<OptionId> {
    assert!(!answers.is_empty(), "majority_vote needs at least one answer");
    let mut counts: Vec<(OptionId, usize)> = Vec::new();
    for a in answers.iter().flatten() {
        match counts.iter_mut().find(|(id, _)| id == a) {
            Some((_, c)) => *c += 1,
            None => counts.push((*a, 1)),
        }
    }
    counts
        .into_iter()
        .max_by(|(ida, ca), (idb, cb)| ca.cmp(cb).then(idb.0.cmp(&ida.0)))
        .map(|(id, _)| id)
}

/// True iff at least one answer equals the gold option.
pub fn pass_at_1(answers: &[Option<OptionId>], gold: OptionId) -> bool {
    assert!(!answers.is_empty(), "pass_at_1 needs at least one answer");
    answers.iter().any(|a| *a == Some(gold))
}

/// One record's evaluation outcome across the greedy pass and k samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub task_id: String,
    pub gold: char,
    pub greedy_answer: Option<char>,
    pub greedy_correct: bool,
    /// Think-span word count of the greedy transcript; absent iff malformed.
    pub greedy_think_words: Option<usize>,
    pub sample_answers: Vec<Option<char>>,
    pub majority: Option<char>,
    pub majority_correct: bool,
    pub pass1: bool,
    /// Sampled transcripts that failed the structural parse.
    pub samples_malformed: usize,
    /// Sampled transcripts that parsed but matched no option.
    pub samples_unmatched: usize,
}

/// Accuracy within one length bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthBin {
    /// Inclusive upper word-count boundary (nearest-rank percentile).
    pub upper: usize,
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Per-quintile accuracy table over think-span word counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LengthBinTable {
    pub bins: Vec<LengthBin>,
    /// Set when tied boundaries forced an uneven partition (e.g. all lengths
    /// equal, which lands every record in the first bin).
    pub degenerate: bool,
}

/// Splits `(word_count, correct)` entries into `bins` percentile bins using
/// nearest-rank boundaries; entries on a boundary go to the lower bin.
pub fn length_bins(entries: &[(usize, bool)], bins: usize) -> Result<LengthBinTable> {
    if bins == 0 {
        return Err(Error::Config("bins must be >= 1".into()));
    }
    if entries.len() < bins {
        return Err(Error::Config(format!(
            "need at least {bins} records with word counts, got {}",
            entries.len()
        )));
    }
    let n = entries.len();
    let mut sorted: Vec<usize> = entries.iter().map(|&(w, _)| w).collect();
    sorted.sort_unstable();
    // Nearest-rank percentile boundary for bin j: the ceil(j*n/bins)-th
    // smallest value (1-indexed).
    let boundaries: Vec<usize> = (1..=bins)
        .map(|j| sorted[(j * n).div_ceil(bins) - 1])
        .collect();
    let mut stats = vec![(0usize, 0usize); bins];
    for &(w, correct) in entries {
        let bin = boundaries
            .iter()
            .position(|&b| w <= b)
            .unwrap_or(bins - 1);
        stats[bin].0 += 1;
        if correct {
            stats[bin].1 += 1;
        }
    }
    let degenerate = stats.iter().any(|&(count, _)| count == 0);
    let table = boundaries
        .into_iter()
        .zip(stats)
        .map(|(upper, (count, correct))| LengthBin {
            upper,
            count,
            correct,
            accuracy: if count == 0 {
                0.0
            } else {
                correct as f64 / count as f64
            },
        })
        .collect();
    Ok(LengthBinTable {
        bins: table,
        degenerate,
    })
}

/// Aggregated evaluation report. Every rate recomputes exactly from the
/// shipped per-record table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub k: usize,
    pub temperature: f64,
    pub greedy_accuracy: f64,
    pub majority_accuracy: f64,
    pub pass1_rate: f64,
    pub malformed_greedy: usize,
    pub samples_malformed: usize,
    pub samples_unmatched: usize,
    pub quintiles: Option<LengthBinTable>,
    pub records: Vec<EvalRecord>,
}

/// Parses a transcript and resolves its answer to an option id.
/// Returns (answer, malformed, unmatched).
fn resolve_answer(
    text: &str,
    task: &TaskInstance,
    fallback: &dyn FallbackMatcher,
) -> (Option<OptionId>, bool, bool) {
    let parsed = parse_output(text);
    let Some(answer_text) = parsed.answer_text.as_deref() else {
        return (None, true, false);
    };
    let matched = match_choice(answer_text, &task.options)
        .or_else(|| fallback.match_option(answer_text, &task.options));
    let unmatched = matched.is_none();
    (matched, false, unmatched)
}

/// Evaluation knobs beyond (k, temperature).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSettings {
    pub max_len: usize,
    pub length_bins: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            max_len: 16,
            length_bins: 5,
        }
    }
}

/// Runs the full protocol over a task corpus, deterministically in `seed`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    policy: &PolicyParams,
    vocab: &Vocabulary,
    corpus: &[TaskInstance],
    k: usize,
    temperature: f64,
    seed: u64,
    fallback: &dyn FallbackMatcher,
    settings: &EvalSettings,
) -> Result<EvalReport> {
    if corpus.is_empty() {
        return Err(Error::Config("evaluation corpus is empty".into()));
    }
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    let eos = vocab.eos();
    let mut records = Vec::with_capacity(corpus.len());
    for (idx, task) in corpus.iter().enumerate() {
        let prompt = render_prompt(task, vocab);
        let (greedy_seq, _) =
            policy.sample_sequence(&prompt.tokens, 0.0, settings.max_len, eos, 0);
        let greedy_text = vocab.detokenize(&greedy_seq.tokens);
        let greedy_parsed = parse_output(&greedy_text);
        let (greedy_answer, greedy_malformed, _) = resolve_answer(&greedy_text, task, fallback);
        let greedy_think_words = if greedy_malformed {
            None
        } else {
            greedy_parsed
                .think_text
                .as_deref()
                .map(|t| t.split_whitespace().count())
        };

        let mut sample_answers = Vec::with_capacity(k);
        let mut samples_malformed = 0;
        let mut samples_unmatched = 0;
        for j in 0..k {
            let sample_seed = derive_seed(seed, "eval-sample", &[idx as u64, j as u64]);
            let (seq, _) = policy.sample_sequence(
                &prompt.tokens,
                temperature,
                settings.max_len,
                eos,
                sample_seed,
            );
            let text = vocab.detokenize(&seq.tokens);
            let (ans, malformed, unmatched) = resolve_answer(&text, task, fallback);
            if malformed {
                samples_malformed += 1;
            } else if unmatched {
                samples_unmatched += 1;
            }
            sample_answers.push(ans);
        }
        let majority = majority_vote(&sample_answers);
        records.push(EvalRecord {
            task_id: task.id.clone(),
            gold: task.gold.letter(),
            greedy_answer: greedy_answer.map(OptionId::letter),
            greedy_correct: greedy_answer == Some(task.gold),
            greedy_think_words,
            sample_answers: sample_answers
                .iter()
                .map(|a| a.map(OptionId::letter))
                .collect(),
            majority: majority.map(OptionId::letter),
            majority_correct: majority == Some(task.gold),
            pass1: pass_at_1(&sample_answers, task.gold),
            samples_malformed,
            samples_unmatched,
        });
    }

    let n = records.len();
    let greedy_accuracy = records.iter().filter(|r| r.greedy_correct).count() as f64 / n as f64;
    let majority_accuracy =
        records.iter().filter(|r| r.majority_correct).count() as f64 / n as f64;
    let pass1_rate = records.iter().filter(|r| r.pass1).count() as f64 / n as f64;
    let binnable: Vec<(usize, bool)> = records
        .iter()
        .filter_map(|r| r.greedy_think_words.map(|w| (w, r.greedy_correct)))
        .collect();
    let quintiles = if binnable.len() >= settings.length_bins {
        Some(length_bins(&binnable, settings.length_bins)?)
    } else {
        None
    };
    Ok(EvalReport {
        n,
        k,
        temperature,
        greedy_accuracy,
        majority_accuracy,
        pass1_rate,
        malformed_greedy: records
            .iter()
            .filter(|r| r.greedy_think_words.is_none())
            .count(),
        samples_malformed: records.iter().map(|r| r.samples_malformed).sum(),
        samples_unmatched: records.iter().map(|r| r.samples_unmatched).sum(),
        quintiles,
        records,
    })
}

/// Greedy decision accuracy over a task list; the trainer's held-out probe.
pub fn greedy_accuracy(
    policy: &PolicyParams,
    vocab: &Vocabulary,
    tasks: &[TaskInstance],
    fallback: &dyn FallbackMatcher,
    max_len: usize,
) -> f64 {
    if tasks.is_empty() {
        return 0.0;
    }
    let eos = vocab.eos();
    let correct = tasks
        .iter()
        .filter(|task| {
            let prompt = render_prompt(task, vocab);
            let (seq, _) = policy.sample_sequence(&prompt.tokens, 0.0, max_len, eos, 0);
            let text = vocab.detokenize(&seq.tokens);
            let (ans, _, _) = resolve_answer(&text, task, fallback);
            ans == Some(task.gold)
        })
        .count();
    correct as f64 / tasks.len() as f64
}
