//! Synthetic verifiable decision tasks and the shared scenario-record schema.
//!
//! Three seeded families stand in for a large generated corpus. Every family
//! computes its gold answer from the rendered prompt alone, so correctness is
//! machine-checkable:
//!
//! * `max-of-numbers` — pick the largest of the listed readings (numeric
//!   answers; used for the stage-1 cold start),
//! * `ordering` — pick the option listing the values in ascending order,
//! * `rule-lookup` — map an incident code to its protocol number through the
//!   family's fixed code→protocol table (the stage-2 decision task).
//!
//! Prompts render as `question options situation`, situation last, so the
//! scenario's deciding token stays inside a short-context policy's window
//! when generation begins.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::derive_seed;
use crate::vocab::{normalize_whitespace, TokenSeq, Vocabulary};

/// Zero-based option position; renders as the letters A–F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OptionId(pub u8);

impl OptionId {
    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn from_letter(c: char) -> Option<Self> {
        let u = c.to_ascii_uppercase();
        if u.is_ascii_uppercase() && u <= 'F' {
            Some(OptionId(u as u8 - b'A'))
        } else {
            None
        }
    }
}

impl fmt::Display for OptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A textual scenario, a multiple-choice question, and the gold option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskInstance {
    pub id: String,
    pub situation: String,
    pub question: String,
    pub options: Vec<(OptionId, String)>,
    pub gold: OptionId,
}

impl TaskInstance {
    pub fn new(
        id: impl Into<String>,
        situation: impl Into<String>,
        question: impl Into<String>,
        option_texts: Vec<String>,
        gold_index: usize,
    ) -> Result<Self> {
        let options = option_texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| (OptionId(i as u8), t))
            .collect();
        let task = Self {
            id: id.into(),
            situation: situation.into(),
            question: question.into(),
            options,
            gold: OptionId(gold_index as u8),
        };
        task.validate()?;
        Ok(task)
    }

    /// Checks the structural invariants: 2–6 options, ids consecutive from
    /// A, gold among them.
    pub fn validate(&self) -> Result<()> {
        if self.options.len() < 2 || self.options.len() > 6 {
            return Err(Error::Data(format!(
                "task {}: {} options outside 2..=6",
                self.id,
                self.options.len()
            )));
        }
        for (i, (id, _)) in self.options.iter().enumerate() {
            if id.0 as usize != i {
                return Err(Error::Data(format!(
                    "task {}: option ids not consecutive from A",
                    self.id
                )));
            }
        }
        if self.gold.0 as usize >= self.options.len() {
            return Err(Error::Data(format!(
                "task {}: gold {} outside options",
                self.id, self.gold
            )));
        }
        Ok(())
    }

    pub fn gold_text(&self) -> &str {
        &self.options[self.gold.0 as usize].1
    }

    /// Canonical prompt text: question, options, situation — in that order.
    pub fn prompt_text(&self) -> String {
        let mut parts: Vec<String> = vec![self.question.clone()];
        for (id, text) in &self.options {
            parts.push(id.letter().to_string());
            parts.push(text.clone());
        }
        if !self.situation.is_empty() {
            parts.push(self.situation.clone());
        }
        normalize_whitespace(&parts.join(" "))
    }
}

/// One line of a scenario corpus. The rationale rides along for provenance
/// and supervised baselines; no reward ever reads it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub id: String,
    pub situation: String,
    pub question: String,
    pub options: Vec<OptionEntry>,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionEntry {
    pub id: String,
    pub text: String,
}

impl ScenarioRecord {
    pub fn from_task(task: &TaskInstance, rationale: Option<String>) -> Self {
        Self {
            id: task.id.clone(),
            situation: task.situation.clone(),
            question: task.question.clone(),
            options: task
                .options
                .iter()
                .map(|(id, text)| OptionEntry {
                    id: id.letter().to_string(),
                    text: text.clone(),
                })
                .collect(),
            answer: task.gold.letter().to_string(),
            rationale,
        }
    }

    pub fn to_task(&self) -> Result<TaskInstance> {
        let mut texts = Vec::with_capacity(self.options.len());
        for (i, opt) in self.options.iter().enumerate() {
            let expected = OptionId(i as u8).letter().to_string();
            if opt.id != expected {
                return Err(Error::Data(format!(
                    "record {}: option id {:?}, expected {:?}",
                    self.id, opt.id, expected
                )));
            }
            texts.push(opt.text.clone());
        }
        let gold = self
            .answer
            .chars()
            .next()
            .and_then(OptionId::from_letter)
            .filter(|g| self.answer.len() == 1 && (g.0 as usize) < self.options.len())
            .ok_or_else(|| {
                Error::Data(format!(
                    "record {}: answer {:?} is not one of the option ids",
                    self.id, self.answer
                ))
            })?;
        TaskInstance::new(
            self.id.clone(),
            self.situation.clone(),
            self.question.clone(),
            texts,
            gold.0 as usize,
        )
    }
}

/// Reads a JSON-lines scenario corpus, validating every record.
pub fn read_corpus(path: &Path) -> Result<Vec<ScenarioRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ScenarioRecord = serde_json::from_str(&line).map_err(|e| {
            Error::Data(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        record.to_task().map_err(|e| {
            Error::Data(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records as JSON-lines, one object per line.
pub fn write_corpus(path: &Path, records: &[ScenarioRecord]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for r in records {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// The seeded synthetic task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskFamily {
    MaxOfNumbers,
    Ordering,
    RuleLookup,
}

impl TaskFamily {
    pub fn name(self) -> &'static str {
        match self {
            TaskFamily::MaxOfNumbers => "max-of-numbers",
            TaskFamily::Ordering => "ordering",
            TaskFamily::RuleLookup => "rule-lookup",
        }
    }

    fn index(self) -> u64 {
        match self {
            TaskFamily::MaxOfNumbers => 0,
            TaskFamily::Ordering => 1,
            TaskFamily::RuleLookup => 2,
        }
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-of-numbers" => Ok(TaskFamily::MaxOfNumbers),
            "ordering" => Ok(TaskFamily::Ordering),
            "rule-lookup" => Ok(TaskFamily::RuleLookup),
            other => Err(Error::Config(format!("unknown task family {other:?}"))),
        }
    }
}

/// Digit palette per difficulty tier. Difficulty 1 keeps the space tiny so a
/// tabular policy sees every context often.
fn palette(difficulty: u32) -> Vec<u32> {
    match difficulty {
        1 => vec![3, 5, 9],
        2 => vec![1, 3, 5, 7, 9],
        _ => (1..=9).collect(),
    }
}

/// Fixed code→protocol table for `rule-lookup`: each palette digit maps to
/// the next one in palette order (a derangement, so the answer is never the
/// code itself).
pub fn rule_lookup_protocol(difficulty: u32, code: u32) -> Option<u32> {
    let pal = palette(difficulty);
    let pos = pal.iter().position(|&p| p == code)?;
    Some(pal[(pos + 1) % pal.len()])
}

const MAX_FILLERS: [&str; 4] = [
    "",
    "consider the list .",
    "you see the readings .",
    "the panel reports .",
];

const RULE_FILLERS: [&str; 4] = [
    "",
    "alarm sounded .",
    "the desk asks for guidance .",
    "review the board .",
];

const ORDER_FILLERS: [&str; 3] = ["", "the gauges drift .", "note the values ."];

/// Generates one task, deterministically in `(seed, family, difficulty)`.
pub fn generate_task(seed: u64, family: TaskFamily, difficulty: u32) -> Result<TaskInstance> {
    if difficulty < 1 {
        return Err(Error::Config("difficulty must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        "task",
        &[family.index(), u64::from(difficulty)],
    ));
    let id = format!("{}-d{}-{}", family.name(), difficulty, seed);
    match family {
        TaskFamily::MaxOfNumbers => max_of_numbers(&mut rng, id, difficulty),
        TaskFamily::Ordering => ordering(&mut rng, id, difficulty),
        TaskFamily::RuleLookup => rule_lookup(&mut rng, id, difficulty),
    }
}

fn sample_distinct(rng: &mut ChaCha8Rng, pool: &[u32], n: usize) -> Vec<u32> {
    let mut pool = pool.to_vec();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

fn with_filler(rng: &mut ChaCha8Rng, fillers: &[&str], tail: String) -> String {
    let filler = fillers[rng.gen_range(0..fillers.len())];
    normalize_whitespace(&format!("{filler} {tail}"))
}

fn max_of_numbers(rng: &mut ChaCha8Rng, id: String, difficulty: u32) -> Result<TaskInstance> {
    let pal = palette(difficulty);
    let n = (difficulty as usize + 2).min(5).min(pal.len());
    let nums = sample_distinct(rng, &pal, n);
    let digits: Vec<String> = nums.iter().map(|d| d.to_string()).collect();
    let situation = with_filler(rng, &MAX_FILLERS, format!("readings {}", digits.join(" ")));
    let gold = nums
        .iter()
        .enumerate()
        .max_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .expect("nonempty");
    TaskInstance::new(
        id,
        situation,
        "which reading is the largest ?",
        digits,
        gold,
    )
}

fn ordering(rng: &mut ChaCha8Rng, id: String, difficulty: u32) -> Result<TaskInstance> {
    let pal = palette(difficulty);
    let n = (difficulty as usize + 2).min(5).min(pal.len());
    let nums = sample_distinct(rng, &pal, n);
    let situation = with_filler(
        rng,
        &ORDER_FILLERS,
        format!(
            "values {}",
            nums.iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
    let mut ascending = nums.clone();
    ascending.sort_unstable();
    let render = |v: &[u32]| {
        v.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    // Two distinct non-sorted permutations as distractors.
    let mut option_vals: Vec<Vec<u32>> = vec![ascending.clone()];
    while option_vals.len() < 3 {
        let mut perm = nums.clone();
        perm.shuffle(rng);
        if !option_vals.contains(&perm) {
            option_vals.push(perm);
        }
    }
    option_vals.shuffle(rng);
    let gold = option_vals
        .iter()
        .position(|v| *v == ascending)
        .expect("ascending present");
    TaskInstance::new(
        id,
        situation,
        "which ordering lists the values from smallest to largest ?",
        option_vals.iter().map(|v| render(v)).collect(),
        gold,
    )
}

fn rule_lookup(rng: &mut ChaCha8Rng, id: String, difficulty: u32) -> Result<TaskInstance> {
    let pal = palette(difficulty);
    let code = pal[rng.gen_range(0..pal.len())];
    let protocol = rule_lookup_protocol(difficulty, code).expect("code from palette");
    let situation = with_filler(rng, &RULE_FILLERS, format!("code {code}"));
    // Options cover the protocol plus distractors from the palette, at most 5.
    let mut opts: Vec<u32> = vec![protocol];
    let mut distractors: Vec<u32> = pal.iter().copied().filter(|&p| p != protocol).collect();
    distractors.shuffle(rng);
    opts.extend(distractors.into_iter().take(4.min(pal.len() - 1)));
    opts.shuffle(rng);
    let gold = opts.iter().position(|&p| p == protocol).expect("present");
    TaskInstance::new(
        id,
        situation,
        "which protocol applies ?",
        opts.iter().map(|d| d.to_string()).collect(),
        gold,
    )
}

/// Tokenizes the canonical prompt text under the vocabulary.
pub fn render_prompt(task: &TaskInstance, vocab: &Vocabulary) -> TokenSeq {
    TokenSeq::new(vocab.tokenize(&task.prompt_text()))
}
