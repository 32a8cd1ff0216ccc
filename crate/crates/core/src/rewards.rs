//! Rule-based rewards and the stage-dependent composite.
//!
//! Stage 1 (cold start): `total = r_accuracy + r_format + 0.5 * r_tag`, with
//! accuracy checked as exact canonical-number equality.
//! Stage 2 (decision training): `total = r_accuracy + 0.8 * r_format +
//! 0.5 * r_len`, with accuracy checked through the answer-matching cascade
//! and the length reward `min(word_count / 250, 1.0)` over the think span.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::parsing::{count_tags, match_choice, parse_output, FallbackMatcher, ParsedOutput, TagCounts};
use crate::tasks::TaskInstance;

/// Words per full length-reward credit.
pub const LEN_SCALE_WORDS: f64 = 250.0;
/// Stage-1 tag-reward weight.
pub const TAG_WEIGHT: f64 = 0.5;
/// Stage-2 format-reward weight.
pub const FORMAT_WEIGHT_STAGE2: f64 = 0.8;
/// Stage-2 length-reward weight.
pub const LEN_WEIGHT: f64 = 0.5;

/// Curriculum stage identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn as_u8(self) -> u8 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl TryFrom<u8> for Stage {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self, Error> {
        match v {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            other => Err(Error::Config(format!("invalid stage {other}, expected 1 or 2"))),
        }
    }
}

/// How the tag reward grades the four counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagRewardMode {
    /// 0.25 credit per tag whose count is exactly one (dense default).
    #[default]
    Graded,
    /// 1.0 only when all four counts are exactly one.
    AllOrNothing,
}

/// Per-component scores and the stage-weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_tag: f64,
    pub r_format: f64,
    pub r_accuracy: f64,
    pub r_len: f64,
    pub total: f64,
    pub stage: Stage,
}

/// Mean over the four tags of `count == 1`, in steps of 0.25.
pub fn reward_tag(counts: &TagCounts) -> f64 {
    reward_tag_mode(counts, TagRewardMode::Graded)
}

pub fn reward_tag_mode(counts: &TagCounts, mode: TagRewardMode) -> f64 {
    let hits = [
        counts.think_open,
        counts.think_close,
        counts.answer_open,
        counts.answer_close,
    ]
    .iter()
    .filter(|&&c| c == 1)
    .count();
    match mode {
        TagRewardMode::Graded => hits as f64 / 4.0,
        TagRewardMode::AllOrNothing => {
            if hits == 4 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// 1.0 iff the text parses as the exact nested structure.
pub fn reward_format(text: &str) -> f64 {
    if parse_output(text).well_formed {
        1.0
    } else {
        0.0
    }
}

/// Which correctness check the stage applies to the answer span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerCheck {
    /// Exact canonical-number equality against the gold option's text.
    Numeric,
    /// Option matching via the rule cascade, then the fallback matcher.
    Choice,
}

/// Canonicalizes a signed integer or decimal: trims, drops an explicit `+`,
/// strips leading integer zeros and trailing fraction zeros, and collapses
/// `-0` to `0`. Returns `None` when the text is not a plain number.
pub fn canonical_number(text: &str) -> Option<String> {
    let t = text.trim();
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    if digits.is_empty() {
        return None;
    }
    let mut parts = digits.splitn(2, '.');
    let int_part = parts.next().unwrap_or("");
    let frac_part = parts.next();
    if !int_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if let Some(f) = frac_part {
        if f.is_empty() || !f.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
    }
    if int_part.is_empty() && frac_part.is_none() {
        return None;
    }
    let int_norm = {
        let s = int_part.trim_start_matches('0');
        if s.is_empty() {
            "0"
        } else {
            s
        }
    };
    let frac_norm = frac_part.map(|f| f.trim_end_matches('0')).unwrap_or("");
    let mut out = String::new();
    let is_zero = int_norm == "0" && frac_norm.is_empty();
    if neg && !is_zero {
        out.push('-');
    }
    out.push_str(int_norm);
    if !frac_norm.is_empty() {
        out.push('.');
        out.push_str(frac_norm);
    }
    Some(out)
}

/// 1.0 iff the parsed answer resolves to the task's gold option.
pub fn reward_accuracy(
    parsed: &ParsedOutput,
    task: &TaskInstance,
    check: AnswerCheck,
    fallback: &dyn FallbackMatcher,
) -> f64 {
    let Some(answer) = parsed.answer_text.as_deref() else {
        return 0.0;
    };
    let correct = match check {
        AnswerCheck::Numeric => match (canonical_number(answer), canonical_number(task.gold_text()))
        {
            (Some(a), Some(g)) => a == g,
            _ => false,
        },
        AnswerCheck::Choice => {
            let matched = match_choice(answer, &task.options)
                .or_else(|| fallback.match_option(answer, &task.options));
            matched == Some(task.gold)
        }
    };
    if correct {
        1.0
    } else {
        0.0
    }
}

/// `min(word_count / 250, 1.0)` over whitespace-delimited runs; 0.0 when the
/// think span is absent.
pub fn reward_length(think_text: Option<&str>) -> f64 {
    match think_text {
        Some(t) => {
            let words = t.split_whitespace().count() as f64;
            (words / LEN_SCALE_WORDS).min(1.0)
        }
        None => 0.0,
    }
}

/// Computes all components and the stage-weighted total for one transcript.
pub fn composite_reward(
    stage: Stage,
    text: &str,
    task: &TaskInstance,
    fallback: &dyn FallbackMatcher,
) -> RewardBreakdown {
    composite_reward_with(stage, text, task, fallback, TagRewardMode::Graded)
}

pub fn composite_reward_with(
    stage: Stage,
    text: &str,
    task: &TaskInstance,
    fallback: &dyn FallbackMatcher,
    tag_mode: TagRewardMode,
) -> RewardBreakdown {
    let parsed = parse_output(text);
    let r_format = if parsed.well_formed { 1.0 } else { 0.0 };
    match stage {
        Stage::One => {
            let r_tag = reward_tag_mode(&count_tags(text), tag_mode);
            let r_accuracy = reward_accuracy(&parsed, task, AnswerCheck::Numeric, fallback);
            RewardBreakdown {
                r_tag,
                r_format,
                r_accuracy,
                r_len: 0.0,
                total: r_accuracy + r_format + TAG_WEIGHT * r_tag,
                stage,
            }
        }
        Stage::Two => {
            let r_accuracy = reward_accuracy(&parsed, task, AnswerCheck::Choice, fallback);
            let r_len = reward_length(parsed.think_text.as_deref());
            RewardBreakdown {
                r_tag: 0.0,
                r_format,
                r_accuracy,
                r_len,
                total: r_accuracy + FORMAT_WEIGHT_STAGE2 * r_format + LEN_WEIGHT * r_len,
                stage,
            }
        }
    }
}
