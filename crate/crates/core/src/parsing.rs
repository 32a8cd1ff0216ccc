//! Structured-output parsing and answer matching.
//!
//! `parse_output` accepts exactly one shape: optional whitespace, one
//! `<think>…</think>` block, optional whitespace, one `<answer>…</answer>`
//! block, optional trailing whitespace, with no stray tags inside either
//! block. Anything else is malformed — the strictest reading of "exact
//! nested format", which keeps the format reward a sharp signal.
//!
//! `match_choice` maps free-form answer text to an option id through a fixed
//! rule cascade; unmatched answers escalate to a pluggable
//! [`FallbackMatcher`] instead of guessing.

use std::collections::HashMap;

use crate::tasks::OptionId;
use crate::vocab::{TAG_ANSWER_CLOSE, TAG_ANSWER_OPEN, TAG_THINK_CLOSE, TAG_THINK_OPEN};

/// Exact substring-occurrence counts of the four structural tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagCounts {
    pub think_open: usize,
    pub think_close: usize,
    pub answer_open: usize,
    pub answer_close: usize,
}

impl TagCounts {
    pub fn all_exactly_one(&self) -> bool {
        self.think_open == 1
            && self.think_close == 1
            && self.answer_open == 1
            && self.answer_close == 1
    }
}

/// Counts each tag literal in the text. The literals cannot self-overlap, so
/// non-overlapping counting is exact.
pub fn count_tags(text: &str) -> TagCounts {
    TagCounts {
        think_open: text.matches(TAG_THINK_OPEN).count(),
        think_close: text.matches(TAG_THINK_CLOSE).count(),
        answer_open: text.matches(TAG_ANSWER_OPEN).count(),
        answer_close: text.matches(TAG_ANSWER_CLOSE).count(),
    }
}

/// Result of strict structural parsing. `well_formed` implies both spans are
/// present; spans hold the inner text only, tags excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedOutput {
    pub well_formed: bool,
    pub think_text: Option<String>,
    pub answer_text: Option<String>,
    pub raw: String,
}

impl ParsedOutput {
    fn malformed(raw: &str) -> Self {
        Self {
            well_formed: false,
            think_text: None,
            answer_text: None,
            raw: raw.to_string(),
        }
    }
}

const ALL_TAGS: [&str; 4] = [
    TAG_THINK_OPEN,
    TAG_THINK_CLOSE,
    TAG_ANSWER_OPEN,
    TAG_ANSWER_CLOSE,
];

/// Position and identity of the earliest tag occurrence in `s`.
fn first_tag(s: &str) -> Option<(usize, &'static str)> {
    ALL_TAGS
        .iter()
        .filter_map(|&tag| s.find(tag).map(|pos| (pos, tag)))
        .min_by_key(|&(pos, _)| pos)
}

/// Strict whole-string parse of the think/answer structure.
pub fn parse_output(text: &str) -> ParsedOutput {
    let mut rest = text.trim_start();
    rest = match rest.strip_prefix(TAG_THINK_OPEN) {
        Some(r) => r,
        None => return ParsedOutput::malformed(text),
    };
    let (think_text, after_think) = match first_tag(rest) {
        Some((pos, TAG_THINK_CLOSE)) => (&rest[..pos], &rest[pos + TAG_THINK_CLOSE.len()..]),
        _ => return ParsedOutput::malformed(text),
    };
    let mut rest = after_think.trim_start();
    rest = match rest.strip_prefix(TAG_ANSWER_OPEN) {
        Some(r) => r,
        None => return ParsedOutput::malformed(text),
    };
    let (answer_text, after_answer) = match first_tag(rest) {
        Some((pos, TAG_ANSWER_CLOSE)) => (&rest[..pos], &rest[pos + TAG_ANSWER_CLOSE.len()..]),
        _ => return ParsedOutput::malformed(text),
    };
    if !after_answer.trim().is_empty() {
        return ParsedOutput::malformed(text);
    }
    ParsedOutput {
        well_formed: true,
        think_text: Some(think_text.to_string()),
        answer_text: Some(answer_text.to_string()),
        raw: text.to_string(),
    }
}

fn valid_option(letter: char, options: &[(OptionId, String)]) -> Option<OptionId> {
    OptionId::from_letter(letter).filter(|id| (id.0 as usize) < options.len())
}

/// Distinct option letters that appear as standalone single-character tokens.
fn standalone_letters(text: &str, options: &[(OptionId, String)]) -> Vec<OptionId> {
    let mut found = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        let mut chars = word.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if let Some(id) = valid_option(c, options) {
                if !found.contains(&id) {
                    found.push(id);
                }
            }
        }
    }
    found
}

/// Option letters in decorated marker form: `X.`, `X)`, or `(X)`.
fn decorated_letters(text: &str, options: &[(OptionId, String)]) -> Vec<OptionId> {
    let chars: Vec<char> = text.chars().collect();
    let mut found = Vec::new();
    for i in 0..chars.len() {
        let c = chars[i];
        let Some(id) = valid_option(c, options) else {
            continue;
        };
        let prev_boundary = i == 0 || !chars[i - 1].is_alphanumeric();
        let next = chars.get(i + 1).copied();
        let marker = matches!(next, Some('.') | Some(')'));
        let parenthesized = i > 0 && chars[i - 1] == '(' && next == Some(')');
        if (prev_boundary && marker) || parenthesized {
            if !found.contains(&id) {
                found.push(id);
            }
        }
    }
    found
}

/// Maps answer text to an option id via the frozen rule cascade:
///
/// 1. the whole text, stripped of punctuation/parentheses/whitespace, is a
///    single option letter (case-insensitive);
/// 2. exactly one option letter appears in marker form `X.` / `(X)` / `X)`;
/// 3. the text equals one option's full text (case-insensitive);
/// 4. the text and exactly one option's text contain one another
///    (case-insensitive substring, either direction).
///
/// If two or more distinct option letters appear as standalone tokens the
/// answer is ambiguous and `None` is returned immediately after rule 1, so
/// the caller escalates to its fallback matcher rather than guessing.
pub fn match_choice(answer_text: &str, options: &[(OptionId, String)]) -> Option<OptionId> {
    assert!(!options.is_empty(), "options must be nonempty");
    let trimmed = answer_text.trim();

    // Rule 1: bare letter once decorations are stripped.
    let stripped: String = trimmed.chars().filter(|c| c.is_alphanumeric()).collect();
    let mut stripped_chars = stripped.chars();
    if let (Some(c), None) = (stripped_chars.next(), stripped_chars.next()) {
        if let Some(id) = valid_option(c, options) {
            return Some(id);
        }
    }

    // Ambiguity guard: two or more distinct standalone letters.
    if standalone_letters(trimmed, options).len() >= 2 {
        return None;
    }

    // Rule 2: single decorated letter.
    let decorated = decorated_letters(trimmed, options);
    if decorated.len() == 1 {
        return Some(decorated[0]);
    }

    // Rule 3: exact option text.
    for (id, text) in options {
        if trimmed.eq_ignore_ascii_case(text.trim()) {
            return Some(*id);
        }
    }

    // Rule 4: unique substring containment, either direction.
    if !trimmed.is_empty() {
        let lower = trimmed.to_lowercase();
        let mut hit = None;
        let mut hits = 0;
        for (id, text) in options {
            let opt = text.trim().to_lowercase();
            if !opt.is_empty() && (lower.contains(&opt) || opt.contains(&lower)) {
                hits += 1;
                hit = Some(*id);
            }
        }
        if hits == 1 {
            return hit;
        }
    }

    None
}

/// Escalation hook for answers the rule cascade cannot resolve. The shipped
/// default resolves nothing; an external matcher (e.g. LLM-backed) may be
/// plugged in. Implementations fold transport failures into `None`, which the
/// reward layer treats as incorrect.
pub trait FallbackMatcher {
    fn match_option(&self, answer_text: &str, options: &[(OptionId, String)]) -> Option<OptionId>;
}

/// Default fallback: never matches.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFallback;

impl FallbackMatcher for NoFallback {
    fn match_option(&self, _: &str, _: &[(OptionId, String)]) -> Option<OptionId> {
        None
    }
}

/// Table-driven fallback for tests and offline runs.
#[derive(Debug, Clone, Default)]
pub struct MapFallback {
    map: HashMap<String, OptionId>,
}

impl MapFallback {
    pub fn new(entries: impl IntoIterator<Item = (String, OptionId)>) -> Self {
        Self {
            map: entries.into_iter().collect(),
        }
    }
}

impl FallbackMatcher for MapFallback {
    fn match_option(&self, answer_text: &str, options: &[(OptionId, String)]) -> Option<OptionId> {
        self.map
            .get(answer_text.trim())
            .copied()
            .filter(|id| (id.0 as usize) < options.len())
    }
}
