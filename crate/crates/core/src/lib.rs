//! Desk-scale reinforcement learning for think-then-answer decision tasks.
//!
//! The crate trains a small autoregressive categorical policy with a
//! group-relative clipped-surrogate objective and staged rule-based rewards,
//! and ships the surrounding machinery: synthetic verifiable task families,
//! strict output-format parsing, answer matching, a two-stage trainer with an
//! adaptive reward switch, an evaluation harness (majority vote, pass@1,
//! reasoning-length quintiles), and a scenario-corpus construction pipeline.
//!
//! Everything is deterministic given explicit seeds: rollouts, task
//! generation, corpus building, and evaluation all thread
//! [`rand_chacha::ChaCha8Rng`] seeded through [`seeds::derive_seed`].

pub mod datagen;
pub mod error;
pub mod eval;
pub mod grpo;
pub mod parsing;
pub mod policy;
pub mod rewards;
pub mod seeds;
pub mod svg;
pub mod tasks;
pub mod trainer;
pub mod vocab;

pub use error::{Error, Result};
pub use eval::{EvalRecord, EvalReport};
pub use grpo::{GroupSample, GrpoConfig, StepDiagnostics};
pub use parsing::{FallbackMatcher, ParsedOutput, TagCounts};
pub use policy::PolicyParams;
pub use rewards::{RewardBreakdown, Stage};
pub use tasks::{OptionId, ScenarioRecord, TaskFamily, TaskInstance};
pub use trainer::{StageConfig, TaskSource, TrainingLog};
pub use vocab::{TokenId, TokenSeq, Vocabulary};
