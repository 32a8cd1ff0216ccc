//! Two-stage curriculum orchestration.
//!
//! Stage 1 cold-starts the output structure on numeric tasks with the dense
//! tag reward; once the trailing-window mean of the format reward clears the
//! configured threshold the stage ends (the adaptive switch: the tag reward
//! is absent from every stage-2 reward), and stage 2 trains decision
//! accuracy with the length reward. The reference policy for the KL anchor
//! is re-frozen at each stage entry; the behind policy refreshes every step.
//!
//! Runs are fully reproducible: every rollout, task draw, and held-out probe
//! derives its seed from (run seed, stage, step, index), never from wall
//! clock or prior stage length, so a run resumed from a stage-boundary
//! checkpoint replays exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::greedy_accuracy;
use crate::grpo::{collect_group, grpo_step, GrpoConfig, StepDiagnostics};
use crate::parsing::FallbackMatcher;
use crate::policy::{save_checkpoint, PolicyParams};
use crate::rewards::{Stage, TagRewardMode};
use crate::seeds::derive_seed;
use crate::tasks::{generate_task, TaskFamily, TaskInstance};
use crate::vocab::Vocabulary;

/// Where a stage draws its training queries from.
#[derive(Debug, Clone)]
pub enum TaskSource {
    /// Fresh seeded tasks from a synthetic family.
    Synthetic { family: TaskFamily, difficulty: u32 },
    /// A fixed corpus, cycled with a seeded reshuffle on exhaustion.
    Corpus(Vec<TaskInstance>),
}

/// Configuration of one curriculum stage.
#[derive(Debug, Clone)]
pub struct StageConfig {
    pub stage: Stage,
    pub source: TaskSource,
    pub max_steps: usize,
    /// Rollout groups collected per optimizer step.
    pub groups_per_step: usize,
    /// Trailing window length (in groups) for the stage switch.
    pub window: usize,
    /// Format threshold τ for the stage switch.
    pub format_threshold: f64,
    pub grpo: GrpoConfig,
    pub tag_mode: TagRewardMode,
    /// Held-out tasks probed with greedy decoding every `eval_every` steps
    /// (0 disables the probe).
    pub eval_tasks: Vec<TaskInstance>,
    pub eval_every: usize,
}

impl StageConfig {
    pub fn new(stage: Stage, source: TaskSource) -> Self {
        Self {
            stage,
            source,
            max_steps: 400,
            groups_per_step: 8,
            window: 50,
            format_threshold: 0.95,
            grpo: GrpoConfig::default(),
            tag_mode: TagRewardMode::Graded,
            eval_tasks: Vec::new(),
            eval_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        if !(self.format_threshold > 0.0 && self.format_threshold <= 1.0) {
            return Err(Error::Config("format_threshold must be in (0, 1]".into()));
        }
        if self.groups_per_step < 1 {
            return Err(Error::Config("groups_per_step must be >= 1".into()));
        }
        self.grpo.validate()
    }
}

/// One diagnostics row of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRow {
    pub step: usize,
    pub stage: Stage,
    pub diagnostics: StepDiagnostics,
}

/// A held-out greedy-accuracy probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: usize,
    pub accuracy: f64,
}

/// A stage boundary crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTransition {
    /// First global step index belonging to the new stage.
    pub step: usize,
    pub from: Stage,
    pub to: Stage,
}

/// Step rows, per-group format history, held-out probes, and stage
/// transitions of a run (or of a single stage when produced by `run_stage`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<StepRow>,
    /// Mean format reward of each collected group, in collection order;
    /// the stage switch reads its trailing window from here.
    pub group_format_history: Vec<f64>,
    pub eval_points: Vec<EvalPoint>,
    pub transitions: Vec<StageTransition>,
}

impl TrainingLog {
    fn append(&mut self, other: TrainingLog) {
        self.rows.extend(other.rows);
        self.group_format_history.extend(other.group_format_history);
        self.eval_points.extend(other.eval_points);
        self.transitions.extend(other.transitions);
    }

    /// Dynamics CSV rows (`step,stage,mean_reward,r_tag,r_format,
    /// r_accuracy,r_len,kl,clip_frac,mean_len`) for one stage.
    pub fn dynamics_csv(&self, stage: Stage) -> String {
        let mut out = String::from(
            "step,stage,mean_reward,r_tag,r_format,r_accuracy,r_len,kl,clip_frac,mean_len\n",
        );
        for row in self.rows.iter().filter(|r| r.stage == stage) {
            let d = &row.diagnostics;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                row.step,
                row.stage,
                d.mean_reward,
                d.mean_r_tag,
                d.mean_r_format,
                d.mean_r_accuracy,
                d.mean_r_len,
                d.kl,
                d.clip_fraction,
                d.mean_len
            ));
        }
        out
    }

    /// Held-out probe CSV (`step,accuracy`).
    pub fn eval_csv(&self) -> String {
        let mut out = String::from("step,accuracy\n");
        for p in &self.eval_points {
            out.push_str(&format!("{},{}\n", p.step, p.accuracy));
        }
        out
    }
}

/// Structural-prior primer.
///
/// The reference models this trainer stands in for arrive instruction-tuned:
/// prompted for `<think>…</think><answer>…</answer>` output they already
/// emit the tag syntax with non-trivial probability, and reinforcement
/// learning makes it consistent. A zero-initialized table has no such prior
/// — the count-based tag reward then has order-free optima that trap it —
/// so the primer plays the instruction-tuning role: a few thousand
/// likelihood-ascent steps on synthetic skeletons
/// `<think> w </think><answer> x </answer><eos>` with random filler `w` and
/// random answer token `x`. Answers stay uniform, so decision accuracy is
/// untouched and must still be earned during training.
#[derive(Debug, Clone)]
pub struct PrimerConfig {
    pub demos: usize,
    pub learning_rate: f64,
    /// Families (and difficulties) whose prompt shapes the primer covers.
    pub families: Vec<(TaskFamily, u32)>,
}

impl Default for PrimerConfig {
    fn default() -> Self {
        Self {
            demos: 3000,
            learning_rate: 0.3,
            families: vec![
                (TaskFamily::MaxOfNumbers, 1),
                (TaskFamily::Ordering, 1),
                (TaskFamily::RuleLookup, 1),
            ],
        }
    }
}

/// Applies the structural prior to a policy in place.
pub fn prime_format(
    policy: &mut PolicyParams,
    vocab: &Vocabulary,
    cfg: &PrimerConfig,
    seed: u64,
) -> Result<()> {
    if cfg.families.is_empty() {
        return Err(Error::Config("primer needs at least one family".into()));
    }
    // Small filler lexicon: keeps the primed think-span rows dense enough to
    // matter while leaving room for the policy to specialize them later.
    let mut lexicon: Vec<u32> = ('0'..='9')
        .chain('A'..='E')
        .map(|c| vocab.id_of(&c.to_string()))
        .collect();
    for w in ["the", "list", "largest", "code", "protocol", "values", "readings", "which"] {
        lexicon.push(vocab.id_of(w));
    }
    let answers: Vec<u32> = ('0'..='9')
        .chain('A'..='E')
        .map(|c| vocab.id_of(&c.to_string()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "primer", &[]));
    for i in 0..cfg.demos {
        let (family, difficulty) = cfg.families[i % cfg.families.len()];
        let task = generate_task(
            derive_seed(seed, "primer-task", &[i as u64]),
            family,
            difficulty,
        )?;
        let prompt = crate::tasks::render_prompt(&task, vocab);
        let w = lexicon[rng.gen_range(0..lexicon.len())];
        let x = answers[rng.gen_range(0..answers.len())];
        let demo = [
            vocab.think_open(),
            w,
            vocab.think_close(),
            vocab.answer_open(),
            x,
            vocab.answer_close(),
            vocab.eos(),
        ];
        let grad = policy.logprob_gradient(&prompt.tokens, &demo);
        policy.apply_gradient(&grad, cfg.learning_rate)?;
    }
    Ok(())
}

/// True iff the trailing `window` groups' mean format reward reaches the
/// threshold; false while fewer than `window` groups are logged.
pub fn should_advance(log: &TrainingLog, cfg: &StageConfig) -> bool {
    let hist = &log.group_format_history;
    if hist.len() < cfg.window {
        return false;
    }
    let tail = &hist[hist.len() - cfg.window..];
    let mean = tail.iter().sum::<f64>() / cfg.window as f64;
    mean >= cfg.format_threshold
}

/// Deterministic task stream over a stage's source.
struct TaskStream<'a> {
    source: &'a TaskSource,
    stage_tag: u64,
    run_seed: u64,
    /// Corpus cycling state.
    order: Vec<usize>,
    cursor: usize,
    cycle: u64,
}

impl<'a> TaskStream<'a> {
    fn new(source: &'a TaskSource, run_seed: u64, stage: Stage) -> Self {
        Self {
            source,
            stage_tag: u64::from(stage.as_u8()),
            run_seed,
            order: Vec::new(),
            cursor: 0,
            cycle: 0,
        }
    }

    fn next(&mut self, step: u64, slot: u64) -> Result<TaskInstance> {
        match self.source {
            TaskSource::Synthetic { family, difficulty } => {
                let seed = derive_seed(self.run_seed, "task", &[self.stage_tag, step, slot]);
                generate_task(seed, *family, *difficulty)
            }
            TaskSource::Corpus(tasks) => {
                if tasks.is_empty() {
                    return Err(Error::Config("task corpus is empty".into()));
                }
                if self.cursor >= self.order.len() {
                    let mut order: Vec<usize> = (0..tasks.len()).collect();
                    let shuffle_seed =
                        derive_seed(self.run_seed, "corpus-order", &[self.stage_tag, self.cycle]);
                    order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
                    self.order = order;
                    self.cursor = 0;
                    self.cycle += 1;
                }
                let task = tasks[self.order[self.cursor]].clone();
                self.cursor += 1;
                Ok(task)
            }
        }
    }
}

/// Runs one stage starting at global step `start_step`.
///
/// The reference policy freezes at entry; the behind policy refreshes every
/// step. Stage 1 additionally stops at the first step whose trailing window
/// satisfies the format switch.
pub fn run_stage(
    policy: &mut PolicyParams,
    vocab: &Vocabulary,
    cfg: &StageConfig,
    fallback: &dyn FallbackMatcher,
    run_seed: u64,
    start_step: usize,
) -> Result<TrainingLog> {
    cfg.validate()?;
    let ref_params = policy.clone();
    let mut log = TrainingLog::default();
    let mut stream = TaskStream::new(&cfg.source, run_seed, cfg.stage);
    let stage_tag = u64::from(cfg.stage.as_u8());

    for local_step in 0..cfg.max_steps {
        let step = start_step + local_step;
        let old = policy.clone();
        let mut groups = Vec::with_capacity(cfg.groups_per_step);
        for slot in 0..cfg.groups_per_step {
            let task = stream.next(local_step as u64, slot as u64)?;
            let group_seed = derive_seed(
                run_seed,
                "group",
                &[stage_tag, local_step as u64, slot as u64],
            );
            groups.push(collect_group(
                &old,
                vocab,
                &task,
                cfg.stage,
                cfg.tag_mode,
                fallback,
                &cfg.grpo,
                group_seed,
            ));
        }
        let diagnostics = grpo_step(policy, &groups, &ref_params, &cfg.grpo)?;
        for g in &groups {
            let mean_fmt = g
                .trajectories
                .iter()
                .map(|t| t.reward.r_format)
                .sum::<f64>()
                / g.trajectories.len() as f64;
            log.group_format_history.push(mean_fmt);
        }
        log.rows.push(StepRow {
            step,
            stage: cfg.stage,
            diagnostics,
        });
        if cfg.eval_every > 0 && !cfg.eval_tasks.is_empty() && (local_step + 1) % cfg.eval_every == 0
        {
            let accuracy =
                greedy_accuracy(policy, vocab, &cfg.eval_tasks, fallback, cfg.grpo.max_len);
            log.eval_points.push(EvalPoint { step, accuracy });
        }
        if cfg.stage == Stage::One && should_advance(&log, cfg) {
            break;
        }
    }
    Ok(log)
}

/// Artifacts of a completed curriculum run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub policy: PolicyParams,
    pub log: TrainingLog,
    pub checkpoint_stage1: PathBuf,
    pub checkpoint_final: PathBuf,
}

/// Runs the `[stage1, stage2]` curriculum, writing a checkpoint at the stage
/// boundary and at the end plus per-stage dynamics and probe CSVs.
pub fn train(
    mut policy: PolicyParams,
    vocab: &Vocabulary,
    curriculum: &[StageConfig],
    fallback: &dyn FallbackMatcher,
    run_seed: u64,
    out_dir: &Path,
) -> Result<TrainOutcome> {
    if curriculum.len() != 2
        || curriculum[0].stage != Stage::One
        || curriculum[1].stage != Stage::Two
    {
        return Err(Error::Config(
            "curriculum must be [stage 1, stage 2]".into(),
        ));
    }
    for cfg in curriculum {
        cfg.validate()?;
    }
    std::fs::create_dir_all(out_dir)?;
    // Fail before any compute if the directory is not writable.
    probe_writable(out_dir)?;

    let mut log = TrainingLog::default();
    let stage1_log = run_stage(
        &mut policy,
        vocab,
        &curriculum[0],
        fallback,
        run_seed,
        0,
    )?;
    let stage1_steps = stage1_log.rows.len();
    write_file(
        &out_dir.join("dynamics-stage1.csv"),
        &stage1_log.dynamics_csv(Stage::One),
    )?;
    if !stage1_log.eval_points.is_empty() {
        write_file(&out_dir.join("eval-stage1.csv"), &stage1_log.eval_csv())?;
    }
    log.append(stage1_log);
    log.transitions.push(StageTransition {
        step: stage1_steps,
        from: Stage::One,
        to: Stage::Two,
    });
    let checkpoint_stage1 = out_dir.join("checkpoint-stage1.json");
    save_checkpoint(&policy, &checkpoint_stage1)?;

    let stage2_log = run_stage(
        &mut policy,
        vocab,
        &curriculum[1],
        fallback,
        run_seed,
        stage1_steps,
    )?;
    write_file(
        &out_dir.join("dynamics-stage2.csv"),
        &stage2_log.dynamics_csv(Stage::Two),
    )?;
    if !stage2_log.eval_points.is_empty() {
        write_file(&out_dir.join("eval-stage2.csv"), &stage2_log.eval_csv())?;
    }
    log.append(stage2_log);
    let checkpoint_final = out_dir.join("checkpoint-final.json");
    save_checkpoint(&policy, &checkpoint_final)?;

    debug_assert!(log
        .rows
        .windows(2)
        .all(|w| w[0].stage.as_u8() <= w[1].stage.as_u8()));
    Ok(TrainOutcome {
        policy,
        log,
        checkpoint_stage1,
        checkpoint_final,
    })
}

fn probe_writable(dir: &Path) -> Result<()> {
    let probe = dir.join(".write-probe");
    let mut f = std::fs::File::create(&probe)
        .map_err(|e| Error::Config(format!("output dir {} not writable: {e}", dir.display())))?;
    f.write_all(b"ok")?;
    drop(f);
    std::fs::remove_file(&probe)?;
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsing::NoFallback;

    fn base_stage(stage: Stage, family: TaskFamily, difficulty: u32) -> StageConfig {
        let mut cfg = StageConfig::new(stage, TaskSource::Synthetic { family, difficulty });
        cfg.grpo.max_len = 10;
        cfg.max_steps = 3;
        cfg.groups_per_step = 2;
        cfg
    }

    #[test]
    fn should_advance_needs_full_window() {
        let cfg = StageConfig::new(
            Stage::One,
            TaskSource::Synthetic {
                family: TaskFamily::MaxOfNumbers,
                difficulty: 1,
            },
        );
        let mut log = TrainingLog::default();
        log.group_format_history = vec![1.0; 49];
        assert!(!should_advance(&log, &cfg));
        log.group_format_history.push(1.0);
        assert!(should_advance(&log, &cfg));
    }

    #[test]
    fn should_advance_thresholds_trailing_mean() {
        let cfg = StageConfig::new(
            Stage::One,
            TaskSource::Synthetic {
                family: TaskFamily::MaxOfNumbers,
                difficulty: 1,
            },
        );
        let mut log = TrainingLog::default();
        // 50 groups at 0.90 mean: below τ=0.95.
        log.group_format_history = vec![0.90; 50];
        assert!(!should_advance(&log, &cfg));
        // Early zeros outside the trailing window do not matter.
        log.group_format_history = vec![0.0; 30];
        log.group_format_history.extend(vec![1.0; 50]);
        assert!(should_advance(&log, &cfg));
    }

    #[test]
    fn zero_steps_changes_nothing_and_logs_nothing() {
        let vocab = Vocabulary::standard();
        let mut policy = PolicyParams::for_vocab(3, 256, &vocab);
        let before = policy.clone();
        let mut cfg = base_stage(Stage::One, TaskFamily::MaxOfNumbers, 1);
        cfg.max_steps = 0;
        let log = run_stage(&mut policy, &vocab, &cfg, &NoFallback, 7, 0).unwrap();
        assert!(log.rows.is_empty());
        assert_eq!(policy, before);
    }

    #[test]
    fn identical_seeds_give_identical_logs_and_params() {
        let vocab = Vocabulary::standard();
        let cfg = base_stage(Stage::Two, TaskFamily::RuleLookup, 1);
        let mut p1 = PolicyParams::for_vocab(3, 256, &vocab);
        let mut p2 = p1.clone();
        let l1 = run_stage(&mut p1, &vocab, &cfg, &NoFallback, 99, 0).unwrap();
        let l2 = run_stage(&mut p2, &vocab, &cfg, &NoFallback, 99, 0).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(
            serde_json::to_string(&l1).unwrap(),
            serde_json::to_string(&l2).unwrap()
        );
        let mut p3 = PolicyParams::for_vocab(3, 256, &vocab);
        let l3 = run_stage(&mut p3, &vocab, &cfg, &NoFallback, 100, 0).unwrap();
        assert_ne!(
            serde_json::to_string(&l1).unwrap(),
            serde_json::to_string(&l3).unwrap()
        );
    }

    #[test]
    fn corpus_source_cycles_with_reshuffle() {
        let tasks: Vec<TaskInstance> = (0..3)
            .map(|s| generate_task(s, TaskFamily::RuleLookup, 1).unwrap())
            .collect();
        let source = TaskSource::Corpus(tasks.clone());
        let mut stream = TaskStream::new(&source, 5, Stage::Two);
        let mut drawn = Vec::new();
        for i in 0..9 {
            drawn.push(stream.next(i, 0).unwrap().id);
        }
        // Every cycle of three contains each task exactly once.
        for cycle in drawn.chunks(3) {
            let mut c = cycle.to_vec();
            c.sort();
            let mut want: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
            want.sort();
            assert_eq!(c, want);
        }
    }

    #[test]
    fn empty_corpus_errors() {
        let source = TaskSource::Corpus(Vec::new());
        let mut stream = TaskStream::new(&source, 5, Stage::Two);
        assert!(stream.next(0, 0).is_err());
    }

    #[test]
    fn train_writes_checkpoints_and_csvs() {
        let vocab = Vocabulary::standard();
        let policy = PolicyParams::for_vocab(3, 256, &vocab);
        let dir = tempfile::tempdir().unwrap();
        let mut s1 = base_stage(Stage::One, TaskFamily::MaxOfNumbers, 1);
        s1.max_steps = 2;
        let mut s2 = base_stage(Stage::Two, TaskFamily::RuleLookup, 1);
        s2.max_steps = 2;
        let outcome = train(
            policy,
            &vocab,
            &[s1, s2],
            &NoFallback,
            3,
            dir.path(),
        )
        .unwrap();
        assert!(outcome.checkpoint_stage1.exists());
        assert!(outcome.checkpoint_final.exists());
        let csv1 = std::fs::read_to_string(dir.path().join("dynamics-stage1.csv")).unwrap();
        assert!(csv1.starts_with(
            "step,stage,mean_reward,r_tag,r_format,r_accuracy,r_len,kl,clip_frac,mean_len"
        ));
        assert_eq!(csv1.lines().count(), 3);
        assert_eq!(outcome.log.transitions.len(), 1);
        assert_eq!(outcome.log.transitions[0].step, 2);
        // Stage ids nondecreasing over rows.
        assert!(outcome
            .log
            .rows
            .windows(2)
            .all(|w| w[0].stage.as_u8() <= w[1].stage.as_u8()));
    }

    #[test]
    fn zero_step_curriculum_checkpoints_equal_init() {
        let vocab = Vocabulary::standard();
        let policy = PolicyParams::for_vocab(3, 128, &vocab);
        let init = policy.clone();
        let dir = tempfile::tempdir().unwrap();
        let mut s1 = base_stage(Stage::One, TaskFamily::MaxOfNumbers, 1);
        s1.max_steps = 0;
        let mut s2 = base_stage(Stage::Two, TaskFamily::RuleLookup, 1);
        s2.max_steps = 0;
        let outcome = train(policy, &vocab, &[s1, s2], &NoFallback, 3, dir.path()).unwrap();
        assert!(outcome.log.rows.is_empty());
        let cp1 = crate::policy::load_checkpoint(&outcome.checkpoint_stage1, None).unwrap();
        let cp2 = crate::policy::load_checkpoint(&outcome.checkpoint_final, None).unwrap();
        assert_eq!(cp1, init);
        assert_eq!(cp2, init);
    }

    #[test]
    fn resumed_stage2_matches_straight_through_run() {
        let vocab = Vocabulary::standard();
        let policy = PolicyParams::for_vocab(3, 256, &vocab);
        let dir = tempfile::tempdir().unwrap();
        let mut s1 = base_stage(Stage::One, TaskFamily::MaxOfNumbers, 1);
        s1.max_steps = 3;
        let mut s2 = base_stage(Stage::Two, TaskFamily::RuleLookup, 1);
        s2.max_steps = 4;
        let seed = 2024;
        let outcome = train(
            policy,
            &vocab,
            &[s1, s2.clone()],
            &NoFallback,
            seed,
            dir.path(),
        )
        .unwrap();

        // Resume: load the stage-1 boundary checkpoint and replay stage 2.
        let mut resumed =
            crate::policy::load_checkpoint(&outcome.checkpoint_stage1, Some(vocab.content_hash()))
                .unwrap();
        let stage1_steps = outcome.log.transitions[0].step;
        let resumed_log =
            run_stage(&mut resumed, &vocab, &s2, &NoFallback, seed, stage1_steps).unwrap();
        assert_eq!(resumed, outcome.policy);
        let straight_rows: Vec<&StepRow> = outcome
            .log
            .rows
            .iter()
            .filter(|r| r.stage == Stage::Two)
            .collect();
        assert_eq!(straight_rows.len(), resumed_log.rows.len());
        for (a, b) in straight_rows.iter().zip(&resumed_log.rows) {
            assert_eq!(
                serde_json::to_string(a).unwrap(),
                serde_json::to_string(b).unwrap()
            );
        }
    }

    #[test]
    fn curriculum_shape_is_validated() {
        let vocab = Vocabulary::standard();
        let policy = PolicyParams::for_vocab(3, 128, &vocab);
        let dir = tempfile::tempdir().unwrap();
        let s2 = base_stage(Stage::Two, TaskFamily::RuleLookup, 1);
        let err = train(
            policy,
            &vocab,
            &[s2.clone(), s2],
            &NoFallback,
            1,
            dir.path(),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
