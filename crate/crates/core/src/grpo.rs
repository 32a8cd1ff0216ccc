//! Group-relative policy optimization.
//!
//! For each query the old policy draws a group of G trajectories; rewards
//! are standardized within the group (mean 0, population std 1) to form
//! advantages, and the update ascends the clipped importance-ratio
//! surrogate
//!
//! ```text
//! (1/G) Σ_i min( ρ_i Â_i, clip(ρ_i, 1-ε, 1+ε) Â_i )  -  β KL[π_θ ‖ π_ref]
//! ```
//!
//! with ρ_i the sequence-level ratio π_θ(o_i|x) / π_old(o_i|x) computed in
//! log space. The KL penalty uses the per-token k3 estimator
//! `ρ - log ρ - 1` with `ρ = π_ref(t)/π_θ(t)` on the sampled trajectory,
//! which is pointwise nonnegative. A per-token ratio mode is available as a
//! configuration option; the sequence-level form is the default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parsing::FallbackMatcher;
use crate::policy::{PolicyParams, SparseGrad};
use crate::rewards::{composite_reward_with, RewardBreakdown, Stage, TagRewardMode};
use crate::seeds::derive_seed;
use crate::tasks::{render_prompt, TaskInstance};
use crate::vocab::{TokenSeq, Vocabulary};

/// How importance ratios enter the surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioMode {
    /// One ratio per trajectory (the objective as displayed).
    #[default]
    Sequence,
    /// Mean over per-token clipped terms (common implementation variant;
    /// documented deviation from the displayed objective).
    PerToken,
}

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrpoConfig {
    /// Rollouts per query (G).
    pub group_size: usize,
    /// Clip width ε.
    pub clip_eps: f64,
    /// KL penalty coefficient β.
    pub kl_coeff: f64,
    /// Ascent step size.
    pub learning_rate: f64,
    /// Below this reward std a group is degenerate and gets zero advantages.
    pub std_floor: f64,
    /// Rollout length cap.
    pub max_len: usize,
    /// Rollout sampling temperature.
    pub temperature: f64,
    #[serde(default)]
    pub ratio_mode: RatioMode,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            group_size: 5,
            clip_eps: 0.2,
            kl_coeff: 0.01,
            learning_rate: 0.1,
            std_floor: 1e-6,
            max_len: 16,
            temperature: 1.0,
            ratio_mode: RatioMode::Sequence,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::Config("group_size must be >= 2".into()));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::Config("clip_eps must be in (0, 1)".into()));
        }
        if self.kl_coeff < 0.0 {
            return Err(Error::Config("kl_coeff must be >= 0".into()));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::Config("learning_rate must be >= 0".into()));
        }
        if self.std_floor <= 0.0 {
            return Err(Error::Config("std_floor must be > 0".into()));
        }
        if self.max_len < 1 {
            return Err(Error::Config("max_len must be >= 1".into()));
        }
        if self.temperature < 0.0 {
            return Err(Error::Config("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

/// One sampled trajectory with its frozen behind-policy log-probabilities,
/// reward breakdown, and group-normalized advantage.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seq: TokenSeq,
    pub text: String,
    pub old_logprob: f64,
    pub old_token_logprobs: Vec<f64>,
    pub reward: RewardBreakdown,
    pub advantage: f64,
}

/// One query's rollout group.
#[derive(Debug, Clone)]
pub struct GroupSample {
    pub task: TaskInstance,
    pub prompt: TokenSeq,
    pub trajectories: Vec<Trajectory>,
}

/// Standardizes rewards within a group: `(r - mean) / population_std`, or
/// all zeros when the std is at or below the floor (degenerate group).
pub fn normalize_advantages(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    let n = rewards.len() as f64;
    if rewards.is_empty() {
        return Vec::new();
    }
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= std_floor {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|r| (r - mean) / std).collect()
}

/// Samples G trajectories from the frozen old policy and scores them at the
/// given stage. Rollout i uses the child seed `derive_seed(rng_seed,
/// "rollout", [i])`, so groups are reproducible and order-stable.
#[allow(clippy::too_many_arguments)]
pub fn collect_group(
    policy_old: &PolicyParams,
    vocab: &Vocabulary,
    task: &TaskInstance,
    stage: Stage,
    tag_mode: TagRewardMode,
    fallback: &dyn FallbackMatcher,
    cfg: &GrpoConfig,
    rng_seed: u64,
) -> GroupSample {
    let prompt = render_prompt(task, vocab);
    let eos = vocab.eos();
    let mut trajectories = Vec::with_capacity(cfg.group_size);
    for i in 0..cfg.group_size {
        let seed = derive_seed(rng_seed, "rollout", &[i as u64]);
        let (seq, old_logprob) =
            policy_old.sample_sequence(&prompt.tokens, cfg.temperature, cfg.max_len, eos, seed);
        let old_token_logprobs = policy_old.token_logprobs(&prompt.tokens, &seq.tokens);
        let text = vocab.detokenize(&seq.tokens);
        let reward = composite_reward_with(stage, &text, task, fallback, tag_mode);
        trajectories.push(Trajectory {
            seq,
            text,
            old_logprob,
            old_token_logprobs,
            reward,
            advantage: 0.0,
        });
    }
    let totals: Vec<f64> = trajectories.iter().map(|t| t.reward.total).collect();
    let advantages = normalize_advantages(&totals, cfg.std_floor);
    for (t, a) in trajectories.iter_mut().zip(advantages) {
        t.advantage = a;
    }
    GroupSample {
        task: task.clone(),
        prompt,
        trajectories,
    }
}

/// Per-token k3 estimate of `KL[π_θ ‖ π_ref]` along a sampled trajectory,
/// with its analytic gradient through π_θ.
///
/// For each step, `k3 = ρ - log ρ - 1` with `ρ = π_ref(t|ctx)/π_θ(t|ctx)`;
/// the estimate is the mean over steps (0 for an empty trajectory) and its
/// θ-gradient per step is `(1 - ρ) · ∇ log π_θ(t|ctx)`.
pub fn kl_penalty_gradient(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    prompt: &[u32],
    seq: &[u32],
) -> (f64, SparseGrad) {
    assert_eq!(params.context_order(), ref_params.context_order());
    assert_eq!(params.num_contexts(), ref_params.num_contexts());
    assert_eq!(params.vocab_size(), ref_params.vocab_size());
    let mut grad = SparseGrad::new(params.vocab_size());
    if seq.is_empty() {
        return (0.0, grad);
    }
    let mut history = prompt.to_vec();
    let mut estimate = 0.0;
    for &tok in seq {
        let ctx = params.context_id(&history);
        let probs = params.next_token_distribution(&history);
        let ref_probs = ref_params.next_token_distribution(&history);
        let rho = ref_probs[tok as usize] / probs[tok as usize];
        estimate += rho - rho.ln() - 1.0;
        let coeff = 1.0 - rho;
        let row = grad.row_mut(ctx);
        for (r, p) in row.iter_mut().zip(&probs) {
            *r -= coeff * p;
        }
        row[tok as usize] += coeff;
        history.push(tok);
    }
    let scale = 1.0 / seq.len() as f64;
    grad.scale(scale);
    (estimate * scale, grad)
}

/// Value, gradient, and bookkeeping of the group surrogate.
#[derive(Debug, Clone)]
pub struct SurrogateReport {
    /// Mean clipped term minus β·KL for this group.
    pub objective: f64,
    /// Ascent gradient of the objective.
    pub gradient: SparseGrad,
    /// Mean k3 estimate over the group's trajectories.
    pub kl_estimate: f64,
    /// Units whose clipped branch was strictly selected.
    pub clipped_units: usize,
    /// Total clip decision units (trajectories or tokens by mode).
    pub total_units: usize,
    /// Trajectories dropped for non-finite ratios.
    pub skipped: usize,
}

/// Evaluates the clipped surrogate objective and its ascent gradient for one
/// group. Advantages must already be normalized.
pub fn surrogate_gradient(
    group: &GroupSample,
    params: &PolicyParams,
    ref_params: &PolicyParams,
    cfg: &GrpoConfig,
) -> SurrogateReport {
    let g = group.trajectories.len() as f64;
    let mut gradient = SparseGrad::new(params.vocab_size());
    let mut objective = 0.0;
    let mut kl_sum = 0.0;
    let mut clipped_units = 0;
    let mut total_units = 0;
    let mut skipped = 0;
    let lo = 1.0 - cfg.clip_eps;
    let hi = 1.0 + cfg.clip_eps;

    for traj in &group.trajectories {
        let adv = traj.advantage;
        match cfg.ratio_mode {
            RatioMode::Sequence => {
                let logprob = params.sequence_logprob(&group.prompt.tokens, &traj.seq.tokens);
                let ratio = (logprob - traj.old_logprob).exp();
                if !ratio.is_finite() {
                    skipped += 1;
                    continue;
                }
                total_units += 1;
                let unclipped = ratio * adv;
                let clipped = ratio.clamp(lo, hi) * adv;
                if unclipped <= clipped {
                    objective += unclipped / g;
                    if adv != 0.0 {
                        let lp_grad = params.logprob_gradient(&group.prompt.tokens, &traj.seq.tokens);
                        gradient.add_scaled(&lp_grad, adv * ratio / g);
                    }
                } else {
                    // Clipped branch: constant in θ, zero gradient.
                    objective += clipped / g;
                    clipped_units += 1;
                }
            }
            RatioMode::PerToken => {
                let token_logprobs =
                    params.token_logprobs(&group.prompt.tokens, &traj.seq.tokens);
                let len = traj.seq.tokens.len();
                if len == 0 {
                    total_units += 1;
                    continue;
                }
                let inv_len = 1.0 / len as f64;
                let mut history = group.prompt.tokens.clone();
                let mut bad = false;
                let mut contribution = 0.0;
                let mut traj_grad = SparseGrad::new(params.vocab_size());
                for (step, &tok) in traj.seq.tokens.iter().enumerate() {
                    let ratio = (token_logprobs[step] - traj.old_token_logprobs[step]).exp();
                    if !ratio.is_finite() {
                        bad = true;
                        break;
                    }
                    total_units += 1;
                    let unclipped = ratio * adv;
                    let clipped = ratio.clamp(lo, hi) * adv;
                    if unclipped <= clipped {
                        contribution += unclipped * inv_len;
                        if adv != 0.0 {
                            let ctx = params.context_id(&history);
                            let probs = params.next_token_distribution(&history);
                            let coeff = adv * ratio * inv_len;
                            let row = traj_grad.row_mut(ctx);
                            for (r, p) in row.iter_mut().zip(&probs) {
                                *r -= coeff * p;
                            }
                            row[tok as usize] += coeff;
                        }
                    } else {
                        contribution += clipped * inv_len;
                        clipped_units += 1;
                    }
                    history.push(tok);
                }
                if bad {
                    skipped += 1;
                    continue;
                }
                objective += contribution / g;
                gradient.add_scaled(&traj_grad, 1.0 / g);
            }
        }

        if cfg.kl_coeff > 0.0 {
            let (kl, kl_grad) =
                kl_penalty_gradient(params, ref_params, &group.prompt.tokens, &traj.seq.tokens);
            kl_sum += kl;
            gradient.add_scaled(&kl_grad, -cfg.kl_coeff / g);
        } else {
            let (kl, _) =
                kl_penalty_gradient(params, ref_params, &group.prompt.tokens, &traj.seq.tokens);
            kl_sum += kl;
        }
    }

    let kl_estimate = kl_sum / g;
    objective -= cfg.kl_coeff * kl_estimate;
    SurrogateReport {
        objective,
        gradient,
        kl_estimate,
        clipped_units,
        total_units,
        skipped,
    }
}

/// Per-step training diagnostics, aggregated over the step's groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub objective: f64,
    pub mean_reward: f64,
    pub mean_r_tag: f64,
    pub mean_r_format: f64,
    pub mean_r_accuracy: f64,
    pub mean_r_len: f64,
    pub mean_abs_advantage: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub mean_len: f64,
    pub skipped: usize,
}

/// One gradient-ascent step on the batch-mean objective over `groups`.
///
/// The update is validated before it is applied; a non-finite update aborts
/// the step with the parameters unchanged.
pub fn grpo_step(
    params: &mut PolicyParams,
    groups: &[GroupSample],
    ref_params: &PolicyParams,
    cfg: &GrpoConfig,
) -> Result<StepDiagnostics> {
    cfg.validate()?;
    if groups.is_empty() {
        return Err(Error::Config("grpo_step requires at least one group".into()));
    }
    let n = groups.len() as f64;
    let mut batch_grad = SparseGrad::new(params.vocab_size());
    let mut objective = 0.0;
    let mut kl = 0.0;
    let mut clipped_units = 0;
    let mut total_units = 0;
    let mut skipped = 0;
    for group in groups {
        let report = surrogate_gradient(group, params, ref_params, cfg);
        batch_grad.add_scaled(&report.gradient, 1.0 / n);
        objective += report.objective / n;
        kl += report.kl_estimate / n;
        clipped_units += report.clipped_units;
        total_units += report.total_units;
        skipped += report.skipped;
    }
    params.apply_gradient(&batch_grad, cfg.learning_rate)?;

    let mut n_traj = 0usize;
    let (mut reward, mut r_tag, mut r_format, mut r_accuracy, mut r_len) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut abs_adv = 0.0;
    let mut len_sum = 0.0;
    for t in groups.iter().flat_map(|gr| gr.trajectories.iter()) {
        n_traj += 1;
        reward += t.reward.total;
        r_tag += t.reward.r_tag;
        r_format += t.reward.r_format;
        r_accuracy += t.reward.r_accuracy;
        r_len += t.reward.r_len;
        abs_adv += t.advantage.abs();
        len_sum += t.seq.tokens.len() as f64;
    }
    let nt = n_traj.max(1) as f64;
    Ok(StepDiagnostics {
        objective,
        mean_reward: reward / nt,
        mean_r_tag: r_tag / nt,
        mean_r_format: r_format / nt,
        mean_r_accuracy: r_accuracy / nt,
        mean_r_len: r_len / nt,
        mean_abs_advantage: abs_adv / nt,
        kl,
        clip_fraction: if total_units == 0 {
            0.0
        } else {
            clipped_units as f64 / total_units as f64
        },
        mean_len: len_sum / nt,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsing::NoFallback;
    use crate::tasks::{generate_task, TaskFamily};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn advantage_example_from_sparse_reward() {
        let adv = normalize_advantages(&[1.0, 0.0, 0.0, 0.0, 0.0], 1e-6);
        let want = [2.0, -0.5, -0.5, -0.5, -0.5];
        for (a, w) in adv.iter().zip(want) {
            assert!((a - w).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_group_gets_zero_advantages() {
        let adv = normalize_advantages(&[0.7; 5], 1e-6);
        assert_eq!(adv, vec![0.0; 5]);
    }

    #[test]
    fn advantages_standardize_and_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let n = rng.gen_range(2..=16);
            let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.5)).collect();
            let adv = normalize_advantages(&rewards, 1e-6);
            let mean: f64 = adv.iter().sum::<f64>() / n as f64;
            let var: f64 = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
            let raw_mean = rewards.iter().sum::<f64>() / n as f64;
            let raw_std =
                (rewards.iter().map(|r| (r - raw_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            if raw_std > 1e-6 {
                assert!(mean.abs() < 1e-9);
                assert!((var.sqrt() - 1.0).abs() < 1e-6);
            } else {
                assert!(adv.iter().all(|&a| a == 0.0));
            }
            // Shift invariance.
            let shifted: Vec<f64> = rewards.iter().map(|r| r + 0.37).collect();
            let adv2 = normalize_advantages(&shifted, 1e-6);
            for (a, b) in adv.iter().zip(&adv2) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn permuting_rewards_permutes_advantages() {
        let rewards = [2.3, 0.0, 1.8, 0.8, 1.0];
        let adv = normalize_advantages(&rewards, 1e-6);
        let perm = [4, 2, 0, 1, 3];
        let permuted: Vec<f64> = perm.iter().map(|&i| rewards[i]).collect();
        let adv_p = normalize_advantages(&permuted, 1e-6);
        for (j, &i) in perm.iter().enumerate() {
            assert!((adv_p[j] - adv[i]).abs() < 1e-12);
        }
    }

    fn rand_params(seed: u64, k: usize, c: usize, v: usize) -> PolicyParams {
        let mut p = PolicyParams::new(k, c, v, 0xbeef);
        p.randomize(seed, 1.5);
        p
    }

    #[test]
    fn kl_is_zero_when_params_equal_ref() {
        let p = rand_params(1, 2, 32, 6);
        let (kl, grad) = kl_penalty_gradient(&p, &p, &[0, 1], &[2, 3, 4]);
        assert_eq!(kl, 0.0);
        assert!(grad.max_abs() < 1e-15);
    }

    #[test]
    fn kl_estimate_is_nonnegative() {
        for seed in 0..50 {
            let p = rand_params(seed, 2, 32, 6);
            let r = rand_params(seed + 1000, 2, 32, 6);
            let (kl, _) = kl_penalty_gradient(&p, &r, &[1], &[0, 2, 5, 3]);
            assert!(kl >= 0.0);
        }
    }

    #[test]
    fn kl_gradient_matches_finite_differences() {
        let prompt = vec![0, 1];
        let seq = vec![2, 3, 4, 1, 5];
        let h = 1e-5;
        for seed in 0..20 {
            let p = rand_params(seed, 2, 32, 6);
            let r = rand_params(seed + 500, 2, 32, 6);
            let (_, grad) = kl_penalty_gradient(&p, &r, &prompt, &seq);
            for (&ctx, row) in grad.rows().collect::<Vec<_>>() {
                for v in 0..6 {
                    let idx = ctx as usize * 6 + v;
                    let mut plus = p.clone();
                    plus.theta_mut()[idx] += h;
                    let mut minus = p.clone();
                    minus.theta_mut()[idx] -= h;
                    let f_plus = kl_penalty_gradient(&plus, &r, &prompt, &seq).0;
                    let f_minus = kl_penalty_gradient(&minus, &r, &prompt, &seq).0;
                    let fd = (f_plus - f_minus) / (2.0 * h);
                    let analytic = row[v];
                    let denom = analytic.abs().max(1e-6);
                    assert!(
                        ((fd - analytic) / denom).abs() < 1e-5,
                        "seed {seed} ctx {ctx} v {v}: fd {fd} analytic {analytic}"
                    );
                }
            }
        }
    }

    /// Builds a group by sampling from `old` and assigning the given
    /// advantages directly (bypassing reward computation).
    fn synthetic_group(
        old: &PolicyParams,
        prompt: &[u32],
        advantages: &[f64],
        max_len: usize,
        seed: u64,
    ) -> GroupSample {
        let task = generate_task(1, TaskFamily::RuleLookup, 1).unwrap();
        let mut trajectories = Vec::new();
        for (i, &adv) in advantages.iter().enumerate() {
            let (seq, lp) = old.sample_sequence(
                prompt,
                1.0,
                max_len,
                9999,
                derive_seed(seed, "t", &[i as u64]),
            );
            let token_lps = old.token_logprobs(prompt, &seq.tokens);
            trajectories.push(Trajectory {
                seq,
                text: String::new(),
                old_logprob: lp,
                old_token_logprobs: token_lps,
                reward: RewardBreakdown {
                    r_tag: 0.0,
                    r_format: 0.0,
                    r_accuracy: 0.0,
                    r_len: 0.0,
                    total: 0.0,
                    stage: Stage::Two,
                },
                advantage: adv,
            });
        }
        GroupSample {
            task,
            prompt: TokenSeq::new(prompt.to_vec()),
            trajectories,
        }
    }

    #[test]
    fn at_initialization_objective_is_mean_advantage_and_kl_zero() {
        let p = rand_params(5, 2, 32, 6);
        let advantages = normalize_advantages(&[2.0, 1.0, 0.0], 1e-6);
        let group = synthetic_group(&p, &[0, 1], &advantages, 5, 77);
        let cfg = GrpoConfig {
            group_size: 3,
            ..Default::default()
        };
        let report = surrogate_gradient(&group, &p, &p, &cfg);
        // ratio = 1 for every trajectory: objective = mean(Â) = 0, KL = 0.
        assert!(report.objective.abs() < 1e-12);
        assert!(report.kl_estimate.abs() < 1e-15);
        assert_eq!(report.clipped_units, 0);
    }

    #[test]
    fn clipped_trajectory_contributes_zero_gradient() {
        let p = rand_params(8, 2, 32, 6);
        let cfg = GrpoConfig {
            group_size: 2,
            kl_coeff: 0.0,
            ..Default::default()
        };
        let mut group = synthetic_group(&p, &[2], &[1.0, 0.0], 4, 3);
        // Positive advantage with ratio above 1+ε: lower the recorded old
        // logprob so ratio = e^0.5 ≈ 1.65.
        group.trajectories[0].old_logprob =
            p.sequence_logprob(&group.prompt.tokens, &group.trajectories[0].seq.tokens) - 0.5;
        let report = surrogate_gradient(&group, &p, &p, &cfg);
        assert_eq!(report.clipped_units, 1);
        assert!(report.gradient.max_abs() < 1e-15, "clipped branch must be flat");

        // The unclipped twin (ratio 1) moves the parameters.
        let mut twin = group.clone();
        twin.trajectories[0].old_logprob =
            p.sequence_logprob(&twin.prompt.tokens, &twin.trajectories[0].seq.tokens);
        let report = surrogate_gradient(&twin, &p, &p, &cfg);
        assert_eq!(report.clipped_units, 0);
        assert!(report.gradient.max_abs() > 1e-6);
    }

    #[test]
    fn negative_advantage_below_clip_also_flat() {
        let p = rand_params(9, 2, 32, 6);
        let cfg = GrpoConfig {
            group_size: 2,
            kl_coeff: 0.0,
            ..Default::default()
        };
        let mut group = synthetic_group(&p, &[2], &[-1.0, 0.0], 4, 4);
        // Negative advantage with ratio below 1-ε: min picks the clipped
        // (constant) branch.
        group.trajectories[0].old_logprob =
            p.sequence_logprob(&group.prompt.tokens, &group.trajectories[0].seq.tokens) + 0.5;
        let report = surrogate_gradient(&group, &p, &p, &cfg);
        assert_eq!(report.clipped_units, 1);
        assert!(report.gradient.max_abs() < 1e-15);
    }

    fn fd_check_surrogate(mode: RatioMode, seed: u64) {
        let vocab_size = 6;
        let mut old = rand_params(seed, 2, 64, vocab_size);
        old.randomize(seed, 1.0);
        let mut p = old.clone();
        // Move θ away from π_old so ratios are non-trivial but unclipped
        // branches dominate.
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        for v in p.theta_mut() {
            *v += rng.gen_range(-0.05..0.05);
        }
        let refp = rand_params(seed + 2, 2, 64, vocab_size);
        let advantages = normalize_advantages(&[1.7, 0.4, 0.1], 1e-6);
        let group = synthetic_group(&old, &[1, 4], &advantages, 6, seed);
        let cfg = GrpoConfig {
            group_size: 3,
            kl_coeff: 0.01,
            ratio_mode: mode,
            ..Default::default()
        };
        let report = surrogate_gradient(&group, &p, &refp, &cfg);
        let h = 1e-5;
        for (&ctx, row) in report.gradient.rows().collect::<Vec<_>>() {
            for v in 0..vocab_size {
                let idx = ctx as usize * vocab_size + v;
                let mut plus = p.clone();
                plus.theta_mut()[idx] += h;
                let mut minus = p.clone();
                minus.theta_mut()[idx] -= h;
                let f_plus = surrogate_gradient(&group, &plus, &refp, &cfg).objective;
                let f_minus = surrogate_gradient(&group, &minus, &refp, &cfg).objective;
                let fd = (f_plus - f_minus) / (2.0 * h);
                let analytic = row[v];
                let denom = analytic.abs().max(1e-6);
                assert!(
                    ((fd - analytic) / denom).abs() < 1e-4,
                    "mode {mode:?} seed {seed} ctx {ctx} v {v}: fd {fd} analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn surrogate_gradient_matches_finite_differences() {
        for seed in 0..10 {
            fd_check_surrogate(RatioMode::Sequence, seed);
        }
    }

    #[test]
    fn per_token_surrogate_gradient_matches_finite_differences() {
        for seed in 0..10 {
            fd_check_surrogate(RatioMode::PerToken, seed);
        }
    }

    #[test]
    fn zero_advantage_zero_beta_step_changes_nothing() {
        let mut p = rand_params(4, 2, 32, 6);
        let before = p.clone();
        let group = synthetic_group(&p, &[0], &[0.0, 0.0, 0.0], 4, 11);
        let cfg = GrpoConfig {
            group_size: 3,
            kl_coeff: 0.0,
            ..Default::default()
        };
        grpo_step(&mut p, &[group], &before, &cfg).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut p = rand_params(4, 2, 32, 6);
        let before = p.clone();
        let group = synthetic_group(&p, &[0], &[1.0, -1.0, 0.0], 4, 12);
        let cfg = GrpoConfig {
            group_size: 3,
            learning_rate: 0.0,
            ..Default::default()
        };
        grpo_step(&mut p, &[group], &before, &cfg).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn empty_batch_is_a_config_error() {
        let mut p = rand_params(4, 2, 32, 6);
        let r = p.clone();
        assert!(matches!(
            grpo_step(&mut p, &[], &r, &GrpoConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bandit_probability_of_rewarded_token_increases() {
        // Two-token, single-step bandit: reward 1 for token 0.
        let mut p = PolicyParams::new(1, 4, 2, 1);
        let refp = p.clone();
        let cfg = GrpoConfig {
            max_len: 1,
            ..Default::default()
        };
        let mut prob_history = Vec::new();
        for step in 0..200 {
            let old = p.clone();
            let mut trajectories = Vec::new();
            for i in 0..cfg.group_size {
                let (seq, lp) = old.sample_sequence(
                    &[],
                    1.0,
                    1,
                    99,
                    derive_seed(1234, "bandit", &[step, i as u64]),
                );
                let token_lps = old.token_logprobs(&[], &seq.tokens);
                let reward_total = if seq.tokens[0] == 0 { 1.0 } else { 0.0 };
                trajectories.push(Trajectory {
                    seq,
                    text: String::new(),
                    old_logprob: lp,
                    old_token_logprobs: token_lps,
                    reward: RewardBreakdown {
                        r_tag: 0.0,
                        r_format: 0.0,
                        r_accuracy: reward_total,
                        r_len: 0.0,
                        total: reward_total,
                        stage: Stage::Two,
                    },
                    advantage: 0.0,
                });
            }
            let totals: Vec<f64> = trajectories.iter().map(|t| t.reward.total).collect();
            let advs = normalize_advantages(&totals, cfg.std_floor);
            for (t, a) in trajectories.iter_mut().zip(advs) {
                t.advantage = a;
            }
            let group = GroupSample {
                task: generate_task(1, TaskFamily::RuleLookup, 1).unwrap(),
                prompt: TokenSeq::empty(),
                trajectories,
            };
            grpo_step(&mut p, &[group], &refp, &cfg).unwrap();
            prob_history.push(p.next_token_distribution(&[])[0]);
        }
        assert!(
            *prob_history.last().unwrap() > 0.95,
            "P(token 0) after 200 steps: {}",
            prob_history.last().unwrap()
        );
    }

    #[test]
    fn collect_group_rewards_and_normalizes() {
        let vocab = Vocabulary::standard();
        let task = generate_task(3, TaskFamily::RuleLookup, 1).unwrap();
        let p = PolicyParams::for_vocab(3, 512, &vocab);
        let cfg = GrpoConfig::default();
        let group = collect_group(
            &p,
            &vocab,
            &task,
            Stage::Two,
            TagRewardMode::Graded,
            &NoFallback,
            &cfg,
            42,
        );
        assert_eq!(group.trajectories.len(), cfg.group_size);
        let mean: f64 = group.trajectories.iter().map(|t| t.advantage).sum::<f64>()
            / cfg.group_size as f64;
        let totals: Vec<f64> = group.trajectories.iter().map(|t| t.reward.total).collect();
        let raw_mean = totals.iter().sum::<f64>() / totals.len() as f64;
        let raw_std =
            (totals.iter().map(|r| (r - raw_mean).powi(2)).sum::<f64>() / totals.len() as f64).sqrt();
        if raw_std > cfg.std_floor {
            assert!(mean.abs() < 1e-9);
        } else {
            assert!(group.trajectories.iter().all(|t| t.advantage == 0.0));
        }
        // Determinism.
        let group2 = collect_group(
            &p,
            &vocab,
            &task,
            Stage::Two,
            TagRewardMode::Graded,
            &NoFallback,
            &cfg,
            42,
        );
        for (a, b) in group.trajectories.iter().zip(&group2.trajectories) {
            assert_eq!(a.seq, b.seq);
            assert_eq!(a.reward.total, b.reward.total);
        }
    }
}
