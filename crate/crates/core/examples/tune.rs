//! Scratch tuning harness (not shipped): explores curriculum hyperparameters
//! for the reference desk-scale run.

use deskrl_core::eval::greedy_accuracy;
use deskrl_core::parsing::NoFallback;
use deskrl_core::rewards::Stage;
use deskrl_core::tasks::{generate_task, TaskFamily};
use deskrl_core::trainer::{prime_format, run_stage, should_advance, PrimerConfig, StageConfig, TaskSource, TrainingLog};
use deskrl_core::{GrpoConfig, PolicyParams, TaskInstance, Vocabulary};

struct Knobs {
    seed: u64,
    lr: f64,
    temp: f64,
    k: usize,
    c: usize,
    max_len: usize,
    gps: usize,
    s1_steps: usize,
    s2_steps: usize,
    beta: f64,
    verbose: bool,
}

fn stage1_cfg(kn: &Knobs) -> StageConfig {
    let mut s1 = StageConfig::new(
        Stage::One,
        TaskSource::Synthetic {
            family: TaskFamily::MaxOfNumbers,
            difficulty: 1,
        },
    );
    s1.max_steps = kn.s1_steps;
    s1.groups_per_step = kn.gps;
    s1.grpo = GrpoConfig {
        learning_rate: kn.lr,
        temperature: kn.temp,
        max_len: kn.max_len,
        kl_coeff: kn.beta,
        ..Default::default()
    };
    s1
}

fn stage2_cfg(kn: &Knobs, eval_tasks: &[TaskInstance]) -> StageConfig {
    let mut s2 = StageConfig::new(
        Stage::Two,
        TaskSource::Synthetic {
            family: TaskFamily::RuleLookup,
            difficulty: 1,
        },
    );
    s2.max_steps = kn.s2_steps;
    s2.groups_per_step = kn.gps;
    s2.grpo = GrpoConfig {
        learning_rate: kn.lr,
        temperature: kn.temp,
        max_len: kn.max_len,
        kl_coeff: kn.beta,
        ..Default::default()
    };
    s2.eval_tasks = eval_tasks.to_vec();
    s2.eval_every = 25;
    s2
}

fn fmt_cross_step(log: &TrainingLog, cfg: &StageConfig) -> Option<usize> {
    let mut probe = TrainingLog::default();
    for (i, row) in log.rows.iter().enumerate() {
        let start = i * cfg.groups_per_step;
        let end = (start + cfg.groups_per_step).min(log.group_format_history.len());
        probe
            .group_format_history
            .extend_from_slice(&log.group_format_history[start..end]);
        if should_advance(&probe, cfg) {
            return Some(row.step);
        }
    }
    None
}

fn run(kn: &Knobs) {
    let vocab = Vocabulary::standard();
    let mut policy = PolicyParams::for_vocab(kn.k, kn.c, &vocab);
    prime_format(&mut policy, &vocab, &PrimerConfig::default(), kn.seed).unwrap();
    let eval_tasks: Vec<TaskInstance> = (100_000..100_050)
        .map(|s| generate_task(s, TaskFamily::RuleLookup, 1).unwrap())
        .collect();
    let untrained = greedy_accuracy(&policy, &vocab, &eval_tasks, &NoFallback, kn.max_len);

    let s1 = stage1_cfg(kn);
    let t0 = std::time::Instant::now();
    let log1 = run_stage(&mut policy, &vocab, &s1, &NoFallback, kn.seed, 0).unwrap();
    let cross = fmt_cross_step(&log1, &s1);
    if kn.verbose {
        for row in log1.rows.iter().step_by(25) {
            let d = &row.diagnostics;
            println!(
                "  s1 step={:4} tag={:.3} fmt={:.3} acc={:.3} rew={:.3} len={:.2} kl={:.4}",
                row.step, d.mean_r_tag, d.mean_r_format, d.mean_r_accuracy, d.mean_reward,
                d.mean_len, d.kl
            );
        }
    }
    let last1 = log1.rows.last().unwrap();
    println!(
        "s1: steps={} cross={:?} fmt={:.3} tag={:.3} acc={:.3} [{:.1?}]",
        log1.rows.len(),
        cross,
        last1.diagnostics.mean_r_format,
        last1.diagnostics.mean_r_tag,
        last1.diagnostics.mean_r_accuracy,
        t0.elapsed()
    );

    let s2 = stage2_cfg(kn, &eval_tasks);
    let t1 = std::time::Instant::now();
    let log2 = run_stage(&mut policy, &vocab, &s2, &NoFallback, kn.seed, log1.rows.len()).unwrap();
    if kn.verbose {
        for row in log2.rows.iter().step_by(50) {
            let d = &row.diagnostics;
            println!(
                "  s2 step={:4} fmt={:.3} acc={:.3} len_r={:.3} rew={:.3} len={:.2}",
                row.step, d.mean_r_format, d.mean_r_accuracy, d.mean_r_len, d.mean_reward, d.mean_len
            );
        }
    }
    let final_acc = greedy_accuracy(&policy, &vocab, &eval_tasks, &NoFallback, kn.max_len);
    let acc_rise = log2
        .eval_points
        .iter()
        .find(|p| final_acc > 0.0 && p.accuracy >= 0.8 * final_acc)
        .map(|p| p.step);
    let last2 = log2.rows.last().unwrap();
    println!(
        "s2: fmt={:.3} acc={:.3} | untrained={:.3} final={:.3} gain={:+.3} rise={:?} [{:.1?}]",
        last2.diagnostics.mean_r_format,
        last2.diagnostics.mean_r_accuracy,
        untrained,
        final_acc,
        final_acc - untrained,
        acc_rise,
        t1.elapsed()
    );
    let ok = cross.is_some()
        && acc_rise.is_some()
        && cross.unwrap() < acc_rise.unwrap()
        && final_acc - untrained >= 0.30;
    println!("CRITERION: {}", if ok { "PASS" } else { "FAIL" });
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let get = |i: usize, d: f64| args.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(d);
    let kn = Knobs {
        seed: get(1, 11.0) as u64,
        lr: get(2, 0.5),
        temp: get(3, 1.0),
        k: get(4, 3.0) as usize,
        c: get(5, 4096.0) as usize,
        max_len: get(6, 8.0) as usize,
        gps: get(7, 1.0) as usize,
        s1_steps: get(8, 400.0) as usize,
        s2_steps: get(9, 1500.0) as usize,
        beta: get(10, 0.01),
        verbose: get(11, 1.0) > 0.0,
    };
    println!(
        "# seed={} lr={} temp={} k={} C={} max_len={} gps={} s1={} s2={} beta={}",
        kn.seed, kn.lr, kn.temp, kn.k, kn.c, kn.max_len, kn.gps, kn.s1_steps, kn.s2_steps, kn.beta
    );
    run(&kn);
}
