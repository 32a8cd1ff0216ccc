//! Scratch diagnostic (not shipped): prints sampled outputs after a stage-1
//! run to inspect what arrangement the policy converged to.

use deskrl_core::parsing::NoFallback;
use deskrl_core::rewards::Stage;
use deskrl_core::tasks::{generate_task, render_prompt, TaskFamily};
use deskrl_core::trainer::{run_stage, StageConfig, TaskSource};
use deskrl_core::{GrpoConfig, PolicyParams, Vocabulary};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let get = |i: usize, d: f64| args.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(d);
    let seed = get(1, 11.0) as u64;
    let lr = get(2, 4.0);
    let temp = get(3, 1.0);
    let max_len = get(4, 7.0) as usize;
    let steps = get(5, 400.0) as usize;

    let vocab = Vocabulary::standard();
    let mut policy = PolicyParams::for_vocab(3, 4096, &vocab);
    let mut s1 = StageConfig::new(
        Stage::One,
        TaskSource::Synthetic {
            family: TaskFamily::MaxOfNumbers,
            difficulty: 1,
        },
    );
    s1.max_steps = steps;
    s1.groups_per_step = 1;
    s1.grpo = GrpoConfig {
        learning_rate: lr,
        temperature: temp,
        max_len,
        ..Default::default()
    };
    let log = run_stage(&mut policy, &vocab, &s1, &NoFallback, seed, 0).unwrap();
    let last = log.rows.last().unwrap();
    println!(
        "after {} steps: tag={:.3} fmt={:.3}",
        log.rows.len(),
        last.diagnostics.mean_r_tag,
        last.diagnostics.mean_r_format
    );
    for s in 0..4u64 {
        let task = generate_task(s, TaskFamily::MaxOfNumbers, 1).unwrap();
        let prompt = render_prompt(&task, &vocab);
        println!("prompt: {:?}", task.prompt_text());
        let (greedy, _) = policy.sample_sequence(&prompt.tokens, 0.0, max_len, vocab.eos(), 0);
        println!("  greedy : {:?}", vocab.detokenize(&greedy.tokens));
        for j in 0..4 {
            let (seq, _) =
                policy.sample_sequence(&prompt.tokens, temp, max_len, vocab.eos(), 1000 + j);
            println!("  sample : {:?}", vocab.detokenize(&seq.tokens));
        }
    }
}
