//! One inference episode with a noisy oracle, printed round by round.

use anole::harness::{run_episode, ExperimentConfig};
use anole::TaskFamily;

fn main() -> anole::Result<()> {
    let config = ExperimentConfig {
        family: TaskFamily::RandGoal,
        ..ExperimentConfig::default()
    };
    let r = run_episode(&config, 17)?;
    println!("true task {:?}", r.true_task.param);
    for (k, ((v1, v2), ok)) in r.branch_volumes.iter().zip(&r.oracle_correct).enumerate() {
        println!(
            "round {:>2}: volume {:>4} -> branches ({v1:>4}, {v2:>4}), oracle {}",
            k + 1,
            r.volume_trace[k],
            if *ok { "truthful" } else { "wrong" }
        );
    }
    println!("final volume {}", r.volume_trace.last().unwrap());
    println!(
        "selected {} with {} mismatches, identified {}, adapted return {:.2}",
        r.selected, r.selected_mismatches, r.identified, r.adapted_return
    );
    Ok(())
}
