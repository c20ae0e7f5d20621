//! The four point-mass task families: sampling, rollouts and returns.

use anole::tasksim::{decode_task, rollout_task, sample_task, true_return, EnvConfig, TaskFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anole::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let env = EnvConfig::default();
    for family in TaskFamily::ALL {
        let task = sample_task(family, &mut rng);
        let z = task.embedding(5);
        assert_eq!(decode_task(family, &z)?, task);
        let own = rollout_task(&task, &env, &mut rng);
        let other = rollout_task(&sample_task(family, &mut rng), &env, &mut rng);
        println!(
            "{family:>8} {:?}: own policy {:>7.2}, other policy {:>7.2}, ends at {:?}",
            task.param,
            true_return(&task, &own),
            true_return(&task, &other),
            own.final_position().map(|v| (v * 100.0).round() / 100.0),
        );
    }
    Ok(())
}
