//! Fits the bilinear Bradley-Terry predictor and reports held-out accuracy.

use anole::harness::train_predictor;
use anole::preference::{order_from_probability, predict_preference};
use anole::tasksim::{build_experience_pool, make_training_tasks, true_return, EnvConfig, TaskFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anole::Result<()> {
    let env = EnvConfig::default();
    for family in TaskFamily::ALL {
        let training = make_training_tasks(family, 10, 1)?;
        let model = train_predictor(&training, &env, 200, 300, 1e-4, 2)?;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let held_out = build_experience_pool(&training, &env, 200, &mut rng)?;
        let mut correct = 0;
        let mut total = 0;
        for (task, z) in training.tasks.iter().zip(&training.means) {
            for pair in held_out.chunks_exact(2) {
                let p = predict_preference(&model, z, &pair[0].segment(), &pair[1].segment())?;
                let truth = true_return(task, &pair[0]) >= true_return(task, &pair[1]);
                correct += usize::from(order_from_probability(p).is_first() == truth);
                total += 1;
            }
        }
        println!("{family:>8}: held-out accuracy {:.3}", correct as f64 / total as f64);
    }
    Ok(())
}
