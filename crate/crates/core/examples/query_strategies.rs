//! Which pair each strategy asks from the same batch.

use anole::strategies::{anole_select, greedy_select, random_select, sample_query_batch};
use anole::tasksim::{build_experience_pool, make_training_tasks, perfect_scores, sample_candidate_pool, EnvConfig};
use anole::{BudgetConfig, SearchState, TaskFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anole::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let training = make_training_tasks(TaskFamily::RandDir, 10, 1)?;
    let pool = sample_candidate_pool(&training, 18, &mut rng);
    let experience = build_experience_pool(&training, &EnvConfig::default(), 500, &mut rng)?;
    let predictor = perfect_scores(TaskFamily::RandDir, &pool, &experience)?;
    let state = SearchState::new(BudgetConfig::new(10, 2)?, pool.len())?;
    let batch = sample_query_batch(experience.len(), 100, &mut rng)?;

    let anole = anole_select(&batch, &predictor, &state)?;
    println!("anole : pair {:?} at {:>2}, branch volumes {:?}", anole.pair, anole.position, anole.volumes);
    let greedy = greedy_select(&batch, &predictor, state.mismatches(), &mut rng)?;
    let split = state.branch_volumes(&anole::PairPredictor::bits(&predictor, greedy.pair.0, greedy.pair.1))?;
    println!("greedy: pair {:?} at {:>2}, branch volumes {:?}", greedy.pair, greedy.position, split);
    let random = random_select(&batch, &mut rng)?;
    let split = state.branch_volumes(&anole::PairPredictor::bits(&predictor, random.pair.0, random.pair.1))?;
    println!("random: pair {:?} at {:>2}, branch volumes {:?}", random.pair, random.position, split);
    Ok(())
}
