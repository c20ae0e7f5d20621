//! How often each simulated oracle disagrees with the truth.

use anole::oracles::{OracleSpec, OracleState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anole::Result<()> {
    let specs = [
        OracleSpec::perfect(),
        OracleSpec::uniform_flip(0.2),
        OracleSpec::boltzmann(0.5),
        OracleSpec::boltzmann(2.0),
        OracleSpec::hack_fraction(0.2),
    ];
    let mut inputs = ChaCha8Rng::seed_from_u64(0);
    let returns: Vec<(f64, f64)> = (0..10_000)
        .map(|_| (inputs.random_range(-3.0..3.0), inputs.random_range(-3.0..3.0)))
        .collect();
    for spec in specs {
        let mut wrong = 0;
        for (i, episode) in returns.chunks(10).enumerate() {
            let mut oracle = OracleState::new(spec.clone(), 10, i as u64)?;
            for &(a, b) in episode {
                oracle.answer(a, b, None)?;
            }
            wrong += oracle.lies_used();
        }
        println!("{:>18}: wrong answers {:.3}", spec.kind.name(), wrong as f64 / returns.len() as f64);
    }

    // the adversary spends its lies where they keep the most volume alive
    let mut adversary = OracleState::new(OracleSpec::bounded_adversary(2), 10, 0)?;
    for volumes in [(300, 700), (600, 400), (200, 800), (100, 900)] {
        let answer = adversary.answer(1.0, 0.0, Some(volumes))?;
        println!("bounded adversary, branches {volumes:?}, truth first -> {answer:?}");
    }
    Ok(())
}
