//! Boltzmann-rational and hack-mode oracles, with a learned predictor.
//!
//! `cargo run --release --example alternative_noise -- [episodes]`

use anole::harness::{run_matrix, ExperimentConfig, PredictorKind, SweepGrid};
use anole::StrategyKind;

fn main() -> anole::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let base = ExperimentConfig {
        episodes,
        predictor: PredictorKind::Learned {
            pairs_per_task: 200,
            steps: 300,
            step_size: 1e-4,
        },
        ..ExperimentConfig::default()
    };
    let strategies = vec![
        StrategyKind::Anole,
        StrategyKind::Greedy,
        StrategyKind::Posterior { assumed_flip_rate: None },
    ];
    let grid = SweepGrid::alternative_noise(base, strategies);
    let report = run_matrix(&grid.cells(), 4)?;
    print!("{}", report.to_csv());
    Ok(())
}
