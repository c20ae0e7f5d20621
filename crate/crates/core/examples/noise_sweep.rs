//! Identification rate of ANOLE, Greedy and Random as the flip rate grows.
//!
//! `cargo run --release --example noise_sweep -- [episodes] [family] [seed]`

use anole::harness::{run_matrix, ExperimentConfig, SweepGrid};
use anole::{StrategyKind, TaskFamily};

fn main() -> anole::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let family: TaskFamily = args.next().as_deref().unwrap_or("RandDir").parse()?;
    let base_seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(2024);
    let base = ExperimentConfig {
        family,
        episodes,
        base_seed,
        ..ExperimentConfig::default()
    };
    let grid = SweepGrid::noise_sweep(
        base,
        vec![StrategyKind::Anole, StrategyKind::Greedy, StrategyKind::Random],
    );
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let report = run_matrix(&grid.cells(), threads)?;
    println!("{:>8} {:>8} {:>10} {:>10} {:>10}", "strategy", "epsilon", "ident", "std err", "return");
    for cell in &report.cells {
        println!(
            "{:>8} {:>8.1} {:>10.3} {:>10.3} {:>10.2}",
            cell.strategy,
            cell.epsilon,
            cell.identification_rate,
            cell.identification_std / (cell.episodes as f64).sqrt(),
            cell.mean_return
        );
    }
    Ok(())
}
