//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed.

use std::time::{Duration, Instant};

use anole::harness::{run_bitstring_search, run_matrix, Experiment, ExperimentConfig, SweepGrid};
use anole::oracles::OracleSpec;
use anole::preference::{
    preference_loss, preference_loss_gradient, CandidateScores, PairPredictor, PreferenceExample, ScoreModel, ScoreRule,
    Segment, StepFeature, TaskEmbedding,
};
use anole::strategies::{anole_select, QueryBatch};
use anole::{BudgetConfig, Order, SearchState, StrategyKind, TaskFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: false,
        detail: detail.into(),
    }
}

// Independent reference arithmetic: Pascal's triangle in u128.
fn binomial(n: u32, l: u32) -> u128 {
    if l > n {
        return 0;
    }
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row[l as usize]
}

fn reference_volume(k_total: u32, k_e: u32, round: u32, mismatches: &[u32]) -> u128 {
    let remaining = k_total - round;
    mismatches
        .iter()
        .filter(|&&e| e <= k_e)
        .map(|&e| (0..=(k_e - e)).map(|l| binomial(remaining, l)).sum::<u128>())
        .sum()
}

// Counts (candidate, future answer sequence) pairs that stay within the lie budget.
fn enumerated_volume(k_total: u32, k_e: u32, round: u32, mismatches: &[u32]) -> u128 {
    let remaining = k_total - round;
    let mut total = 0;
    for &e in mismatches {
        for future in 0u32..(1 << remaining) {
            if e + future.count_ones() <= k_e {
                total += 1;
            }
        }
    }
    total
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<Order> {
    (0..n).map(|_| Order::from_first(rng.random_bool(0.5))).collect()
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut rounds = 0;
    let mut enumerated = 0;
    for instance in 0..1000 {
        let k = rng.random_range(1..=12u32);
        let k_e = rng.random_range(0..=3u32.min(k));
        let pool = rng.random_range(1..=64usize);
        let mut state = SearchState::new(BudgetConfig::new(k, k_e).unwrap(), pool).unwrap();
        for round in 0..k {
            let bits = random_bits(&mut rng, pool);
            let (v1, v2) = state.branch_volumes(&bits).unwrap();
            let before = reference_volume(k, k_e, round, state.mismatches());
            if state.total_volume() as u128 != before || (v1 + v2) as u128 != before {
                return fail(format!("instance {instance} round {round}: {v1} + {v2} vs {before}"));
            }
            let next: Vec<u32> = state
                .mismatches()
                .iter()
                .zip(&bits)
                .map(|(&e, &b)| e + u32::from(b != Order::FirstPreferred))
                .collect();
            if v1 as u128 != reference_volume(k, k_e, round + 1, &next) {
                return fail(format!("instance {instance} round {round}: first branch {v1}"));
            }
            if k <= 8 && pool <= 16 {
                if before != enumerated_volume(k, k_e, round, state.mismatches()) {
                    return fail(format!("instance {instance}: enumeration disagrees"));
                }
                enumerated += 1;
            }
            let answer = Order::from_first(rng.random_bool(0.5));
            state.record(2 * round as usize, 2 * round as usize + 1, answer, &bits).unwrap();
            rounds += 1;
        }
    }
    pass(format!("{rounds} rounds exact, {enumerated} cross-checked by enumeration"))
}

fn unit_of_volume() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut found = 0;
    let mut tried = 0;
    while found < 500 {
        tried += 1;
        if tried > 200_000 {
            return fail(format!("only {found} terminal states with volume 1"));
        }
        let k = rng.random_range(2..=10u32);
        let k_e = rng.random_range(0..=2u32.min(k / 2));
        let pool = rng.random_range(2..=24usize);
        let secret = rng.random_range(0..pool);
        let mut state = SearchState::new(BudgetConfig::new(k, k_e).unwrap(), pool).unwrap();
        let mut lies = 0;
        for round in 0..k as usize {
            let bits = random_bits(&mut rng, pool);
            let mut answer = bits[secret];
            if lies < k_e && rng.random_bool(0.2) {
                answer = answer.flipped();
                lies += 1;
            }
            state.record(2 * round, 2 * round + 1, answer, &bits).unwrap();
        }
        if state.total_volume() != 1 {
            continue;
        }
        found += 1;
        let survivors: Vec<usize> = (0..pool).filter(|&c| state.mismatches()[c] <= k_e).collect();
        if survivors.len() != 1 {
            return fail(format!("volume 1 with survivors {survivors:?}"));
        }
        if survivors[0] != secret || state.decision() != secret {
            return fail("the lone survivor is not the consistent candidate");
        }
    }
    pass(format!("{found} terminal states with volume 1 each hold one survivor"))
}

fn minimax_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for instance in 0..200 {
        let pool = rng.random_range(1..=16usize);
        let segments = rng.random_range(8..=30usize);
        let k = rng.random_range(1..=10u32);
        let k_e = rng.random_range(0..=2u32.min(k));
        let scores = (0..pool)
            .map(|_| (0..segments).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let predictor = CandidateScores::new(ScoreRule::ReturnComparison, scores).unwrap();
        let mut state = SearchState::new(BudgetConfig::new(k, k_e).unwrap(), pool).unwrap();
        let played = rng.random_range(0..k) as usize;
        for round in 0..played {
            let bits = random_bits(&mut rng, pool);
            state
                .record(2 * round, 2 * round + 1, Order::from_first(rng.random_bool(0.5)), &bits)
                .unwrap();
        }
        let size = rng.random_range(1..=20usize);
        let mut pairs = Vec::new();
        while pairs.len() < size {
            let a = rng.random_range(0..segments);
            let b = rng.random_range(0..segments);
            if a != b && !pairs.contains(&(a, b)) && !pairs.contains(&(b, a)) {
                pairs.push((a, b));
            }
        }
        let batch = QueryBatch::new(pairs.clone()).unwrap();
        let chosen = anole_select(&batch, &predictor, &state).unwrap();
        // exhaustive argmin with first-position ties, from the reference arithmetic
        let mut best = (u128::MAX, 0);
        for (pos, &(a, b)) in pairs.iter().enumerate() {
            let branch = |ans: Order| -> u128 {
                let next: Vec<u32> = (0..pool)
                    .map(|c| state.mismatches()[c] + u32::from(predictor.predict(c, a, b) != ans))
                    .collect();
                reference_volume(k, k_e, played as u32 + 1, &next)
            };
            let worst = branch(Order::FirstPreferred).max(branch(Order::SecondPreferred));
            if worst < best.0 {
                best = (worst, pos);
            }
        }
        if chosen.position != best.1 {
            return fail(format!("instance {instance}: picked {} not {}", chosen.position, best.1));
        }
    }
    pass("200 instances, zero discrepancies")
}

fn noiseless_lower_bound() -> Outcome {
    let mut checked = 0;
    for k in [4u32, 6, 8, 10] {
        let secrets: Vec<usize> = if k <= 8 {
            (0..1 << k).collect()
        } else {
            (0..1usize << k).step_by(7).collect()
        };
        for secret in secrets {
            let out = run_bitstring_search(k, secret).unwrap();
            let halving: Vec<u64> = (0..=k).map(|r| 1u64 << (k - r)).collect();
            if out.decision != secret || out.rounds != k || out.volume_trace != halving {
                return fail(format!("K={k} secret {secret}: {:?}", out.volume_trace));
            }
            checked += 1;
        }
    }
    pass(format!(
        "{checked} secrets found in exactly K rounds, volume 2 after K-1"
    ))
}

fn lie_soundness() -> Outcome {
    let mut lines = Vec::new();
    for (name, oracle) in [
        ("bounded adversary", OracleSpec::bounded_adversary(2)),
        ("hack 0.2", OracleSpec::hack_fraction(0.2)),
    ] {
        let exp = Experiment::new(ExperimentConfig {
            oracle,
            true_task_in_pool: true,
            eval_episodes: 1,
            base_seed: 404,
            ..ExperimentConfig::default()
        })
        .unwrap();
        let mut worst = 0;
        let mut lies = 0;
        for ep in 0..500 {
            let r = exp.run_episode(anole::harness::episode_seeds(404, 0, ep)).unwrap();
            let truth = r.true_candidate.expect("planted");
            worst = worst.max(r.mismatches[truth]);
            lies += r.oracle_correct.iter().filter(|c| !**c).count();
            if r.mismatches[truth] > 2 {
                return fail(format!("{name}: episode {ep} true candidate has {} mismatches", r.mismatches[truth]));
            }
        }
        lines.push(format!("{name} 500/500 (max {worst}, {lies} lies)"));
    }
    pass(lines.join("; "))
}

struct Sweep {
    // [strategy][epsilon]
    rates: Vec<Vec<f64>>,
    episodes: usize,
}

fn run_sweep() -> Sweep {
    let base = ExperimentConfig {
        family: TaskFamily::RandDir,
        total_queries: 10,
        lie_budget: 2,
        batch_size: 100,
        pool_size: Some(18),
        episodes: 500,
        base_seed: 2024,
        ..ExperimentConfig::default()
    };
    let strategies = vec![StrategyKind::Anole, StrategyKind::Greedy, StrategyKind::Random];
    let grid = SweepGrid::noise_sweep(base, strategies.clone());
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let report = run_matrix(&grid.cells(), threads).unwrap();
    let mut rates = vec![Vec::new(); strategies.len()];
    for (i, cell) in report.cells.iter().enumerate() {
        rates[i % strategies.len()].push(cell.identification_rate);
    }
    Sweep { rates, episodes: 500 }
}

fn trend(sweep: &Sweep) -> Outcome {
    let [anole, greedy, random] = [&sweep.rates[0], &sweep.rates[1], &sweep.rates[2]];
    let gap_noisy = anole[2] - greedy[2];
    let gap_clean = (anole[0] - greedy[0]).abs();
    let detail = format!(
        "eps 0.2: anole {:.3} greedy {:.3} random {:.3}; eps 0.0: anole {:.3} greedy {:.3}",
        anole[2], greedy[2], random[2], anole[0], greedy[0]
    );
    if gap_noisy >= 0.10 && greedy[2] > random[2] && gap_clean <= 0.03 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn monotonicity(sweep: &Sweep) -> Outcome {
    let rates = &sweep.rates[0];
    let n = sweep.episodes as f64;
    let se = |p: f64| (p * (1.0 - p) / n).sqrt();
    for i in 0..rates.len() {
        for j in i + 1..rates.len() {
            let slack = 2.0 * (se(rates[i]).powi(2) + se(rates[j]).powi(2)).sqrt();
            if rates[j] > rates[i] + slack {
                return fail(format!("rate rises from {:.3} to {:.3}", rates[i], rates[j]));
            }
        }
    }
    pass(format!("anole rates {rates:.3?}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let f = rng.random_range(1..=5);
        let h = rng.random_range(1..=6);
        let segment = |rng: &mut ChaCha8Rng| {
            Segment::new(
                (0..h)
                    .map(|_| StepFeature((0..f).map(|_| rng.random_range(-1.0..1.0)).collect()))
                    .collect(),
            )
            .unwrap()
        };
        let mut data = Vec::new();
        for _ in 0..rng.random_range(1..=10) {
            let first = segment(&mut rng);
            let second = segment(&mut rng);
            data.push((first, second));
        }
        let data: Vec<PreferenceExample> = data
            .into_iter()
            .map(|(first, second)| PreferenceExample {
                z: TaskEmbedding((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()),
                first,
                second,
                label: Order::from_first(rng.random_bool(0.5)),
            })
            .collect();
        let weights: Vec<f64> = (0..d * f).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, analytic) =
            preference_loss_gradient(&ScoreModel::from_weights(d, f, weights.clone()).unwrap(), &data).unwrap();
        let loss = |w: Vec<f64>| preference_loss(&ScoreModel::from_weights(d, f, w).unwrap(), &data).unwrap();
        let step = 1e-5;
        for i in 0..weights.len() {
            let mut plus = weights.clone();
            plus[i] += step;
            let mut minus = weights.clone();
            minus[i] -= step;
            let numeric = (loss(plus) - loss(minus)) / (2.0 * step);
            let scale = numeric.abs().max(analytic[i].abs()).max(1e-6);
            worst = worst.max((numeric - analytic[i]).abs() / scale);
        }
    }
    let detail = format!("max relative error {worst:.2e} over 50 instances");
    if worst <= 1e-5 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn determinism() -> Outcome {
    let base = ExperimentConfig {
        episodes: 20,
        experience_size: 300,
        base_seed: 606,
        ..ExperimentConfig::default()
    };
    let strategies = vec![
        StrategyKind::Anole,
        StrategyKind::Greedy,
        StrategyKind::Random,
        StrategyKind::Posterior { assumed_flip_rate: None },
    ];
    let cells = SweepGrid::noise_sweep(base, strategies).cells();
    let one = run_matrix(&cells, 1).unwrap().to_csv();
    let eight = run_matrix(&cells, 8).unwrap().to_csv();
    if one == eight {
        pass(format!("{} CSV bytes identical", one.len()))
    } else {
        fail("CSV differs between parallelism 1 and 8")
    }
}

fn main() {
    let mut failures = 0;
    let mut check = |name: &str, limit: Option<Duration>, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                outcome.passed = false;
                outcome.detail.push_str(&format!(" (over the {limit:?} limit)"));
            }
        }
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.2?}]", outcome.detail, elapsed);
        if !outcome.passed {
            failures += 1;
        }
    };
    let secs = |s| Some(Duration::from_secs(s));
    check("conservation law", secs(5), &mut conservation);
    check("unit of volume", secs(5), &mut unit_of_volume);
    check("minimax brute-force equivalence", secs(10), &mut minimax_equivalence);
    check("noiseless lower bound", secs(5), &mut noiseless_lower_bound);
    check("bounded-lie soundness", secs(30), &mut lie_soundness);
    let start = Instant::now();
    let sweep = run_sweep();
    let sweep_time = start.elapsed();
    check("trend reproduction", None, &mut || {
        let mut o = trend(&sweep);
        if sweep_time > Duration::from_secs(300) {
            o.passed = false;
        }
        o.detail.push_str(&format!(" (sweep {sweep_time:.1?})"));
        o
    });
    check("noise-sweep monotonicity", None, &mut || monotonicity(&sweep));
    check("predictor gradient check", secs(5), &mut gradient_check);
    check("determinism", None, &mut determinism);
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
