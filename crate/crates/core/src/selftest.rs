//! Fast property checks run by `anole selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::harness::run_bitstring_search;
use crate::oracles::{OracleSpec, OracleState};
use crate::preference::{preference_loss, preference_loss_gradient, PreferenceExample, ScoreModel, Segment, StepFeature, TaskEmbedding};
use crate::strategies::{anole_select, QueryBatch};
use crate::preference::{CandidateScores, PairPredictor, ScoreRule};
use crate::ulam::{partial_binomial_sum, BudgetConfig, Order, SearchState};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, outcome: Result<std::result::Result<String, String>>) -> Self {
        match outcome {
            Ok(Ok(detail)) => Check { name, passed: true, detail },
            Ok(Err(detail)) => Check { name, passed: false, detail },
            Err(e) => Check { name, passed: false, detail: e.to_string() },
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn random_orders(rng: &mut ChaCha8Rng, n: usize) -> Vec<Order> {
    (0..n).map(|_| Order::from_first(rng.random_bool(0.5))).collect()
}

fn conservation(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = 0;
    for _ in 0..200 {
        let k = rng.random_range(1..=12);
        let ke = rng.random_range(0..=3.min(k));
        let pool = rng.random_range(1..=64);
        let mut state = SearchState::new(BudgetConfig::new(k, ke)?, pool)?;
        for round in 0..k as usize {
            let bits = random_orders(&mut rng, pool);
            let (v1, v2) = state.branch_volumes(&bits)?;
            if v1 + v2 != state.total_volume() {
                return Ok(Err(format!("round {round}: {v1} + {v2} != {}", state.total_volume())));
            }
            let answer = Order::from_first(rng.random_bool(0.5));
            state.record(2 * round, 2 * round + 1, answer, &bits)?;
            steps += 1;
        }
    }
    Ok(Ok(format!("{steps} queries conserve volume")))
}

fn unit_volume(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..200 {
        let k = rng.random_range(1..=10);
        let ke = rng.random_range(0..=2.min(k));
        let pool = rng.random_range(1..=32);
        let mut state = SearchState::new(BudgetConfig::new(k, ke)?, pool)?;
        for round in 0..k as usize {
            let bits = random_orders(&mut rng, pool);
            state.record(2 * round, 2 * round + 1, Order::from_first(rng.random_bool(0.5)), &bits)?;
        }
        let within = state.mismatches().iter().filter(|&&e| e <= ke).count() as u64;
        if state.total_volume() != within {
            return Ok(Err(format!("terminal volume {} with {within} survivors", state.total_volume())));
        }
    }
    Ok(Ok("terminal volume counts survivors".into()))
}

fn minimax(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let pool = rng.random_range(1..=16);
        let segments = 12;
        let scores = (0..pool)
            .map(|_| (0..segments).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let predictor = CandidateScores::new(ScoreRule::ReturnComparison, scores)?;
        let mut pairs = Vec::new();
        while pairs.len() < 20 {
            let a = rng.random_range(0..segments);
            let b = rng.random_range(0..segments);
            if a != b && !pairs.contains(&(a, b)) && !pairs.contains(&(b, a)) {
                pairs.push((a, b));
            }
        }
        let batch = QueryBatch::new(pairs)?;
        let state = SearchState::new(BudgetConfig::new(6, 1)?, pool)?;
        let chosen = anole_select(&batch, &predictor, &state)?;
        let best = batch
            .pairs
            .iter()
            .map(|&(a, b)| {
                let (v1, v2) = state.branch_volumes(&predictor.bits(a, b)).expect("valid bits");
                v1.max(v2)
            })
            .min()
            .expect("batch is non-empty");
        let (v1, v2) = chosen.volumes.expect("minimax reports volumes");
        if v1.max(v2) != best {
            return Ok(Err(format!("picked worst case {} instead of {best}", v1.max(v2))));
        }
    }
    Ok(Ok("selection is minimax over the batch".into()))
}

fn bitstring() -> Result<std::result::Result<String, String>> {
    for k in [4u32, 6, 8, 10] {
        for secret in [0usize, (1 << k) - 1, 5] {
            let out = run_bitstring_search(k, secret)?;
            if out.decision != secret || out.rounds != k {
                return Ok(Err(format!("K={k}: decided {} after {} rounds", out.decision, out.rounds)));
            }
        }
    }
    Ok(Ok("noiseless search finds every secret in K rounds".into()))
}

fn lie_budget(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for episode in 0..100 {
        let pool = 18;
        let truth = rng.random_range(0..pool);
        let budget = BudgetConfig::new(10, 2)?;
        let mut state = SearchState::new(budget, pool)?;
        let mut oracle = OracleState::new(OracleSpec::bounded_adversary(2), 10, episode)?;
        for round in 0..10 {
            let bits = random_orders(&mut rng, pool);
            let volumes = state.branch_volumes(&bits)?;
            let r = if bits[truth].is_first() { (1.0, 0.0) } else { (0.0, 1.0) };
            let answer = oracle.answer(r.0, r.1, Some(volumes))?;
            state.record(2 * round, 2 * round + 1, answer, &bits)?;
        }
        if state.mismatches()[truth] > 2 {
            return Ok(Err(format!("truth eliminated with {} mismatches", state.mismatches()[truth])));
        }
    }
    Ok(Ok("true candidate survives two lies".into()))
}

fn gradient(seed: u64) -> Result<std::result::Result<String, String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, f, h) = (3, 4, 5);
    let segment = |rng: &mut ChaCha8Rng| {
        Segment::new((0..h).map(|_| StepFeature((0..f).map(|_| rng.random_range(-1.0..1.0)).collect())).collect())
    };
    let mut data = Vec::new();
    for _ in 0..20 {
        data.push(PreferenceExample {
            z: TaskEmbedding((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()),
            first: segment(&mut rng)?,
            second: segment(&mut rng)?,
            label: Order::from_first(rng.random_bool(0.5)),
        });
    }
    let weights: Vec<f64> = (0..d * f).map(|_| rng.random_range(-0.5..0.5)).collect();
    let model = ScoreModel::from_weights(d, f, weights.clone())?;
    let (_, grad) = preference_loss_gradient(&model, &data)?;
    let step = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..weights.len() {
        let mut plus = weights.clone();
        plus[i] += step;
        let mut minus = weights.clone();
        minus[i] -= step;
        let numeric = (preference_loss(&ScoreModel::from_weights(d, f, plus)?, &data)?
            - preference_loss(&ScoreModel::from_weights(d, f, minus)?, &data)?)
            / (2.0 * step);
        worst = worst.max((numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-8));
    }
    if worst <= 1e-5 {
        Ok(Ok(format!("max relative error {worst:.1e}")))
    } else {
        Ok(Err(format!("max relative error {worst:.1e}")))
    }
}

fn binomials() -> Result<std::result::Result<String, String>> {
    let cases = [((10, 2), 56), ((10, 0), 1), ((3, 5), 8), ((4, -1), 0)];
    for ((n, m), want) in cases {
        let got = partial_binomial_sum(n, m);
        if got != want {
            return Ok(Err(format!("S({n}, {m}) = {got}, expected {want}")));
        }
    }
    Ok(Ok("partial binomial sums".into()))
}

/// Runs every check with the given seed.
pub fn run_selftest(seed: u64) -> Vec<Check> {
    vec![
        Check::new("binomial sums", binomials()),
        Check::new("volume conservation", conservation(seed)),
        Check::new("unit of volume", unit_volume(seed ^ 1)),
        Check::new("minimax selection", minimax(seed ^ 2)),
        Check::new("noiseless bitstring search", bitstring()),
        Check::new("bounded-lie soundness", lie_budget(seed ^ 3)),
        Check::new("preference gradient", gradient(seed ^ 4)),
    ]
}
