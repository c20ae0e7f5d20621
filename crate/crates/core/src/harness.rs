//! Experiment runner: full inference episodes, grids of cells and CSV output.
//!
//! An episode samples a true task and a candidate pool, rolls out an
//! experience pool, then asks `K` preference queries chosen by the configured
//! strategy and answered by the configured oracle. The pick is the candidate
//! with the fewest mismatches (or the posterior mode for the filter baseline).
//!
//! Seeds: the environment stream (true task, pool, experience) depends on the
//! base seed and episode index only, so every cell of a grid sees the same
//! episodes. Strategy and oracle randomness also mixes in the cell index.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{OracleKind, OracleSpec, OracleState};
use crate::preference::{train_score_model, CandidateScores, PairPredictor, PreferenceExample, ScoreModel};
use crate::strategies::{
    anole_select, greedy_select, posterior_update, random_select, sample_query_batch, PosteriorWeights,
    StrategyKind,
};
use crate::tasksim::{
    build_experience_pool, candidate_pool_size, candidate_values, evaluate_adapted_policy, make_training_tasks,
    perfect_scores, sample_candidate_pool, sample_task, true_return, EnvConfig, PointTask, TaskFamily,
    TrainingTaskSet,
};
use crate::ulam::{BudgetConfig, Order, SearchState, SegmentId};

/// Header of the aggregate CSV, in column order.
pub const CSV_COLUMNS: [&str; 15] = [
    "family",
    "strategy",
    "oracle_kind",
    "epsilon",
    "beta",
    "K",
    "K_E",
    "M",
    "B",
    "episodes",
    "identification_rate",
    "identification_std",
    "mean_return",
    "return_std",
    "mean_final_mismatch",
];

/// Uniform-noise levels of the default sweep.
pub const NOISE_SWEEP: [f64; 4] = [0.0, 0.1, 0.2, 0.3];
/// Boltzmann temperatures of the default sweep.
pub const BOLTZMANN_SWEEP: [f64; 3] = [0.5, 1.0, 2.0];

/// How candidates predict preferences during an episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorKind {
    /// Compare true returns under each candidate's decoded task.
    #[default]
    Perfect,
    /// Bilinear Bradley-Terry model fitted once per run on the training tasks.
    Learned {
        #[serde(default = "default_train_pairs")]
        pairs_per_task: usize,
        #[serde(default = "default_train_steps")]
        steps: usize,
        #[serde(default = "default_step_size")]
        step_size: f64,
    },
}

fn default_train_pairs() -> usize {
    200
}
fn default_train_steps() -> usize {
    300
}
fn default_step_size() -> f64 {
    1e-4
}

fn default_family() -> TaskFamily {
    TaskFamily::RandDir
}
fn default_strategy() -> StrategyKind {
    StrategyKind::Anole
}
fn default_oracle() -> OracleSpec {
    OracleSpec::uniform_flip(0.2)
}
fn default_k() -> u32 {
    10
}
fn default_ke() -> u32 {
    2
}
fn default_batch() -> usize {
    crate::strategies::DEFAULT_BATCH_SIZE
}
fn default_training() -> usize {
    10
}
fn default_episodes() -> usize {
    200
}
fn default_experience() -> usize {
    1000
}
fn default_eval() -> usize {
    10
}

/// One experiment cell. JSON field names follow the usual symbols (`K`, `K_E`, `M`, `B`, `N`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_family")]
    pub family: TaskFamily,
    #[serde(default = "default_strategy")]
    pub strategy: StrategyKind,
    #[serde(default = "default_oracle")]
    pub oracle: OracleSpec,
    #[serde(rename = "K", default = "default_k")]
    pub total_queries: u32,
    #[serde(rename = "K_E", default = "default_ke")]
    pub lie_budget: u32,
    /// Candidate pool size; defaults to `floor(2^K / S(K, K_E))`.
    #[serde(rename = "M", default)]
    pub pool_size: Option<usize>,
    #[serde(rename = "B", default = "default_batch")]
    pub batch_size: usize,
    #[serde(rename = "N", default = "default_training")]
    pub training_tasks: usize,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub predictor: PredictorKind,
    /// Segments in each episode's experience pool.
    #[serde(default = "default_experience")]
    pub experience_size: usize,
    /// Rollouts used to score the adapted policy.
    #[serde(default = "default_eval")]
    pub eval_episodes: usize,
    /// Use one pooled candidate's decoded task as the true task.
    #[serde(default)]
    pub true_task_in_pool: bool,
    /// Stop querying once the volume reaches 1.
    #[serde(default)]
    pub early_stop: bool,
    #[serde(default)]
    pub env: EnvConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn budget(&self) -> Result<BudgetConfig> {
        BudgetConfig::new(self.total_queries, self.lie_budget)
    }

    pub fn resolved_pool_size(&self) -> Result<usize> {
        Ok(match self.pool_size {
            Some(m) => m,
            None => candidate_pool_size(&self.budget()?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.budget()?;
        self.oracle.validate(self.total_queries)?;
        self.env.validate()?;
        if self.resolved_pool_size()? == 0 {
            return Err(Error::config("pool size M must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size B must be at least 1"));
        }
        if self.training_tasks < 2 {
            return Err(Error::config("N must be at least 2"));
        }
        if self.experience_size < 2 {
            return Err(Error::config("experience_size must be at least 2"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes must be at least 1"));
        }
        if let StrategyKind::Posterior {
            assumed_flip_rate: Some(eps),
        } = self.strategy
        {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::config("assumed_flip_rate outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn assumed_flip_rate(&self) -> f64 {
        match self.strategy {
            StrategyKind::Posterior {
                assumed_flip_rate: Some(eps),
            } => eps,
            _ if self.oracle.kind == OracleKind::UniformFlip => self.oracle.epsilon,
            _ => 0.2,
        }
    }
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub selected: usize,
    pub selected_mismatches: u32,
    pub identified: bool,
    pub adapted_return: f64,
    /// Total volume after rounds `0..=K`.
    pub volume_trace: Vec<u64>,
    /// Branch volumes of the pair asked in each round.
    pub branch_volumes: Vec<(u64, u64)>,
    /// Whether each answer matched the truthful comparison.
    pub oracle_correct: Vec<bool>,
    pub mismatches: Vec<u32>,
    pub true_task: PointTask,
    /// Pool index whose decoded task is the true task, when one was planted.
    pub true_candidate: Option<usize>,
}

/// Seeds for the two random streams of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeSeeds {
    pub environment: u64,
    pub strategy: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Order-sensitive hash of a seed tuple.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243F_6A88_85A3_08D3, |acc, &p| splitmix(acc ^ splitmix(p)))
}

const TRAINING_STREAM: u64 = 0x7452_4149_4E00;
const ENV_STREAM: u64 = 0x454E_5600;
const STRATEGY_STREAM: u64 = 0x5354_5200;

/// Seeds for episode `episode` of grid cell `cell`.
pub fn episode_seeds(base_seed: u64, cell: usize, episode: usize) -> EpisodeSeeds {
    EpisodeSeeds {
        environment: mix_seed(&[base_seed, ENV_STREAM, episode as u64]),
        strategy: mix_seed(&[base_seed, STRATEGY_STREAM, cell as u64, episode as u64]),
    }
}

/// A validated config with its training tasks and (optionally) trained predictor.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    budget: BudgetConfig,
    pool_size: usize,
    training: TrainingTaskSet,
    model: Option<ScoreModel>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let budget = config.budget()?;
        let pool_size = config.resolved_pool_size()?;
        let training = make_training_tasks(
            config.family,
            config.training_tasks,
            mix_seed(&[config.base_seed, TRAINING_STREAM]),
        )?;
        let model = match config.predictor {
            PredictorKind::Perfect => None,
            PredictorKind::Learned {
                pairs_per_task,
                steps,
                step_size,
            } => Some(train_predictor(
                &training,
                &config.env,
                pairs_per_task,
                steps,
                step_size,
                mix_seed(&[config.base_seed, TRAINING_STREAM, 1]),
            )?),
        };
        Ok(Experiment {
            config,
            budget,
            pool_size,
            training,
            model,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn training(&self) -> &TrainingTaskSet {
        &self.training
    }

    pub fn model(&self) -> Option<&ScoreModel> {
        self.model.as_ref()
    }

    pub fn run_episode(&self, seeds: EpisodeSeeds) -> Result<EpisodeResult> {
        let cfg = &self.config;
        let family = cfg.family;
        let mut env_rng = ChaCha8Rng::seed_from_u64(seeds.environment);

        let pool = sample_candidate_pool(&self.training, self.pool_size, &mut env_rng);
        let (true_task, true_candidate) = if cfg.true_task_in_pool {
            let idx = env_rng.random_range(0..pool.len());
            (crate::tasksim::decode_task(family, &pool[idx])?, Some(idx))
        } else {
            (sample_task(family, &mut env_rng), None)
        };
        let experience = build_experience_pool(&self.training, &cfg.env, cfg.experience_size, &mut env_rng)?;
        let predictor = match &self.model {
            None => perfect_scores(family, &pool, &experience)?,
            Some(model) => {
                let segments: Vec<_> = experience.iter().map(|t| t.segment()).collect();
                CandidateScores::learned(model, &pool, &segments)?
            }
        };
        let returns: Vec<f64> = experience.iter().map(|t| true_return(&true_task, t)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seeds.strategy);
        let mut oracle = OracleState::new(cfg.oracle.clone(), cfg.total_queries, seeds.strategy)?;
        let mut state = SearchState::new(self.budget, pool.len())?;
        let mut posterior = match cfg.strategy {
            StrategyKind::Posterior { .. } => Some(PosteriorWeights::uniform(pool.len(), cfg.assumed_flip_rate())?),
            _ => None,
        };
        let mut branch_log = Vec::with_capacity(cfg.total_queries as usize);
        let mut oracle_correct = Vec::with_capacity(cfg.total_queries as usize);

        while !state.is_finished() {
            if cfg.early_stop && state.is_resolved() {
                break;
            }
            let batch = sample_query_batch(experience.len(), cfg.batch_size, &mut rng)?;
            let selection = match cfg.strategy {
                StrategyKind::Anole => anole_select(&batch, &predictor, &state)?,
                StrategyKind::Greedy => greedy_select(&batch, &predictor, state.mismatches(), &mut rng)?,
                StrategyKind::Random | StrategyKind::Posterior { .. } => random_select(&batch, &mut rng)?,
            };
            let (first, second) = selection.pair;
            let bits = predictor.bits(first, second);
            let volumes = state.branch_volumes(&bits)?;
            let answer = oracle.answer(returns[first], returns[second], Some(volumes))?;
            oracle_correct.push(answer == Order::from_first(returns[first] >= returns[second]));
            if let Some(p) = posterior.as_mut() {
                *p = posterior_update(p, &bits, answer)?;
            }
            state.record(first, second, answer, &bits)?;
            branch_log.push(volumes);
        }
        #[cfg(debug_assertions)]
        state.verify(|c, a, b| predictor.predict(c, a, b))?;

        let selected = match &posterior {
            Some(p) => p.argmax(),
            None => state.decision(),
        };
        let values = candidate_values(family, &pool, &true_task, &cfg.env)?;
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let identified = values[selected] >= best - 1e-9;
        let adapted_return = evaluate_adapted_policy(
            family,
            &pool[selected],
            &true_task,
            &cfg.env,
            cfg.eval_episodes,
            &mut env_rng,
        )?;

        let mut volume_trace = state.volume_trace().to_vec();
        let last = *volume_trace.last().expect("trace is non-empty");
        volume_trace.resize(cfg.total_queries as usize + 1, last);

        Ok(EpisodeResult {
            selected,
            selected_mismatches: state.mismatches()[selected],
            identified,
            adapted_return,
            volume_trace,
            branch_volumes: branch_log,
            oracle_correct,
            mismatches: state.mismatches().to_vec(),
            true_task,
            true_candidate,
        })
    }
}

/// Fits the bilinear predictor on comparisons labelled by each training task.
pub fn train_predictor(
    training: &TrainingTaskSet,
    env: &EnvConfig,
    pairs_per_task: usize,
    steps: usize,
    step_size: f64,
    seed: u64,
) -> Result<ScoreModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let experience = build_experience_pool(training, env, (2 * pairs_per_task).max(2), &mut rng)?;
    let segments: Vec<_> = experience.iter().map(|t| t.segment()).collect();
    let mut dataset = Vec::with_capacity(training.len() * pairs_per_task);
    for (task, mu) in training.tasks.iter().zip(&training.means) {
        for _ in 0..pairs_per_task {
            let a = rng.random_range(0..segments.len());
            let mut b = rng.random_range(0..segments.len() - 1);
            if b >= a {
                b += 1;
            }
            let label = Order::from_first(true_return(task, &experience[a]) >= true_return(task, &experience[b]));
            dataset.push(PreferenceExample {
                z: mu.clone(),
                first: segments[a].clone(),
                second: segments[b].clone(),
                label,
            });
        }
    }
    train_score_model(&dataset, steps, step_size)
}

/// Runs one episode of `config` with a single seed.
pub fn run_episode(config: &ExperimentConfig, seed: u64) -> Result<EpisodeResult> {
    Experiment::new(config.clone())?.run_episode(EpisodeSeeds {
        environment: seed,
        strategy: mix_seed(&[seed, STRATEGY_STREAM]),
    })
}

/// Aggregate statistics of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub family: TaskFamily,
    pub strategy: String,
    pub oracle_kind: String,
    pub epsilon: f64,
    pub beta: f64,
    #[serde(rename = "K")]
    pub total_queries: u32,
    #[serde(rename = "K_E")]
    pub lie_budget: u32,
    #[serde(rename = "M")]
    pub pool_size: usize,
    #[serde(rename = "B")]
    pub batch_size: usize,
    pub episodes: usize,
    pub identification_rate: f64,
    pub identification_std: f64,
    pub mean_return: f64,
    pub return_std: f64,
    pub mean_final_mismatch: f64,
    /// Set when the cell could not be run; metrics are NaN.
    pub error: Option<String>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

impl CellSummary {
    fn header(config: &ExperimentConfig) -> Self {
        CellSummary {
            family: config.family,
            strategy: config.strategy.name().to_string(),
            oracle_kind: config.oracle.kind.name().to_string(),
            epsilon: config.oracle.epsilon,
            beta: config.oracle.beta,
            total_queries: config.total_queries,
            lie_budget: config.lie_budget,
            pool_size: config.resolved_pool_size().unwrap_or(0),
            batch_size: config.batch_size,
            episodes: config.episodes,
            identification_rate: f64::NAN,
            identification_std: f64::NAN,
            mean_return: f64::NAN,
            return_std: f64::NAN,
            mean_final_mismatch: f64::NAN,
            error: None,
        }
    }

    /// Folds episode results in the order given.
    pub fn from_results(config: &ExperimentConfig, results: &[EpisodeResult]) -> Self {
        let ident: Vec<f64> = results.iter().map(|r| if r.identified { 1.0 } else { 0.0 }).collect();
        let returns: Vec<f64> = results.iter().map(|r| r.adapted_return).collect();
        let mism: Vec<f64> = results.iter().map(|r| r.selected_mismatches as f64).collect();
        let (identification_rate, identification_std) = mean_std(&ident);
        let (mean_return, return_std) = mean_std(&returns);
        CellSummary {
            identification_rate,
            identification_std,
            mean_return,
            return_std,
            mean_final_mismatch: mean_std(&mism).0,
            episodes: results.len(),
            ..Self::header(config)
        }
    }

    fn failed(config: &ExperimentConfig, err: &Error) -> Self {
        CellSummary {
            error: Some(err.to_string()),
            ..Self::header(config)
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            self.strategy,
            self.oracle_kind,
            self.epsilon,
            self.beta,
            self.total_queries,
            self.lie_budget,
            self.pool_size,
            self.batch_size,
            self.episodes,
            self.identification_rate,
            self.identification_std,
            self.mean_return,
            self.return_std,
            self.mean_final_mismatch
        )
    }
}

/// Per-cell summaries plus, optionally, every episode's result.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixReport {
    pub cells: Vec<CellSummary>,
    pub episodes: Vec<Vec<EpisodeResult>>,
}

impl MatrixReport {
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for cell in &self.cells {
            let _ = writeln!(out, "{}", cell.csv_row());
        }
        out
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellSummary> {
        self.cells.iter().filter(|c| c.error.is_some())
    }
}

/// Runs every cell with `parallelism` worker threads.
///
/// Results do not depend on `parallelism`: seeds derive from the base seed,
/// cell index and episode index, and aggregation folds in episode order.
pub fn run_matrix(configs: &[ExperimentConfig], parallelism: usize) -> Result<MatrixReport> {
    if configs.is_empty() {
        return Err(Error::config("experiment grid is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let prepared: Vec<Result<Experiment>> = configs.par_iter().map(|c| Experiment::new(c.clone())).collect();
        let jobs: Vec<(usize, usize)> = prepared
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_ok())
            .flat_map(|(cell, p)| {
                let n = p.as_ref().map(|e| e.config.episodes).unwrap_or(0);
                (0..n).map(move |ep| (cell, ep))
            })
            .collect();
        let outcomes: Vec<Result<EpisodeResult>> = jobs
            .par_iter()
            .map(|&(cell, ep)| {
                let exp = prepared[cell].as_ref().expect("filtered to ok cells");
                exp.run_episode(episode_seeds(exp.config.base_seed, cell, ep))
            })
            .collect();

        let mut per_cell: Vec<Vec<Result<EpisodeResult>>> = (0..configs.len()).map(|_| Vec::new()).collect();
        for (&(cell, _), out) in jobs.iter().zip(outcomes) {
            per_cell[cell].push(out);
        }
        let mut cells = Vec::with_capacity(configs.len());
        let mut episodes = Vec::with_capacity(configs.len());
        for (cell, (config, outs)) in configs.iter().zip(per_cell).enumerate() {
            let summary = match &prepared[cell] {
                Err(e) => {
                    episodes.push(Vec::new());
                    CellSummary::failed(config, e)
                }
                Ok(_) => match outs.into_iter().collect::<Result<Vec<_>>>() {
                    Ok(results) => {
                        let s = CellSummary::from_results(config, &results);
                        episodes.push(results);
                        s
                    }
                    Err(e) => {
                        episodes.push(Vec::new());
                        CellSummary::failed(config, &e)
                    }
                },
            };
            cells.push(summary);
        }
        Ok(MatrixReport { cells, episodes })
    })
}

/// A grid over families, oracles and strategies sharing one base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub families: Vec<TaskFamily>,
    #[serde(default)]
    pub oracles: Vec<OracleSpec>,
    #[serde(default)]
    pub strategies: Vec<StrategyKind>,
}

impl SweepGrid {
    /// Uniform-noise sweep over `NOISE_SWEEP` for the given strategies.
    pub fn noise_sweep(base: ExperimentConfig, strategies: Vec<StrategyKind>) -> Self {
        SweepGrid {
            base,
            families: Vec::new(),
            oracles: NOISE_SWEEP.iter().map(|&e| OracleSpec::uniform_flip(e)).collect(),
            strategies,
        }
    }

    /// Boltzmann temperatures from `BOLTZMANN_SWEEP` plus the hack mode at 0.2.
    pub fn alternative_noise(base: ExperimentConfig, strategies: Vec<StrategyKind>) -> Self {
        let mut oracles: Vec<OracleSpec> = BOLTZMANN_SWEEP.iter().map(|&b| OracleSpec::boltzmann(b)).collect();
        oracles.push(OracleSpec::hack_fraction(0.2));
        SweepGrid {
            base,
            families: Vec::new(),
            oracles,
            strategies,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(e.to_string()))
    }

    /// Cells in family-major, then oracle, then strategy order.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let families = if self.families.is_empty() {
            vec![self.base.family]
        } else {
            self.families.clone()
        };
        let oracles = if self.oracles.is_empty() {
            vec![self.base.oracle.clone()]
        } else {
            self.oracles.clone()
        };
        let strategies = if self.strategies.is_empty() {
            vec![self.base.strategy]
        } else {
            self.strategies.clone()
        };
        let mut out = Vec::new();
        for &family in &families {
            for oracle in &oracles {
                for &strategy in &strategies {
                    out.push(ExperimentConfig {
                        family,
                        oracle: oracle.clone(),
                        strategy,
                        ..self.base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Outcome of the noiseless bitstring search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitstringOutcome {
    pub decision: usize,
    pub rounds: u32,
    pub volume_trace: Vec<u64>,
}

/// Candidate `c` prefers the first segment of query `j` iff bit `j` of `c` is set.
///
/// Query `j` compares segments `2j` and `2j + 1`.
#[derive(Debug, Clone, Copy)]
pub struct BitQueries {
    pub bits: u32,
}

impl PairPredictor for BitQueries {
    fn pool_size(&self) -> usize {
        1usize << self.bits
    }

    fn predict(&self, candidate: usize, first: SegmentId, second: SegmentId) -> Order {
        let j = first.min(second) / 2;
        let bit = Order::from_first((candidate >> j) & 1 == 1);
        if first < second {
            bit
        } else {
            bit.flipped()
        }
    }
}

/// ANOLE with `K_E = 0` over all `2^K` bitstrings, every bit query available
/// each round and a perfect oracle for `secret`.
pub fn run_bitstring_search(k: u32, secret: usize) -> Result<BitstringOutcome> {
    if k > 20 {
        return Err(Error::config("bitstring universe limited to K <= 20"));
    }
    let predictor = BitQueries { bits: k };
    if secret >= predictor.pool_size() {
        return Err(Error::contract("secret outside the bitstring universe"));
    }
    let batch = crate::strategies::QueryBatch::new((0..k as usize).map(|j| (2 * j, 2 * j + 1)).collect())?;
    let mut state = SearchState::new(BudgetConfig::new(k, 0)?, predictor.pool_size())?;
    let mut oracle = OracleState::new(OracleSpec::perfect(), k, 0)?;
    let mut rounds = 0;
    while !state.is_finished() {
        let sel = anole_select(&batch, &predictor, &state)?;
        let (a, b) = sel.pair;
        let truth = |seg: SegmentId| if predictor.predict(secret, seg, seg ^ 1).is_first() { 1.0 } else { 0.0 };
        let answer = oracle.answer(truth(a), truth(b), sel.volumes)?;
        state.record(a, b, answer, &predictor.bits(a, b))?;
        rounds += 1;
    }
    Ok(BitstringOutcome {
        decision: state.decision(),
        rounds,
        volume_trace: state.volume_trace().to_vec(),
    })
}
