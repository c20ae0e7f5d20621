//! Point-mass task families used as a desk-scale benchmark.
//!
//! An agent moves in the plane with `pos' = pos + action`, `|action| <= action_bound`.
//! Four families vary the reward: forward/backward motion along x, a target
//! speed, a target direction and a target location. Policies are analytic:
//! they decode a task from the leading embedding coordinates, take the
//! one-step greedy action for it and add clipped Gaussian noise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::{CandidateScores, ScoreRule, Segment, StepFeature, TaskEmbedding};
use crate::ulam::{partial_binomial_sum, BudgetConfig};

/// Embedding dimension used throughout the benchmark.
pub const DEFAULT_EMBED_DIM: usize = 5;
/// Mixture standard deviation around each training task's embedding.
pub const DEFAULT_SIGMA0: f64 = 0.1;
/// Number of features in each step: displacement (2), speed, squared speed,
/// next position (2), squared distance from the origin.
pub const STEP_FEATURE_DIM: usize = 7;

pub const VEL_RANGE: (f64, f64) = (0.5, 2.0);
pub const GOAL_BOUND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "&'static str")]
pub enum TaskFamily {
    FwdBack,
    RandVel,
    RandDir,
    RandGoal,
}

impl TaskFamily {
    pub const ALL: [TaskFamily; 4] = [
        TaskFamily::FwdBack,
        TaskFamily::RandVel,
        TaskFamily::RandDir,
        TaskFamily::RandGoal,
    ];

    /// Number of leading embedding coordinates that encode the task.
    pub fn param_dim(self) -> usize {
        match self {
            TaskFamily::FwdBack | TaskFamily::RandVel => 1,
            TaskFamily::RandDir | TaskFamily::RandGoal => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskFamily::FwdBack => "FwdBack",
            TaskFamily::RandVel => "RandVel",
            TaskFamily::RandDir => "RandDir",
            TaskFamily::RandGoal => "RandGoal",
        }
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<TaskFamily> for &'static str {
    fn from(f: TaskFamily) -> Self {
        f.name()
    }
}

impl TryFrom<String> for TaskFamily {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for TaskFamily {
    type Err = Error;

    /// Accepts `RandDir`, `rand_dir`, `rand-dir` or `Point-RandDir`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let key = key.strip_prefix("point").unwrap_or(&key);
        match key {
            "fwdback" => Ok(TaskFamily::FwdBack),
            "randvel" => Ok(TaskFamily::RandVel),
            "randdir" => Ok(TaskFamily::RandDir),
            "randgoal" => Ok(TaskFamily::RandGoal),
            _ => Err(Error::config(format!("unknown task family {s:?}"))),
        }
    }
}

/// A concrete task: family plus its parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTask {
    pub family: TaskFamily,
    pub param: Vec<f64>,
}

impl PointTask {
    pub fn new(family: TaskFamily, param: Vec<f64>) -> Result<Self> {
        if param.len() != family.param_dim() || param.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("bad parameter {param:?} for {family}")));
        }
        let ok = match family {
            TaskFamily::FwdBack => param[0] == 1.0 || param[0] == -1.0,
            TaskFamily::RandVel => (VEL_RANGE.0..=VEL_RANGE.1).contains(&param[0]),
            TaskFamily::RandDir => ((param[0].powi(2) + param[1].powi(2)).sqrt() - 1.0).abs() < 1e-9,
            TaskFamily::RandGoal => param.iter().all(|v| v.abs() <= GOAL_BOUND),
        };
        if !ok {
            return Err(Error::config(format!("parameter {param:?} outside the {family} domain")));
        }
        Ok(PointTask { family, param })
    }

    pub fn fwd_back(sign: f64) -> Self {
        PointTask {
            family: TaskFamily::FwdBack,
            param: vec![if sign >= 0.0 { 1.0 } else { -1.0 }],
        }
    }

    pub fn rand_dir(angle: f64) -> Self {
        PointTask {
            family: TaskFamily::RandDir,
            param: vec![angle.cos(), angle.sin()],
        }
    }

    /// Embedding of this task: its parameter padded with zeros to `dim`, with
    /// a constant 1 in the last slot when there is room for it.
    pub fn embedding(&self, dim: usize) -> TaskEmbedding {
        let mut z = self.param.clone();
        if dim > z.len() {
            z.resize(dim, 0.0);
            z[dim - 1] = 1.0;
        }
        TaskEmbedding(z)
    }
}

/// Draws a task uniformly from the family's parameter domain.
pub fn sample_task<R: Rng + ?Sized>(family: TaskFamily, rng: &mut R) -> PointTask {
    match family {
        TaskFamily::FwdBack => PointTask::fwd_back(if rng.random_bool(0.5) { 1.0 } else { -1.0 }),
        TaskFamily::RandVel => PointTask {
            family,
            param: vec![rng.random_range(VEL_RANGE.0..=VEL_RANGE.1)],
        },
        TaskFamily::RandDir => PointTask::rand_dir(rng.random_range(0.0..std::f64::consts::TAU)),
        TaskFamily::RandGoal => PointTask {
            family,
            param: vec![
                rng.random_range(-GOAL_BOUND..=GOAL_BOUND),
                rng.random_range(-GOAL_BOUND..=GOAL_BOUND),
            ],
        },
    }
}

/// Task that an embedding's policy pursues.
pub fn decode_task(family: TaskFamily, z: &TaskEmbedding) -> Result<PointTask> {
    if z.dim() < family.param_dim() {
        return Err(Error::contract(format!(
            "embedding of dim {} cannot encode {family}",
            z.dim()
        )));
    }
    let v = &z.0;
    Ok(match family {
        TaskFamily::FwdBack => PointTask::fwd_back(v[0]),
        TaskFamily::RandVel => PointTask {
            family,
            param: vec![v[0].clamp(VEL_RANGE.0, VEL_RANGE.1)],
        },
        TaskFamily::RandDir => {
            let norm = v[0].hypot(v[1]);
            let param = if norm > 0.0 {
                vec![v[0] / norm, v[1] / norm]
            } else {
                vec![1.0, 0.0]
            };
            PointTask { family, param }
        }
        TaskFamily::RandGoal => PointTask {
            family,
            param: vec![v[0].clamp(-GOAL_BOUND, GOAL_BOUND), v[1].clamp(-GOAL_BOUND, GOAL_BOUND)],
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub horizon: usize,
    pub action_bound: f64,
    pub action_noise_sigma: f64,
    /// Time per step; speed is displacement divided by `dt`.
    pub dt: f64,
    pub start: [f64; 2],
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            horizon: 64,
            action_bound: 0.25,
            action_noise_sigma: 0.05,
            dt: 0.125,
            start: [0.0, 0.0],
        }
    }
}

impl EnvConfig {
    pub fn noiseless(&self) -> Self {
        EnvConfig {
            action_noise_sigma: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(self.action_bound > 0.0 && self.dt > 0.0 && self.action_noise_sigma >= 0.0) {
            return Err(Error::config("action bound and dt must be positive, noise nonnegative"));
        }
        Ok(())
    }
}

/// A rollout: start position and the per-step displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub positions: Vec<[f64; 2]>,
    pub actions: Vec<[f64; 2]>,
    pub dt: f64,
}

impl Trajectory {
    pub fn from_actions(start: [f64; 2], actions: Vec<[f64; 2]>, dt: f64) -> Self {
        let mut positions = Vec::with_capacity(actions.len() + 1);
        let mut pos = start;
        positions.push(pos);
        for a in &actions {
            pos = [pos[0] + a[0], pos[1] + a[1]];
            positions.push(pos);
        }
        Trajectory { positions, actions, dt }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn final_position(&self) -> [f64; 2] {
        *self.positions.last().expect("positions include the start")
    }

    /// `[dx, dy, speed, speed^2, next x, next y, |next|^2]` per step.
    ///
    /// Squared goal distance and squared speed error expand into these
    /// goal-free terms, so every family's reward is nearly bilinear in them.
    pub fn segment(&self) -> Segment {
        let steps = self
            .actions
            .iter()
            .zip(&self.positions[1..])
            .map(|(a, p)| {
                let speed = a[0].hypot(a[1]) / self.dt;
                StepFeature(vec![a[0], a[1], speed, speed * speed, p[0], p[1], p[0] * p[0] + p[1] * p[1]])
            })
            .collect();
        Segment { steps }
    }

    /// Positions as `[x, y]` points.
    pub fn polyline(&self) -> Vec<[f64; 2]> {
        self.positions.clone()
    }
}

fn step_reward(task: &PointTask, action: [f64; 2], next: [f64; 2], dt: f64) -> f64 {
    let p = &task.param;
    match task.family {
        TaskFamily::FwdBack => p[0] * action[0],
        TaskFamily::RandVel => -(action[0].hypot(action[1]) / dt - p[0]).abs(),
        TaskFamily::RandDir => p[0] * action[0] + p[1] * action[1],
        TaskFamily::RandGoal => -(next[0] - p[0]).hypot(next[1] - p[1]),
    }
}

/// Ground-truth return of a trajectory under a task.
pub fn true_return(task: &PointTask, traj: &Trajectory) -> f64 {
    traj.actions
        .iter()
        .zip(&traj.positions[1..])
        .map(|(&a, &next)| step_reward(task, a, next, traj.dt))
        .sum()
}

/// Noise-free action maximising the one-step reward of `task` from `pos`.
pub fn greedy_action(task: &PointTask, pos: [f64; 2], env: &EnvConfig) -> [f64; 2] {
    let p = &task.param;
    let bound = env.action_bound;
    match task.family {
        TaskFamily::FwdBack => [p[0] * bound, 0.0],
        TaskFamily::RandVel => [(p[0] * env.dt).min(bound), 0.0],
        TaskFamily::RandDir => [p[0] * bound, p[1] * bound],
        TaskFamily::RandGoal => {
            let (dx, dy) = (p[0] - pos[0], p[1] - pos[1]);
            let dist = dx.hypot(dy);
            if dist <= bound {
                [dx, dy]
            } else {
                [dx / dist * bound, dy / dist * bound]
            }
        }
    }
}

fn clip(action: [f64; 2], bound: f64) -> [f64; 2] {
    let norm = action[0].hypot(action[1]);
    if norm > bound {
        [action[0] / norm * bound, action[1] / norm * bound]
    } else {
        action
    }
}

fn noisy_action<R: Rng + ?Sized>(task: &PointTask, pos: [f64; 2], env: &EnvConfig, rng: &mut R) -> [f64; 2] {
    let mut a = greedy_action(task, pos, env);
    if env.action_noise_sigma > 0.0 {
        let noise = Normal::new(0.0, env.action_noise_sigma).expect("sigma is finite");
        a[0] += noise.sample(rng);
        a[1] += noise.sample(rng);
    }
    clip(a, env.action_bound)
}

/// One action of the analytic policy conditioned on `z`.
pub fn analytic_policy_step<R: Rng + ?Sized>(
    family: TaskFamily,
    z: &TaskEmbedding,
    pos: [f64; 2],
    rng: &mut R,
    env: &EnvConfig,
) -> Result<[f64; 2]> {
    Ok(noisy_action(&decode_task(family, z)?, pos, env, rng))
}

/// Rolls out the policy that pursues `task` directly.
pub fn rollout_task<R: Rng + ?Sized>(task: &PointTask, env: &EnvConfig, rng: &mut R) -> Trajectory {
    let mut pos = env.start;
    let mut actions = Vec::with_capacity(env.horizon);
    for _ in 0..env.horizon {
        let a = noisy_action(task, pos, env, rng);
        pos = [pos[0] + a[0], pos[1] + a[1]];
        actions.push(a);
    }
    Trajectory::from_actions(env.start, actions, env.dt)
}

pub fn simulate_trajectory<R: Rng + ?Sized>(
    family: TaskFamily,
    z: &TaskEmbedding,
    env: &EnvConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    env.validate()?;
    Ok(rollout_task(&decode_task(family, z)?, env, rng))
}

/// Training tasks with their mixture components `N(mu_i, sigma_i^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTaskSet {
    pub family: TaskFamily,
    pub tasks: Vec<PointTask>,
    pub means: Vec<TaskEmbedding>,
    pub sigmas: Vec<Vec<f64>>,
}

impl TrainingTaskSet {
    pub fn from_tasks(tasks: Vec<PointTask>, embed_dim: usize, sigma0: f64) -> Result<Self> {
        let family = tasks
            .first()
            .map(|t| t.family)
            .ok_or_else(|| Error::config("training task set is empty"))?;
        if tasks.iter().any(|t| t.family != family) {
            return Err(Error::config("training tasks mix families"));
        }
        if embed_dim < family.param_dim() || !(sigma0 >= 0.0 && sigma0.is_finite()) {
            return Err(Error::config("embedding dimension or sigma0 out of range"));
        }
        let means = tasks.iter().map(|t| t.embedding(embed_dim)).collect();
        let sigmas = vec![vec![sigma0; embed_dim]; tasks.len()];
        Ok(TrainingTaskSet {
            family,
            tasks,
            means,
            sigmas,
        })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

/// `n` tasks drawn uniformly from the family, embedded with default dimension and sigma.
pub fn make_training_tasks(family: TaskFamily, n: usize, seed: u64) -> Result<TrainingTaskSet> {
    make_training_tasks_with(family, n, seed, DEFAULT_EMBED_DIM, DEFAULT_SIGMA0)
}

pub fn make_training_tasks_with(
    family: TaskFamily,
    n: usize,
    seed: u64,
    embed_dim: usize,
    sigma0: f64,
) -> Result<TrainingTaskSet> {
    use rand::SeedableRng;
    if n < 2 {
        return Err(Error::config("at least two training tasks are required"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tasks = (0..n)
        .map(|i| match (family, i) {
            // both directions are always present
            (TaskFamily::FwdBack, 0) => PointTask::fwd_back(1.0),
            (TaskFamily::FwdBack, 1) => PointTask::fwd_back(-1.0),
            _ => sample_task(family, &mut rng),
        })
        .collect();
    TrainingTaskSet::from_tasks(tasks, embed_dim, sigma0)
}

/// `floor(2^K / S(K, K_E))`, at least 1.
pub fn candidate_pool_size(config: &BudgetConfig) -> usize {
    let k = config.total_queries();
    let per_candidate = partial_binomial_sum(k, config.lie_budget() as i64);
    ((1u64 << k) / per_candidate).max(1) as usize
}

/// `m` draws from the uniform mixture of the training components.
pub fn sample_candidate_pool<R: Rng + ?Sized>(training: &TrainingTaskSet, m: usize, rng: &mut R) -> Vec<TaskEmbedding> {
    (0..m)
        .map(|_| {
            let i = rng.random_range(0..training.len());
            let z = training.means[i]
                .0
                .iter()
                .zip(&training.sigmas[i])
                .map(|(&mu, &sigma)| {
                    if sigma > 0.0 {
                        mu + sigma * { let n: f64 = rand_distr::StandardNormal.sample(rng); n }
                    } else {
                        mu
                    }
                })
                .collect();
            TaskEmbedding(z)
        })
        .collect()
}

/// Rollouts under embeddings drawn from the training mixture.
pub fn build_experience_pool<R: Rng + ?Sized>(
    training: &TrainingTaskSet,
    env: &EnvConfig,
    size: usize,
    rng: &mut R,
) -> Result<Vec<Trajectory>> {
    let behaviours = sample_candidate_pool(training, size, rng);
    behaviours
        .iter()
        .map(|z| simulate_trajectory(training.family, z, env, rng))
        .collect()
}

/// Predictor that ranks segments by their true return under each candidate's decoded task.
pub fn perfect_scores(family: TaskFamily, pool: &[TaskEmbedding], segments: &[Trajectory]) -> Result<CandidateScores> {
    let rows = pool
        .iter()
        .map(|z| {
            let task = decode_task(family, z)?;
            Ok(segments.iter().map(|t| true_return(&task, t)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    CandidateScores::new(ScoreRule::ReturnComparison, rows)
}

/// Mean true return of the policy for `z_selected` over `episodes` rollouts.
pub fn evaluate_adapted_policy<R: Rng + ?Sized>(
    family: TaskFamily,
    z_selected: &TaskEmbedding,
    true_task: &PointTask,
    env: &EnvConfig,
    episodes: usize,
    rng: &mut R,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::contract("evaluation needs at least one episode"));
    }
    let mut total = 0.0;
    for _ in 0..episodes {
        total += true_return(true_task, &simulate_trajectory(family, z_selected, env, rng)?);
    }
    Ok(total / episodes as f64)
}

/// Noise-free return of each candidate's policy under the true task.
pub fn candidate_values(
    family: TaskFamily,
    pool: &[TaskEmbedding],
    true_task: &PointTask,
    env: &EnvConfig,
) -> Result<Vec<f64>> {
    use rand::SeedableRng;
    let quiet = env.noiseless();
    // the rng is never drawn from without noise
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    pool.iter()
        .map(|z| Ok(true_return(true_task, &rollout_task(&decode_task(family, z)?, &quiet, &mut rng))))
        .collect()
}
