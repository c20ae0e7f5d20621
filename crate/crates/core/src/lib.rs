//! Error-tolerant task inference from noisy trajectory preferences.
//!
//! A pool of candidate task embeddings is narrowed by pairwise preference
//! queries. Each candidate tolerates up to `K_E` wrong answers, and Berlekamp's
//! volume both picks the next query (minimax over a sampled batch) and tracks
//! how much uncertainty remains.
//!
//! - [`ulam`]: volume arithmetic and the search state.
//! - [`preference`]: the bilinear Bradley-Terry predictor and its training.
//! - [`oracles`]: simulated answerers, truthful, noisy and adversarial.
//! - [`strategies`]: query batches and the selection rules.
//! - [`tasksim`]: point-mass task families, rollouts and returns.
//! - [`harness`]: episodes, sweeps and CSV aggregation.
//! - [`session`]: the human-in-the-loop service.

pub mod error;
pub mod harness;
pub mod oracles;
pub mod preference;
pub mod selftest;
pub mod session;
pub mod strategies;
pub mod tasksim;
pub mod ulam;

pub use error::{Error, Result};
pub use harness::{run_episode, run_matrix, EpisodeResult, ExperimentConfig, MatrixReport, SweepGrid};
pub use oracles::{OracleKind, OracleSpec, OracleState};
pub use preference::{CandidateScores, PairPredictor, ScoreModel, Segment, TaskEmbedding};
pub use strategies::{anole_select, StrategyKind};
pub use tasksim::{PointTask, TaskFamily};
pub use ulam::{BudgetConfig, Order, SearchState};
