//! Simulated preference oracles that compare ground-truth returns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::logistic;
use crate::ulam::Order;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Always truthful.
    Perfect,
    /// Truthful answer flipped independently with probability `epsilon`.
    UniformFlip,
    /// First preferred with probability `logistic(beta * (r1 - r2))`.
    Boltzmann,
    /// Lies on the first `ceil(fraction * K)` queries, truthful afterwards.
    HackFraction,
    /// Spends up to `lie_budget` lies wherever lying keeps the larger volume alive.
    BoundedAdversary,
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Perfect => "perfect",
            OracleKind::UniformFlip => "uniform_flip",
            OracleKind::Boltzmann => "boltzmann",
            OracleKind::HackFraction => "hack_fraction",
            OracleKind::BoundedAdversary => "bounded_adversary",
        }
    }
}

fn default_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub kind: OracleKind,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default)]
    pub lie_budget: u32,
    #[serde(default)]
    pub seed: u64,
}

impl OracleSpec {
    fn base(kind: OracleKind) -> Self {
        OracleSpec {
            kind,
            epsilon: 0.0,
            beta: 0.0,
            fraction: default_fraction(),
            lie_budget: 0,
            seed: 0,
        }
    }

    pub fn perfect() -> Self {
        Self::base(OracleKind::Perfect)
    }

    pub fn uniform_flip(epsilon: f64) -> Self {
        OracleSpec {
            epsilon,
            ..Self::base(OracleKind::UniformFlip)
        }
    }

    pub fn boltzmann(beta: f64) -> Self {
        OracleSpec {
            beta,
            ..Self::base(OracleKind::Boltzmann)
        }
    }

    pub fn hack_fraction(fraction: f64) -> Self {
        OracleSpec {
            fraction,
            ..Self::base(OracleKind::HackFraction)
        }
    }

    pub fn bounded_adversary(lie_budget: u32) -> Self {
        OracleSpec {
            lie_budget,
            ..Self::base(OracleKind::BoundedAdversary)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks parameter domains against a query budget `K`.
    pub fn validate(&self, total_queries: u32) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::config(format!("fraction {} outside [0, 1]", self.fraction)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!("beta {} must be a nonnegative real", self.beta)));
        }
        if self.lie_budget > total_queries {
            return Err(Error::config(format!(
                "lie_budget {} exceeds the query budget {total_queries}",
                self.lie_budget
            )));
        }
        Ok(())
    }
}

/// An oracle in the middle of an episode.
#[derive(Debug, Clone)]
pub struct OracleState {
    spec: OracleSpec,
    total_queries: u32,
    queries_answered: u32,
    lies_used: u32,
    rng: ChaCha8Rng,
}

impl OracleState {
    /// `stream_seed` is mixed with `spec.seed` so episodes draw independent noise.
    pub fn new(spec: OracleSpec, total_queries: u32, stream_seed: u64) -> Result<Self> {
        spec.validate(total_queries)?;
        let rng = ChaCha8Rng::seed_from_u64(spec.seed ^ stream_seed.rotate_left(17));
        Ok(OracleState {
            spec,
            total_queries,
            queries_answered: 0,
            lies_used: 0,
            rng,
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn queries_answered(&self) -> u32 {
        self.queries_answered
    }

    /// Answers that differed from the truthful comparison so far.
    pub fn lies_used(&self) -> u32 {
        self.lies_used
    }

    fn hacked_queries(&self) -> u32 {
        (self.spec.fraction * self.total_queries as f64).ceil() as u32
    }

    /// Answers one query given the true returns of the two presented segments.
    ///
    /// `branch_volumes` are the `(first preferred, second preferred)` volumes of
    /// the pending query; only the bounded adversary needs them.
    pub fn answer(&mut self, return_first: f64, return_second: f64, branch_volumes: Option<(u64, u64)>) -> Result<Order> {
        if !return_first.is_finite() || !return_second.is_finite() {
            return Err(Error::contract("oracle received non-finite returns"));
        }
        let truth = Order::from_first(return_first >= return_second);
        let answer = match self.spec.kind {
            OracleKind::Perfect => truth,
            OracleKind::UniformFlip => {
                if self.rng.random_bool(self.spec.epsilon) {
                    truth.flipped()
                } else {
                    truth
                }
            }
            OracleKind::Boltzmann => {
                let p = logistic(self.spec.beta * (return_first - return_second));
                Order::from_first(self.rng.random::<f64>() < p)
            }
            OracleKind::HackFraction => {
                if self.queries_answered < self.hacked_queries() {
                    truth.flipped()
                } else {
                    truth
                }
            }
            OracleKind::BoundedAdversary => {
                let (first, second) = branch_volumes.ok_or_else(|| {
                    Error::contract("bounded adversary requires the pending branch volumes")
                })?;
                let (truthful_volume, lie_volume) = match truth {
                    Order::FirstPreferred => (first, second),
                    Order::SecondPreferred => (second, first),
                };
                if self.lies_used < self.spec.lie_budget && lie_volume > truthful_volume {
                    truth.flipped()
                } else {
                    truth
                }
            }
        };
        if answer != truth {
            self.lies_used += 1;
        }
        self.queries_answered += 1;
        Ok(answer)
    }
}
