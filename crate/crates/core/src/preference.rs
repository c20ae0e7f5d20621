//! Trajectory segments, the bilinear ranking score and the Bradley-Terry
//! preference predictor.
//!
//! The score of a step under embedding `z` is `z^T W phi(s, a)`. A segment's
//! score is the sum over its steps, and the probability that the first segment
//! is preferred is the logistic of the score difference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ulam::{Order, SegmentId};

/// State-action features `phi(s, a)` of one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepFeature(pub Vec<f64>);

impl StepFeature {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Fixed-length run of step features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub steps: Vec<StepFeature>,
}

impl Segment {
    pub fn new(steps: Vec<StepFeature>) -> Result<Self> {
        let dim = steps.first().map_or(0, StepFeature::dim);
        if steps.iter().any(|s| s.dim() != dim) {
            return Err(Error::contract("segment steps have inconsistent feature dimensions"));
        }
        if steps.iter().flat_map(|s| &s.0).any(|v| !v.is_finite()) {
            return Err(Error::contract("segment contains non-finite features"));
        }
        Ok(Segment { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.steps.first().map_or(0, StepFeature::dim)
    }

    /// `sum_t phi_t`; the bilinear score only depends on this.
    pub fn feature_sum(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.feature_dim()];
        for step in &self.steps {
            for (acc, v) in total.iter_mut().zip(&step.0) {
                *acc += v;
            }
        }
        total
    }
}

/// Latent task embedding `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskEmbedding(pub Vec<f64>);

impl TaskEmbedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, c: f64) -> TaskEmbedding {
        TaskEmbedding(self.0.iter().map(|v| v * c).collect())
    }
}

/// Weights `W` (d x F, row-major) of the bilinear score `z^T W phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScoreModelDoc", into = "ScoreModelDoc")]
pub struct ScoreModel {
    embed_dim: usize,
    feature_dim: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScoreModelDoc {
    dims: [usize; 2],
    weights: Vec<f64>,
}

impl TryFrom<ScoreModelDoc> for ScoreModel {
    type Error = Error;

    fn try_from(doc: ScoreModelDoc) -> Result<Self> {
        ScoreModel::from_weights(doc.dims[0], doc.dims[1], doc.weights)
    }
}

impl From<ScoreModel> for ScoreModelDoc {
    fn from(m: ScoreModel) -> Self {
        ScoreModelDoc {
            dims: [m.embed_dim, m.feature_dim],
            weights: m.weights,
        }
    }
}

impl ScoreModel {
    pub fn zeros(embed_dim: usize, feature_dim: usize) -> Self {
        ScoreModel {
            embed_dim,
            feature_dim,
            weights: vec![0.0; embed_dim * feature_dim],
        }
    }

    pub fn from_weights(embed_dim: usize, feature_dim: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != embed_dim * feature_dim {
            return Err(Error::contract(format!(
                "{} weights for a {embed_dim}x{feature_dim} model",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::contract("score model weights must be finite"));
        }
        Ok(ScoreModel {
            embed_dim,
            feature_dim,
            weights,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.embed_dim, self.feature_dim)
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `z^T W v` for a feature-space vector `v`.
    pub fn bilinear(&self, z: &TaskEmbedding, v: &[f64]) -> Result<f64> {
        if z.dim() != self.embed_dim || v.len() != self.feature_dim {
            return Err(Error::contract(format!(
                "model is {}x{}, got embedding of dim {} and features of dim {}",
                self.embed_dim,
                self.feature_dim,
                z.dim(),
                v.len()
            )));
        }
        Ok(z.0
            .iter()
            .zip(self.weights.chunks_exact(self.feature_dim))
            .map(|(zi, row)| zi * row.iter().zip(v).map(|(w, x)| w * x).sum::<f64>())
            .sum())
    }

    pub fn segment_score(&self, z: &TaskEmbedding, seg: &Segment) -> Result<f64> {
        if seg.is_empty() {
            return Ok(0.0);
        }
        self.bilinear(z, &seg.feature_sum())
    }

    /// `P(first > second)` under the Bradley-Terry model.
    pub fn predict_preference(&self, z: &TaskEmbedding, first: &Segment, second: &Segment) -> Result<f64> {
        if first.len() != second.len() {
            return Err(Error::contract(format!(
                "segments of different lengths {} and {}",
                first.len(),
                second.len()
            )));
        }
        Ok(logistic(self.segment_score(z, first)? - self.segment_score(z, second)?))
    }

    pub fn predicted_order(&self, z: &TaskEmbedding, first: &Segment, second: &Segment) -> Result<Order> {
        Ok(order_from_probability(self.predict_preference(z, first, second)?))
    }
}

/// Numerically stable `1 / (1 + e^{-x})`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Ties at exactly one half count as first preferred.
pub fn order_from_probability(p: f64) -> Order {
    Order::from_first(p >= 0.5)
}

pub fn segment_score(model: &ScoreModel, z: &TaskEmbedding, seg: &Segment) -> Result<f64> {
    model.segment_score(z, seg)
}

pub fn predict_preference(model: &ScoreModel, z: &TaskEmbedding, first: &Segment, second: &Segment) -> Result<f64> {
    model.predict_preference(z, first, second)
}

pub fn predicted_order(model: &ScoreModel, z: &TaskEmbedding, first: &Segment, second: &Segment) -> Result<Order> {
    model.predicted_order(z, first, second)
}

/// Per-candidate predicted order for one pair.
pub fn candidate_prediction_bits(
    model: &ScoreModel,
    pool: &[TaskEmbedding],
    pair: (&Segment, &Segment),
) -> Result<Vec<Order>> {
    if pool.is_empty() {
        return Err(Error::contract("candidate pool is empty"));
    }
    pool.iter()
        .map(|z| model.predicted_order(z, pair.0, pair.1))
        .collect()
}

/// One labelled comparison used to fit the score model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceExample {
    pub z: TaskEmbedding,
    pub first: Segment,
    pub second: Segment,
    pub label: Order,
}

// z and the summed feature difference are all the loss needs.
struct PreparedExample {
    z: Vec<f64>,
    diff: Vec<f64>,
    target: f64,
}

fn prepare(dataset: &[PreferenceExample]) -> Result<(usize, usize, Vec<PreparedExample>)> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::contract("training dataset is empty"))?;
    let embed_dim = first.z.dim();
    let feature_dim = first.first.feature_dim();
    let prepared = dataset
        .iter()
        .map(|ex| {
            if ex.z.dim() != embed_dim
                || ex.first.feature_dim() != feature_dim
                || ex.second.feature_dim() != feature_dim
            {
                return Err(Error::contract("inconsistent dimensions in training dataset"));
            }
            if ex.first.len() != ex.second.len() {
                return Err(Error::contract("training pair segments differ in length"));
            }
            let diff = ex
                .first
                .feature_sum()
                .iter()
                .zip(ex.second.feature_sum())
                .map(|(a, b)| a - b)
                .collect();
            Ok(PreparedExample {
                z: ex.z.0.clone(),
                diff,
                target: if ex.label.is_first() { 1.0 } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((embed_dim, feature_dim, prepared))
}

fn loss_and_grad(weights: &[f64], feature_dim: usize, data: &[PreparedExample]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    let n = data.len() as f64;
    for ex in data {
        let margin: f64 = ex
            .z
            .iter()
            .zip(weights.chunks_exact(feature_dim))
            .map(|(zi, row)| zi * row.iter().zip(&ex.diff).map(|(w, x)| w * x).sum::<f64>())
            .sum();
        // binary cross entropy of sigmoid(margin) against the label
        loss += ex.target * softplus(-margin) + (1.0 - ex.target) * softplus(margin);
        let residual = logistic(margin) - ex.target;
        for (i, zi) in ex.z.iter().enumerate() {
            let row = &mut grad[i * feature_dim..(i + 1) * feature_dim];
            for (g, x) in row.iter_mut().zip(&ex.diff) {
                *g += residual * zi * x;
            }
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

/// Mean binary cross entropy of the model on `dataset`.
pub fn preference_loss(model: &ScoreModel, dataset: &[PreferenceExample]) -> Result<f64> {
    Ok(preference_loss_gradient(model, dataset)?.0)
}

/// Loss and its gradient with respect to the row-major weights.
pub fn preference_loss_gradient(model: &ScoreModel, dataset: &[PreferenceExample]) -> Result<(f64, Vec<f64>)> {
    let (embed_dim, feature_dim, data) = prepare(dataset)?;
    if (embed_dim, feature_dim) != model.dims() {
        return Err(Error::contract("model dimensions do not match the dataset"));
    }
    Ok(loss_and_grad(&model.weights, feature_dim, &data))
}

/// Full-batch gradient descent on the preference loss, starting from zero weights.
pub fn train_score_model(dataset: &[PreferenceExample], steps: usize, step_size: f64) -> Result<ScoreModel> {
    let (embed_dim, feature_dim, data) = prepare(dataset)?;
    let mut model = ScoreModel::zeros(embed_dim, feature_dim);
    for step in 0..steps {
        let (loss, grad) = loss_and_grad(&model.weights, feature_dim, &data);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training(format!("non-finite loss or gradient at step {step}")));
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= step_size * g;
        }
    }
    if model.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Training("weights diverged".into()));
    }
    Ok(model)
}

/// Per-candidate predicted orders over pairs of an indexed segment pool.
pub trait PairPredictor {
    fn pool_size(&self) -> usize;

    fn predict(&self, candidate: usize, first: SegmentId, second: SegmentId) -> Order;

    fn bits(&self, first: SegmentId, second: SegmentId) -> Vec<Order> {
        (0..self.pool_size())
            .map(|c| self.predict(c, first, second))
            .collect()
    }
}

/// How a pair of precomputed segment scores becomes an order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    /// Scores are Bradley-Terry logits from a learned model.
    BradleyTerry,
    /// Scores are true returns under each candidate's decoded task.
    ReturnComparison,
}

/// Candidate-by-segment score matrix backing a [`PairPredictor`].
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScores {
    rule: ScoreRule,
    scores: Vec<Vec<f64>>,
}

impl CandidateScores {
    pub fn new(rule: ScoreRule, scores: Vec<Vec<f64>>) -> Result<Self> {
        let width = scores.first().map_or(0, Vec::len);
        if scores.iter().any(|row| row.len() != width) {
            return Err(Error::contract("ragged candidate score matrix"));
        }
        Ok(CandidateScores { rule, scores })
    }

    /// Scores every segment under every candidate with a learned model.
    pub fn learned(model: &ScoreModel, pool: &[TaskEmbedding], segments: &[Segment]) -> Result<Self> {
        let sums: Vec<Vec<f64>> = segments.iter().map(Segment::feature_sum).collect();
        let scores = pool
            .iter()
            .map(|z| sums.iter().map(|s| model.bilinear(z, s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(ScoreRule::BradleyTerry, scores)
    }

    pub fn rule(&self) -> ScoreRule {
        self.rule
    }

    pub fn score(&self, candidate: usize, segment: SegmentId) -> f64 {
        self.scores[candidate][segment]
    }
}

impl PairPredictor for CandidateScores {
    fn pool_size(&self) -> usize {
        self.scores.len()
    }

    fn predict(&self, candidate: usize, first: SegmentId, second: SegmentId) -> Order {
        let row = &self.scores[candidate];
        match self.rule {
            ScoreRule::BradleyTerry => order_from_probability(logistic(row[first] - row[second])),
            ScoreRule::ReturnComparison => Order::from_first(row[first] >= row[second]),
        }
    }
}
