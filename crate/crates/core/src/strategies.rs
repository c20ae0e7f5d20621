//! Query-generation strategies.
//!
//! Every strategy picks one pair out of a mini-batch sampled from the
//! experience pool. ANOLE minimises the larger of the two branch volumes,
//! greedy binary search balances the candidates that have never disagreed
//! with the oracle, random query picks uniformly, and the posterior filter
//! pairs random queries with a discrete Bayes update over the pool.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preference::PairPredictor;
use crate::ulam::{Order, SearchState, SegmentId};

pub type SegmentPair = (SegmentId, SegmentId);

/// Default mini-batch size.
pub const DEFAULT_BATCH_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBatch {
    pub pairs: Vec<SegmentPair>,
}

impl QueryBatch {
    pub fn new(pairs: Vec<SegmentPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::contract("query batch is empty"));
        }
        if pairs.iter().any(|(a, b)| a == b) {
            return Err(Error::contract("query pair compares a segment with itself"));
        }
        Ok(QueryBatch { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Draws `batch_size` distinct unordered pairs uniformly from a pool of
/// `pool_len` segments. The batch is capped at the number of distinct pairs.
pub fn sample_query_batch<R: Rng + ?Sized>(pool_len: usize, batch_size: usize, rng: &mut R) -> Result<QueryBatch> {
    if pool_len < 2 {
        return Err(Error::contract(format!(
            "experience pool holds {pool_len} segments, need at least 2"
        )));
    }
    if batch_size == 0 {
        return Err(Error::contract("batch size must be at least 1"));
    }
    let total = pool_len * (pool_len - 1) / 2;
    let wanted = batch_size.min(total);
    let pairs = if wanted * 2 <= total {
        let mut seen = HashSet::with_capacity(wanted);
        let mut pairs = Vec::with_capacity(wanted);
        while pairs.len() < wanted {
            let a = rng.random_range(0..pool_len);
            let b = rng.random_range(0..pool_len);
            if a != b && seen.insert((a.min(b), a.max(b))) {
                pairs.push((a, b));
            }
        }
        pairs
    } else {
        // dense case: pick pair ranks without replacement
        index::sample(rng, total, wanted)
            .into_iter()
            .map(|rank| {
                let (a, b) = unrank_pair(rank, pool_len);
                if rng.random_bool(0.5) {
                    (b, a)
                } else {
                    (a, b)
                }
            })
            .collect()
    };
    QueryBatch::new(pairs)
}

// Maps 0..n(n-1)/2 onto pairs (a, b) with a < b.
fn unrank_pair(mut rank: usize, n: usize) -> SegmentPair {
    let mut a = 0;
    loop {
        let row = n - a - 1;
        if rank < row {
            return (a, a + 1 + rank);
        }
        rank -= row;
        a += 1;
    }
}

/// A chosen pair with its batch position and, for ANOLE, the branch volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub pair: SegmentPair,
    pub position: usize,
    pub volumes: Option<(u64, u64)>,
}

/// Minimax query selection over the batch; ties go to the earliest pair.
pub fn anole_select<P: PairPredictor + ?Sized>(
    batch: &QueryBatch,
    predictor: &P,
    state: &SearchState,
) -> Result<Selection> {
    if state.is_finished() {
        return Err(Error::contract("query budget exhausted"));
    }
    let mut best: Option<(u64, Selection)> = None;
    for (position, &(first, second)) in batch.pairs.iter().enumerate() {
        let volumes = state.branch_volumes(&predictor.bits(first, second))?;
        let worst = volumes.0.max(volumes.1);
        if best.as_ref().is_none_or(|(b, _)| worst < *b) {
            best = Some((
                worst,
                Selection {
                    pair: (first, second),
                    position,
                    volumes: Some(volumes),
                },
            ));
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::contract("query batch is empty"))
}

/// Balances the candidates with zero mismatches; random when none are left.
pub fn greedy_select<P: PairPredictor + ?Sized, R: Rng + ?Sized>(
    batch: &QueryBatch,
    predictor: &P,
    mismatches: &[u32],
    rng: &mut R,
) -> Result<Selection> {
    if mismatches.len() != predictor.pool_size() {
        return Err(Error::contract("mismatch list does not match the candidate pool"));
    }
    let alive: Vec<usize> = (0..mismatches.len()).filter(|&c| mismatches[c] == 0).collect();
    if alive.is_empty() {
        return random_select(batch, rng);
    }
    let mut best: Option<(usize, Selection)> = None;
    for (position, &(first, second)) in batch.pairs.iter().enumerate() {
        let prefer_first = alive
            .iter()
            .filter(|&&c| predictor.predict(c, first, second).is_first())
            .count();
        let balance = prefer_first.abs_diff(alive.len() - prefer_first);
        if best.as_ref().is_none_or(|(b, _)| balance < *b) {
            best = Some((
                balance,
                Selection {
                    pair: (first, second),
                    position,
                    volumes: None,
                },
            ));
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::contract("query batch is empty"))
}

pub fn random_select<R: Rng + ?Sized>(batch: &QueryBatch, rng: &mut R) -> Result<Selection> {
    if batch.is_empty() {
        return Err(Error::contract("query batch is empty"));
    }
    let position = rng.random_range(0..batch.len());
    Ok(Selection {
        pair: batch.pairs[position],
        position,
        volumes: None,
    })
}

/// Discrete posterior over the candidate pool under a symmetric flip-noise likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorWeights {
    pub weights: Vec<f64>,
    pub assumed_flip_rate: f64,
}

impl PosteriorWeights {
    pub fn uniform(pool_size: usize, assumed_flip_rate: f64) -> Result<Self> {
        if pool_size == 0 {
            return Err(Error::contract("candidate pool is empty"));
        }
        if !(0.0..=1.0).contains(&assumed_flip_rate) {
            return Err(Error::config(format!(
                "assumed flip rate {assumed_flip_rate} outside [0, 1]"
            )));
        }
        Ok(PosteriorWeights {
            weights: vec![1.0 / pool_size as f64; pool_size],
            assumed_flip_rate,
        })
    }

    /// Highest-weight candidate; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// Bayes update: agreeing candidates are scaled by `1 - eps`, the rest by `eps`.
pub fn posterior_update(weights: &PosteriorWeights, bits: &[Order], oracle: Order) -> Result<PosteriorWeights> {
    if bits.len() != weights.weights.len() {
        return Err(Error::contract("prediction bits do not match the posterior"));
    }
    let eps = weights.assumed_flip_rate;
    let mut next: Vec<f64> = weights
        .weights
        .iter()
        .zip(bits)
        .map(|(w, &bit)| if bit == oracle { w * (1.0 - eps) } else { w * eps })
        .collect();
    let mass: f64 = next.iter().sum();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::DegeneratePosterior);
    }
    next.iter_mut().for_each(|w| *w /= mass);
    Ok(PosteriorWeights {
        weights: next,
        assumed_flip_rate: eps,
    })
}

/// Strategy selection as it appears in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    Anole,
    Greedy,
    Random,
    /// Random queries with a Bayes filter; `assumed_flip_rate` defaults to the oracle's
    /// epsilon when known, else 0.2.
    Posterior {
        #[serde(default)]
        assumed_flip_rate: Option<f64>,
    },
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Anole => "anole",
            StrategyKind::Greedy => "greedy",
            StrategyKind::Random => "random",
            StrategyKind::Posterior { .. } => "posterior",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::{CandidateScores, ScoreRule};
    use crate::ulam::BudgetConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Predictor given by an explicit table: bits[pair_index][candidate], with
    /// pair i encoded as segments (2i, 2i+1).
    struct Table(Vec<Vec<Order>>, usize);

    impl PairPredictor for Table {
        fn pool_size(&self) -> usize {
            self.1
        }
        fn predict(&self, c: usize, first: SegmentId, second: SegmentId) -> Order {
            let bit = self.0[first.min(second) / 2][c];
            if first < second {
                bit
            } else {
                bit.flipped()
            }
        }
    }

    fn split(first: usize, n: usize) -> Vec<Order> {
        (0..n).map(|c| Order::from_first(c < first)).collect()
    }

    #[test]
    fn batch_sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = sample_query_batch(2, 1, &mut rng).unwrap();
        let (a, c) = b.pairs[0];
        assert_eq!((a.min(c), a.max(c)), (0, 1));

        let b = sample_query_batch(1000, 100, &mut rng).unwrap();
        let distinct: HashSet<_> = b.pairs.iter().map(|&(a, c)| (a.min(c), a.max(c))).collect();
        assert_eq!(distinct.len(), 100);

        let b1 = sample_query_batch(50, 100, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b2 = sample_query_batch(50, 100, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(b1, b2);

        // dense path: every pair of a 5-pool
        let b = sample_query_batch(5, 100, &mut rng).unwrap();
        let distinct: HashSet<_> = b.pairs.iter().map(|&(a, c)| (a.min(c), a.max(c))).collect();
        assert_eq!(distinct.len(), 10);
        assert!(sample_query_batch(1, 1, &mut rng).is_err());
    }

    #[test]
    fn unrank_covers_all_pairs() {
        let n = 7;
        let pairs: HashSet<_> = (0..n * (n - 1) / 2).map(|r| unrank_pair(r, n)).collect();
        assert_eq!(pairs.len(), 21);
        assert!(pairs.iter().all(|&(a, b)| a < b && b < n));
    }

    #[test]
    fn anole_picks_balanced_split() {
        let predictor = Table(vec![split(3, 4), split(2, 4)], 4);
        let state = SearchState::new(BudgetConfig::new(2, 1).unwrap(), 4).unwrap();
        let batch = QueryBatch::new(vec![(0, 1), (2, 3)]).unwrap();
        let s = anole_select(&batch, &predictor, &state).unwrap();
        assert_eq!(s.pair, (2, 3));
        assert_eq!(s.volumes, Some((6, 6)));

        let single = QueryBatch::new(vec![(0, 1)]).unwrap();
        assert_eq!(anole_select(&single, &predictor, &state).unwrap().pair, (0, 1));
    }

    #[test]
    fn greedy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let predictor = Table(vec![split(3, 4), split(2, 4)], 4);
        let batch = QueryBatch::new(vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(greedy_select(&batch, &predictor, &[0; 4], &mut rng).unwrap().pair, (2, 3));
        // one alive candidate: every balance is 1, earliest wins
        assert_eq!(greedy_select(&batch, &predictor, &[0, 1, 1, 1], &mut rng).unwrap().pair, (0, 1));
        // nobody alive: falls back to a uniform pick
        let s = greedy_select(&batch, &predictor, &[1; 4], &mut rng).unwrap();
        assert!(batch.pairs.contains(&s.pair));
    }

    #[test]
    fn random_select_frequencies() {
        let batch = QueryBatch::new(vec![(0, 1), (2, 3), (4, 5), (6, 7)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut counts = [0usize; 4];
        for _ in 0..10000 {
            counts[random_select(&batch, &mut rng).unwrap().position] += 1;
        }
        for c in counts {
            assert!((c as f64 / 10000.0 - 0.25).abs() <= 0.015, "{counts:?}");
        }
        let one = QueryBatch::new(vec![(4, 9)]).unwrap();
        assert_eq!(random_select(&one, &mut rng).unwrap().pair, (4, 9));
        let a = random_select(&batch, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = random_select(&batch, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn posterior_examples() {
        use Order::*;
        let w = PosteriorWeights::uniform(2, 0.2).unwrap();
        let next = posterior_update(&w, &[FirstPreferred, SecondPreferred], FirstPreferred).unwrap();
        assert!((next.weights[0] - 0.8).abs() < 1e-12 && (next.weights[1] - 0.2).abs() < 1e-12);

        let w = PosteriorWeights { weights: vec![0.1, 0.6, 0.3], assumed_flip_rate: 0.5 };
        let next = posterior_update(&w, &[FirstPreferred, SecondPreferred, FirstPreferred], SecondPreferred).unwrap();
        for (a, b) in next.weights.iter().zip(&w.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        let w = PosteriorWeights { weights: vec![0.1, 0.6, 0.3], assumed_flip_rate: 0.2 };
        let next = posterior_update(&w, &[FirstPreferred; 3], FirstPreferred).unwrap();
        for (a, b) in next.weights.iter().zip(&w.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        let w = PosteriorWeights::uniform(2, 0.0).unwrap();
        assert_eq!(
            posterior_update(&w, &[SecondPreferred; 2], FirstPreferred),
            Err(Error::DegeneratePosterior)
        );
    }

    #[test]
    fn anole_branch_sum_matches_total_on_score_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let scores: Vec<Vec<f64>> = (0..9).map(|_| (0..40).map(|_| rng.random::<f64>()).collect()).collect();
        let predictor = CandidateScores::new(ScoreRule::ReturnComparison, scores).unwrap();
        let mut state = SearchState::new(BudgetConfig::new(8, 2).unwrap(), 9).unwrap();
        while !state.is_finished() {
            let batch = sample_query_batch(40, 15, &mut rng).unwrap();
            let s = anole_select(&batch, &predictor, &state).unwrap();
            let (v1, v2) = s.volumes.unwrap();
            assert_eq!(v1 + v2, state.total_volume());
            let answer = Order::from_first(rng.random_bool(0.5));
            state.record(s.pair.0, s.pair.1, answer, &predictor.bits(s.pair.0, s.pair.1)).unwrap();
        }
    }

    #[test]
    fn strategy_config_parsing() {
        let k: StrategyKind = serde_json::from_str(r#"{"kind": "anole"}"#).unwrap();
        assert_eq!(k, StrategyKind::Anole);
        let k: StrategyKind = serde_json::from_str(r#"{"kind": "posterior", "assumed_flip_rate": 0.1}"#).unwrap();
        assert_eq!(k, StrategyKind::Posterior { assumed_flip_rate: Some(0.1) });
        let k: StrategyKind = serde_json::from_str(r#"{"kind": "posterior"}"#).unwrap();
        assert_eq!(k.name(), "posterior");
    }
}
