//! Exact integer arithmetic for Berlekamp's volume over a finite candidate pool.
//!
//! A search runs for `K` rounds and tolerates at most `K_E` wrong answers. After
//! `k` rounds a candidate that has disagreed with the oracle `E` times still
//! owns `S(K - k, K_E - E)` valid answer sequences, where
//! `S(n, m) = sum_{l=0}^{m} C(n, l)`. The pool's volume is the sum over
//! candidates. Each query splits the volume exactly in two, so the sum of the
//! two branch volumes always equals the volume before the query.
//!
//! Everything here is exact `u64` arithmetic. `K` is capped at
//! [`MAX_QUERIES`] so a single candidate volume never exceeds `2^62`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported query budget.
pub const MAX_QUERIES: u32 = 62;

/// Index of a trajectory segment in an experience pool.
pub type SegmentId = usize;

/// The `(K, K_E)` query and lie budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BudgetConfig {
    total_queries: u32,
    lie_budget: u32,
}

impl BudgetConfig {
    pub fn new(total_queries: u32, lie_budget: u32) -> Result<Self> {
        if total_queries == 0 {
            return Err(Error::config("total_queries must be positive"));
        }
        if total_queries > MAX_QUERIES {
            return Err(Error::config(format!(
                "total_queries {total_queries} exceeds the supported maximum {MAX_QUERIES}"
            )));
        }
        if lie_budget > total_queries {
            return Err(Error::config(format!(
                "lie_budget {lie_budget} exceeds total_queries {total_queries}"
            )));
        }
        Ok(BudgetConfig {
            total_queries,
            lie_budget,
        })
    }

    /// `K`.
    pub fn total_queries(&self) -> u32 {
        self.total_queries
    }

    /// `K_E`.
    pub fn lie_budget(&self) -> u32 {
        self.lie_budget
    }
}

/// Which of two presented segments is preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    FirstPreferred,
    SecondPreferred,
}

impl Order {
    pub fn from_first(first_preferred: bool) -> Self {
        if first_preferred {
            Order::FirstPreferred
        } else {
            Order::SecondPreferred
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Order::FirstPreferred => Order::SecondPreferred,
            Order::SecondPreferred => Order::FirstPreferred,
        }
    }

    pub fn is_first(self) -> bool {
        self == Order::FirstPreferred
    }
}

/// One answered query, stored with the oracle-preferred segment as winner.
///
/// `answer` keeps the slot the winner was presented in, so per-round
/// predictions can be re-evaluated in the orientation they were made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub winner: SegmentId,
    pub loser: SegmentId,
    pub round_index: u32,
    pub answer: Order,
}

impl QueryRecord {
    /// The pair in the order it was shown to the oracle.
    pub fn presented(&self) -> (SegmentId, SegmentId) {
        match self.answer {
            Order::FirstPreferred => (self.winner, self.loser),
            Order::SecondPreferred => (self.loser, self.winner),
        }
    }
}

/// Ordered record of the queries answered so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryContext {
    records: Vec<QueryRecord>,
}

impl QueryContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the answer to the pair `(first, second)` as round `len() + 1`.
    pub fn push(&mut self, first: SegmentId, second: SegmentId, answer: Order) -> Result<&QueryRecord> {
        if first == second {
            return Err(Error::contract("a query must compare two distinct segments"));
        }
        let (winner, loser) = match answer {
            Order::FirstPreferred => (first, second),
            Order::SecondPreferred => (second, first),
        };
        self.records.push(QueryRecord {
            winner,
            loser,
            round_index: self.records.len() as u32 + 1,
            answer,
        });
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Per-candidate mismatch bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateState {
    pub candidate_id: usize,
    pub mismatches: u32,
}

/// `sum_{l=0}^{m} C(n, l)`, zero for `m < 0` and `2^n` for `m >= n`.
///
/// # Panics
///
/// If `n > MAX_QUERIES`.
pub fn partial_binomial_sum(n: u32, m: i64) -> u64 {
    assert!(n <= MAX_QUERIES, "n = {n} exceeds MAX_QUERIES");
    if m < 0 {
        return 0;
    }
    if m >= n as i64 {
        return 1u64 << n;
    }
    let mut term: u128 = 1;
    let mut sum: u128 = 1;
    for l in 0..m as u128 {
        term = term * (n as u128 - l) / (l + 1);
        sum += term;
    }
    sum as u64
}

/// Cached partial sums `S(n, m)` for `0 <= n <= K` and `-1 <= m <= K_E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeTable {
    budget: BudgetConfig,
    // row n holds S(n, -1) ..= S(n, K_E)
    sums: Vec<u64>,
}

impl VolumeTable {
    /// Builds the table with the Pascal recurrence `S(n, m) = S(n-1, m) + S(n-1, m-1)`.
    pub fn new(budget: BudgetConfig) -> Self {
        let width = budget.lie_budget as usize + 2;
        let rows = budget.total_queries as usize + 1;
        let mut sums = vec![0u64; rows * width];
        // S(0, m) = 1 for m >= 0
        for cell in sums.iter_mut().take(width).skip(1) {
            *cell = 1;
        }
        for n in 1..rows {
            for j in 1..width {
                sums[n * width + j] = sums[(n - 1) * width + j] + sums[(n - 1) * width + j - 1];
            }
        }
        VolumeTable { budget, sums }
    }

    pub fn budget(&self) -> BudgetConfig {
        self.budget
    }

    /// `S(n, m)`; `m` below `-1` reads as `-1` and `m` above `K_E` is out of range.
    pub fn get(&self, n: u32, m: i64) -> u64 {
        assert!(n <= self.budget.total_queries, "n = {n} exceeds K");
        assert!(m <= self.budget.lie_budget as i64, "m = {m} exceeds K_E");
        if m < 0 {
            return 0;
        }
        let width = self.budget.lie_budget as usize + 2;
        self.sums[n as usize * width + m as usize + 1]
    }

    /// Candidate volume at round `round_k` for a candidate with `mismatches` disagreements.
    pub fn candidate_volume(&self, round_k: u32, mismatches: u32) -> u64 {
        assert!(round_k <= self.budget.total_queries, "round {round_k} exceeds K");
        let remaining_lies = self.budget.lie_budget as i64 - mismatches as i64;
        self.get(self.budget.total_queries - round_k, remaining_lies.max(-1))
    }

    pub fn total_volume(&self, round_k: u32, mismatches: &[u32]) -> u64 {
        mismatches
            .iter()
            .map(|&e| self.candidate_volume(round_k, e))
            .fold(0u64, |acc, v| acc.checked_add(v).expect("volume overflow"))
    }

    /// Volumes after round `round_k + 1` if the oracle answers first or second preferred.
    pub fn branch_volumes(&self, round_k: u32, mismatches: &[u32], bits: &[Order]) -> Result<(u64, u64)> {
        if round_k >= self.budget.total_queries {
            return Err(Error::contract(format!(
                "no query left after round {round_k} of {}",
                self.budget.total_queries
            )));
        }
        if bits.len() != mismatches.len() {
            return Err(Error::contract(format!(
                "{} prediction bits for {} candidates",
                bits.len(),
                mismatches.len()
            )));
        }
        let next = round_k + 1;
        let mut first = 0u64;
        let mut second = 0u64;
        for (&e, &bit) in mismatches.iter().zip(bits) {
            let agree = self.candidate_volume(next, e);
            let disagree = self.candidate_volume(next, e.saturating_add(1));
            match bit {
                Order::FirstPreferred => {
                    first += agree;
                    second += disagree;
                }
                Order::SecondPreferred => {
                    first += disagree;
                    second += agree;
                }
            }
        }
        Ok((first, second))
    }
}

/// Number of rounds where `bits` (in presented orientation) contradict the recorded answer.
pub fn mismatch_count(bits: &[Order], context: &QueryContext) -> Result<u32> {
    if bits.len() != context.len() {
        return Err(Error::contract(format!(
            "{} prediction bits for a context of {} records",
            bits.len(),
            context.len()
        )));
    }
    Ok(bits
        .iter()
        .zip(context.records())
        .filter(|(bit, rec)| **bit != rec.answer)
        .count() as u32)
}

/// `S(K - k, K_E - E)`, computed directly from binomial coefficients.
pub fn candidate_volume(config: &BudgetConfig, round_k: u32, mismatches: u32) -> u64 {
    assert!(round_k <= config.total_queries, "round {round_k} exceeds K");
    partial_binomial_sum(
        config.total_queries - round_k,
        config.lie_budget as i64 - mismatches as i64,
    )
}

pub fn total_volume(config: &BudgetConfig, round_k: u32, mismatches: &[u32]) -> u64 {
    mismatches
        .iter()
        .map(|&e| candidate_volume(config, round_k, e))
        .fold(0u64, |acc, v| acc.checked_add(v).expect("volume overflow"))
}

/// Total volume after round `round_k + 1` under each possible answer to a proposed pair.
pub fn branch_volumes(
    config: &BudgetConfig,
    round_k: u32,
    mismatches: &[u32],
    bits: &[Order],
) -> Result<(u64, u64)> {
    VolumeTable::new(*config).branch_volumes(round_k, mismatches, bits)
}

/// True when exactly one unit of volume is left.
pub fn is_resolved(config: &BudgetConfig, round_k: u32, mismatches: &[u32]) -> bool {
    total_volume(config, round_k, mismatches) == 1
}

/// Index of the candidate with the fewest mismatches; ties go to the lowest index.
pub fn final_decision(mismatches: &[u32]) -> Result<usize> {
    mismatches
        .iter()
        .enumerate()
        .min_by_key(|&(i, &e)| (e, i))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::contract("final decision over an empty pool"))
}

/// Mutable state of one inference run: context, mismatch counts and volume trace.
#[derive(Debug, Clone)]
pub struct SearchState {
    table: VolumeTable,
    mismatches: Vec<u32>,
    context: QueryContext,
    trace: Vec<u64>,
}

impl SearchState {
    pub fn new(budget: BudgetConfig, pool_size: usize) -> Result<Self> {
        if pool_size == 0 {
            return Err(Error::contract("candidate pool is empty"));
        }
        let table = VolumeTable::new(budget);
        let initial = table
            .candidate_volume(0, 0)
            .checked_mul(pool_size as u64)
            .ok_or_else(|| Error::config("pool volume does not fit in 64 bits"))?;
        Ok(SearchState {
            table,
            mismatches: vec![0; pool_size],
            context: QueryContext::new(),
            trace: vec![initial],
        })
    }

    pub fn budget(&self) -> BudgetConfig {
        self.table.budget()
    }

    pub fn table(&self) -> &VolumeTable {
        &self.table
    }

    /// Number of answered rounds `k`.
    pub fn round(&self) -> u32 {
        self.context.len() as u32
    }

    pub fn is_finished(&self) -> bool {
        self.round() >= self.budget().total_queries()
    }

    pub fn mismatches(&self) -> &[u32] {
        &self.mismatches
    }

    pub fn candidates(&self) -> Vec<CandidateState> {
        self.mismatches
            .iter()
            .enumerate()
            .map(|(candidate_id, &mismatches)| CandidateState {
                candidate_id,
                mismatches,
            })
            .collect()
    }

    pub fn context(&self) -> &QueryContext {
        &self.context
    }

    /// Total volume after each answered round, starting with round 0.
    pub fn volume_trace(&self) -> &[u64] {
        &self.trace
    }

    pub fn total_volume(&self) -> u64 {
        *self.trace.last().expect("trace starts non-empty")
    }

    pub fn is_resolved(&self) -> bool {
        self.total_volume() == 1
    }

    pub fn branch_volumes(&self, bits: &[Order]) -> Result<(u64, u64)> {
        self.table.branch_volumes(self.round(), &self.mismatches, bits)
    }

    /// Records the oracle's answer to `(first, second)`; `bits` are the candidates' predictions for that pair.
    pub fn record(&mut self, first: SegmentId, second: SegmentId, answer: Order, bits: &[Order]) -> Result<()> {
        if self.is_finished() {
            return Err(Error::contract("query budget exhausted"));
        }
        if bits.len() != self.mismatches.len() {
            return Err(Error::contract(format!(
                "{} prediction bits for {} candidates",
                bits.len(),
                self.mismatches.len()
            )));
        }
        self.context.push(first, second, answer)?;
        for (e, &bit) in self.mismatches.iter_mut().zip(bits) {
            if bit != answer {
                *e += 1;
            }
        }
        let volume = self.table.total_volume(self.round(), &self.mismatches);
        self.trace.push(volume);
        Ok(())
    }

    pub fn decision(&self) -> usize {
        final_decision(&self.mismatches).expect("pool is non-empty")
    }

    /// Recomputes every mismatch count from the stored context.
    pub fn recount<F>(&self, mut predict: F) -> Result<Vec<u32>>
    where
        F: FnMut(usize, SegmentId, SegmentId) -> Order,
    {
        (0..self.mismatches.len())
            .map(|c| {
                let bits: Vec<Order> = self
                    .context
                    .records()
                    .iter()
                    .map(|rec| {
                        let (first, second) = rec.presented();
                        predict(c, first, second)
                    })
                    .collect();
                mismatch_count(&bits, &self.context)
            })
            .collect()
    }

    /// Checks the incremental counts against a full recount.
    pub fn verify<F>(&self, predict: F) -> Result<()>
    where
        F: FnMut(usize, SegmentId, SegmentId) -> Order,
    {
        let fresh = self.recount(predict)?;
        if fresh != self.mismatches {
            return Err(Error::contract("incremental mismatch counts drifted from recount"));
        }
        Ok(())
    }
}
