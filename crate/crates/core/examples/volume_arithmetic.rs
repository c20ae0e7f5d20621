//! Berlekamp volume by hand: per-candidate volumes, branch split and conservation.

use anole::tasksim::candidate_pool_size;
use anole::ulam::{partial_binomial_sum, BudgetConfig, Order, SearchState};

fn main() -> anole::Result<()> {
    let budget = BudgetConfig::new(10, 2)?;
    println!("S(10, 2) = {}", partial_binomial_sum(10, 2));
    println!("pool size M = floor(2^10 / S(10, 2)) = {}", candidate_pool_size(&budget));

    let mut state = SearchState::new(budget, 4)?;
    println!("round 0: total volume {}", state.total_volume());

    // candidates 0 and 1 prefer the first segment, 2 and 3 the second
    let bits = [Order::FirstPreferred, Order::FirstPreferred, Order::SecondPreferred, Order::SecondPreferred];
    let (first, second) = state.branch_volumes(&bits)?;
    println!("branches: first {first} + second {second} = {}", first + second);

    state.record(0, 1, Order::FirstPreferred, &bits)?;
    println!("after 'first': mismatches {:?}, volume {}", state.mismatches(), state.total_volume());
    for round in 1..10 {
        let answer = Order::FirstPreferred;
        state.record(2 * round, 2 * round + 1, answer, &bits)?;
    }
    println!("trace {:?}", state.volume_trace());
    println!("decision: candidate {}", state.decision());
    Ok(())
}
