//! Noiseless search over all 2^K bitstrings needs exactly K questions.

use anole::harness::run_bitstring_search;

fn main() -> anole::Result<()> {
    for k in [4, 6, 8, 10] {
        let secret = (1usize << k) / 3;
        let out = run_bitstring_search(k, secret)?;
        println!(
            "K={k:>2} secret {secret:>4} -> decided {:>4} in {} rounds, trace {:?}",
            out.decision, out.rounds, out.volume_trace
        );
    }
    Ok(())
}
