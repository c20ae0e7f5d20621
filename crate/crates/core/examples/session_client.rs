//! A scripted participant answering a session truthfully, without HTTP.
//!
//! `anole serve` exposes the same store at `/sessions`.

use anole::session::{Preferred, SessionRequest, SessionStore};
use anole::TaskFamily;

fn displacement(line: &[[f64; 2]]) -> [f64; 2] {
    let (a, b) = (line[0], line[line.len() - 1]);
    [b[0] - a[0], b[1] - a[1]]
}

fn main() -> Result<(), anole::session::SessionError> {
    let store = SessionStore::default();
    let mut summary = store.create(&SessionRequest {
        seed: Some(3),
        ..SessionRequest::new(TaskFamily::RandDir)
    })?;
    let goal = summary.goal.vector.clone();
    println!("goal direction {goal:?}, volume {}", summary.total_volume);
    while let Some(query) = summary.query.clone() {
        let score = |line: &[[f64; 2]]| {
            let d = displacement(line);
            goal[0] * d[0] + goal[1] * d[1]
        };
        let preferred = if score(&query.first) >= score(&query.second) {
            Preferred::First
        } else {
            Preferred::Second
        };
        summary = store.submit_answer(&summary.session_id, summary.round, preferred)?;
        println!("answered {preferred:?}: volume {}", summary.total_volume);
    }
    let result = store.get_result(&summary.session_id)?;
    println!(
        "picked candidate {} ({} mismatches), mean return {:.2}",
        result.selected_index, result.mismatches, result.mean_return
    );
    Ok(())
}
