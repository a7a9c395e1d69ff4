//! Optimal planning: A* with LM-Cut, hmax or a blind heuristic, and an
//! exhaustive h* table for small tasks.

mod brute;
mod relaxed;
mod search;

pub use brute::{brute_force_hstar, BruteForceError, HStarTable, DEFAULT_STATE_BOUND};
pub use search::{
    h_lmcut, h_max, solve_optimal, Heuristic, HeuristicKind, Outcome, Plan, SearchLimits,
    SearchResult,
};

use crate::grounder::{GroundTask, State};

/// Convenience wrapper: A* from `s` with a fresh heuristic evaluator.
pub fn solve(task: &GroundTask, s: &State, kind: HeuristicKind, limits: SearchLimits) -> SearchResult {
    let mut h = Heuristic::new(kind, task);
    solve_optimal(task, s, &mut h, limits)
}
