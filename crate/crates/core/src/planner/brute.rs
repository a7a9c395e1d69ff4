use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::grounder::{GroundTask, State};

pub const DEFAULT_STATE_BOUND: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteForceError {
    #[error("more than {bound} reachable states")]
    BoundExceeded { bound: usize },
}

/// Exact optimal cost-to-go for every state reachable from the task's
/// initial state. Dead-ends have no entry.
#[derive(Clone, Debug)]
pub struct HStarTable {
    states: Vec<State>,
    index: HashMap<State, usize>,
    hstar: Vec<Option<u32>>,
}

impl HStarTable {
    pub fn get(&self, s: &State) -> Option<u32> {
        self.index.get(s).and_then(|&i| self.hstar[i])
    }

    pub fn is_reachable(&self, s: &State) -> bool {
        self.index.contains_key(s)
    }

    /// Reachable states in breadth-first discovery order.
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn solvable_count(&self) -> usize {
        self.hstar.iter().filter(|h| h.is_some()).count()
    }
}

/// Forward breadth-first enumeration from the initial state followed by a
/// backward breadth-first sweep from the goal states over the reversed
/// transition graph.
pub fn brute_force_hstar(task: &GroundTask, bound: usize) -> Result<HStarTable, BruteForceError> {
    let mut states = vec![task.init().clone()];
    let mut index = HashMap::from([(task.init().clone(), 0usize)]);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new()];
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        for a in task.applicable(&s) {
            let next = task.apply_unchecked(&s, a);
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() >= bound {
                        return Err(BruteForceError::BoundExceeded { bound });
                    }
                    let j = states.len();
                    index.insert(next.clone(), j);
                    states.push(next);
                    preds.push(Vec::new());
                    j
                }
            };
            preds[j].push(i);
        }
        i += 1;
    }

    let mut hstar = vec![None; states.len()];
    let mut queue = VecDeque::new();
    for (j, s) in states.iter().enumerate() {
        if task.is_goal(s) {
            hstar[j] = Some(0);
            queue.push_back(j);
        }
    }
    while let Some(j) = queue.pop_front() {
        let h = hstar[j].expect("queued states are labelled");
        for &p in &preds[j] {
            if hstar[p].is_none() {
                hstar[p] = Some(h + 1);
                queue.push_back(p);
            }
        }
    }
    Ok(HStarTable {
        states,
        index,
        hstar,
    })
}
