use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use crate::grounder::{ActionId, GroundTask, State};

use super::relaxed::RelaxedTask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    LmCut,
    HMax,
    Blind,
}

impl std::str::FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lmcut" => Ok(HeuristicKind::LmCut),
            "hmax" => Ok(HeuristicKind::HMax),
            "blind" => Ok(HeuristicKind::Blind),
            other => Err(format!("unknown heuristic '{other}' (expected lmcut, hmax or blind)")),
        }
    }
}

/// A stateful heuristic evaluator bound to one task. `None` means the goal is
/// provably unreachable from the state.
pub struct Heuristic<'t> {
    kind: HeuristicKind,
    task: &'t GroundTask,
    relaxed: Option<RelaxedTask>,
}

impl<'t> Heuristic<'t> {
    pub fn new(kind: HeuristicKind, task: &'t GroundTask) -> Self {
        let relaxed = match kind {
            HeuristicKind::Blind => None,
            _ => Some(RelaxedTask::new(task)),
        };
        Heuristic {
            kind,
            task,
            relaxed,
        }
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    pub fn estimate(&mut self, s: &State) -> Option<u32> {
        match (self.kind, self.relaxed.as_mut()) {
            (HeuristicKind::LmCut, Some(r)) => r.lmcut(s),
            (HeuristicKind::HMax, Some(r)) => r.hmax(s),
            _ => Some(u32::from(!self.task.is_goal(s))),
        }
    }
}

pub fn h_max(task: &GroundTask, s: &State) -> Option<u32> {
    RelaxedTask::new(task).hmax(s)
}

pub fn h_lmcut(task: &GroundTask, s: &State) -> Option<u32> {
    RelaxedTask::new(task).lmcut(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SearchLimits {
    pub max_expansions: u64,
    pub max_time: Duration,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_expansions: 1_000_000,
            max_time: Duration::from_secs(60),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<ActionId>,
    pub cost: u32,
    /// s₀..sₙ, one more entry than `actions`.
    pub state_trace: Vec<State>,
}

impl Plan {
    pub fn empty(start: State) -> Self {
        Plan {
            actions: Vec::new(),
            cost: 0,
            state_trace: vec![start],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Solved(Plan),
    Unsolvable,
    ResourceLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub expansions: u64,
    pub peak_open: usize,
}

impl SearchResult {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.outcome {
            Outcome::Solved(p) => Some(p),
            _ => None,
        }
    }
}

const DEAD_END: u32 = u32::MAX;

struct Node {
    state: State,
    g: u32,
    h: u32,
    parent: Option<(usize, ActionId)>,
}

/// A* from `start`. Ties on f are broken by lower h, then by insertion
/// order; successors are generated in ascending action id. Nodes are
/// reopened when a cheaper path is found, so optimality only requires an
/// admissible heuristic.
pub fn solve_optimal(
    task: &GroundTask,
    start: &State,
    heuristic: &mut Heuristic<'_>,
    limits: SearchLimits,
) -> SearchResult {
    let started = Instant::now();
    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<State, usize> = HashMap::new();
    let mut open: BinaryHeap<Reverse<(u32, u32, u64, usize)>> = BinaryHeap::new();
    let mut counter = 0u64;
    let mut expansions = 0u64;
    let mut peak_open = 0usize;

    let Some(h0) = heuristic.estimate(start) else {
        return SearchResult {
            outcome: Outcome::Unsolvable,
            expansions,
            peak_open,
        };
    };
    nodes.push(Node {
        state: start.clone(),
        g: 0,
        h: h0,
        parent: None,
    });
    index.insert(start.clone(), 0);
    open.push(Reverse((h0, h0, counter, 0)));

    while let Some(Reverse((f, _, _, id))) = open.pop() {
        let node = &nodes[id];
        if f != node.g + node.h {
            continue; // stale entry
        }
        if task.is_goal(&node.state) {
            return SearchResult {
                outcome: Outcome::Solved(extract_plan(task, &nodes, id)),
                expansions,
                peak_open,
            };
        }
        if expansions >= limits.max_expansions
            || (expansions % 256 == 0 && started.elapsed() > limits.max_time)
        {
            return SearchResult {
                outcome: Outcome::ResourceLimit,
                expansions,
                peak_open,
            };
        }
        expansions += 1;
        let state = node.state.clone();
        let g = node.g;
        for a in 0..task.actions().len() {
            if !task.is_applicable(&state, a) {
                continue;
            }
            let succ = task.apply_unchecked(&state, a);
            let ng = g + task.action(a).cost;
            match index.get(&succ) {
                Some(&sid) => {
                    if nodes[sid].h != DEAD_END && ng < nodes[sid].g {
                        let n = &mut nodes[sid];
                        n.g = ng;
                        n.parent = Some((id, a));
                        counter += 1;
                        open.push(Reverse((ng + n.h, n.h, counter, sid)));
                    }
                }
                None => {
                    let Some(h) = heuristic.estimate(&succ) else {
                        // dead end: remember it so it is never evaluated again
                        index.insert(succ.clone(), nodes.len());
                        nodes.push(Node {
                            state: succ,
                            g: ng,
                            h: DEAD_END,
                            parent: Some((id, a)),
                        });
                        continue;
                    };
                    let sid = nodes.len();
                    index.insert(succ.clone(), sid);
                    nodes.push(Node {
                        state: succ,
                        g: ng,
                        h,
                        parent: Some((id, a)),
                    });
                    counter += 1;
                    open.push(Reverse((ng + h, h, counter, sid)));
                }
            }
        }
        peak_open = peak_open.max(open.len());
    }
    SearchResult {
        outcome: Outcome::Unsolvable,
        expansions,
        peak_open,
    }
}

fn extract_plan(task: &GroundTask, nodes: &[Node], goal: usize) -> Plan {
    let mut actions = Vec::new();
    let mut trace = vec![nodes[goal].state.clone()];
    let mut cur = goal;
    while let Some((parent, a)) = nodes[cur].parent {
        actions.push(a);
        trace.push(nodes[parent].state.clone());
        cur = parent;
    }
    actions.reverse();
    trace.reverse();
    Plan {
        cost: actions.iter().map(|&a| task.action(a).cost).sum(),
        actions,
        state_trace: trace,
    }
}
