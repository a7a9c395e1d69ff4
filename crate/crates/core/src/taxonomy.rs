//! The five-level step classifier and the two sampling utilities that feed it.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounder::{ActionId, GroundTask, State};
use crate::planner::{solve_optimal, Heuristic, HeuristicKind, Outcome, Plan, SearchLimits};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    NonExecutable,
    DeadEnd,
    Backtracking,
    Suboptimal,
    Optimal,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::NonExecutable,
        Category::DeadEnd,
        Category::Backtracking,
        Category::Suboptimal,
        Category::Optimal,
    ];

    pub fn reward(self) -> f64 {
        match self {
            Category::NonExecutable => 0.0,
            Category::DeadEnd => 0.25,
            Category::Backtracking => 0.5,
            Category::Suboptimal => 0.75,
            Category::Optimal => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::NonExecutable => "NonExecutable",
            Category::DeadEnd => "DeadEnd",
            Category::Backtracking => "Backtracking",
            Category::Suboptimal => "Suboptimal",
            Category::Optimal => "Optimal",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionVerdict {
    pub category: Category,
    pub reward: f64,
    pub evidence: Option<String>,
}

impl ActionVerdict {
    fn new(category: Category, evidence: Option<String>) -> Self {
        ActionVerdict {
            category,
            reward: category.reward(),
            evidence,
        }
    }
}

/// States traversed so far by executed optimal actions, oldest first.
#[derive(Clone, Debug)]
pub struct TrajectoryContext {
    visited: Vec<State>,
    index: HashMap<State, usize>,
}

impl TrajectoryContext {
    pub fn new(start: State) -> Self {
        TrajectoryContext {
            index: HashMap::from([(start.clone(), 0)]),
            visited: vec![start],
        }
    }

    /// Extends the trajectory. Panics if `s` was already visited: an optimal
    /// prefix never repeats a state, so a repeat is a caller bug.
    pub fn push(&mut self, s: State) {
        let k = self.visited.len();
        let prev = self.index.insert(s.clone(), k);
        assert!(prev.is_none(), "trajectory revisits state {prev:?}");
        self.visited.push(s);
    }

    /// Moves to `s`, which may repeat an earlier state (replaying a chain that
    /// contains a backtracking step). Positions keep the first visit.
    pub fn visit(&mut self, s: State) {
        let k = self.visited.len();
        self.index.entry(s.clone()).or_insert(k);
        self.visited.push(s);
    }

    pub fn current(&self) -> &State {
        self.visited.last().expect("context is never empty")
    }

    pub fn visited(&self) -> &[State] {
        &self.visited
    }

    pub fn position(&self, s: &State) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.visited.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("already at goal: the empty plan has no first action")]
    AlreadyAtGoal,
    #[error("state is unsolvable")]
    Unsolvable,
    #[error("planner resource limit reached after {expansions} expansions")]
    ResourceLimit { expansions: u64 },
}

/// Classifier over one task. Holds a per-task cache of the deterministic
/// optimal plan from each state it has been asked about.
pub struct Evaluator<'t> {
    task: &'t GroundTask,
    heuristic: Heuristic<'t>,
    limits: SearchLimits,
    plans: HashMap<State, Option<Plan>>,
}

impl<'t> Evaluator<'t> {
    pub fn new(task: &'t GroundTask) -> Self {
        Self::with_config(task, HeuristicKind::LmCut, SearchLimits::default())
    }

    pub fn with_config(task: &'t GroundTask, kind: HeuristicKind, limits: SearchLimits) -> Self {
        Evaluator {
            task,
            heuristic: Heuristic::new(kind, task),
            limits,
            plans: HashMap::new(),
        }
    }

    pub fn task(&self) -> &'t GroundTask {
        self.task
    }

    /// The planner's optimal plan from `s`, or `None` if `s` is a dead end.
    pub fn plan(&mut self, s: &State) -> Result<Option<&Plan>, TaxonomyError> {
        if !self.plans.contains_key(s) {
            let r = solve_optimal(self.task, s, &mut self.heuristic, self.limits);
            let plan = match r.outcome {
                Outcome::Solved(p) => Some(p),
                Outcome::Unsolvable => None,
                Outcome::ResourceLimit => {
                    return Err(TaxonomyError::ResourceLimit {
                        expansions: r.expansions,
                    })
                }
            };
            self.plans.insert(s.clone(), plan);
        }
        Ok(self.plans[s].as_ref())
    }

    /// Optimal cost-to-go, `None` at dead ends.
    pub fn h_star(&mut self, s: &State) -> Result<Option<u32>, TaxonomyError> {
        Ok(self.plan(s)?.map(|p| p.cost))
    }

    /// First action of the deterministic optimal plan from `s`.
    pub fn get_opt_action(&mut self, s: &State) -> Result<ActionId, TaxonomyError> {
        match self.plan(s)? {
            None => Err(TaxonomyError::Unsolvable),
            Some(p) => p.actions.first().copied().ok_or(TaxonomyError::AlreadyAtGoal),
        }
    }

    /// Classifies `a` in the context's current state. Checks run in the fixed
    /// order NonExecutable, DeadEnd, Backtracking, Optimal, Suboptimal.
    pub fn eval_action(&mut self, ctx: &TrajectoryContext, a: ActionId) -> Result<ActionVerdict, TaxonomyError> {
        let task = self.task;
        let s = ctx.current();
        if !task.is_applicable(s, a) {
            return Ok(ActionVerdict::new(Category::NonExecutable, None));
        }
        let here = self.h_star(s)?.ok_or(TaxonomyError::Unsolvable)?;
        let next = task.apply_unchecked(s, a);
        let Some(plan) = self.plan(&next)? else {
            return Ok(ActionVerdict::new(Category::DeadEnd, None));
        };
        if let Some(k) = plan.state_trace.iter().find_map(|t| ctx.position(t)) {
            return Ok(ActionVerdict::new(
                Category::Backtracking,
                Some(format!("revisits trajectory state {k}")),
            ));
        }
        let there = plan.cost;
        if task.action(a).cost + there == here {
            Ok(ActionVerdict::new(Category::Optimal, None))
        } else {
            Ok(ActionVerdict::new(
                Category::Suboptimal,
                Some(format!("cost-to-go {here} -> {there}")),
            ))
        }
    }
}

/// Up to `y` distinct actions. Each draw takes the inapplicable pool with
/// probability `p_inapp` and the applicable pool otherwise, uniformly within
/// the pool; when one pool is exhausted the other is used.
pub fn get_rand_actions<R: Rng + ?Sized>(
    task: &GroundTask,
    ctx: &TrajectoryContext,
    y: usize,
    rng: &mut R,
    p_inapp: f64,
) -> Vec<ActionId> {
    let s = ctx.current();
    let (mut app, mut inapp): (Vec<ActionId>, Vec<ActionId>) =
        (0..task.actions().len()).partition(|&a| task.is_applicable(s, a));
    let mut out = Vec::with_capacity(y.min(task.actions().len()));
    while out.len() < y && !(app.is_empty() && inapp.is_empty()) {
        let use_inapp = match (app.is_empty(), inapp.is_empty()) {
            (true, _) => true,
            (_, true) => false,
            _ => rng.random_bool(p_inapp),
        };
        let pool = if use_inapp { &mut inapp } else { &mut app };
        let i = rng.random_range(0..pool.len());
        out.push(pool.remove(i));
    }
    out
}
