//! Delete-relaxation heuristics: hmax and LM-Cut.
//!
//! Both work on a copy of the task where negative preconditions and delete
//! effects are ignored. Two artificial facts are appended: one that is always
//! true (the precondition of actions that have none) and one added by an
//! artificial zero-cost goal action whose preconditions are the goal facts.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::grounder::{GroundTask, State};

pub(crate) const INF: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct RelaxedOp {
    pre: Vec<usize>,
    add: Vec<usize>,
    base_cost: u32,
}

/// Relaxed task plus per-evaluation scratch buffers.
#[derive(Clone, Debug)]
pub(crate) struct RelaxedTask {
    ops: Vec<RelaxedOp>,
    pre_of: Vec<Vec<usize>>,
    achievers: Vec<Vec<usize>>,
    true_fact: usize,
    goal_fact: usize,
    // scratch
    fact_cost: Vec<u32>,
    op_cost: Vec<u32>,
    unsatisfied: Vec<usize>,
    heap: BinaryHeap<Reverse<(u32, usize)>>,
}

impl RelaxedTask {
    pub fn new(task: &GroundTask) -> Self {
        let n = task.num_facts();
        let true_fact = n;
        let goal_fact = n + 1;
        let mut ops: Vec<RelaxedOp> = task
            .actions()
            .iter()
            .map(|a| RelaxedOp {
                pre: if a.pre_pos.is_empty() {
                    vec![true_fact]
                } else {
                    a.pre_pos.clone()
                },
                add: a.add.clone(),
                base_cost: a.cost,
            })
            .collect();
        ops.push(RelaxedOp {
            pre: if task.goal().is_empty() {
                vec![true_fact]
            } else {
                task.goal().to_vec()
            },
            add: vec![goal_fact],
            base_cost: 0,
        });
        let mut pre_of = vec![Vec::new(); n + 2];
        let mut achievers = vec![Vec::new(); n + 2];
        for (i, op) in ops.iter().enumerate() {
            for &p in &op.pre {
                pre_of[p].push(i);
            }
            for &e in &op.add {
                achievers[e].push(i);
            }
        }
        let num_ops = ops.len();
        RelaxedTask {
            ops,
            pre_of,
            achievers,
            true_fact,
            goal_fact,
            fact_cost: vec![INF; n + 2],
            op_cost: vec![INF; num_ops],
            unsatisfied: vec![0; num_ops],
            heap: BinaryHeap::new(),
        }
    }

    /// Max-cost propagation from `state` under `costs`. Afterwards
    /// `fact_cost` holds hmax per fact and `op_cost` the cost of reaching
    /// each op's preconditions plus its own cost.
    fn propagate(&mut self, state: &State, costs: &[u32]) {
        self.fact_cost.fill(INF);
        self.op_cost.fill(INF);
        for (i, op) in self.ops.iter().enumerate() {
            self.unsatisfied[i] = op.pre.len();
        }
        self.heap.clear();
        for f in state.iter() {
            self.fact_cost[f] = 0;
            self.heap.push(Reverse((0, f)));
        }
        self.fact_cost[self.true_fact] = 0;
        self.heap.push(Reverse((0, self.true_fact)));

        while let Some(Reverse((c, f))) = self.heap.pop() {
            if c > self.fact_cost[f] {
                continue;
            }
            for &o in &self.pre_of[f] {
                self.unsatisfied[o] -= 1;
                if self.unsatisfied[o] == 0 {
                    // facts pop in non-decreasing cost order, so c is the max
                    let oc = c + costs[o];
                    self.op_cost[o] = oc;
                    for &e in &self.ops[o].add {
                        if oc < self.fact_cost[e] {
                            self.fact_cost[e] = oc;
                            self.heap.push(Reverse((oc, e)));
                        }
                    }
                }
            }
        }
    }

    fn base_costs(&self) -> Vec<u32> {
        self.ops.iter().map(|o| o.base_cost).collect()
    }

    pub fn hmax(&mut self, state: &State) -> Option<u32> {
        let costs = self.base_costs();
        self.propagate(state, &costs);
        match self.fact_cost[self.goal_fact] {
            INF => None,
            c => Some(c),
        }
    }

    pub fn lmcut(&mut self, state: &State) -> Option<u32> {
        let mut costs = self.base_costs();
        let num_facts = self.fact_cost.len();
        let mut total = 0u32;
        let mut pcf = vec![usize::MAX; self.ops.len()];
        let mut in_goal_zone = vec![false; num_facts];
        let mut reached = vec![false; num_facts];
        let mut stack = Vec::new();
        loop {
            self.propagate(state, &costs);
            match self.fact_cost[self.goal_fact] {
                INF => return None,
                0 => return Some(total),
                _ => {}
            }

            // precondition choice: the most expensive precondition, lowest id on ties
            for (o, op) in self.ops.iter().enumerate() {
                pcf[o] = usize::MAX;
                if self.op_cost[o] == INF {
                    continue;
                }
                let mut best = op.pre[0];
                for &p in &op.pre[1..] {
                    if self.fact_cost[p] > self.fact_cost[best] {
                        best = p;
                    }
                }
                pcf[o] = best;
            }

            // goal zone: facts that reach the goal through zero-cost edges
            in_goal_zone.fill(false);
            in_goal_zone[self.goal_fact] = true;
            stack.clear();
            stack.push(self.goal_fact);
            while let Some(f) = stack.pop() {
                for &o in &self.achievers[f] {
                    if pcf[o] != usize::MAX && costs[o] == 0 && !in_goal_zone[pcf[o]] {
                        in_goal_zone[pcf[o]] = true;
                        stack.push(pcf[o]);
                    }
                }
            }

            // forward from the state without entering the goal zone; ops
            // crossing into the zone form the cut
            reached.fill(false);
            stack.clear();
            for f in state.iter().chain(std::iter::once(self.true_fact)) {
                if !in_goal_zone[f] && !reached[f] {
                    reached[f] = true;
                    stack.push(f);
                }
            }
            let mut cut = Vec::new();
            while let Some(f) = stack.pop() {
                for &o in &self.pre_of[f] {
                    if pcf[o] != f {
                        continue;
                    }
                    let mut crosses = false;
                    for &e in &self.ops[o].add {
                        if in_goal_zone[e] {
                            crosses = true;
                        } else if !reached[e] {
                            reached[e] = true;
                            stack.push(e);
                        }
                    }
                    if crosses {
                        cut.push(o);
                    }
                }
            }
            cut.sort_unstable();
            cut.dedup();
            let m = cut.iter().map(|&o| costs[o]).min().expect("non-empty cut");
            debug_assert!(m > 0);
            total += m;
            for &o in &cut {
                costs[o] -= m;
            }
        }
    }
}
