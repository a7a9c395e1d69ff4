//! Shared helpers for unit tests.

use std::collections::HashSet;

use crate::forge::DomainId;
use crate::grounder::{ground, ActionId, GroundTask, State};
use crate::pddl::{parse_problem, GroundAtom, ProblemDef};
use crate::planner::HStarTable;
use crate::taxonomy::{Category, Evaluator, TrajectoryContext};

pub fn problem(d: DomainId, text: &str) -> ProblemDef {
    parse_problem(text, &d.domain()).expect("test problem parses")
}

pub fn task(d: DomainId, text: &str) -> GroundTask {
    ground(&d.domain(), &problem(d, text))
}

/// `"on a b"` -> `(on a b)`.
pub fn atom(s: &str) -> GroundAtom {
    let mut it = s.split_whitespace();
    let pred = it.next().expect("predicate");
    GroundAtom::new(pred, it)
}

pub fn state(task: &GroundTask, atoms: &[&str]) -> State {
    let atoms: Vec<GroundAtom> = atoms.iter().map(|a| atom(a)).collect();
    task.state_from_atoms(&atoms).expect("facts in universe")
}

/// `"move-t-to-b a b"` -> action id.
pub fn act(task: &GroundTask, s: &str) -> ActionId {
    let a = atom(s);
    task.find_action(&a.predicate, &a.args)
        .unwrap_or_else(|| panic!("no ground action {s}"))
}

pub const BW3_TWO: &str = "(define (problem two) (:domain blocksworld3)
  (:objects a b - block)
  (:init (on-table a) (on-table b) (clear a) (clear b))
  (:goal (and (on a b))))";

pub const BW4_TWO: &str = "(define (problem two) (:domain blocksworld4)
  (:objects a b - block)
  (:init (on-table a) (on-table b) (clear a) (clear b) (arm-empty))
  (:goal (and (on a b))))";

pub const FERRY_ONE: &str = "(define (problem one) (:domain ferry)
  (:objects c - car l1 l2 l3 - location)
  (:init (at-ferry l1) (empty-ferry) (at c l1)
         (connected l1 l2) (connected l2 l1) (connected l1 l3) (connected l3 l1))
  (:goal (and (at c l2))))";

pub const VISIT_CORRIDOR: &str = "(define (problem corridor) (:domain visitgrid)
  (:objects c1 c2 c3 c4 - place)
  (:init (at-robot c2) (visited c2)
         (connected c1 c2) (connected c2 c1) (connected c2 c3)
         (connected c3 c2) (connected c3 c4) (connected c4 c3))
  (:goal (and (visited c1) (visited c4))))";

pub fn hanoi(disks: usize, pegs: usize) -> String {
    let d: Vec<String> = (1..=disks).map(|i| format!("d{i}")).collect();
    let p: Vec<String> = (1..=pegs).map(|i| format!("peg{i}")).collect();
    let mut init = Vec::new();
    let mut goal = Vec::new();
    for i in 0..disks {
        for j in i + 1..disks {
            init.push(format!("(smaller {} {})", d[i], d[j]));
        }
        for peg in &p {
            init.push(format!("(smaller {} {})", d[i], peg));
        }
        let below = |tower: &str| if i + 1 < disks { d[i + 1].clone() } else { tower.to_string() };
        init.push(format!("(on {} {})", d[i], below(&p[0])));
        goal.push(format!("(on {} {})", d[i], below(&p[pegs - 1])));
    }
    if disks > 0 {
        init.push(format!("(clear {})", d[0]));
    } else {
        init.push(format!("(clear {})", p[0]));
    }
    for peg in &p[1..] {
        init.push(format!("(clear {peg})"));
    }
    format!(
        "(define (problem hanoi{disks}) (:domain hanoi) (:objects {} - disk {} - peg) (:init {}) (:goal (and {})))",
        d.join(" "),
        p.join(" "),
        init.join(" "),
        goal.join(" ")
    )
}

/// Table 2 applied directly: set-based applicability, h* from the exhaustive
/// table, and the planner's plan (checked optimal against the table) as the
/// witness for the backtracking test.
pub(crate) fn oracle(
    t: &GroundTask,
    table: &HStarTable,
    ev: &mut Evaluator,
    ctx: &TrajectoryContext,
    a: ActionId,
) -> Category {
    let s = ctx.current();
    let facts: HashSet<usize> = s.iter().collect();
    let act = t.action(a);
    if !act.pre_pos.iter().all(|f| facts.contains(f)) || act.pre_neg.iter().any(|f| facts.contains(f)) {
        return Category::NonExecutable;
    }
    let next: HashSet<usize> = facts
        .iter()
        .copied()
        .filter(|f| !act.del.contains(f))
        .chain(act.add.iter().copied())
        .collect();
    let next = State::from_facts(t.num_facts(), next);
    let Some(there) = table.get(&next) else {
        return Category::DeadEnd;
    };
    let plan = ev.plan(&next).unwrap().unwrap().clone();
    assert_eq!(plan.cost, there, "witness plan is not optimal");
    let visited: HashSet<&State> = ctx.visited().iter().collect();
    if plan.state_trace.iter().any(|x| visited.contains(x)) {
        return Category::Backtracking;
    }
    if 1 + there == table.get(s).unwrap() {
        Category::Optimal
    } else {
        Category::Suboptimal
    }
}

/// Size overrides that keep every domain's reachable space small enough for
/// brute-force enumeration.
pub fn small_params(d: DomainId) -> crate::forge::SizeParams {
    let o: &[(&str, i64)] = match d {
        DomainId::Blocksworld3 | DomainId::Blocksworld4 => &[("blocks", 3)],
        DomainId::Ferry => &[("cars", 2), ("locations", 3)],
        DomainId::Hanoi => &[("disks", 3)],
        DomainId::Logistics => &[("packages", 1)],
        DomainId::Elevator => &[("floors", 3), ("passengers", 2)],
        DomainId::Npuzzle => &[("rows", 2), ("cols", 3)],
        DomainId::Visitgrid => &[("width", 3), ("height", 2)],
        DomainId::Sokoban => &[("width", 4), ("height", 4), ("walls", 1)],
        DomainId::Rooms => &[("rooms", 4), ("extra_doors", 1)],
        DomainId::Spanner => &[("locations", 3)],
    };
    let map = o.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    crate::forge::SizeParams::resolve(d, &map).expect("small params in range")
}

pub fn small_input(d: DomainId, seed: u64) -> crate::pipeline::ProblemInput {
    let inst = crate::forge::generate_instance(d, &small_params(d), seed).expect("small instance");
    crate::pipeline::ProblemInput::builtin(d, inst.problem)
}
