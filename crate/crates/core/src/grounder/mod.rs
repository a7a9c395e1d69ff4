//! Grounding of parsed PDDL into a propositional task, and the transition
//! function over [`State`]s.
//!
//! Static predicates (never touched by any effect) are compiled away: their
//! atoms are checked once while instantiating schemas and never appear in the
//! fact universe. Fluent atoms that are not delete-relaxed reachable from the
//! initial state are dropped together with every action that needs them.

mod state;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::pddl::{Atom, DomainDef, GroundAtom, Literal, ProblemDef, Term};

pub use state::{FactId, State};

pub type ActionId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("action {action} is not applicable")]
    NotApplicable { action: String },
    #[error("unknown action id {0}")]
    UnknownAction(ActionId),
    #[error("atom {0} is not part of the task's fact universe")]
    UnknownFact(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAction {
    pub id: ActionId,
    pub schema: String,
    pub args: Vec<String>,
    pub pre_pos: Vec<FactId>,
    pub pre_neg: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
    pub cost: u32,
}

impl GroundAction {
    /// `(schema arg1 arg2 ...)`, the form used in plan files.
    pub fn pddl_name(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.schema, self.args.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct GroundTask {
    pub domain_name: String,
    pub problem_name: String,
    facts: Vec<GroundAtom>,
    fact_index: HashMap<GroundAtom, FactId>,
    actions: Vec<GroundAction>,
    action_index: HashMap<(String, Vec<String>), ActionId>,
    init: State,
    goal: Vec<FactId>,
    unreachable_goals: Vec<GroundAtom>,
}

impl GroundTask {
    pub fn facts(&self) -> &[GroundAtom] {
        &self.facts
    }

    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn fact(&self, id: FactId) -> &GroundAtom {
        &self.facts[id]
    }

    pub fn fact_id(&self, atom: &GroundAtom) -> Option<FactId> {
        self.fact_index.get(atom).copied()
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id]
    }

    pub fn find_action(&self, schema: &str, args: &[String]) -> Option<ActionId> {
        self.action_index
            .get(&(schema.to_string(), args.to_vec()))
            .copied()
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal(&self) -> &[FactId] {
        &self.goal
    }

    /// Goal atoms no action sequence can make true. Non-empty means the task
    /// is unsolvable by construction.
    pub fn unreachable_goals(&self) -> &[GroundAtom] {
        &self.unreachable_goals
    }

    pub fn is_goal(&self, s: &State) -> bool {
        self.goal.iter().all(|&g| s.contains(g))
    }

    pub fn is_applicable(&self, s: &State, a: ActionId) -> bool {
        let act = &self.actions[a];
        act.pre_pos.iter().all(|&f| s.contains(f)) && !act.pre_neg.iter().any(|&f| s.contains(f))
    }

    /// Applicable actions in ascending id order.
    pub fn applicable(&self, s: &State) -> Vec<ActionId> {
        (0..self.actions.len())
            .filter(|&a| self.is_applicable(s, a))
            .collect()
    }

    /// The successor `(s \ del) ∪ add`. Inapplicable actions are an error.
    pub fn apply(&self, s: &State, a: ActionId) -> Result<State, GroundError> {
        let act = self.actions.get(a).ok_or(GroundError::UnknownAction(a))?;
        if !self.is_applicable(s, a) {
            return Err(GroundError::NotApplicable {
                action: act.to_string(),
            });
        }
        Ok(self.apply_unchecked(s, a))
    }

    pub(crate) fn apply_unchecked(&self, s: &State, a: ActionId) -> State {
        let act = &self.actions[a];
        let mut next = s.clone();
        for &d in &act.del {
            next.remove(d);
        }
        for &f in &act.add {
            next.insert(f);
        }
        next
    }

    pub fn state_from_atoms<'a>(
        &self,
        atoms: impl IntoIterator<Item = &'a GroundAtom>,
    ) -> Result<State, GroundError> {
        let mut s = State::empty(self.facts.len());
        for atom in atoms {
            let id = self
                .fact_id(atom)
                .ok_or_else(|| GroundError::UnknownFact(atom.to_string()))?;
            s.insert(id);
        }
        Ok(s)
    }

    pub fn atoms(&self, s: &State) -> Vec<&GroundAtom> {
        s.iter().map(|f| &self.facts[f]).collect()
    }

    /// Copy of this task with a different initial state.
    pub fn with_init(&self, init: State) -> GroundTask {
        GroundTask {
            init,
            ..self.clone()
        }
    }
}

/// Typed objects visible to a problem: domain constants plus problem objects.
struct Universe<'a> {
    domain: &'a DomainDef,
    object_type: HashMap<&'a str, &'a str>,
    by_type: HashMap<String, Vec<&'a str>>,
}

impl<'a> Universe<'a> {
    fn new(domain: &'a DomainDef, problem: &'a ProblemDef) -> Self {
        let mut object_type = HashMap::new();
        let mut names = Vec::new();
        for o in domain.constants.iter().chain(&problem.objects) {
            object_type.insert(o.name.as_str(), o.type_name.as_str());
            names.push(o.name.as_str());
        }
        names.sort_unstable();
        names.dedup();
        Universe {
            domain,
            object_type,
            by_type: HashMap::new(),
        }
        .with_names(names)
    }

    fn with_names(mut self, names: Vec<&'a str>) -> Self {
        let mut types: BTreeSet<String> = self.domain.types.iter().map(|(c, _)| c.to_string()).collect();
        types.insert(crate::pddl::ROOT_TYPE.to_string());
        for ty in types {
            let members = names
                .iter()
                .copied()
                .filter(|n| self.domain.types.is_subtype(self.object_type[n], &ty))
                .collect();
            self.by_type.insert(ty, members);
        }
        self
    }

    fn has_type(&self, obj: &str, ty: &str) -> bool {
        self.object_type
            .get(obj)
            .is_some_and(|t| self.domain.types.is_subtype(t, ty))
    }

    fn of_type(&self, ty: &str) -> &[&'a str] {
        self.by_type.get(ty).map_or(&[], Vec::as_slice)
    }
}

type Binding<'a> = Vec<Option<&'a str>>;

struct SchemaPlan<'a> {
    params: Vec<(&'a str, &'a str)>,
    positive: Vec<&'a Atom>,
    negative: Vec<&'a Atom>,
    equalities: Vec<(&'a Term, &'a Term, bool)>,
}

impl<'a> SchemaPlan<'a> {
    fn param_index(&self, var: &str) -> usize {
        self.params
            .iter()
            .position(|(n, _)| *n == var)
            .expect("parser guarantees variables are parameters")
    }

    fn resolve(&self, term: &'a Term, binding: &Binding<'a>) -> Option<&'a str> {
        match term {
            Term::Const(c) => Some(c.as_str()),
            Term::Var(v) => binding[self.param_index(v)],
        }
    }

    fn ground(&self, atom: &'a Atom, binding: &Binding<'a>) -> GroundAtom {
        GroundAtom {
            predicate: atom.predicate.clone(),
            args: atom
                .args
                .iter()
                .map(|t| self.resolve(t, binding).expect("fully bound").to_string())
                .collect(),
        }
    }
}

/// Facts available to the binder, indexed by predicate.
type FactIndex = HashMap<String, Vec<GroundAtom>>;

fn index_facts<'b>(facts: impl IntoIterator<Item = &'b GroundAtom>) -> FactIndex {
    let mut idx: FactIndex = HashMap::new();
    for f in facts {
        idx.entry(f.predicate.clone()).or_default().push(f.clone());
    }
    for v in idx.values_mut() {
        v.sort();
    }
    idx
}

/// Enumerates every type-correct binding whose positive preconditions are
/// in `available` and whose static conditions hold, in deterministic order.
fn bindings<'a>(
    plan: &SchemaPlan<'a>,
    universe: &Universe<'a>,
    available: &'a FactIndex,
    static_preds: &BTreeSet<&str>,
    static_true: &HashSet<GroundAtom>,
) -> Vec<Vec<&'a str>> {
    let mut out = Vec::new();
    let mut binding: Binding<'a> = vec![None; plan.params.len()];
    bind_atoms(plan, universe, available, static_preds, static_true, 0, &mut binding, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn bind_atoms<'a>(
    plan: &SchemaPlan<'a>,
    universe: &Universe<'a>,
    available: &'a FactIndex,
    static_preds: &BTreeSet<&str>,
    static_true: &HashSet<GroundAtom>,
    i: usize,
    binding: &mut Binding<'a>,
    out: &mut Vec<Vec<&'a str>>,
) {
    if i == plan.positive.len() {
        bind_free(plan, universe, static_preds, static_true, 0, binding, out);
        return;
    }
    let atom = plan.positive[i];
    let Some(candidates) = available.get(&atom.predicate) else {
        return;
    };
    'facts: for fact in candidates {
        let mut newly = Vec::new();
        for (term, value) in atom.args.iter().zip(&fact.args) {
            match term {
                Term::Const(c) => {
                    if c != value {
                        for k in newly {
                            binding[k] = None;
                        }
                        continue 'facts;
                    }
                }
                Term::Var(v) => {
                    let k = plan.param_index(v);
                    match binding[k] {
                        Some(b) if b == value => {}
                        Some(_) => {
                            for k in newly {
                                binding[k] = None;
                            }
                            continue 'facts;
                        }
                        None => {
                            if !universe.has_type(value, plan.params[k].1) {
                                for k in newly {
                                    binding[k] = None;
                                }
                                continue 'facts;
                            }
                            binding[k] = Some(value.as_str());
                            newly.push(k);
                        }
                    }
                }
            }
        }
        bind_atoms(plan, universe, available, static_preds, static_true, i + 1, binding, out);
        for k in newly {
            binding[k] = None;
        }
    }
}

fn bind_free<'a>(
    plan: &SchemaPlan<'a>,
    universe: &Universe<'a>,
    static_preds: &BTreeSet<&str>,
    static_true: &HashSet<GroundAtom>,
    k: usize,
    binding: &mut Binding<'a>,
    out: &mut Vec<Vec<&'a str>>,
) {
    if k == plan.params.len() {
        let eq_ok = plan.equalities.iter().all(|(a, b, want_equal)| {
            (plan.resolve(a, binding) == plan.resolve(b, binding)) == *want_equal
        });
        let static_neg_ok = plan
            .negative
            .iter()
            .filter(|a| static_preds.contains(a.predicate.as_str()))
            .all(|a| !static_true.contains(&plan.ground(a, binding)));
        if eq_ok && static_neg_ok {
            out.push(binding.iter().map(|b| b.expect("bound")).collect());
        }
        return;
    }
    if binding[k].is_some() {
        bind_free(plan, universe, static_preds, static_true, k + 1, binding, out);
        return;
    }
    for &obj in universe.of_type(plan.params[k].1) {
        binding[k] = Some(obj);
        bind_free(plan, universe, static_preds, static_true, k + 1, binding, out);
    }
    binding[k] = None;
}

fn schema_plan(schema: &crate::pddl::ActionSchema) -> SchemaPlan<'_> {
    let mut plan = SchemaPlan {
        params: schema
            .parameters
            .iter()
            .map(|p| (p.name.as_str(), p.type_name.as_str()))
            .collect(),
        positive: Vec::new(),
        negative: Vec::new(),
        equalities: Vec::new(),
    };
    for lit in &schema.precondition {
        match lit {
            Literal::Pos(a) => plan.positive.push(a),
            Literal::Neg(a) => plan.negative.push(a),
            Literal::Eq(a, b) => plan.equalities.push((a, b, true)),
            Literal::NotEq(a, b) => plan.equalities.push((a, b, false)),
        }
    }
    plan
}

/// Instantiates `problem` against `domain`. Output is a pure function of the
/// two models: fact ids follow the canonical atom order and action ids follow
/// (schema name, arguments) order.
pub fn ground(domain: &DomainDef, problem: &ProblemDef) -> GroundTask {
    let universe = Universe::new(domain, problem);
    let static_preds = domain.static_predicates();
    let static_true: HashSet<GroundAtom> = problem
        .init
        .iter()
        .filter(|a| static_preds.contains(a.predicate.as_str()))
        .cloned()
        .collect();
    let plans: Vec<SchemaPlan> = domain.actions.iter().map(schema_plan).collect();

    // delete-relaxed reachability fixpoint over fluent atoms
    let mut reachable: BTreeSet<GroundAtom> = problem
        .init
        .iter()
        .filter(|a| !static_preds.contains(a.predicate.as_str()))
        .cloned()
        .collect();
    let mut instances: BTreeMap<(usize, Vec<String>), ()>;
    loop {
        let available = index_facts(reachable.iter().chain(&static_true));
        instances = BTreeMap::new();
        let mut new_facts = Vec::new();
        for (si, plan) in plans.iter().enumerate() {
            let schema = &domain.actions[si];
            for b in bindings(plan, &universe, &available, &static_preds, &static_true) {
                let binding: Binding = b.iter().map(|s| Some(*s)).collect();
                for eff in &schema.add_effects {
                    let g = plan.ground(eff, &binding);
                    if !reachable.contains(&g) {
                        new_facts.push(g);
                    }
                }
                instances.insert((si, b.iter().map(|s| s.to_string()).collect()), ());
            }
        }
        if new_facts.is_empty() {
            break;
        }
        reachable.extend(new_facts);
    }

    let mut unreachable_goals = Vec::new();
    let mut universe_atoms = reachable.clone();
    for g in &problem.goal {
        if static_preds.contains(g.predicate.as_str()) {
            if !static_true.contains(g) {
                unreachable_goals.push(g.clone());
                universe_atoms.insert(g.clone());
            }
        } else if !reachable.contains(g) {
            unreachable_goals.push(g.clone());
            universe_atoms.insert(g.clone());
        }
    }
    let facts: Vec<GroundAtom> = universe_atoms.into_iter().collect();
    let fact_index: HashMap<GroundAtom, FactId> =
        facts.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();

    let mut actions = Vec::new();
    let mut keyed: Vec<((String, Vec<String>), usize)> = instances
        .into_keys()
        .map(|(si, args)| ((domain.actions[si].name.clone(), args), si))
        .collect();
    keyed.sort();
    for ((schema_name, args), si) in keyed {
        let plan = &plans[si];
        let schema = &domain.actions[si];
        let binding: Binding = args.iter().map(|s| Some(s.as_str())).collect();
        let ids = |atoms: &[&Atom], fluent_only: bool| -> Vec<FactId> {
            let mut v: Vec<FactId> = atoms
                .iter()
                .filter(|a| !fluent_only || !static_preds.contains(a.predicate.as_str()))
                .filter_map(|a| fact_index.get(&plan.ground(a, &binding)).copied())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let pre_pos = ids(&plan.positive, true);
        let pre_neg = ids(&plan.negative, true);
        let add = ids(&schema.add_effects.iter().collect::<Vec<_>>(), false);
        let mut del = ids(&schema.delete_effects.iter().collect::<Vec<_>>(), false);
        del.retain(|d| add.binary_search(d).is_err());
        if pre_pos.iter().any(|p| pre_neg.binary_search(p).is_ok()) {
            continue;
        }
        actions.push(GroundAction {
            id: actions.len(),
            schema: schema_name,
            args,
            pre_pos,
            pre_neg,
            add,
            del,
            cost: 1,
        });
    }
    let action_index = actions
        .iter()
        .map(|a| ((a.schema.clone(), a.args.clone()), a.id))
        .collect();

    let init = State::from_facts(
        facts.len(),
        problem.init.iter().filter_map(|a| fact_index.get(a).copied()),
    );
    let mut goal: Vec<FactId> = problem
        .goal
        .iter()
        .filter_map(|g| fact_index.get(g).copied())
        .collect();
    goal.sort_unstable();

    GroundTask {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        facts,
        fact_index,
        actions,
        action_index,
        init,
        goal,
        unreachable_goals,
    }
}
