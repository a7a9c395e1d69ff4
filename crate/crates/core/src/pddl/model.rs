use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub const ROOT_TYPE: &str = "object";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Requirement {
    Strips,
    Typing,
    NegativePreconditions,
    Equality,
}

impl Requirement {
    pub fn from_flag(flag: &str) -> Option<Self> {
        match flag {
            ":strips" => Some(Requirement::Strips),
            ":typing" => Some(Requirement::Typing),
            ":negative-preconditions" => Some(Requirement::NegativePreconditions),
            ":equality" => Some(Requirement::Equality),
            _ => None,
        }
    }

    pub fn flag(self) -> &'static str {
        match self {
            Requirement::Strips => ":strips",
            Requirement::Typing => ":typing",
            Requirement::NegativePreconditions => ":negative-preconditions",
            Requirement::Equality => ":equality",
        }
    }
}

/// A name with its declared type (`?x - block`, `a - block`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedName {
    pub name: String,
    pub type_name: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        TypedName {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

/// Child → parent map. `object` is the implicit root and never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, String>,
}

impl TypeHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn insert(&mut self, child: String, parent: String) {
        self.parents.insert(child, parent);
    }

    pub fn contains(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.parents.contains_key(name)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.parents.get(name).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parents.iter().map(|(c, p)| (c.as_str(), p.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// True when `sub` equals `sup` or descends from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == ROOT_TYPE {
            return true;
        }
        let mut cur = sub;
        // bounded by the number of types: the hierarchy is validated acyclic
        for _ in 0..=self.parents.len() {
            if cur == sup {
                return true;
            }
            match self.parents.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    /// Returns the first type found on a cycle, if any.
    pub(crate) fn find_cycle(&self) -> Option<&str> {
        for start in self.parents.keys() {
            let mut cur = start.as_str();
            for _ in 0..=self.parents.len() {
                match self.parents.get(cur) {
                    Some(p) if p == start => return Some(start),
                    Some(p) => cur = p,
                    None => break,
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl PredicateDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Variables keep their leading `?`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Eq(Term, Term),
    NotEq(Term, Term),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub add_effects: Vec<Atom>,
    pub delete_effects: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainDef {
    pub name: String,
    pub requirements: BTreeSet<Requirement>,
    pub types: TypeHierarchy,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDef>,
    pub actions: Vec<ActionSchema>,
}

impl DomainDef {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Predicates that no schema adds or deletes.
    pub fn static_predicates(&self) -> BTreeSet<&str> {
        let mut touched = BTreeSet::new();
        for a in &self.actions {
            for atom in a.add_effects.iter().chain(&a.delete_effects) {
                touched.insert(atom.predicate.as_str());
            }
        }
        self.predicates
            .iter()
            .map(|p| p.name.as_str())
            .filter(|p| !touched.contains(p))
            .collect()
    }
}

/// A variable-free atom. The derived ordering (predicate, then arguments)
/// is the canonical fact order used throughout the toolchain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(predicate: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemDef {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: BTreeSet<GroundAtom>,
}

impl ProblemDef {
    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.type_name.as_str())
    }
}
