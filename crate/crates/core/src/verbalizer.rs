//! Template-driven English renderings of problems and steps.
//!
//! Templates live in `templates/<domain>.json`. Placeholders are `{arg1}`,
//! `{arg2}`, ... for predicate or schema arguments, and `{objects}` in a
//! grouped ("many") fact sentence.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

use crate::forge::DomainId;
use crate::grounder::GroundAction;
use crate::pddl::{DomainDef, GroundAtom, ProblemDef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerbalizeError {
    #[error("unknown domain '{0}'")]
    UnknownDomain(String),
    #[error("problem belongs to domain '{found}', not '{expected}'")]
    DomainMismatch { expected: String, found: String },
    #[error("{domain}: no step template for schema '{schema}'")]
    UnknownSchema { domain: String, schema: String },
    #[error("{domain}: no fact template for predicate '{predicate}'")]
    UnknownPredicate { domain: String, predicate: String },
    #[error("{domain}: no noun for object type '{type_name}'")]
    UnknownType { domain: String, type_name: String },
    #[error("invalid template set: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Deserialize)]
pub struct ObjectNoun {
    #[serde(rename = "type")]
    pub type_name: String,
    pub singular: String,
    pub plural: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct FactTemplate {
    pub predicate: String,
    pub text: String,
    /// Sentence for two or more true instances of a unary predicate.
    #[serde(default)]
    pub many: Option<String>,
    /// Binary predicate listed once per unordered pair.
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Clone, Debug, Deserialize)]
pub struct TemplateSet {
    pub domain: String,
    pub objects: Vec<ObjectNoun>,
    pub facts: Vec<FactTemplate>,
    pub steps: BTreeMap<String, String>,
    pub goal_check: String,
}

fn fill(template: &str, args: &[String]) -> String {
    let mut out = template.to_string();
    // highest index first so {arg1} does not clobber {arg10}
    for (i, a) in args.iter().enumerate().rev() {
        out = out.replace(&format!("{{arg{}}}", i + 1), a);
    }
    out
}

fn placeholders(template: &str) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut rest = template;
    while let Some(i) = rest.find("{arg") {
        rest = &rest[i + 4..];
        let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
        if let Ok(n) = digits.parse() {
            out.insert(n);
        }
    }
    out
}

/// "a", "a and b", "a, b and c".
fn join_names(names: &[&str]) -> String {
    match names {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

impl TemplateSet {
    /// Parses and validates a template file against its domain: every schema
    /// gets exactly one step template that names all of its arguments, and
    /// every predicate has a fact template.
    pub fn from_json(text: &str, domain: &DomainDef) -> Result<Self, VerbalizeError> {
        let set: TemplateSet = serde_json::from_str(text).map_err(|e| VerbalizeError::Invalid(e.to_string()))?;
        let invalid = |m: String| Err(VerbalizeError::Invalid(format!("{}: {m}", domain.name)));
        if set.domain != domain.name {
            return invalid(format!("template file is for '{}'", set.domain));
        }
        for schema in &domain.actions {
            let Some(t) = set.steps.get(&schema.name) else {
                return invalid(format!("schema '{}' has no step template", schema.name));
            };
            let want: BTreeSet<usize> = (1..=schema.parameters.len()).collect();
            if placeholders(t) != want {
                return invalid(format!("step template for '{}' must use each argument once", schema.name));
            }
        }
        if let Some(extra) = set.steps.keys().find(|k| domain.action(k).is_none()) {
            return invalid(format!("step template for unknown schema '{extra}'"));
        }
        for p in &domain.predicates {
            let Some(f) = set.facts.iter().find(|f| f.predicate == p.name) else {
                return invalid(format!("predicate '{}' has no fact template", p.name));
            };
            if f.many.is_some() && p.arity() != 1 {
                return invalid(format!("grouped sentence on non-unary predicate '{}'", p.name));
            }
            if f.symmetric && p.arity() != 2 {
                return invalid(format!("symmetric flag on non-binary predicate '{}'", p.name));
            }
        }
        Ok(set)
    }

    pub fn render_action(&self, schema: &str, args: &[String]) -> Result<String, VerbalizeError> {
        let t = self.steps.get(schema).ok_or_else(|| VerbalizeError::UnknownSchema {
            domain: self.domain.clone(),
            schema: schema.to_string(),
        })?;
        Ok(fill(t, args))
    }

    /// First-person sentence for a step. Depends only on the action's name
    /// and arguments, never on whether or how well it applies.
    pub fn render_step(&self, action: &GroundAction) -> Result<String, VerbalizeError> {
        self.render_action(&action.schema, &action.args)
    }

    fn fact_clauses(
        &self,
        domain: &DomainDef,
        problem: &ProblemDef,
        atoms: &BTreeSet<GroundAtom>,
    ) -> Result<Vec<String>, VerbalizeError> {
        if let Some(a) = atoms.iter().find(|a| !self.facts.iter().any(|f| f.predicate == a.predicate)) {
            return Err(VerbalizeError::UnknownPredicate {
                domain: self.domain.clone(),
                predicate: a.predicate.clone(),
            });
        }
        let mut clauses = Vec::new();
        for f in &self.facts {
            let matching: Vec<&GroundAtom> = atoms.iter().filter(|a| a.predicate == f.predicate).collect();
            match &f.many {
                Some(many) if matching.len() >= 2 => {
                    let names: Vec<&str> = matching.iter().map(|a| a.args[0].as_str()).collect();
                    let param_type = &domain.predicate(&f.predicate).expect("validated").params[0].type_name;
                    let of_type = problem
                        .objects
                        .iter()
                        .chain(&domain.constants)
                        .filter(|o| domain.types.is_subtype(&o.type_name, param_type))
                        .count();
                    let subject = if names.len() == 2 && of_type == 2 {
                        "both".to_string()
                    } else {
                        join_names(&names)
                    };
                    clauses.push(many.replace("{objects}", &subject));
                }
                _ => {
                    for a in matching {
                        if f.symmetric {
                            let mirror = GroundAtom::new(a.predicate.clone(), [a.args[1].clone(), a.args[0].clone()]);
                            if a.args[0] > a.args[1] && atoms.contains(&mirror) {
                                continue;
                            }
                        }
                        clauses.push(fill(&f.text, &a.args));
                    }
                }
            }
        }
        Ok(clauses)
    }

    pub fn render_problem(&self, domain: &DomainDef, problem: &ProblemDef) -> Result<String, VerbalizeError> {
        if problem.domain_name != self.domain {
            return Err(VerbalizeError::DomainMismatch {
                expected: self.domain.clone(),
                found: problem.domain_name.clone(),
            });
        }
        let mut out = Vec::new();
        if let Some(o) = problem
            .objects
            .iter()
            .find(|o| !self.objects.iter().any(|n| n.type_name == o.type_name))
        {
            return Err(VerbalizeError::UnknownType {
                domain: self.domain.clone(),
                type_name: o.type_name.clone(),
            });
        }
        for noun in &self.objects {
            let names: Vec<&str> = problem
                .objects
                .iter()
                .filter(|o| o.type_name == noun.type_name)
                .map(|o| o.name.as_str())
                .collect();
            match names.len() {
                0 => {}
                1 => out.push(format!("There is 1 {}: {}.", noun.singular, names[0])),
                n => out.push(format!("There are {n} {}: {}.", noun.plural, names.join(", "))),
            }
        }
        let init = self.fact_clauses(domain, problem, &problem.init)?;
        if init.is_empty() {
            out.push("Initially, nothing holds.".to_string());
        } else {
            out.push(format!("Initially, {}.", init.join("; ")));
        }
        let goal = self.fact_clauses(domain, problem, &problem.goal)?;
        if goal.is_empty() {
            out.push("Goal: (already satisfied).".to_string());
        } else {
            out.push(format!("Goal: {}.", goal.join("; ")));
        }
        Ok(out.join(" "))
    }

    pub fn goal_check(&self) -> &str {
        &self.goal_check
    }
}

fn template_text(d: DomainId) -> &'static str {
    match d {
        DomainId::Blocksworld3 => include_str!("../templates/blocksworld3.json"),
        DomainId::Blocksworld4 => include_str!("../templates/blocksworld4.json"),
        DomainId::Ferry => include_str!("../templates/ferry.json"),
        DomainId::Hanoi => include_str!("../templates/hanoi.json"),
        DomainId::Logistics => include_str!("../templates/logistics.json"),
        DomainId::Elevator => include_str!("../templates/elevator.json"),
        DomainId::Npuzzle => include_str!("../templates/npuzzle.json"),
        DomainId::Visitgrid => include_str!("../templates/visitgrid.json"),
        DomainId::Sokoban => include_str!("../templates/sokoban.json"),
        DomainId::Rooms => include_str!("../templates/rooms.json"),
        DomainId::Spanner => include_str!("../templates/spanner.json"),
    }
}

struct Loaded {
    domain: DomainDef,
    templates: TemplateSet,
}

fn loaded(d: DomainId) -> &'static Loaded {
    static ALL: OnceLock<Vec<Loaded>> = OnceLock::new();
    let all = ALL.get_or_init(|| {
        DomainId::ALL
            .into_iter()
            .map(|d| {
                let domain = d.domain();
                let templates = TemplateSet::from_json(template_text(d), &domain)
                    .unwrap_or_else(|e| panic!("embedded templates for {d}: {e}"));
                Loaded { domain, templates }
            })
            .collect()
    });
    &all[DomainId::ALL.iter().position(|x| *x == d).expect("listed")]
}

/// The embedded template set for a built-in domain.
pub fn templates(d: DomainId) -> &'static TemplateSet {
    &loaded(d).templates
}

pub fn render_problem(d: DomainId, problem: &ProblemDef) -> Result<String, VerbalizeError> {
    let l = loaded(d);
    l.templates.render_problem(&l.domain, problem)
}

pub fn render_step(d: DomainId, action: &GroundAction) -> Result<String, VerbalizeError> {
    templates(d).render_step(action)
}

/// Like [`render_problem`] with the domain given by name.
pub fn render_problem_named(domain_id: &str, problem: &ProblemDef) -> Result<String, VerbalizeError> {
    let d: DomainId = domain_id
        .parse()
        .map_err(|_| VerbalizeError::UnknownDomain(domain_id.to_string()))?;
    render_problem(d, problem)
}

#[cfg(test)]
mod tests;
