//! PDDL text rendering. Output re-parses to a structurally equal model.

use std::fmt::{self, Write};

use super::model::*;

fn typed_list(items: &[TypedName]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < items.len() {
        let ty = &items[i].type_name;
        let mut j = i;
        while j < items.len() && &items[j].type_name == ty {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&items[j].name);
            j += 1;
        }
        let _ = write!(out, " - {ty}");
        i = j;
    }
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "(not {a})"),
            Literal::Eq(a, b) => write!(f, "(= {a} {b})"),
            Literal::NotEq(a, b) => write!(f, "(not (= {a} {b}))"),
        }
    }
}

impl fmt::Display for ActionSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "  (:action {}", self.name)?;
        writeln!(f, "    :parameters ({})", typed_list(&self.parameters))?;
        write!(f, "    :precondition (and")?;
        for l in &self.precondition {
            write!(f, " {l}")?;
        }
        writeln!(f, ")")?;
        write!(f, "    :effect (and")?;
        for a in &self.add_effects {
            write!(f, " {a}")?;
        }
        for d in &self.delete_effects {
            write!(f, " (not {d})")?;
        }
        write!(f, "))")
    }
}

impl fmt::Display for DomainDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            let flags: Vec<&str> = self.requirements.iter().map(|r| r.flag()).collect();
            writeln!(f, "  (:requirements {})", flags.join(" "))?;
        }
        if !self.types.is_empty() {
            let pairs: Vec<TypedName> = self
                .types
                .iter()
                .map(|(c, p)| TypedName::new(c, p))
                .collect();
            writeln!(f, "  (:types {})", typed_list(&pairs))?;
        }
        if !self.constants.is_empty() {
            writeln!(f, "  (:constants {})", typed_list(&self.constants))?;
        }
        writeln!(f, "  (:predicates")?;
        for p in &self.predicates {
            if p.params.is_empty() {
                writeln!(f, "    ({})", p.name)?;
            } else {
                writeln!(f, "    ({} {})", p.name, typed_list(&p.params))?;
            }
        }
        writeln!(f, "  )")?;
        for a in &self.actions {
            writeln!(f, "{a}")?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain_name)?;
        if !self.objects.is_empty() {
            writeln!(f, "  (:objects {})", typed_list(&self.objects))?;
        }
        writeln!(f, "  (:init")?;
        for a in &self.init {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  )")?;
        writeln!(f, "  (:goal (and")?;
        for a in &self.goal {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  ))")?;
        writeln!(f, ")")
    }
}
