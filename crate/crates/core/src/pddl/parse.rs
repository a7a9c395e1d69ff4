use std::collections::{BTreeSet, HashMap, HashSet};

use super::model::*;
use super::sexpr::{read_document, syntax, Sexpr};
use super::PddlError;

pub fn parse_domain(text: &str) -> Result<DomainDef, PddlError> {
    let doc = read_document(text)?;
    let items = expect_define(&doc)?;
    let name = header_name(&items[1], "domain")?;

    let mut domain = DomainDef {
        name,
        requirements: BTreeSet::new(),
        types: TypeHierarchy::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };

    let mut raw_actions = Vec::new();
    for section in &items[2..] {
        let list = section
            .as_list()
            .ok_or_else(|| syntax(section.pos(), "expected a section list"))?;
        match section.head() {
            Some(":requirements") => domain.requirements = parse_requirements(&list[1..])?,
            Some(":types") => {
                for tn in parse_typed_list(&list[1..], false)? {
                    if tn.name == ROOT_TYPE {
                        continue;
                    }
                    domain.types.insert(tn.name, tn.type_name);
                }
            }
            Some(":constants") => domain.constants = parse_typed_list(&list[1..], false)?,
            Some(":predicates") => {
                for p in &list[1..] {
                    let pl = p
                        .as_list()
                        .ok_or_else(|| syntax(p.pos(), "expected a predicate declaration"))?;
                    let pname = atom_at(pl, 0, p)?;
                    if domain.predicate(pname).is_some() {
                        return Err(PddlError::DuplicatePredicate(pname.to_string()));
                    }
                    domain.predicates.push(PredicateDef {
                        name: pname.to_string(),
                        params: parse_typed_list(&pl[1..], true)?,
                    });
                }
            }
            Some(":action") => raw_actions.push(section),
            Some(":functions") => return Err(unsupported("numeric fluents")),
            Some(":durative-action") => return Err(unsupported("durative actions")),
            Some(":derived") => return Err(unsupported("derived predicates")),
            Some(":constraints") => return Err(unsupported("state trajectory constraints")),
            Some(other) => {
                return Err(syntax(section.pos(), format!("unknown domain section '{other}'")))
            }
            None => return Err(syntax(section.pos(), "expected a section keyword")),
        }
    }

    // parents that only appear on the right of '-' are implicit roots
    let implicit: Vec<String> = domain
        .types
        .iter()
        .map(|(_, p)| p.to_string())
        .filter(|p| !domain.types.contains(p))
        .collect();
    for p in implicit {
        domain.types.insert(p, ROOT_TYPE.to_string());
    }
    if let Some(t) = domain.types.find_cycle() {
        return Err(PddlError::CyclicTypes(t.to_string()));
    }
    for c in &domain.constants {
        check_type(&domain.types, &c.type_name)?;
    }
    for p in &domain.predicates {
        for param in &p.params {
            check_type(&domain.types, &param.type_name)?;
        }
    }

    for section in raw_actions {
        let schema = parse_action(section, &domain)?;
        if domain.action(&schema.name).is_some() {
            return Err(PddlError::DuplicateSchema(schema.name));
        }
        domain.actions.push(schema);
    }
    Ok(domain)
}

pub fn parse_problem(text: &str, domain: &DomainDef) -> Result<ProblemDef, PddlError> {
    let doc = read_document(text)?;
    let items = expect_define(&doc)?;
    let name = header_name(&items[1], "problem")?;

    let mut problem = ProblemDef {
        name,
        domain_name: String::new(),
        objects: Vec::new(),
        init: BTreeSet::new(),
        goal: BTreeSet::new(),
    };
    let mut saw_domain = false;
    let mut init_section = None;
    let mut goal_section = None;
    for section in &items[2..] {
        let list = section
            .as_list()
            .ok_or_else(|| syntax(section.pos(), "expected a section list"))?;
        match section.head() {
            Some(":domain") => {
                problem.domain_name = atom_at(list, 1, section)?.to_string();
                saw_domain = true;
            }
            Some(":requirements") => {
                parse_requirements(&list[1..])?;
            }
            Some(":objects") => problem.objects = parse_typed_list(&list[1..], false)?,
            Some(":init") => init_section = Some(&list[1..]),
            Some(":goal") => goal_section = Some(section),
            Some(":metric") => return Err(unsupported("plan metrics")),
            Some(":constraints") => return Err(unsupported("state trajectory constraints")),
            Some(other) => {
                return Err(syntax(section.pos(), format!("unknown problem section '{other}'")))
            }
            None => return Err(syntax(section.pos(), "expected a section keyword")),
        }
    }
    if !saw_domain {
        return Err(syntax(items[1].pos(), "problem is missing its (:domain ...) section"));
    }
    if problem.domain_name != domain.name {
        return Err(PddlError::DomainMismatch {
            expected: domain.name.clone(),
            found: problem.domain_name,
        });
    }

    let mut object_types: HashMap<&str, &str> = HashMap::new();
    for c in &domain.constants {
        object_types.insert(&c.name, &c.type_name);
    }
    for o in &problem.objects {
        check_type(&domain.types, &o.type_name)?;
        if object_types.insert(&o.name, &o.type_name).is_some() {
            return Err(PddlError::DuplicateObject(o.name.clone()));
        }
    }

    let mut init = BTreeSet::new();
    for fact in init_section.unwrap_or(&[]) {
        if fact.head() == Some("=") {
            return Err(unsupported("numeric fluents"));
        }
        if fact.head() == Some("not") {
            return Err(syntax(fact.pos(), "negated atoms are not allowed in :init"));
        }
        init.insert(ground_atom(fact, domain, &object_types)?);
    }

    let mut goal = BTreeSet::new();
    if let Some(section) = goal_section {
        let list = section.as_list().unwrap_or(&[]);
        if list.len() != 2 {
            return Err(syntax(section.pos(), "(:goal ...) takes exactly one condition"));
        }
        collect_goal(&list[1], domain, &object_types, &mut goal)?;
    } else {
        return Err(syntax(items[1].pos(), "problem is missing its (:goal ...) section"));
    }
    problem.init = init;
    problem.goal = goal;
    Ok(problem)
}

fn unsupported(feature: &str) -> PddlError {
    PddlError::UnsupportedFeature(feature.to_string())
}

fn expect_define(doc: &Sexpr) -> Result<&[Sexpr], PddlError> {
    let items = doc.as_list().unwrap_or(&[]);
    if doc.head() != Some("define") {
        return Err(syntax(doc.pos(), "expected (define ...)"));
    }
    if items.len() < 2 {
        return Err(syntax(doc.pos(), "(define ...) is missing its header"));
    }
    Ok(items)
}

fn header_name(header: &Sexpr, keyword: &str) -> Result<String, PddlError> {
    match header.as_list() {
        Some([Sexpr::Atom(k, _), Sexpr::Atom(n, _)]) if k == keyword => Ok(n.clone()),
        _ => Err(syntax(header.pos(), format!("expected ({keyword} <name>)"))),
    }
}

fn atom_at<'a>(list: &'a [Sexpr], i: usize, parent: &Sexpr) -> Result<&'a str, PddlError> {
    list.get(i)
        .and_then(Sexpr::as_atom)
        .ok_or_else(|| syntax(list.get(i).map_or(parent.pos(), Sexpr::pos), "expected a name"))
}

fn parse_requirements(flags: &[Sexpr]) -> Result<BTreeSet<Requirement>, PddlError> {
    let mut out = BTreeSet::new();
    for f in flags {
        let flag = f
            .as_atom()
            .ok_or_else(|| syntax(f.pos(), "expected a requirement flag"))?;
        match Requirement::from_flag(flag) {
            Some(r) => {
                out.insert(r);
            }
            None => return Err(PddlError::UnsupportedRequirement(flag.to_string())),
        }
    }
    Ok(out)
}

/// Parses `a b - t c` style lists. Untyped names default to `object`.
fn parse_typed_list(items: &[Sexpr], variables: bool) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        if item.head() == Some("either") {
            return Err(unsupported("either types"));
        }
        let text = item
            .as_atom()
            .ok_or_else(|| syntax(item.pos(), "expected a name"))?;
        if text == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(item.pos(), "missing type after '-'"))?;
            if ty.head() == Some("either") {
                return Err(unsupported("either types"));
            }
            let ty = ty
                .as_atom()
                .ok_or_else(|| syntax(ty.pos(), "expected a type name"))?;
            if pending.is_empty() {
                return Err(syntax(item.pos(), "'-' without preceding names"));
            }
            for name in pending.drain(..) {
                out.push(TypedName::new(name, ty));
            }
            i += 2;
            continue;
        }
        if variables != text.starts_with('?') {
            let what = if variables { "a ?variable" } else { "a name" };
            return Err(syntax(item.pos(), format!("expected {what}, found '{text}'")));
        }
        pending.push(text.to_string());
        i += 1;
    }
    for name in pending {
        out.push(TypedName::new(name, ROOT_TYPE));
    }
    Ok(out)
}

fn check_type(types: &TypeHierarchy, name: &str) -> Result<(), PddlError> {
    if types.contains(name) {
        Ok(())
    } else {
        Err(PddlError::UnknownType(name.to_string()))
    }
}

struct SchemaScope<'a> {
    domain: &'a DomainDef,
    vars: HashSet<String>,
    schema: String,
}

impl SchemaScope<'_> {
    fn term(&self, s: &Sexpr) -> Result<Term, PddlError> {
        let text = s
            .as_atom()
            .ok_or_else(|| syntax(s.pos(), "expected a term"))?;
        if text.starts_with('?') {
            if !self.vars.contains(text) {
                return Err(PddlError::UndeclaredVariable {
                    schema: self.schema.clone(),
                    variable: text.to_string(),
                });
            }
            Ok(Term::Var(text.to_string()))
        } else if self.domain.constants.iter().any(|c| c.name == text) {
            Ok(Term::Const(text.to_string()))
        } else {
            Err(PddlError::UnknownObject(text.to_string()))
        }
    }

    fn atom(&self, s: &Sexpr) -> Result<Atom, PddlError> {
        let list = s
            .as_list()
            .ok_or_else(|| syntax(s.pos(), "expected an atom"))?;
        let name = atom_at(list, 0, s)?;
        let pred = self
            .domain
            .predicate(name)
            .ok_or_else(|| PddlError::UnknownPredicate(name.to_string()))?;
        let args = list[1..]
            .iter()
            .map(|t| self.term(t))
            .collect::<Result<Vec<_>, _>>()?;
        if args.len() != pred.arity() {
            return Err(PddlError::ArityMismatch {
                predicate: name.to_string(),
                expected: pred.arity(),
                found: args.len(),
            });
        }
        Ok(Atom {
            predicate: name.to_string(),
            args,
        })
    }

    fn condition(&self, s: &Sexpr, out: &mut Vec<Literal>) -> Result<(), PddlError> {
        let list = s
            .as_list()
            .ok_or_else(|| syntax(s.pos(), "expected a condition"))?;
        if list.is_empty() {
            return Ok(());
        }
        match s.head() {
            Some("and") => {
                for c in &list[1..] {
                    self.condition(c, out)?;
                }
                Ok(())
            }
            Some("not") => {
                let inner = match list {
                    [_, inner] => inner,
                    _ => return Err(syntax(s.pos(), "(not ...) takes one argument")),
                };
                match inner.head() {
                    Some("=") => {
                        let (a, b) = self.equality(inner)?;
                        out.push(Literal::NotEq(a, b));
                    }
                    Some("and" | "or" | "not" | "imply" | "forall" | "exists") => {
                        return Err(unsupported("negated compound conditions"))
                    }
                    _ => out.push(Literal::Neg(self.atom(inner)?)),
                }
                Ok(())
            }
            Some("=") => {
                let (a, b) = self.equality(s)?;
                out.push(Literal::Eq(a, b));
                Ok(())
            }
            Some("or") => Err(unsupported("disjunctive preconditions")),
            Some("imply") => Err(unsupported("implications")),
            Some("forall" | "exists") => Err(unsupported("quantified preconditions")),
            Some("<" | ">" | "<=" | ">=") => Err(unsupported("numeric fluents")),
            _ => {
                out.push(Literal::Pos(self.atom(s)?));
                Ok(())
            }
        }
    }

    fn equality(&self, s: &Sexpr) -> Result<(Term, Term), PddlError> {
        match s.as_list() {
            Some([_, a, b]) => Ok((self.term(a)?, self.term(b)?)),
            _ => Err(syntax(s.pos(), "(= ...) takes two terms")),
        }
    }

    fn effect(&self, s: &Sexpr, add: &mut Vec<Atom>, del: &mut Vec<Atom>) -> Result<(), PddlError> {
        let list = s
            .as_list()
            .ok_or_else(|| syntax(s.pos(), "expected an effect"))?;
        if list.is_empty() {
            return Ok(());
        }
        match s.head() {
            Some("and") => {
                for e in &list[1..] {
                    self.effect(e, add, del)?;
                }
                Ok(())
            }
            Some("not") => match list {
                [_, inner] => {
                    del.push(self.atom(inner)?);
                    Ok(())
                }
                _ => Err(syntax(s.pos(), "(not ...) takes one argument")),
            },
            Some("when") => Err(unsupported("conditional effects")),
            Some("forall") => Err(unsupported("universal effects")),
            Some("increase" | "decrease" | "assign" | "scale-up" | "scale-down") => {
                Err(unsupported("numeric fluents"))
            }
            Some("=") => Err(syntax(s.pos(), "equality is not an effect")),
            _ => {
                add.push(self.atom(s)?);
                Ok(())
            }
        }
    }
}

fn parse_action(section: &Sexpr, domain: &DomainDef) -> Result<ActionSchema, PddlError> {
    let list = section.as_list().unwrap_or(&[]);
    let name = atom_at(list, 1, section)?.to_string();
    let mut parameters = Vec::new();
    let mut pre = None;
    let mut eff = None;
    let mut i = 2;
    while i < list.len() {
        let key = list[i]
            .as_atom()
            .ok_or_else(|| syntax(list[i].pos(), "expected an action keyword"))?;
        let value = list
            .get(i + 1)
            .ok_or_else(|| syntax(list[i].pos(), format!("missing value for {key}")))?;
        match key {
            ":parameters" => {
                let items = value
                    .as_list()
                    .ok_or_else(|| syntax(value.pos(), "expected a parameter list"))?;
                parameters = parse_typed_list(items, true)?;
            }
            ":precondition" => pre = Some(value),
            ":effect" => eff = Some(value),
            other => {
                return Err(syntax(list[i].pos(), format!("unknown action keyword '{other}'")))
            }
        }
        i += 2;
    }

    let mut vars = HashSet::new();
    for p in &parameters {
        check_type(&domain.types, &p.type_name)?;
        if !vars.insert(p.name.clone()) {
            return Err(syntax(section.pos(), format!("duplicate parameter {} in {name}", p.name)));
        }
    }
    let scope = SchemaScope {
        domain,
        vars,
        schema: name.clone(),
    };
    let mut precondition = Vec::new();
    if let Some(p) = pre {
        scope.condition(p, &mut precondition)?;
    }
    let mut add_effects = Vec::new();
    let mut delete_effects = Vec::new();
    if let Some(e) = eff {
        scope.effect(e, &mut add_effects, &mut delete_effects)?;
    }
    // add-after-delete semantics: an atom both added and deleted stays true
    delete_effects.retain(|d| !add_effects.contains(d));
    Ok(ActionSchema {
        name,
        parameters,
        precondition,
        add_effects,
        delete_effects,
    })
}

fn ground_atom(
    s: &Sexpr,
    domain: &DomainDef,
    objects: &HashMap<&str, &str>,
) -> Result<GroundAtom, PddlError> {
    let list = s
        .as_list()
        .ok_or_else(|| syntax(s.pos(), "expected a ground atom"))?;
    let name = atom_at(list, 0, s)?;
    let pred = domain
        .predicate(name)
        .ok_or_else(|| PddlError::UnknownPredicate(name.to_string()))?;
    if list.len() - 1 != pred.arity() {
        return Err(PddlError::ArityMismatch {
            predicate: name.to_string(),
            expected: pred.arity(),
            found: list.len() - 1,
        });
    }
    let mut args = Vec::with_capacity(pred.arity());
    for (arg, param) in list[1..].iter().zip(&pred.params) {
        let obj = arg
            .as_atom()
            .ok_or_else(|| syntax(arg.pos(), "expected an object name"))?;
        if obj.starts_with('?') {
            return Err(syntax(arg.pos(), "variables are not allowed in problem atoms"));
        }
        let ty = objects
            .get(obj)
            .ok_or_else(|| PddlError::UnknownObject(obj.to_string()))?;
        if !domain.types.is_subtype(ty, &param.type_name) {
            return Err(PddlError::TypeMismatch {
                predicate: name.to_string(),
                object: obj.to_string(),
                expected: param.type_name.clone(),
            });
        }
        args.push(obj.to_string());
    }
    Ok(GroundAtom {
        predicate: name.to_string(),
        args,
    })
}

fn collect_goal(
    s: &Sexpr,
    domain: &DomainDef,
    objects: &HashMap<&str, &str>,
    out: &mut BTreeSet<GroundAtom>,
) -> Result<(), PddlError> {
    let list = s
        .as_list()
        .ok_or_else(|| syntax(s.pos(), "expected a goal condition"))?;
    if list.is_empty() {
        return Ok(());
    }
    match s.head() {
        Some("and") => {
            for g in &list[1..] {
                collect_goal(g, domain, objects, out)?;
            }
            Ok(())
        }
        Some("not") => Err(unsupported("negative goals")),
        Some("or") => Err(unsupported("disjunctive goals")),
        Some("imply") => Err(unsupported("implications")),
        Some("forall" | "exists") => Err(unsupported("quantified goals")),
        Some("=") => Err(unsupported("equality goals")),
        Some("<" | ">" | "<=" | ">=") => Err(unsupported("numeric fluents")),
        _ => {
            out.insert(ground_atom(s, domain, objects)?);
            Ok(())
        }
    }
}
