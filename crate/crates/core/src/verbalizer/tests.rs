use std::collections::HashSet;

use super::*;
use crate::forge::{generate_instance, SizeParams};
use crate::grounder::ground;
use crate::testutil::{act, problem, task, BW4_TWO, FERRY_ONE};

#[test]
fn embedded_templates_validate() {
    for d in DomainId::ALL {
        let t = templates(d);
        assert_eq!(t.domain, d.as_str());
        assert_eq!(t.steps.len(), d.domain().actions.len());
    }
}

#[test]
fn two_block_preamble() {
    let p = problem(DomainId::Blocksworld4, BW4_TWO);
    assert_eq!(
        render_problem(DomainId::Blocksworld4, &p).unwrap(),
        "There are 2 blocks: a, b. Initially, a is on the table; b is on the table; \
         both are clear; the arm is empty. Goal: a is on b."
    );
}

#[test]
fn empty_goal_preamble() {
    let mut p = problem(DomainId::Blocksworld4, BW4_TWO);
    p.goal.clear();
    assert!(render_problem(DomainId::Blocksworld4, &p)
        .unwrap()
        .ends_with("Goal: (already satisfied)."));
}

#[test]
fn rooms_preamble_mentions_doors_and_lights_once() {
    let params = SizeParams::defaults(DomainId::Rooms);
    for seed in 0..5 {
        let inst = generate_instance(DomainId::Rooms, &params, seed).unwrap();
        let text = render_problem(DomainId::Rooms, &inst.problem).unwrap();
        let doors: HashSet<(String, String)> = inst
            .problem
            .init
            .iter()
            .filter(|a| a.predicate == "door")
            .map(|a| {
                let (x, y) = (a.args[0].clone(), a.args[1].clone());
                if x < y { (x, y) } else { (y, x) }
            })
            .collect();
        assert_eq!(text.matches("there is a fragile door between").count(), doors.len());
        for (x, y) in &doors {
            let phrase = format!("there is a fragile door between {x} and {y};");
            assert_eq!(text.matches(&phrase).count(), 1, "{phrase}");
        }
        let lit: Vec<&String> = inst
            .problem
            .init
            .iter()
            .filter(|a| a.predicate == "on")
            .map(|a| &a.args[0])
            .collect();
        assert_eq!(text.matches("is on").count(), lit.len());
        for r in lit {
            assert_eq!(text.matches(&format!("the light in {r} is on")).count(), 1);
        }
    }
}

#[test]
fn step_sentences() {
    let t = task(DomainId::Ferry, FERRY_ONE);
    assert_eq!(
        render_step(DomainId::Ferry, t.action(act(&t, "sail l1 l2"))).unwrap(),
        "I sail the ferry from l1 to l2."
    );
    let t = task(DomainId::Blocksworld4, BW4_TWO);
    let pick = t.action(act(&t, "pick-up a"));
    assert_eq!(render_step(DomainId::Blocksworld4, pick).unwrap(), "I pick up block a from the table.");
}

#[test]
fn steps_are_injective_per_instance() {
    for d in DomainId::ALL {
        for seed in 0..3 {
            let inst = generate_instance(d, &SizeParams::defaults(d), seed).unwrap();
            let task = ground(&d.domain(), &inst.problem);
            let texts: HashSet<String> = task
                .actions()
                .iter()
                .map(|a| render_step(d, a).unwrap())
                .collect();
            assert_eq!(texts.len(), task.actions().len(), "{d}");
            let preamble = render_problem(d, &inst.problem).unwrap();
            assert_eq!(preamble, render_problem(d, &inst.problem).unwrap());
        }
    }
}

#[test]
fn invalid_templates_are_rejected() {
    let domain = DomainId::Ferry.domain();
    let mut v: serde_json::Value = serde_json::from_str(template_text(DomainId::Ferry)).unwrap();
    v["steps"]["sail"] = "I sail to {arg2}.".into();
    let err = TemplateSet::from_json(&v.to_string(), &domain).unwrap_err();
    assert!(err.to_string().contains("each argument"));
    v["steps"].as_object_mut().unwrap().remove("sail");
    assert!(TemplateSet::from_json(&v.to_string(), &domain).is_err());
    assert!(render_problem_named("gripper", &problem(DomainId::Ferry, FERRY_ONE)).is_err());
}

#[test]
fn mismatched_domain_is_rejected() {
    let p = problem(DomainId::Ferry, FERRY_ONE);
    assert!(matches!(
        render_problem(DomainId::Hanoi, &p),
        Err(VerbalizeError::DomainMismatch { .. })
    ));
}

#[test]
fn helpers() {
    assert_eq!(join_names(&["a", "b", "c"]), "a, b and c");
    assert_eq!(fill("{arg1}-{arg2}", &["x".into(), "y".into()]), "x-y");
}
