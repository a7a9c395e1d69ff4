use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use super::*;
use crate::forge::DomainId;
use crate::planner::{brute_force_hstar, DEFAULT_STATE_BOUND};
use crate::testutil::{oracle, small_input};

fn settings(seed: u64, error_fraction: f64) -> ChainSettings {
    ChainSettings {
        seed,
        error_fraction,
        ..ChainSettings::default()
    }
}

fn inputs(domains: &[DomainId], seeds: u64) -> Vec<ProblemInput> {
    domains
        .iter()
        .flat_map(|&d| (0..seeds).map(move |s| small_input(d, s)))
        .collect()
}

fn step_actions(input: &ProblemInput, task: &GroundTask, chain: &EvalChain) -> Vec<ActionId> {
    let tpl = templates(input.domain_id);
    let by_text: HashMap<String, ActionId> = task
        .actions()
        .iter()
        .map(|a| (tpl.render_step(a).unwrap(), a.id))
        .collect();
    chain.steps.iter().map(|s| by_text[s]).collect()
}

#[test]
fn f1_reproduces_reference_cells() {
    assert!((compute_f1(53.1, 95.3) - 68.2).abs() <= 0.05);
    assert!((compute_f1(72.0, 96.4) - 82.4).abs() <= 0.05);
    assert_eq!(compute_f1(0.0, 100.0), 0.0);
    assert_eq!(compute_f1(0.0, 0.0), 0.0);
    assert!((compute_f1(37.5, 37.5) - 37.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn f1_between_min_and_mean(a in 0.0f64..=100.0, b in 0.0f64..=100.0) {
        let f = compute_f1(a, b);
        prop_assert!((f - compute_f1(b, a)).abs() < 1e-9);
        prop_assert!(f >= a.min(b) - 1e-9);
        prop_assert!(f <= (a + b) / 2.0 + 1e-9);
    }
}

#[test]
fn clean_chains_follow_an_optimal_plan_to_the_goal() {
    let inputs = inputs(&[DomainId::Ferry, DomainId::Hanoi, DomainId::Spanner], 3);
    let out = build_eval_chains(&inputs, &settings(4, 0.0)).unwrap();
    assert_eq!(out.chains.len(), inputs.len());
    for (input, chain) in inputs.iter().zip(&out.chains) {
        assert_eq!(chain.gold_first_error, None);
        assert!(chain.gold_categories.iter().all(|&c| c == Category::Optimal));
        let task = ground(&input.domain, &input.problem);
        let table = brute_force_hstar(&task, DEFAULT_STATE_BOUND).unwrap();
        let mut s = task.init().clone();
        for a in step_actions(input, &task, chain) {
            s = task.apply(&s, a).unwrap();
        }
        assert!(task.is_goal(&s));
        assert_eq!(Some(chain.steps.len() as u32), table.get(task.init()));
    }
}

#[test]
fn injected_hallucination_is_the_gold_error() {
    let inputs = inputs(&[DomainId::Blocksworld4, DomainId::Ferry, DomainId::Visitgrid], 3);
    let mut cfg = settings(2, 1.0);
    cfg.error_categories = BTreeSet::from([Category::NonExecutable]);
    let out = build_eval_chains(&inputs, &cfg).unwrap();
    assert_eq!(out.chains.len(), inputs.len());
    for (input, chain) in inputs.iter().zip(&out.chains) {
        let k = chain.gold_first_error.expect("every chain has an error");
        let task = ground(&input.domain, &input.problem);
        let mut s = task.init().clone();
        for (i, a) in step_actions(input, &task, chain).into_iter().enumerate() {
            if i + 1 == k {
                assert!(!task.is_applicable(&s, a));
            } else {
                s = task.apply(&s, a).unwrap();
            }
        }
        // the hallucinated step leaves the state unchanged and the chain
        // still finishes the task
        assert!(task.is_goal(&s));
        assert_eq!(chain.gold_categories[k - 1], Category::NonExecutable);
        assert!(chain.gold_categories[..k - 1].iter().all(|&c| c == Category::Optimal));
    }
}

/// Checks every chain against the brute-force oracle; returns the injected
/// categories.
fn check_against_oracle(inputs: &[ProblemInput], chains: &[EvalChain], errors: &BTreeSet<Category>) -> BTreeSet<Category> {
    let mut injected = BTreeSet::new();
    for chain in chains {
        let input = inputs
            .iter()
            .find(|p| p.problem_id() == problem_of_chain(&chain.chain_id))
            .unwrap();
        let task = ground(&input.domain, &input.problem);
        let table = brute_force_hstar(&task, DEFAULT_STATE_BOUND).unwrap();
        let mut ev = Evaluator::new(&task);
        let mut ctx = TrajectoryContext::new(task.init().clone());
        let mut expected = Vec::new();
        for a in step_actions(input, &task, chain) {
            expected.push(oracle(&task, &table, &mut ev, &ctx, a));
            if let Ok(n) = task.apply(ctx.current(), a) {
                ctx.visit(n);
            }
        }
        assert_eq!(chain.gold_categories, expected, "{}", chain.chain_id);
        let k = expected.iter().position(|c| errors.contains(c)).map(|i| i + 1);
        assert_eq!(chain.gold_first_error, k);
        if let Some(k) = k {
            injected.insert(expected[k - 1]);
            assert!(expected[..k - 1].iter().all(|&c| c == Category::Optimal));
        }
    }
    injected
}

#[test]
fn gold_labels_match_brute_force_oracle() {
    let all = inputs(&DomainId::ALL, 2);
    let mut cfg = settings(11, 0.7);
    cfg.chains_per_problem = 3;
    let out = build_eval_chains(&all, &cfg).unwrap();
    assert!(out.skipped.is_empty(), "{:?}", out.skipped);
    let injected = check_against_oracle(&all, &out.chains, &cfg.error_categories);
    assert!(injected.contains(&Category::NonExecutable) && injected.contains(&Category::Backtracking));

    // dead ends only where the domain has them; problems without one are skipped
    let traps = inputs(&[DomainId::Rooms, DomainId::Sokoban, DomainId::Spanner], 4);
    cfg.error_fraction = 1.0;
    cfg.error_categories = BTreeSet::from([Category::DeadEnd]);
    let out = build_eval_chains(&traps, &cfg).unwrap();
    assert!(!out.chains.is_empty());
    assert!(out.skipped.iter().all(|s| s.reason.contains("no candidate")));
    let injected = check_against_oracle(&traps, &out.chains, &cfg.error_categories);
    assert_eq!(injected, BTreeSet::from([Category::DeadEnd]));
    // a dead end has no continuation
    assert!(out.chains.iter().all(|c| c.gold_first_error == Some(c.steps.len())));
}

fn mixed_chains() -> (Vec<ProblemInput>, Vec<EvalChain>) {
    let inputs = inputs(&[DomainId::Ferry, DomainId::Rooms, DomainId::Sokoban, DomainId::Npuzzle], 4);
    let mut cfg = settings(7, 0.5);
    cfg.chains_per_problem = 4;
    let chains = build_eval_chains(&inputs, &cfg).unwrap().chains;
    (inputs, chains)
}

#[test]
fn reference_judges() {
    let (inputs, chains) = mixed_chains();
    let errors = chains.iter().filter(|c| c.gold_first_error.is_some()).count();
    assert!(errors > 0 && errors < chains.len());

    let mut oracle = OracleJudge::new(&inputs, SearchLimits::default());
    let scored = score_with_judge(&chains, &mut oracle, DEFAULT_TAU).unwrap();
    assert!(scored.invalid.is_empty());
    assert!(scored.predictions.iter().all(|p| p.predicted == p.gold));
    let r = EvalReport::from_scored(&scored);
    assert_eq!((r.error_acc, r.correct_acc, r.f1), (100.0, 100.0, 100.0));

    let r = EvalReport::from_scored(&score_with_judge(&chains, &mut ConstJudge(1.0), DEFAULT_TAU).unwrap());
    assert_eq!((r.error_acc, r.correct_acc, r.f1), (0.0, 100.0, 0.0));
    let r = EvalReport::from_scored(&score_with_judge(&chains, &mut ConstJudge(0.0), DEFAULT_TAU).unwrap());
    assert_eq!((r.correct_acc, r.f1), (0.0, 0.0));

    let r = EvalReport::from_scored(&score_with_judge(&chains, &mut RandomJudge { seed: 1 }, DEFAULT_TAU).unwrap());
    assert!(r.f1 < 30.0, "{r}");
}

#[test]
fn oracle_judge_scores_unknown_text_as_zero() {
    let inputs = vec![small_input(DomainId::Ferry, 0)];
    let chains = build_eval_chains(&inputs, &settings(0, 0.0)).unwrap().chains;
    let mut req = chains[0].request();
    req.steps.insert(0, "I teleport.".into());
    let r = OracleJudge::new(&inputs, SearchLimits::default()).score(&[req]).unwrap();
    assert_eq!(r[0].scores[0], 0.0);
    assert!(r[0].scores[1..].iter().all(|&s| s == 1.0));
    let stray = JudgeRequest {
        chain_id: "nowhere#0".into(),
        problem_nl: String::new(),
        steps: vec![],
    };
    let err = OracleJudge::new(&inputs, SearchLimits::default()).score(&[stray]).unwrap_err();
    assert!(matches!(err, EvalError::UnknownProblem(p) if p == "nowhere"));
}

fn chain(id: &str, steps: usize, gold: Option<usize>) -> EvalChain {
    EvalChain {
        chain_id: id.into(),
        problem_nl: "p".into(),
        steps: vec!["s".into(); steps],
        gold_first_error: gold,
        gold_categories: vec![],
        meta: ChainMeta {
            domain_id: DomainId::Ferry,
            seed: 0,
        },
    }
}

fn response(id: &str, scores: &[f64]) -> JudgeResponse {
    JudgeResponse {
        chain_id: id.into(),
        scores: scores.to_vec(),
    }
}

#[test]
fn thresholding_and_invalid_responses() {
    assert_eq!(predict_first_error(&[0.9, 0.6, 0.59, 0.0], 0.6), Some(3));
    assert_eq!(predict_first_error(&[0.75, 1.0], 0.6), None);
    assert_eq!(predict_first_error(&[], 0.6), None);

    let chains = [chain("a#0", 3, Some(2)), chain("b#0", 2, None), chain("c#0", 2, None)];
    let responses = [response("a#0", &[1.0, 0.5, 1.0]), response("b#0", &[1.0])];
    let scored = score_responses(&chains, &responses, 0.6);
    assert_eq!(scored.invalid, ["b#0", "c#0"]);
    let r = EvalReport::from_scored(&scored);
    assert_eq!(r.counts, BucketCounts {
        error_chains: 1,
        error_hits: 1,
        clean_chains: 0,
        clean_hits: 0,
        invalid: 2,
    });
    assert_eq!(r.f1, 0.0);
    assert!(r.to_string().contains("invalid 2"));
}

#[test]
fn subprocess_judge_protocol() {
    let chains = [chain("a#0", 2, Some(2)), chain("b#0", 1, None)];
    let requests: Vec<JudgeRequest> = chains.iter().map(EvalChain::request).collect();
    let script = r#"cat > /dev/null; printf '%s\n' '{"chain_id":"a#0","scores":[0.9,0.1]}' '{"chain_id":"b#0","scores":[0.8]}'"#;
    let mut judge = SubprocessJudge { command: script.into() };
    let r = EvalReport::from_scored(&score_with_judge(&chains, &mut judge, 0.6).unwrap());
    assert_eq!(r.f1, 100.0);

    let swapped = r#"cat > /dev/null; printf '%s\n' '{"chain_id":"b#0","scores":[0.8]}' '{"chain_id":"a#0","scores":[0.9,0.1]}'"#;
    assert!(SubprocessJudge { command: swapped.into() }.score(&requests).is_err());
    assert!(SubprocessJudge { command: "exit 3".into() }.score(&requests).is_err());
    assert!(SubprocessJudge { command: "cat > /dev/null; echo nonsense".into() }.score(&requests).is_err());
}

#[test]
fn requests_carry_no_gold() {
    let v = serde_json::to_value(chain("a#0", 1, Some(1)).request()).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["chain_id", "problem_nl", "steps"]);
}

#[test]
fn files_round_trip_and_build_is_deterministic() {
    let (_, chains) = mixed_chains();
    let (_, again) = mixed_chains();
    assert_eq!(chains, again);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chains.jsonl");
    write_chains(&path, &chains).unwrap();
    assert_eq!(read_chains(&path).unwrap(), chains);

    let rpath = dir.path().join("scores.jsonl");
    let responses = vec![response("a#0", &[0.25, 1.0])];
    write_responses(&rpath, &responses).unwrap();
    let mut judge = FileJudge { path: rpath };
    assert_eq!(judge.score(&[]).unwrap(), responses);
    assert_eq!(problem_of_chain("ferry-3#2"), "ferry-3");
}

#[test]
fn settings_are_validated() {
    assert!(settings(0, 1.5).validate().is_err());
    let mut cfg = settings(0, 0.5);
    cfg.error_categories.insert(Category::Optimal);
    assert!(cfg.validate().is_err());
    cfg.error_categories.clear();
    assert!(cfg.validate().is_err());
    assert!(ChainSettings::default().validate().is_ok());
}
