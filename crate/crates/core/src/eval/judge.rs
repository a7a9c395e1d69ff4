use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{problem_of_chain, read_jsonl, write_jsonl, EvalError};
use crate::grounder::{ground, ActionId, GroundTask};
use crate::pipeline::ProblemInput;
use crate::planner::{HeuristicKind, SearchLimits};
use crate::seed::derive_seed;
use crate::taxonomy::{Evaluator, TrajectoryContext};
use crate::verbalizer::templates;

/// What a judge sees. Gold labels are never sent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub chain_id: String,
    pub problem_nl: String,
    pub steps: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub chain_id: String,
    pub scores: Vec<f64>,
}

pub trait Judge {
    fn name(&self) -> String;
    /// One response per request, in request order.
    fn score(&mut self, requests: &[JudgeRequest]) -> Result<Vec<JudgeResponse>, EvalError>;
}

pub struct ConstJudge(pub f64);

impl Judge for ConstJudge {
    fn name(&self) -> String {
        format!("const{}", self.0)
    }

    fn score(&mut self, requests: &[JudgeRequest]) -> Result<Vec<JudgeResponse>, EvalError> {
        Ok(requests
            .iter()
            .map(|r| JudgeResponse {
                chain_id: r.chain_id.clone(),
                scores: vec![self.0; r.steps.len()],
            })
            .collect())
    }
}

/// Independent uniform scores in [0, 1), seeded per chain.
pub struct RandomJudge {
    pub seed: u64,
}

impl Judge for RandomJudge {
    fn name(&self) -> String {
        "random".into()
    }

    fn score(&mut self, requests: &[JudgeRequest]) -> Result<Vec<JudgeResponse>, EvalError> {
        Ok(requests
            .iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &["judge", &r.chain_id]));
                JudgeResponse {
                    chain_id: r.chain_id.clone(),
                    scores: (0..r.steps.len()).map(|_| rng.random::<f64>()).collect(),
                }
            })
            .collect())
    }
}

/// Maps step sentences back to ground actions (step templates are
/// injective) and scores each with its taxonomy reward. A sentence that names
/// no action scores 0.
pub struct OracleJudge {
    problems: HashMap<String, ProblemInput>,
    limits: SearchLimits,
}

impl OracleJudge {
    pub fn new(inputs: &[ProblemInput], limits: SearchLimits) -> Self {
        OracleJudge {
            problems: inputs.iter().map(|p| (p.problem_id().to_string(), p.clone())).collect(),
            limits,
        }
    }

    fn score_chain(&self, task: &GroundTask, by_text: &HashMap<String, ActionId>, ev: &mut Evaluator<'_>, steps: &[String]) -> Result<Vec<f64>, EvalError> {
        let mut ctx = TrajectoryContext::new(task.init().clone());
        let mut out = Vec::with_capacity(steps.len());
        for text in steps {
            let Some(&a) = by_text.get(text) else {
                out.push(0.0);
                continue;
            };
            out.push(ev.eval_action(&ctx, a)?.reward);
            if let Ok(next) = task.apply(ctx.current(), a) {
                ctx.visit(next);
            }
        }
        Ok(out)
    }
}

impl Judge for OracleJudge {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn score(&mut self, requests: &[JudgeRequest]) -> Result<Vec<JudgeResponse>, EvalError> {
        // group by problem so each task is grounded once
        let mut order: Vec<&str> = Vec::new();
        let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in requests.iter().enumerate() {
            let p = problem_of_chain(&r.chain_id);
            groups.entry(p).or_insert_with(|| {
                order.push(p);
                Vec::new()
            }).push(i);
        }
        let mut out: Vec<Option<JudgeResponse>> = vec![None; requests.len()];
        for p in order {
            let input = self.problems.get(p).ok_or_else(|| EvalError::UnknownProblem(p.to_string()))?;
            let task = ground(&input.domain, &input.problem);
            let tpl = templates(input.domain_id);
            let by_text: HashMap<String, ActionId> = task
                .actions()
                .iter()
                .map(|a| tpl.render_step(a).map(|t| (t, a.id)))
                .collect::<Result<_, _>>()
                .map_err(|e| EvalError::Judge(e.to_string()))?;
            let mut ev = Evaluator::with_config(&task, HeuristicKind::LmCut, self.limits);
            for &i in &groups[p] {
                let r = &requests[i];
                out[i] = Some(JudgeResponse {
                    chain_id: r.chain_id.clone(),
                    scores: self.score_chain(&task, &by_text, &mut ev, &r.steps)?,
                });
            }
        }
        Ok(out.into_iter().map(|r| r.expect("every request grouped")).collect())
    }
}

/// External scorer speaking JSON Lines over stdin/stdout. Run through
/// `sh -c`, fed every request, then read until it closes stdout.
pub struct SubprocessJudge {
    pub command: String,
}

impl Judge for SubprocessJudge {
    fn name(&self) -> String {
        format!("cmd:{}", self.command)
    }

    fn score(&mut self, requests: &[JudgeRequest]) -> Result<Vec<JudgeResponse>, EvalError> {
        let fail = |m: String| EvalError::Judge(format!("'{}': {m}", self.command));
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| fail(e.to_string()))?;
        let mut stdin = child.stdin.take().expect("piped");
        let payload: Vec<u8> = requests
            .iter()
            .flat_map(|r| {
                let mut line = serde_json::to_vec(r).expect("serializable");
                line.push(b'\n');
                line
            })
            .collect();
        // written from a thread so a judge that answers as it reads cannot deadlock
        let writer = std::thread::spawn(move || stdin.write_all(&payload));
        let stdout = child.stdout.take().expect("piped");
        let mut responses = Vec::with_capacity(requests.len());
        for (i, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line.map_err(|e| fail(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: JudgeResponse =
                serde_json::from_str(&line).map_err(|e| fail(format!("response line {}: {e}", i + 1)))?;
            responses.push(r);
        }
        let status = child.wait().map_err(|e| fail(e.to_string()))?;
        match writer.join() {
            Ok(Ok(())) => {}
            Ok(Err(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            Ok(Err(e)) => return Err(fail(e.to_string())),
            Err(_) => return Err(fail("writer thread panicked".into())),
        }
        if !status.success() {
            return Err(fail(format!("exited with {status}")));
        }
        if responses.len() != requests.len() {
            return Err(fail(format!("{} responses for {} requests", responses.len(), requests.len())));
        }
        for (q, r) in requests.iter().zip(&responses) {
            if q.chain_id != r.chain_id {
                return Err(fail(format!("expected response for '{}', got '{}'", q.chain_id, r.chain_id)));
            }
        }
        Ok(responses)
    }
}

/// Precomputed responses. Chains without a line are reported invalid by
/// the scorer rather than rejected here.
pub struct FileJudge {
    pub path: PathBuf,
}

impl Judge for FileJudge {
    fn name(&self) -> String {
        format!("file:{}", self.path.display())
    }

    fn score(&mut self, _requests: &[JudgeRequest]) -> Result<Vec<JudgeResponse>, EvalError> {
        read_responses(&self.path)
    }
}

pub fn read_responses(path: &Path) -> Result<Vec<JudgeResponse>, EvalError> {
    read_jsonl(path)
}

pub fn write_responses(path: &Path, responses: &[JudgeResponse]) -> Result<(), EvalError> {
    write_jsonl(path, responses)
}
