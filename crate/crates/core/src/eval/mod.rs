//! First-error-identification chains, judge scoring and the F1 report.

mod judge;

pub use judge::{read_responses, write_responses, ConstJudge, FileJudge, Judge, JudgeRequest, JudgeResponse, OracleJudge, RandomJudge, SubprocessJudge};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forge::DomainId;
use crate::grounder::{ground, ActionId, GroundTask};
use crate::pipeline::{DroppedProblem, ProblemInput};
use crate::planner::{HeuristicKind, SearchLimits};
use crate::seed::derive_seed;
use crate::taxonomy::{Category, Evaluator, TaxonomyError, TrajectoryContext};
use crate::verbalizer::templates;

pub const DEFAULT_TAU: f64 = 0.6;
pub const DEFAULT_ERROR_FRACTION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("judge: {0}")]
    Judge(String),
    #[error("no problem '{0}' loaded for the oracle judge")]
    UnknownProblem(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("invalid chain settings: {0}")]
    Config(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub domain_id: DomainId,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalChain {
    pub chain_id: String,
    pub problem_nl: String,
    pub steps: Vec<String>,
    /// 1-based.
    pub gold_first_error: Option<usize>,
    pub gold_categories: Vec<Category>,
    pub meta: ChainMeta,
}

impl EvalChain {
    pub fn request(&self) -> JudgeRequest {
        JudgeRequest {
            chain_id: self.chain_id.clone(),
            problem_nl: self.problem_nl.clone(),
            steps: self.steps.clone(),
        }
    }
}

/// `"{problem_id}#{i}"`; problem ids never contain `#`.
pub fn chain_id(problem_id: &str, i: usize) -> String {
    format!("{problem_id}#{i}")
}

pub fn problem_of_chain(chain_id: &str) -> &str {
    chain_id.rsplit_once('#').map_or(chain_id, |(p, _)| p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSettings {
    pub seed: u64,
    pub error_fraction: f64,
    pub error_categories: BTreeSet<Category>,
    pub chains_per_problem: usize,
    #[serde(skip)]
    pub limits: SearchLimits,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            seed: 0,
            error_fraction: DEFAULT_ERROR_FRACTION,
            error_categories: default_error_categories(),
            chains_per_problem: 1,
            limits: SearchLimits::default(),
        }
    }
}

/// Categories whose reward is at most 0.5.
pub fn default_error_categories() -> BTreeSet<Category> {
    Category::ALL.into_iter().filter(|c| c.reward() <= 0.5).collect()
}

impl ChainSettings {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(0.0..=1.0).contains(&self.error_fraction) {
            return Err(EvalError::Config(format!("error_fraction {} outside [0, 1]", self.error_fraction)));
        }
        if self.error_fraction > 0.0 && self.error_categories.is_empty() {
            return Err(EvalError::Config("error_categories is empty".into()));
        }
        if self.error_categories.contains(&Category::Optimal) {
            return Err(EvalError::Config("Optimal cannot be an error category".into()));
        }
        if self.chains_per_problem == 0 {
            return Err(EvalError::Config("chains_per_problem must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct ChainOutput {
    pub chains: Vec<EvalChain>,
    pub skipped: Vec<DroppedProblem>,
}

/// Categories of each step when `actions` are executed in order from the
/// initial state. Inapplicable steps leave the state unchanged.
pub fn replay(ev: &mut Evaluator<'_>, actions: &[ActionId]) -> Result<Vec<Category>, TaxonomyError> {
    let task = ev.task();
    let mut ctx = TrajectoryContext::new(task.init().clone());
    let mut out = Vec::with_capacity(actions.len());
    for &a in actions {
        out.push(ev.eval_action(&ctx, a)?.category);
        if let Ok(next) = task.apply(ctx.current(), a) {
            ctx.visit(next);
        }
    }
    Ok(out)
}

fn optimal_walk(ev: &mut Evaluator<'_>, from: &crate::grounder::State) -> Result<Option<Vec<ActionId>>, TaxonomyError> {
    Ok(ev.plan(from)?.map(|p| p.actions.clone()))
}

/// Erroneous candidates at the context's current state, grouped by category.
fn erroneous_candidates(
    ev: &mut Evaluator<'_>,
    ctx: &TrajectoryContext,
    wanted: &BTreeSet<Category>,
) -> Result<BTreeMap<Category, Vec<ActionId>>, TaxonomyError> {
    let task = ev.task();
    let only_inapp = wanted.iter().all(|c| *c == Category::NonExecutable);
    let mut out: BTreeMap<Category, Vec<ActionId>> = BTreeMap::new();
    for a in 0..task.actions().len() {
        let category = if !task.is_applicable(ctx.current(), a) {
            Category::NonExecutable
        } else if only_inapp {
            continue;
        } else {
            ev.eval_action(ctx, a)?.category
        };
        if wanted.contains(&category) {
            out.entry(category).or_default().push(a);
        }
    }
    Ok(out)
}

fn build_one(
    task: &GroundTask,
    ev: &mut Evaluator<'_>,
    settings: &ChainSettings,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ActionId>, String> {
    let planner = |e: TaxonomyError| format!("planner: {e}");
    let plan = optimal_walk(ev, task.init())
        .map_err(planner)?
        .ok_or("unsolvable from the initial state")?;
    if plan.is_empty() {
        return Err("goal holds initially; nothing to evaluate".into());
    }
    if !rng.random_bool(settings.error_fraction) {
        return Ok(plan);
    }
    let mut states = vec![task.init().clone()];
    for &a in &plan {
        states.push(task.apply(states.last().expect("non-empty"), a).map_err(|e| e.to_string())?);
    }
    // positions in random order; the first with a candidate wins, so the
    // draw is uniform whenever every position has one
    let mut positions: Vec<usize> = (1..=plan.len()).collect();
    positions.shuffle(rng);
    for k in positions {
        let mut ctx = TrajectoryContext::new(states[0].clone());
        for s in &states[1..k] {
            ctx.push(s.clone());
        }
        let groups = erroneous_candidates(ev, &ctx, &settings.error_categories).map_err(planner)?;
        if groups.is_empty() {
            continue;
        }
        let cats: Vec<&Vec<ActionId>> = groups.values().collect();
        let pool = cats[rng.random_range(0..cats.len())];
        let bad = pool[rng.random_range(0..pool.len())];
        let mut actions = plan[..k - 1].to_vec();
        actions.push(bad);
        let here = &states[k - 1];
        match task.apply(here, bad) {
            Err(_) => actions.extend_from_slice(&plan[k - 1..]),
            Ok(next) => {
                if let Some(rest) = optimal_walk(ev, &next).map_err(planner)? {
                    actions.extend(rest);
                }
            }
        }
        return Ok(actions);
    }
    Err(format!(
        "no candidate in {} at any position",
        settings.error_categories.iter().map(|c| c.as_str()).collect::<Vec<_>>().join("/")
    ))
}

fn chains_for_problem(input: &ProblemInput, settings: &ChainSettings) -> Result<Vec<EvalChain>, String> {
    let d = input.domain_id;
    let tpl = templates(d);
    let problem_nl = tpl
        .render_problem(&input.domain, &input.problem)
        .map_err(|e| e.to_string())?;
    let task = ground(&input.domain, &input.problem);
    if !task.unreachable_goals().is_empty() {
        return Err("unsolvable: goal atoms unreachable".into());
    }
    let mut ev = Evaluator::with_config(&task, HeuristicKind::LmCut, settings.limits);
    let mut out = Vec::new();
    for i in 0..settings.chains_per_problem {
        let seed = derive_seed(settings.seed, &["chain", d.as_str(), input.problem_id(), &i.to_string()]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actions = build_one(&task, &mut ev, settings, &mut rng)?;
        let gold_categories = replay(&mut ev, &actions).map_err(|e| format!("planner: {e}"))?;
        let gold_first_error = first_error(&gold_categories, &settings.error_categories);
        let steps = actions
            .iter()
            .map(|&a| tpl.render_step(task.action(a)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        out.push(EvalChain {
            chain_id: chain_id(input.problem_id(), i),
            problem_nl: problem_nl.clone(),
            steps,
            gold_first_error,
            gold_categories,
            meta: ChainMeta { domain_id: d, seed },
        });
    }
    Ok(out)
}

/// 1-based index of the first step whose category is in `errors`.
pub fn first_error(categories: &[Category], errors: &BTreeSet<Category>) -> Option<usize> {
    categories.iter().position(|c| errors.contains(c)).map(|i| i + 1)
}

/// Builds `chains_per_problem` chains per input. A clean chain is the full
/// optimal plan; an erroneous one follows the plan to a uniformly drawn
/// position k, takes a sampled erroneous action there, then continues
/// optimally from wherever that action left the state. Problems that admit
/// no chain are skipped with a logged reason.
pub fn build_eval_chains(inputs: &[ProblemInput], settings: &ChainSettings) -> Result<ChainOutput, EvalError> {
    settings.validate()?;
    let results: Vec<Result<Vec<EvalChain>, String>> =
        inputs.par_iter().map(|p| chains_for_problem(p, settings)).collect();
    let mut out = ChainOutput::default();
    for (input, r) in inputs.iter().zip(results) {
        match r {
            Ok(chains) => out.chains.extend(chains),
            Err(reason) => {
                log::warn!("skipping {}: {reason}", input.problem_id());
                out.skipped.push(DroppedProblem {
                    problem_id: input.problem_id().to_string(),
                    reason,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_chains(path: &Path, chains: &[EvalChain]) -> Result<(), EvalError> {
    write_jsonl(path, chains)
}

pub fn read_chains(path: &Path) -> Result<Vec<EvalChain>, EvalError> {
    read_jsonl(path)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), EvalError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).expect("serializable");
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub chain_id: String,
    pub predicted: Option<usize>,
    pub gold: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scored {
    pub predictions: Vec<Prediction>,
    /// Chains whose response was missing or had the wrong number of scores.
    pub invalid: Vec<String>,
}

/// Smallest 1-based index with score below `tau`.
pub fn predict_first_error(scores: &[f64], tau: f64) -> Option<usize> {
    scores.iter().position(|&s| s < tau).map(|i| i + 1)
}

/// Matches responses to chains by id and thresholds them.
pub fn score_responses(chains: &[EvalChain], responses: &[JudgeResponse], tau: f64) -> Scored {
    let by_id: HashMap<&str, &JudgeResponse> = responses.iter().map(|r| (r.chain_id.as_str(), r)).collect();
    let mut out = Scored::default();
    for c in chains {
        match by_id.get(c.chain_id.as_str()) {
            Some(r) if r.scores.len() == c.steps.len() => out.predictions.push(Prediction {
                chain_id: c.chain_id.clone(),
                predicted: predict_first_error(&r.scores, tau),
                gold: c.gold_first_error,
            }),
            _ => out.invalid.push(c.chain_id.clone()),
        }
    }
    if !out.invalid.is_empty() {
        log::warn!("{} chain(s) excluded: missing or wrong-length scores", out.invalid.len());
    }
    out
}

pub fn score_with_judge(chains: &[EvalChain], judge: &mut dyn Judge, tau: f64) -> Result<Scored, EvalError> {
    let requests: Vec<JudgeRequest> = chains.iter().map(EvalChain::request).collect();
    let responses = judge.score(&requests)?;
    Ok(score_responses(chains, &responses, tau))
}

/// Harmonic mean of two percentages; 0 when both are 0.
pub fn compute_f1(error_acc: f64, correct_acc: f64) -> f64 {
    let s = error_acc + correct_acc;
    if s == 0.0 {
        0.0
    } else {
        2.0 * error_acc * correct_acc / s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub error_chains: usize,
    pub error_hits: usize,
    pub clean_chains: usize,
    pub clean_hits: usize,
    pub invalid: usize,
}

/// Accuracies are percentages, kept unrounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub error_acc: f64,
    pub correct_acc: f64,
    pub f1: f64,
    pub counts: BucketCounts,
}

fn pct(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * hits as f64 / total as f64
    }
}

impl EvalReport {
    pub fn from_scored(scored: &Scored) -> Self {
        let mut counts = BucketCounts {
            invalid: scored.invalid.len(),
            ..BucketCounts::default()
        };
        for p in &scored.predictions {
            let hit = p.predicted == p.gold;
            if p.gold.is_some() {
                counts.error_chains += 1;
                counts.error_hits += hit as usize;
            } else {
                counts.clean_chains += 1;
                counts.clean_hits += hit as usize;
            }
        }
        let error_acc = pct(counts.error_hits, counts.error_chains);
        let correct_acc = pct(counts.clean_hits, counts.clean_chains);
        EvalReport {
            error_acc,
            correct_acc,
            f1: compute_f1(error_acc, correct_acc),
            counts,
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        writeln!(f, "error   {:>5.1}  ({}/{})", self.error_acc, c.error_hits, c.error_chains)?;
        writeln!(f, "correct {:>5.1}  ({}/{})", self.correct_acc, c.clean_hits, c.clean_chains)?;
        write!(f, "F1      {:>5.1}", self.f1)?;
        if c.invalid > 0 {
            write!(f, "\ninvalid {}", c.invalid)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
