//! Dataset generation: walk each problem's optimal trajectory, sample
//! candidate steps at every state, and label them.

mod config;
mod split;
mod stats;

pub use config::{DomainOverrides, PipelineConfig, CONFIG_ENV};
pub use split::{read_split_jsonl, split, Split, SplitAssignment, DEFAULT_RATIOS};
pub use stats::{stats, DomainRow, DomainStats};

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forge::DomainId;
use crate::grounder::{ground, ActionId};
use crate::pddl::{parse_domain, parse_problem, DomainDef, PddlError, ProblemDef};
use crate::planner::{HeuristicKind, SearchLimits};
use crate::seed::derive_seed;
use crate::taxonomy::{get_rand_actions, Category, Evaluator, TaxonomyError, TrajectoryContext};
use crate::verbalizer::{templates, VerbalizeError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Pddl {
        path: PathBuf,
        #[source]
        source: PddlError,
    },
    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },
    #[error("no built-in domain named '{0}'")]
    UnknownDomain(String),
    #[error("no problem files under {0}")]
    NoProblems(PathBuf),
    #[error(transparent)]
    Verbalize(#[from] VerbalizeError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixStep {
    pub text: String,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub seed: u64,
    pub optimal_cost: u32,
    pub y: usize,
    pub p_inapp: f64,
}

/// One labelled candidate step. Field order is the JSON key order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub record_id: String,
    pub domain_id: DomainId,
    pub problem_id: String,
    pub problem_nl: String,
    pub prefix_steps: Vec<PrefixStep>,
    pub candidate_step: String,
    pub category: Category,
    pub reward: f64,
    pub step_index: usize,
    pub meta: RecordMeta,
}

pub fn record_id(problem_id: &str, step_index: usize, action: &str) -> String {
    format!("{problem_id}/{step_index}/{action}")
}

/// A problem ready for generation.
#[derive(Clone, Debug)]
pub struct ProblemInput {
    pub domain_id: DomainId,
    pub domain: DomainDef,
    pub problem: ProblemDef,
}

impl ProblemInput {
    pub fn builtin(domain_id: DomainId, problem: ProblemDef) -> Self {
        ProblemInput {
            domain_id,
            domain: domain_id.domain(),
            problem,
        }
    }

    pub fn problem_id(&self) -> &str {
        &self.problem.name
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedProblem {
    pub problem_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub domain_id: DomainId,
    pub problem_id: String,
    pub optimal_cost: u32,
    pub records: usize,
}

#[derive(Clone, Debug, Default)]
pub struct DatasetOutput {
    pub records: Vec<DatasetRecord>,
    pub problems: Vec<ProblemSummary>,
    pub dropped: Vec<DroppedProblem>,
}

/// Sampling and search settings for one dataset run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationSettings {
    pub seed: u64,
    pub y: usize,
    pub y_per_domain: BTreeMap<DomainId, usize>,
    pub p_inapp: f64,
    #[serde(skip)]
    pub limits: SearchLimits,
}

impl GenerationSettings {
    pub fn uniform(seed: u64, y: usize, p_inapp: f64) -> Self {
        GenerationSettings {
            seed,
            y,
            y_per_domain: BTreeMap::new(),
            p_inapp,
            limits: SearchLimits::default(),
        }
    }

    pub fn y_for(&self, d: DomainId) -> usize {
        self.y_per_domain.get(&d).copied().unwrap_or(self.y)
    }
}

struct ProblemRecords {
    summary: ProblemSummary,
    records: Vec<(ActionId, DatasetRecord)>,
}

fn walk(input: &ProblemInput, settings: &GenerationSettings) -> Result<ProblemRecords, String> {
    let d = input.domain_id;
    let problem_id = input.problem_id().to_string();
    let y = settings.y_for(d);
    let tpl = templates(d);
    let problem_nl = tpl
        .render_problem(&input.domain, &input.problem)
        .map_err(|e| e.to_string())?;
    let task = ground(&input.domain, &input.problem);
    if !task.unreachable_goals().is_empty() {
        return Err("unsolvable: goal atoms unreachable".to_string());
    }
    let seed = derive_seed(settings.seed, &[d.as_str(), &problem_id]);
    let mut ev = Evaluator::with_config(&task, HeuristicKind::LmCut, settings.limits);
    let planner_err = |e: TaxonomyError| format!("planner: {e}");
    let optimal_cost = ev
        .h_star(task.init())
        .map_err(planner_err)?
        .ok_or("unsolvable from the initial state")?;

    let mut ctx = TrajectoryContext::new(task.init().clone());
    let mut prefix: Vec<PrefixStep> = Vec::new();
    let mut records = Vec::new();
    let mut k = 0;
    while !task.is_goal(ctx.current()) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["step", &k.to_string()]));
        for a in get_rand_actions(&task, &ctx, y, &mut rng, settings.p_inapp) {
            let verdict = ev.eval_action(&ctx, a).map_err(planner_err)?;
            let action = task.action(a);
            let record = DatasetRecord {
                record_id: record_id(&problem_id, k, &action.to_string()),
                domain_id: d,
                problem_id: problem_id.clone(),
                problem_nl: problem_nl.clone(),
                prefix_steps: prefix.clone(),
                candidate_step: tpl.render_step(action).map_err(|e| e.to_string())?,
                category: verdict.category,
                reward: verdict.reward,
                step_index: k,
                meta: RecordMeta {
                    seed,
                    optimal_cost,
                    y,
                    p_inapp: settings.p_inapp,
                },
            };
            records.push((a, record));
        }
        let best = ev.get_opt_action(ctx.current()).map_err(planner_err)?;
        prefix.push(PrefixStep {
            text: tpl.render_step(task.action(best)).map_err(|e| e.to_string())?,
            reward: Category::Optimal.reward(),
        });
        let next = task.apply(ctx.current(), best).map_err(|e| e.to_string())?;
        ctx.push(next);
        k += 1;
    }
    Ok(ProblemRecords {
        summary: ProblemSummary {
            domain_id: d,
            problem_id,
            optimal_cost,
            records: records.len(),
        },
        records,
    })
}

/// Runs the generation loop over every input. Problems are independent and
/// processed in parallel on the current rayon pool; the result is sorted by
/// (domain, problem, step, candidate action id) so it does not depend on
/// scheduling. A problem that fails part-way is dropped whole.
pub fn generate_dataset(inputs: &[ProblemInput], settings: &GenerationSettings) -> DatasetOutput {
    let results: Vec<(usize, Result<ProblemRecords, String>)> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| (i, walk(input, settings)))
        .collect();

    let mut out = DatasetOutput::default();
    let mut keyed = Vec::new();
    for (i, r) in results {
        match r {
            Ok(p) => {
                out.problems.push(p.summary);
                keyed.extend(p.records);
            }
            Err(reason) => {
                let problem_id = inputs[i].problem_id().to_string();
                log::warn!("dropping {problem_id}: {reason}");
                out.dropped.push(DroppedProblem { problem_id, reason });
            }
        }
    }
    keyed.sort_by(|(a, x), (b, y)| {
        (x.domain_id, &x.problem_id, x.step_index, a).cmp(&(y.domain_id, &y.problem_id, y.step_index, b))
    });
    out.records = keyed.into_iter().map(|(_, r)| r).collect();
    out.problems
        .sort_by(|a, b| (a.domain_id, &a.problem_id).cmp(&(b.domain_id, &b.problem_id)));
    out.dropped.sort_by(|a, b| a.problem_id.cmp(&b.problem_id));
    out
}

/// [`generate_dataset`] on a dedicated pool of `workers` threads.
pub fn generate_dataset_with_workers(
    inputs: &[ProblemInput],
    settings: &GenerationSettings,
    workers: usize,
) -> Result<DatasetOutput, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    Ok(pool.install(|| generate_dataset(inputs, settings)))
}

pub fn write_records(path: &Path, records: &[DatasetRecord]) -> Result<(), PipelineError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).expect("records serialize");
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>, PipelineError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| PipelineError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Loads `domain.pddl` plus every other `*.pddl` in `dir` (sorted by name),
/// or, if `dir` has no `domain.pddl`, the same from each subdirectory.
pub fn load_problem_dir(dir: &Path) -> Result<Vec<ProblemInput>, PipelineError> {
    let mut out = Vec::new();
    if dir.join("domain.pddl").is_file() {
        load_one_domain(dir, &mut out)?;
    } else {
        let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("domain.pddl").is_file())
            .collect();
        subdirs.sort();
        for sub in subdirs {
            load_one_domain(&sub, &mut out)?;
        }
    }
    if out.is_empty() {
        return Err(PipelineError::NoProblems(dir.to_path_buf()));
    }
    Ok(out)
}

fn load_one_domain(dir: &Path, out: &mut Vec<ProblemInput>) -> Result<(), PipelineError> {
    let domain_path = dir.join("domain.pddl");
    let domain = parse_domain(&read_text(&domain_path)?).map_err(|source| PipelineError::Pddl {
        path: domain_path.clone(),
        source,
    })?;
    let domain_id: DomainId = domain
        .name
        .parse()
        .map_err(|_| PipelineError::UnknownDomain(domain.name.clone()))?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pddl") && p.file_name() != Some("domain.pddl".as_ref()))
        .collect();
    files.sort();
    for path in files {
        let problem = parse_problem(&read_text(&path)?, &domain).map_err(|source| PipelineError::Pddl {
            path: path.clone(),
            source,
        })?;
        out.push(ProblemInput {
            domain_id,
            domain: domain.clone(),
            problem,
        });
    }
    Ok(())
}
