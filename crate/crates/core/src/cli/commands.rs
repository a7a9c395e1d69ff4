use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use serde_json::json;

use super::*;
use crate::eval::{
    build_eval_chains, read_chains, score_with_judge, write_chains, ChainSettings, ConstJudge, EvalReport, FileJudge,
    Judge, OracleJudge, RandomJudge, SubprocessJudge,
};
use crate::forge::{catalog_entry, generate_batch, DomainId, GenerateOptions, SizeParams};
use crate::grounder::ground;
use crate::manifest::{digest_file, digest_tree, RunManifest};
use crate::pddl::{parse_domain, parse_problem};
use crate::pipeline::{
    generate_dataset_with_workers, load_problem_dir, read_records, read_split_jsonl, stats as domain_stats,
    write_records, DroppedProblem, GenerationSettings, PipelineConfig, Split, CONFIG_ENV,
};
use crate::planner::{solve as plan_search, HeuristicKind, Outcome, SearchLimits};
use crate::taxonomy::Category;

const DEFAULT_SEED: u64 = 0;
const DEFAULT_Y: usize = 8;
const DEFAULT_P_INAPP: f64 = 0.25;

type CmdResult = Result<i32, CliError>;

fn load_config(arg: &ConfigArg) -> Result<(PipelineConfig, Option<PathBuf>), CliError> {
    let path = arg
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    match path {
        None => Ok((PipelineConfig::default(), None)),
        Some(p) => {
            let cfg = PipelineConfig::load(&p).map_err(|e| usage(e.to_string()))?;
            Ok((cfg, Some(p)))
        }
    }
}

fn resolve_limits(args: &LimitArgs, cfg: &PipelineConfig) -> Result<SearchLimits, CliError> {
    let d = SearchLimits::default();
    let secs = args.max_time.or(cfg.max_time_secs).unwrap_or(d.max_time.as_secs_f64());
    if !(secs.is_finite() && secs > 0.0) {
        return Err(usage(format!("--max-time must be positive, got {secs}")));
    }
    let max_expansions = args.max_expansions.or(cfg.max_expansions).unwrap_or(d.max_expansions);
    if max_expansions == 0 {
        return Err(usage("--max-expansions must be positive"));
    }
    Ok(SearchLimits {
        max_expansions,
        max_time: Duration::from_secs_f64(secs),
    })
}

fn limits_json(l: &SearchLimits) -> serde_json::Value {
    json!({"max_expansions": l.max_expansions, "max_time_secs": l.max_time.as_secs_f64()})
}

fn workers(requested: Option<usize>) -> Result<usize, CliError> {
    match requested {
        Some(0) => Err(usage("--workers must be positive")),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn parse_domain_id(s: &str) -> Result<DomainId, CliError> {
    s.parse().map_err(|e: crate::forge::ForgeError| usage(e.to_string()))
}

fn finish(mut manifest: RunManifest, out: &Path, argv: &[String], timings: BTreeMap<String, f64>) -> Result<(), CliError> {
    manifest.runtime.argv = argv.to_vec();
    manifest.runtime.timings_secs = timings;
    let path = manifest.write(out).with_context(|| format!("writing manifest for {}", out.display()))?;
    log::info!("manifest: {}", path.display());
    Ok(())
}

struct Timer {
    start: Instant,
    laps: BTreeMap<String, f64>,
}

impl Timer {
    fn new() -> Self {
        Timer {
            start: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps.insert(name.to_string(), (now - self.start).as_secs_f64());
        self.start = now;
    }
}

/// `KEY=VALUE` applies to every selected domain with that parameter;
/// `DOMAIN.KEY=VALUE` to one domain.
fn parse_sizes(flags: &[String], domains: &[DomainId]) -> Result<BTreeMap<DomainId, BTreeMap<String, i64>>, CliError> {
    let mut out: BTreeMap<DomainId, BTreeMap<String, i64>> = BTreeMap::new();
    for f in flags {
        let (key, value) = f
            .split_once('=')
            .ok_or_else(|| usage(format!("--size expects KEY=VALUE, got '{f}'")))?;
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("--size {key}: '{value}' is not an integer")))?;
        let (targets, param) = match key.split_once('.') {
            Some((d, p)) => {
                let d = parse_domain_id(d)?;
                if !domains.contains(&d) {
                    return Err(usage(format!("--size {key}: domain {d} is not being generated")));
                }
                (vec![d], p)
            }
            None => (domains.to_vec(), key),
        };
        let mut matched = false;
        for d in targets {
            if catalog_entry(d).size_params.iter().any(|sp| sp.name == param) {
                out.entry(d).or_default().insert(param.to_string(), value);
                matched = true;
            }
        }
        if !matched {
            return Err(usage(format!("--size {key}: no selected domain has a parameter '{param}'")));
        }
    }
    Ok(out)
}

fn ensure_empty_dir(dir: &Path) -> Result<(), CliError> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
        if entries.next().is_some() {
            return Err(CliError::Failed(anyhow!("output directory {} is not empty", dir.display())));
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

pub(super) fn gen_problems(a: GenProblemsArgs, argv: &[String]) -> CmdResult {
    let (cfg, cfg_path) = load_config(&a.config)?;
    let domains = if a.domain == "all" {
        DomainId::ALL.to_vec()
    } else {
        vec![parse_domain_id(&a.domain)?]
    };
    if a.count == 0 {
        return Err(usage("--count must be positive"));
    }
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let limits = resolve_limits(&a.limits, &cfg)?;
    let flag_sizes = parse_sizes(&a.sizes, &domains)?;

    let mut plans = Vec::new();
    for &d in &domains {
        let over = cfg.domains.get(&d).cloned().unwrap_or_default();
        let mut sizes = over.size_params.clone();
        sizes.extend(flag_sizes.get(&d).cloned().unwrap_or_default());
        let params = SizeParams::resolve(d, &sizes).map_err(|e| usage(e.to_string()))?;
        let (lo, hi) = over.mopl_bounds.unwrap_or(catalog_entry(d).mopl_bounds);
        let bounds = (a.mopl_min.unwrap_or(lo), a.mopl_max.unwrap_or(hi));
        if bounds.0 > bounds.1 {
            return Err(usage(format!("{d}: empty plan-length bounds [{}, {}]", bounds.0, bounds.1)));
        }
        plans.push((d, params, bounds));
    }

    ensure_empty_dir(&a.out)?;
    let mut timer = Timer::new();
    let width = a.count.to_string().len().max(3);
    let mut resolved = serde_json::Map::new();
    for (d, params, bounds) in plans {
        let opts = GenerateOptions {
            mopl_bounds: bounds,
            limits,
            ..GenerateOptions::default()
        };
        let instances = generate_batch(d, &params, a.count, seed, &opts)?;
        let dir = if domains.len() == 1 { a.out.clone() } else { a.out.join(d.as_str()) };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("domain.pddl"), d.pddl_text())?;
        for (i, inst) in instances.iter().enumerate() {
            let path = dir.join(format!("p{:0width$}.pddl", i + 1));
            fs::write(&path, format!("{}\n", inst.problem)).with_context(|| format!("writing {}", path.display()))?;
        }
        let mopl = instances.iter().map(|i| i.optimal_cost as f64).sum::<f64>() / instances.len() as f64;
        log::info!("{d}: {} problems, MOPL {mopl:.2}", instances.len());
        resolved.insert(
            d.to_string(),
            json!({"size_params": params.as_map(), "mopl_bounds": bounds, "max_attempts": opts.max_attempts}),
        );
        timer.lap(d.as_str());
    }

    let config = json!({
        "count": a.count,
        "domains": resolved,
        "limits": limits_json(&limits),
        "config_file": cfg_path.map(|p| p.display().to_string()),
    });
    let mut m = RunManifest::new("gen-problems", Some(seed), config);
    m.outputs = digest_tree(&a.out)?;
    m.notes.push("instances with identical objects, init and goal are generated once".into());
    finish(m, &a.out, argv, timer.laps)?;
    eprintln!("wrote {} problem(s) per domain to {}", a.count, a.out.display());
    Ok(EXIT_OK)
}

pub(super) fn gen_dataset(a: GenDatasetArgs, argv: &[String]) -> CmdResult {
    let (cfg, cfg_path) = load_config(&a.config)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let y = a.y.or(cfg.y).unwrap_or(DEFAULT_Y);
    if y == 0 {
        return Err(usage("--y must be positive"));
    }
    let p_inapp = a.p_inapp.or(cfg.p_inapp).unwrap_or(DEFAULT_P_INAPP);
    if !(0.0..=1.0).contains(&p_inapp) {
        return Err(usage(format!("--p-inapp must be in [0, 1], got {p_inapp}")));
    }
    let limits = resolve_limits(&a.limits, &cfg)?;
    let workers = workers(a.workers)?;
    let settings = GenerationSettings {
        seed,
        y,
        y_per_domain: cfg.domains.iter().filter_map(|(d, o)| o.y.map(|y| (*d, y))).collect(),
        p_inapp,
        limits,
    };

    let mut timer = Timer::new();
    let inputs = load_problem_dir(&a.problems)?;
    timer.lap("load");
    let out = generate_dataset_with_workers(&inputs, &settings, workers)?;
    timer.lap("generate");
    write_records(&a.out, &out.records)?;
    timer.lap("write");

    let config = json!({
        "generation": settings,
        "limits": limits_json(&limits),
        "config_file": cfg_path.map(|p| p.display().to_string()),
    });
    let mut m = RunManifest::new("gen-dataset", Some(seed), config);
    m.inputs = digest_tree(&a.problems)?;
    m.outputs = vec![digest_file(&a.out)?];
    m.dropped = out.dropped.clone();
    m.notes.push("records are not deduplicated: identical (state, candidate) pairs from different problems all appear".into());
    m.notes.push("candidates are sampled without replacement per state".into());
    m.notes.push(format!("{} problems, {} records", out.problems.len(), out.records.len()));
    m.runtime.workers = Some(workers);
    finish(m, &a.out, argv, timer.laps)?;
    eprintln!(
        "wrote {} records from {} problems ({} dropped) to {}",
        out.records.len(),
        out.problems.len(),
        out.dropped.len(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--ratios expects three numbers, got '{s}'")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(usage(format!("--ratios expects three numbers, got '{s}'"))),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub(super) fn split(a: SplitArgs, argv: &[String]) -> CmdResult {
    let ratios = parse_ratios(&a.ratios)?;
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let out = a.out.clone().unwrap_or_else(|| sibling(&a.records, ".split.jsonl"));
    let mut timer = Timer::new();
    let records = read_records(&a.records)?;
    let problems: Vec<(DomainId, String)> = records.iter().map(|r| (r.domain_id, r.problem_id.clone())).collect();
    let assignment = crate::pipeline::split(&problems, ratios, &a.holdout, seed).map_err(|e| usage(e.to_string()))?;
    assignment.write_jsonl(&out)?;
    timer.lap("split");

    let counts = assignment.counts();
    for (s, n) in &counts {
        println!("{:<8} {n}", s.as_str());
    }
    let config = json!({"ratios": ratios, "holdout": a.holdout, "counts": counts.iter().map(|(s, n)| (s.as_str(), n)).collect::<BTreeMap<_, _>>()});
    let mut m = RunManifest::new("split", Some(seed), config);
    m.inputs = vec![digest_file(&a.records)?];
    m.outputs = vec![digest_file(&out)?];
    finish(m, &out, argv, timer.laps)?;
    Ok(EXIT_OK)
}

pub(super) fn stats(a: StatsArgs, argv: &[String]) -> CmdResult {
    let records = read_records(&a.records)?;
    let st = domain_stats(&records);
    println!("{st}");
    if let Some(out) = &a.out {
        let mut text = serde_json::to_string_pretty(&st).expect("stats serialize");
        text.push('\n');
        fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
        let mut m = RunManifest::new("stats", None, json!({}));
        m.inputs = vec![digest_file(&a.records)?];
        m.outputs = vec![digest_file(out)?];
        finish(m, out, argv, BTreeMap::new())?;
    }
    Ok(EXIT_OK)
}

fn parse_list<T: std::str::FromStr<Err = String>>(s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(usage))
        .collect()
}

fn parse_split_name(s: &str) -> Result<Split, String> {
    Split::ALL
        .into_iter()
        .find(|x| x.as_str() == s)
        .ok_or_else(|| format!("unknown split '{s}'"))
}

pub(super) fn gen_chains(a: GenChainsArgs, argv: &[String]) -> CmdResult {
    let (cfg, cfg_path) = load_config(&a.config)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let settings = ChainSettings {
        seed,
        error_fraction: a.error_fraction,
        error_categories: parse_list::<Category>(&a.error_categories)?.into_iter().collect(),
        chains_per_problem: a.chains_per_problem,
        limits: resolve_limits(&a.limits, &cfg)?,
    };
    settings.validate().map_err(|e| usage(e.to_string()))?;
    let workers = workers(a.workers)?;
    let wanted: BTreeSet<Split> = a
        .splits
        .split(',')
        .map(|s| parse_split_name(s.trim()))
        .collect::<Result<_, _>>()
        .map_err(usage)?;

    let mut timer = Timer::new();
    let mut inputs = load_problem_dir(&a.problems)?;
    let mut input_digests = digest_tree(&a.problems)?;
    if let Some(split_path) = &a.split {
        let assignment = read_split_jsonl(split_path)?;
        inputs.retain(|p| assignment.get(p.problem_id()).is_some_and(|s| wanted.contains(s)));
        let mut d = digest_file(split_path)?;
        d.path = format!("split:{}", d.path);
        input_digests.push(d);
    }
    timer.lap("load");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| anyhow!("thread pool: {e}"))?;
    let out = pool.install(|| build_eval_chains(&inputs, &settings))?;
    timer.lap("build");
    write_chains(&a.out, &out.chains)?;
    timer.lap("write");

    let errors = out.chains.iter().filter(|c| c.gold_first_error.is_some()).count();
    let config = json!({
        "chains": settings,
        "limits": limits_json(&settings.limits),
        "splits": a.split.as_ref().map(|_| wanted.iter().map(|s| s.as_str()).collect::<Vec<_>>()),
        "config_file": cfg_path.map(|p| p.display().to_string()),
    });
    let mut m = RunManifest::new("gen-chains", Some(seed), config);
    m.inputs = input_digests;
    m.outputs = vec![digest_file(&a.out)?];
    m.dropped = out.skipped.clone();
    m.notes.push(format!("{} chains, {errors} with an injected error", out.chains.len()));
    m.notes.push("after an inapplicable step the chain continues from the unchanged state; after a dead end it stops".into());
    m.runtime.workers = Some(workers);
    finish(m, &a.out, argv, timer.laps)?;
    eprintln!(
        "wrote {} chains ({errors} erroneous, {} problems skipped) to {}",
        out.chains.len(),
        out.skipped.len(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

pub(super) fn eval(a: EvalArgs, argv: &[String]) -> CmdResult {
    if !(0.0..=1.0).contains(&a.tau) {
        return Err(usage(format!("--tau must be in [0, 1], got {}", a.tau)));
    }
    let out = a.out.clone().unwrap_or_else(|| sibling(&a.chains, ".report.json"));
    let mut timer = Timer::new();
    let chains = read_chains(&a.chains)?;
    let mut inputs = vec![digest_file(&a.chains)?];
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let mut judge: Box<dyn Judge> = match (&a.judge, &a.scores, a.builtin.as_deref()) {
        (Some(cmd), _, _) => Box::new(SubprocessJudge { command: cmd.clone() }),
        (_, Some(path), _) => {
            inputs.push(digest_file(path)?);
            Box::new(FileJudge { path: path.clone() })
        }
        (_, _, Some("oracle")) => {
            let dir = a
                .problems
                .as_ref()
                .ok_or_else(|| usage("--builtin oracle needs --problems DIR"))?;
            inputs.extend(digest_tree(dir)?);
            Box::new(OracleJudge::new(&load_problem_dir(dir)?, SearchLimits::default()))
        }
        (_, _, Some("const1")) => Box::new(ConstJudge(1.0)),
        (_, _, Some("const0")) => Box::new(ConstJudge(0.0)),
        (_, _, Some("random")) => Box::new(RandomJudge { seed }),
        (_, _, Some(other)) => {
            return Err(usage(format!("unknown built-in judge '{other}' (expected oracle, const1, const0 or random)")))
        }
        (None, None, None) => unreachable!("clap requires one judge source"),
    };
    let scored = score_with_judge(&chains, judge.as_mut(), a.tau)?;
    timer.lap("score");
    let report = EvalReport::from_scored(&scored);
    println!("{report}");
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;

    let uses_seed = a.builtin.as_deref() == Some("random");
    let config = json!({"judge": judge.name(), "tau": a.tau});
    let mut m = RunManifest::new("eval", uses_seed.then_some(seed), config);
    m.inputs = inputs;
    m.outputs = vec![digest_file(&out)?];
    m.dropped = scored
        .invalid
        .iter()
        .map(|id| DroppedProblem {
            problem_id: id.clone(),
            reason: "missing or wrong-length scores".into(),
        })
        .collect();
    finish(m, &out, argv, timer.laps)?;
    Ok(EXIT_OK)
}

fn read_pddl(domain: &Path, problem: &Path) -> anyhow::Result<(crate::pddl::DomainDef, crate::pddl::ProblemDef)> {
    let dtext = fs::read_to_string(domain).with_context(|| format!("reading {}", domain.display()))?;
    let d = parse_domain(&dtext).with_context(|| domain.display().to_string())?;
    let ptext = fs::read_to_string(problem).with_context(|| format!("reading {}", problem.display()))?;
    let p = parse_problem(&ptext, &d).with_context(|| problem.display().to_string())?;
    Ok((d, p))
}

/// `(move a b)` or `move a b`; `;` starts a comment. `None` for blank lines.
fn parse_plan_line(line: &str) -> Option<(String, Vec<String>)> {
    let line = line.split(';').next().unwrap_or("").trim();
    if line.is_empty() {
        return None;
    }
    let inner = line.trim_start_matches('(').trim_end_matches(')');
    let mut words = inner.split_whitespace().map(str::to_lowercase);
    let name = words.next()?;
    Some((name, words.collect()))
}

pub(super) fn validate_plan(a: ValidatePlanArgs) -> CmdResult {
    let (domain, problem) = read_pddl(&a.domain, &a.problem)?;
    let text = fs::read_to_string(&a.plan).with_context(|| format!("reading {}", a.plan.display()))?;
    let task = ground(&domain, &problem);
    let mut s = task.init().clone();
    let mut cost = 0;
    let mut steps = 0;
    for (lineno, line) in text.lines().enumerate() {
        let Some((name, args)) = parse_plan_line(line) else {
            continue;
        };
        steps += 1;
        let shown = format!("({name}{})", args.iter().map(|x| format!(" {x}")).collect::<String>());
        let Some(act) = task.find_action(&name, &args) else {
            println!("step {steps} (line {}): {shown} is not an action of this problem", lineno + 1);
            return Ok(EXIT_FAILURE);
        };
        if !task.is_applicable(&s, act) {
            let g = task.action(act);
            let mut why: Vec<String> = g
                .pre_pos
                .iter()
                .filter(|&&f| !s.contains(f))
                .map(|&f| format!("missing {}", task.fact(f)))
                .collect();
            why.extend(g.pre_neg.iter().filter(|&&f| s.contains(f)).map(|&f| format!("forbidden {}", task.fact(f))));
            println!("step {steps} (line {}): {shown} is not applicable: {}", lineno + 1, why.join(", "));
            return Ok(EXIT_FAILURE);
        }
        cost += task.action(act).cost;
        s = task.apply(&s, act)?;
    }
    if !task.is_goal(&s) {
        let unmet: Vec<String> = task
            .goal()
            .iter()
            .filter(|&&f| !s.contains(f))
            .map(|&f| task.fact(f).to_string())
            .chain(task.unreachable_goals().iter().map(|g| g.to_string()))
            .collect();
        println!("plan ends without reaching the goal; unmet: {}", unmet.join(", "));
        return Ok(EXIT_FAILURE);
    }
    println!("valid plan: {steps} steps, cost {cost}");
    Ok(EXIT_OK)
}

pub(super) fn solve(a: SolveArgs) -> CmdResult {
    let kind: HeuristicKind = a.heuristic.parse().map_err(usage)?;
    let limits = resolve_limits(&a.limits, &PipelineConfig::default())?;
    let (domain, problem) = read_pddl(&a.domain, &a.problem)?;
    let task = ground(&domain, &problem);
    let r = plan_search(&task, task.init(), kind, limits);
    match r.outcome {
        Outcome::Solved(plan) => {
            let mut text: String = plan.actions.iter().map(|&x| task.action(x).pddl_name() + "\n").collect();
            text.push_str(&format!("; cost = {} ({} expansions)\n", plan.cost, r.expansions));
            match &a.out {
                Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
        Outcome::Unsolvable => {
            eprintln!("problem is unsolvable");
            Ok(EXIT_FAILURE)
        }
        Outcome::ResourceLimit => {
            eprintln!("search limit reached after {} expansions", r.expansions);
            Ok(EXIT_FAILURE)
        }
    }
}
