//! The built-in domain catalog and seeded generators for solvable instances.

mod generators;
pub mod npuzzle;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounder::ground;
use crate::pddl::{parse_domain, DomainDef, ProblemDef};
use crate::planner::{solve, HeuristicKind, Outcome, SearchLimits};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainId {
    Blocksworld3,
    Blocksworld4,
    Ferry,
    Hanoi,
    Logistics,
    Elevator,
    Npuzzle,
    Visitgrid,
    Sokoban,
    Rooms,
    Spanner,
}

impl DomainId {
    pub const ALL: [DomainId; 11] = [
        DomainId::Blocksworld3,
        DomainId::Blocksworld4,
        DomainId::Ferry,
        DomainId::Hanoi,
        DomainId::Logistics,
        DomainId::Elevator,
        DomainId::Npuzzle,
        DomainId::Visitgrid,
        DomainId::Sokoban,
        DomainId::Rooms,
        DomainId::Spanner,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainId::Blocksworld3 => "blocksworld3",
            DomainId::Blocksworld4 => "blocksworld4",
            DomainId::Ferry => "ferry",
            DomainId::Hanoi => "hanoi",
            DomainId::Logistics => "logistics",
            DomainId::Elevator => "elevator",
            DomainId::Npuzzle => "npuzzle",
            DomainId::Visitgrid => "visitgrid",
            DomainId::Sokoban => "sokoban",
            DomainId::Rooms => "rooms",
            DomainId::Spanner => "spanner",
        }
    }

    pub fn pddl_text(self) -> &'static str {
        match self {
            DomainId::Blocksworld3 => include_str!("../../domains/blocksworld3.pddl"),
            DomainId::Blocksworld4 => include_str!("../../domains/blocksworld4.pddl"),
            DomainId::Ferry => include_str!("../../domains/ferry.pddl"),
            DomainId::Hanoi => include_str!("../../domains/hanoi.pddl"),
            DomainId::Logistics => include_str!("../../domains/logistics.pddl"),
            DomainId::Elevator => include_str!("../../domains/elevator.pddl"),
            DomainId::Npuzzle => include_str!("../../domains/npuzzle.pddl"),
            DomainId::Visitgrid => include_str!("../../domains/visitgrid.pddl"),
            DomainId::Sokoban => include_str!("../../domains/sokoban.pddl"),
            DomainId::Rooms => include_str!("../../domains/rooms.pddl"),
            DomainId::Spanner => include_str!("../../domains/spanner.pddl"),
        }
    }

    /// Parsed embedded domain. The embedded files are covered by tests, so a
    /// parse failure here is a build defect.
    pub fn domain(self) -> DomainDef {
        parse_domain(self.pddl_text()).expect("embedded domain parses")
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainId {
    type Err = ForgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainId::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| ForgeError::UnknownDomain(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForgeError {
    #[error("unknown domain '{0}'")]
    UnknownDomain(String),
    #[error("unknown size parameter '{param}' for {domain}")]
    UnknownParam { domain: DomainId, param: String },
    #[error("size parameter {param}={value} for {domain} is outside [{min}, {max}]")]
    ParamOutOfRange {
        domain: DomainId,
        param: String,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("{domain}: no instance satisfied {constraint} within {attempts} attempts")]
    RejectionBudgetExhausted {
        domain: DomainId,
        constraint: String,
        attempts: u32,
    },
    #[error("{domain}: inconsistent parameters: {reason}")]
    InvalidParams { domain: DomainId, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SizeParam {
    pub name: &'static str,
    pub min: i64,
    pub max: i64,
    pub default: i64,
}

const fn p(name: &'static str, min: i64, max: i64, default: i64) -> SizeParam {
    SizeParam {
        name,
        min,
        max,
        default,
    }
}

pub const DEFAULT_MOPL_BOUNDS: (u32, u32) = (2, 15);

#[derive(Clone, Debug, Serialize)]
pub struct DomainCatalogEntry {
    pub domain_id: DomainId,
    #[serde(skip)]
    pub pddl_text: &'static str,
    pub size_params: Vec<SizeParam>,
    pub mopl_bounds: (u32, u32),
}

fn size_params(d: DomainId) -> Vec<SizeParam> {
    match d {
        DomainId::Blocksworld3 | DomainId::Blocksworld4 => vec![p("blocks", 2, 7, 4)],
        DomainId::Ferry => vec![p("cars", 1, 4, 2), p("locations", 2, 5, 3)],
        DomainId::Hanoi => vec![p("disks", 1, 6, 3), p("pegs", 3, 4, 3), p("full_stack", 0, 1, 0)],
        DomainId::Logistics => vec![
            p("cities", 1, 3, 2),
            p("locations_per_city", 1, 3, 2),
            p("packages", 1, 4, 2),
            p("airplanes", 1, 2, 1),
        ],
        DomainId::Elevator => vec![p("floors", 2, 8, 4), p("passengers", 1, 4, 2)],
        DomainId::Npuzzle => vec![
            p("rows", 2, 3, 3),
            p("cols", 2, 3, 3),
            p("scramble", 1, 40, 12),
            p("uniform", 0, 1, 0),
        ],
        DomainId::Visitgrid => vec![p("width", 1, 5, 3), p("height", 1, 5, 3), p("target_pct", 10, 100, 50)],
        DomainId::Sokoban => vec![
            p("width", 3, 7, 5),
            p("height", 3, 7, 4),
            p("walls", 0, 6, 2),
            p("boxes", 1, 2, 1),
            p("steps", 1, 40, 10),
        ],
        DomainId::Rooms => vec![p("rooms", 2, 8, 5), p("extra_doors", 0, 4, 1), p("lit", 1, 4, 2)],
        DomainId::Spanner => vec![
            p("locations", 2, 6, 4),
            p("spanners", 1, 4, 2),
            p("nuts", 1, 4, 2),
            p("two_way_pct", 0, 100, 50),
        ],
    }
}

pub fn catalog_entry(d: DomainId) -> DomainCatalogEntry {
    DomainCatalogEntry {
        domain_id: d,
        pddl_text: d.pddl_text(),
        size_params: size_params(d),
        mopl_bounds: DEFAULT_MOPL_BOUNDS,
    }
}

/// All built-in domains in stable order.
pub fn catalog() -> Vec<DomainCatalogEntry> {
    DomainId::ALL.into_iter().map(catalog_entry).collect()
}

/// Resolved size parameters: every catalog parameter present, in range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeParams(BTreeMap<String, i64>);

impl SizeParams {
    pub fn defaults(d: DomainId) -> Self {
        SizeParams(
            size_params(d)
                .into_iter()
                .map(|sp| (sp.name.to_string(), sp.default))
                .collect(),
        )
    }

    pub fn resolve(d: DomainId, overrides: &BTreeMap<String, i64>) -> Result<Self, ForgeError> {
        let specs = size_params(d);
        let mut out = Self::defaults(d);
        for (k, &v) in overrides {
            let spec = specs
                .iter()
                .find(|s| s.name == k)
                .ok_or_else(|| ForgeError::UnknownParam {
                    domain: d,
                    param: k.clone(),
                })?;
            if v < spec.min || v > spec.max {
                return Err(ForgeError::ParamOutOfRange {
                    domain: d,
                    param: k.clone(),
                    value: v,
                    min: spec.min,
                    max: spec.max,
                });
            }
            out.0.insert(k.clone(), v);
        }
        Ok(out)
    }

    pub fn get(&self, name: &str) -> i64 {
        self.0[name]
    }

    pub(crate) fn usize(&self, name: &str) -> usize {
        usize::try_from(self.get(name)).expect("ranges are non-negative")
    }

    pub fn as_map(&self) -> &BTreeMap<String, i64> {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedInstance {
    pub domain_id: DomainId,
    pub problem: ProblemDef,
    pub seed: u64,
    pub optimal_cost: u32,
}

#[derive(Clone, Debug)]
pub struct GenerateOptions {
    pub mopl_bounds: (u32, u32),
    pub max_attempts: u32,
    pub limits: SearchLimits,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            mopl_bounds: DEFAULT_MOPL_BOUNDS,
            max_attempts: 500,
            limits: SearchLimits::default(),
        }
    }
}

pub fn generate_instance(
    domain_id: DomainId,
    params: &SizeParams,
    seed: u64,
) -> Result<GeneratedInstance, ForgeError> {
    generate_instance_with(domain_id, params, seed, &GenerateOptions::default())
}

/// Draws candidates from the domain generator until one is solvable with an
/// optimal cost inside `opts.mopl_bounds`. Attempt `k` uses a stream derived
/// from `(seed, k)`, so the result depends on nothing but the arguments.
pub fn generate_instance_with(
    domain_id: DomainId,
    params: &SizeParams,
    seed: u64,
    opts: &GenerateOptions,
) -> Result<GeneratedInstance, ForgeError> {
    let domain = domain_id.domain();
    let (lo, hi) = opts.mopl_bounds;
    for attempt in 0..opts.max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["attempt", &attempt.to_string()]));
        let mut problem = generators::candidate(domain_id, params, &mut rng)?;
        problem.name = format!("{domain_id}-{seed}");
        let task = ground(&domain, &problem);
        if !task.unreachable_goals().is_empty() {
            continue;
        }
        let result = solve(&task, task.init(), HeuristicKind::LmCut, opts.limits);
        if let Outcome::Solved(plan) = result.outcome {
            if (lo..=hi).contains(&plan.cost) {
                return Ok(GeneratedInstance {
                    domain_id,
                    problem,
                    seed,
                    optimal_cost: plan.cost,
                });
            }
        }
    }
    Err(ForgeError::RejectionBudgetExhausted {
        domain: domain_id,
        constraint: format!("solvable with optimal cost in [{lo}, {hi}]"),
        attempts: opts.max_attempts,
    })
}

/// `count` distinct instances. Candidate `i` uses seed
/// `derive_seed(seed, [domain, i])`; a candidate whose objects, init and goal
/// repeat an earlier one is discarded and the next index tried, so small
/// parameter settings cannot leak one problem into two splits.
pub fn generate_batch(
    domain_id: DomainId,
    params: &SizeParams,
    count: usize,
    seed: u64,
    opts: &GenerateOptions,
) -> Result<Vec<GeneratedInstance>, ForgeError> {
    use rayon::prelude::*;
    use std::collections::HashSet;

    let budget = count.saturating_mul(10).max(count + 10);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut next = 0usize;
    while out.len() < count {
        if next >= budget {
            return Err(ForgeError::RejectionBudgetExhausted {
                domain: domain_id,
                constraint: format!("{count} distinct instances"),
                attempts: budget as u32,
            });
        }
        let want = (count - out.len()).min(budget - next);
        let batch: Vec<Result<GeneratedInstance, ForgeError>> = (next..next + want)
            .into_par_iter()
            .map(|i| {
                let s = derive_seed(seed, &[domain_id.as_str(), &i.to_string()]);
                generate_instance_with(domain_id, params, s, opts)
            })
            .collect();
        next += want;
        for r in batch {
            let inst = r?;
            let key = (inst.problem.objects.clone(), inst.problem.init.clone(), inst.problem.goal.clone());
            if seen.insert(key) && out.len() < count {
                out.push(inst);
            }
        }
    }
    Ok(out)
}
