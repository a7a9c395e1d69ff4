use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{io_err, PipelineError};
use crate::forge::DomainId;

pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.85, 0.05, 0.10);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Holdout,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Holdout];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Holdout => "holdout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitAssignment {
    pub assignments: BTreeMap<String, Split>,
    pub ratios: (f64, f64, f64),
    pub holdout_domain: DomainId,
}

#[derive(Serialize, Deserialize)]
struct SplitLine<'a> {
    problem_id: &'a str,
    split: Split,
}

impl SplitAssignment {
    pub fn counts(&self) -> BTreeMap<Split, usize> {
        let mut out: BTreeMap<Split, usize> = Split::ALL.iter().map(|&s| (s, 0)).collect();
        for s in self.assignments.values() {
            *out.get_mut(s).expect("all splits present") += 1;
        }
        out
    }

    pub fn get(&self, problem_id: &str) -> Option<Split> {
        self.assignments.get(problem_id).copied()
    }

    /// One `{"problem_id", "split"}` object per line, ordered by problem id.
    pub fn write_jsonl(&self, path: &Path) -> Result<(), PipelineError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
        for (problem_id, &split) in &self.assignments {
            serde_json::to_writer(&mut w, &SplitLine { problem_id, split }).expect("serializes");
            w.write_all(b"\n").map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))
    }
}

/// Assigns whole problems to splits. Problems of `holdout_domain` all go to
/// the holdout split; the rest are shuffled with `seed` and cut by `ratios`
/// (rounded, test takes the remainder).
pub fn split(
    problems: &[(DomainId, String)],
    ratios: (f64, f64, f64),
    holdout_domain: &str,
    seed: u64,
) -> Result<SplitAssignment, PipelineError> {
    let holdout: DomainId = holdout_domain
        .parse()
        .map_err(|_| PipelineError::UnknownDomain(holdout_domain.to_string()))?;
    let (train, val, test) = ratios;
    if [train, val, test].iter().any(|r| !(0.0..=1.0).contains(r)) || ((train + val + test) - 1.0).abs() > 1e-9 {
        return Err(PipelineError::Config(format!(
            "split ratios {train}/{val}/{test} must be non-negative and sum to 1"
        )));
    }
    let unique: BTreeSet<&(DomainId, String)> = problems.iter().collect();
    let mut assignments = BTreeMap::new();
    let mut pool: Vec<&str> = Vec::new();
    for (d, id) in unique {
        if *d == holdout {
            assignments.insert(id.clone(), Split::Holdout);
        } else {
            pool.push(id);
        }
    }
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = pool.len() as f64;
    let n_train = (n * train).round() as usize;
    let n_val = ((n * val).round() as usize).min(pool.len() - n_train);
    for (i, id) in pool.into_iter().enumerate() {
        let s = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        assignments.insert(id.to_string(), s);
    }
    Ok(SplitAssignment {
        assignments,
        ratios,
        holdout_domain: holdout,
    })
}

/// Reads a file written by [`SplitAssignment::write_jsonl`].
pub fn read_split_jsonl(path: &Path) -> Result<BTreeMap<String, Split>, PipelineError> {
    #[derive(Deserialize)]
    struct Owned {
        problem_id: String,
        split: Split,
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: Owned = serde_json::from_str(line).map_err(|e| PipelineError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.insert(l.problem_id, l.split);
    }
    Ok(out)
}
