use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::DatasetRecord;
use crate::forge::DomainId;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainRow {
    pub domain_id: String,
    pub problems: usize,
    pub mopl: f64,
    pub total_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainStats {
    pub rows: Vec<DomainRow>,
    pub totals: DomainRow,
}

fn mean(costs: &[u32]) -> f64 {
    if costs.is_empty() {
        0.0
    } else {
        costs.iter().map(|&c| c as f64).sum::<f64>() / costs.len() as f64
    }
}

/// Per-domain problem counts, mean optimal plan length and record counts,
/// in catalog order, plus a totals row over all problems.
pub fn stats(records: &[DatasetRecord]) -> DomainStats {
    // domain -> (problem -> optimal cost, record count)
    let mut by_domain: BTreeMap<DomainId, (BTreeMap<&str, u32>, usize)> = BTreeMap::new();
    for r in records {
        let entry = by_domain.entry(r.domain_id).or_default();
        entry.0.insert(&r.problem_id, r.meta.optimal_cost);
        entry.1 += 1;
    }
    let mut rows = Vec::new();
    let mut all_costs = Vec::new();
    for (d, (problems, steps)) in &by_domain {
        let costs: Vec<u32> = problems.values().copied().collect();
        rows.push(DomainRow {
            domain_id: d.to_string(),
            problems: costs.len(),
            mopl: mean(&costs),
            total_steps: *steps,
        });
        all_costs.extend(costs);
    }
    let totals = DomainRow {
        domain_id: "total".to_string(),
        problems: rows.iter().map(|r| r.problems).sum(),
        mopl: mean(&all_costs),
        total_steps: rows.iter().map(|r| r.total_steps).sum(),
    };
    DomainStats { rows, totals }
}

impl fmt::Display for DomainStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14} {:>9} {:>7} {:>12}", "Domain", "Problems", "MOPL", "Steps")?;
        for r in self.rows.iter().chain(std::iter::once(&self.totals)) {
            writeln!(
                f,
                "{:<14} {:>9} {:>7.2} {:>12}",
                r.domain_id, r.problems, r.mopl, r.total_steps
            )?;
        }
        Ok(())
    }
}
