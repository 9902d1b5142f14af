//! Solve, validate and compare a batch of instances; report as JSON or a
//! plain-text table.

use std::fmt::Write as _;
use std::time::Instant;

use q4rpd_core::baseline::{compare_solution, max_servable};
use q4rpd_core::model::{build_travel_matrix, ProblemInstance};
use q4rpd_core::orchestrator::{run, Q4rpdConfig, Q4rpdSolution};
use q4rpd_core::validation::{validate_solution, ValidationReport};
use serde::{Deserialize, Serialize};

use crate::io::{ComparisonDoc, ValidationDoc};

/// Sub-routes with at most this many candidates get the o₂ check.
pub const O2_CHECK_LIMIT: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub full_routes: usize,
    pub mix: [usize; 4],
    pub r1: String,
    pub r2: String,
    pub r3: String,
    pub p1: String,
    pub p2: String,
    pub p3: String,
    pub sum_o1: f64,
    pub deviation_percent: f64,
    pub heuristic_baseline: bool,
    /// `None` when no sub-route was small enough to check.
    pub o2_optimal: Option<bool>,
    pub o2_checked: usize,
    pub variables: usize,
    pub constraints: usize,
    pub total_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
    #[serde(skip)]
    pub detail: Option<RowDetail>,
}

/// In-memory results kept alongside a row for callers that need more than
/// the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDetail {
    pub solution: Q4rpdSolution,
    pub validation: ValidationReport,
    pub comparison: ComparisonDoc,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

/// Counts sub-routes passing the o₂ check and those checked.
pub fn o2_optimality(solution: &Q4rpdSolution, instance: &ProblemInstance, config: &Q4rpdConfig) -> (usize, usize) {
    let Ok(travel) = build_travel_matrix(instance) else {
        return (0, 0);
    };
    let mut ok = 0;
    let mut checked = 0;
    for sub in solution.routes.iter().flat_map(|r| &r.subroutes) {
        if sub.request.pool.len() > O2_CHECK_LIMIT {
            continue;
        }
        let Ok(spec) = sub.request.to_spec(instance, &travel, config) else {
            continue;
        };
        checked += 1;
        if max_servable(&spec).ok().flatten() == Some(sub.route.middle().len()) {
            ok += 1;
        }
    }
    (ok, checked)
}

fn failed_row(name: &str, error: String) -> BenchmarkRow {
    BenchmarkRow {
        name: name.to_string(),
        error: Some(error),
        full_routes: 0,
        mix: [0; 4],
        r1: String::new(),
        r2: String::new(),
        r3: String::new(),
        p1: String::new(),
        p2: String::new(),
        p3: String::new(),
        sum_o1: 0.0,
        deviation_percent: 0.0,
        heuristic_baseline: false,
        o2_optimal: None,
        o2_checked: 0,
        variables: 0,
        constraints: 0,
        total_cost: 0.0,
        seconds: None,
        detail: None,
    }
}

pub fn benchmark_one(name: &str, instance: &ProblemInstance, config: &Q4rpdConfig, timings: bool) -> BenchmarkRow {
    let start = Instant::now();
    let solution = match run(instance, config) {
        Ok(s) => s,
        Err(e) => return failed_row(name, e.to_string()),
    };
    let validation = match validate_solution(&solution, instance) {
        Ok(v) => v,
        Err(e) => return failed_row(name, e.to_string()),
    };
    let comparison = match compare_solution(&solution, instance) {
        Ok(c) => ComparisonDoc::from_report(&c),
        Err(e) => return failed_row(name, e.to_string()),
    };
    let (ok, checked) = o2_optimality(&solution, instance, config);
    let seconds = start.elapsed().as_secs_f64();
    let v = ValidationDoc::from_report(&validation);
    BenchmarkRow {
        name: name.to_string(),
        error: None,
        full_routes: solution.routes.len(),
        mix: solution.totals.mix,
        r1: validation.r1.mark().to_string(),
        r2: validation.r2.mark().to_string(),
        r3: validation.r3.mark().to_string(),
        p1: validation.p1.mark().to_string(),
        p2: validation.p2.mark().to_string(),
        p3: v.p3,
        sum_o1: comparison.sum_o1,
        deviation_percent: comparison.deviation_percent,
        heuristic_baseline: comparison.heuristic,
        o2_optimal: (checked > 0).then_some(ok == checked),
        o2_checked: checked,
        variables: solution.totals.variables,
        constraints: solution.totals.constraints,
        total_cost: validation.cost.total,
        seconds: timings.then_some(seconds),
        detail: Some(RowDetail {
            solution,
            validation,
            comparison,
        }),
    }
}

pub fn run_benchmark(instances: &[(String, ProblemInstance)], config: &Q4rpdConfig, timings: bool) -> BenchmarkReport {
    BenchmarkReport {
        rows: instances
            .iter()
            .map(|(name, inst)| benchmark_one(name, inst, config, timings))
            .collect(),
    }
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        crate::io::to_json(self)
    }

    /// Aligned table: solution, validation and SRP-objective columns.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:<12} {:>2} {:>2} {:>2} {:>2} {:>2} {:<9} {:>18} {:>3} {:>8} {:>8}",
            "instance", "routes", "mix", "R1", "R2", "R3", "P1", "P2", "P3", "sum o1 (dev)", "o2", "vars", "cons"
        );
        for r in &self.rows {
            if let Some(e) = &r.error {
                let _ = writeln!(out, "{:<10} failed: {e}", r.name);
                continue;
            }
            let mix = format!("[{},{},{},{}]", r.mix[0], r.mix[1], r.mix[2], r.mix[3]);
            let dev = format!(
                "{:.2} ({:+.1}%{})",
                r.sum_o1,
                r.deviation_percent,
                if r.heuristic_baseline { "~" } else { "" }
            );
            let o2 = match r.o2_optimal {
                Some(true) => "\u{2713}",
                Some(false) => "\u{d7}",
                None => "\u{2212}",
            };
            let _ = write!(
                out,
                "{:<10} {:>6} {:<12} {:>2} {:>2} {:>2} {:>2} {:>2} {:<9} {:>18} {:>3} {:>8} {:>8}",
                r.name, r.full_routes, mix, r.r1, r.r2, r.r3, r.p1, r.p2, r.p3, dev, o2, r.variables, r.constraints
            );
            if let Some(s) = r.seconds {
                let _ = write!(out, " {s:.2}s");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_instance, InstanceProfile};

    #[test]
    fn empty_list() {
        let r = run_benchmark(&[], &Q4rpdConfig::default(), false);
        assert!(r.rows.is_empty());
        assert_eq!(r.to_table().lines().count(), 1);
    }

    #[test]
    fn failure_is_a_row() {
        let mut inst = generate_instance(&InstanceProfile::named("D14_P1").unwrap()).unwrap();
        inst.fleet.truncate(1);
        inst.fleet[0].max_weight = 200.0;
        let r = run_benchmark(&[("tiny".into(), inst)], &Q4rpdConfig::default(), false);
        assert!(r.rows[0].error.is_some());
        assert!(r.to_table().contains("failed"));
    }
}
