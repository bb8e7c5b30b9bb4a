//! JSON result objects and JSON-lines iteration traces.

use std::io::{self, Write};

use micone_core::conic::ConicStatus;
use micone_core::oa::{BruteForceOutcome, BruteStatus, IterationRecord, OaOutcome, OaStatus};
use serde::Serialize;

pub fn conic_status_name(s: ConicStatus) -> &'static str {
    match s {
        ConicStatus::Optimal => "optimal",
        ConicStatus::Infeasible => "infeasible",
        ConicStatus::Unbounded => "unbounded",
        ConicStatus::AlmostOptimal => "almost_optimal",
        ConicStatus::NumericFailure => "numeric_failure",
    }
}

pub fn brute_status_name(s: BruteStatus) -> &'static str {
    match s {
        BruteStatus::Optimal => "optimal",
        BruteStatus::Infeasible => "infeasible",
        BruteStatus::Unbounded => "unbounded",
        BruteStatus::NumericFailure => "numeric_failure",
    }
}

// JSON has no infinities
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Serialize)]
pub struct TraceLine {
    pub iteration: usize,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub milp_objective: Option<f64>,
    pub assignment: Vec<i64>,
    pub subproblem: Option<&'static str>,
    pub subproblem_objective: Option<f64>,
    pub cuts_added: usize,
    pub total_cuts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed: Option<f64>,
}

impl TraceLine {
    pub fn new(r: &IterationRecord, timing: bool) -> Self {
        TraceLine {
            iteration: r.iteration,
            lower_bound: finite(r.lower_bound),
            upper_bound: finite(r.upper_bound),
            milp_objective: finite(r.milp_objective),
            assignment: r.assignment.clone(),
            subproblem: r.subproblem.map(conic_status_name),
            subproblem_objective: r.subproblem_objective.and_then(finite),
            cuts_added: r.cuts_added,
            total_cuts: r.total_cuts,
            elapsed: timing.then_some(r.elapsed),
        }
    }
}

/// Writes one record as a single line.
pub fn write_trace_line<W: Write>(out: &mut W, r: &IterationRecord, timing: bool) -> io::Result<()> {
    serde_json::to_writer(&mut *out, &TraceLine::new(r, timing))?;
    out.write_all(b"\n")
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub status: &'static str,
    pub objective: Option<f64>,
    pub assignments: u64,
    pub uncertified: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    Disagree,
    /// One side ended without a definite answer.
    Inconclusive,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub status: &'static str,
    pub objective: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub iterations: usize,
    pub cuts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    /// Variable values by name for model input, integer columns then `z` for
    /// conic input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl SolveReport {
    pub fn new(out: &OaOutcome) -> Self {
        SolveReport {
            status: out.status.name(),
            objective: finite(out.objective),
            lower_bound: finite(out.lower_bound),
            upper_bound: finite(out.upper_bound),
            iterations: out.iterations,
            cuts: out.cuts,
            diagnostic: out.diagnostic.clone(),
            solution: None,
            oracle: None,
            wall_time: None,
        }
    }
}

/// Compares a finished OA run with the enumeration: same status, and values
/// within `tol` relative when both are optimal.
pub fn compare(oa: &OaOutcome, bf: &BruteForceOutcome, tol: f64) -> Verdict {
    let definite = matches!(oa.status, OaStatus::Optimal | OaStatus::Infeasible);
    match (oa.status, bf.status) {
        (OaStatus::Optimal, BruteStatus::Optimal) => {
            let close =
                (oa.objective - bf.objective).abs() <= tol * (1.0 + oa.objective.abs().max(bf.objective.abs()));
            if close {
                Verdict::Agree
            } else {
                Verdict::Disagree
            }
        }
        (OaStatus::Infeasible, BruteStatus::Infeasible) => Verdict::Agree,
        (_, BruteStatus::NumericFailure) => Verdict::Inconclusive,
        _ if !definite => Verdict::Inconclusive,
        _ => Verdict::Disagree,
    }
}

impl OracleReport {
    pub fn new(oa: &OaOutcome, bf: &BruteForceOutcome, tol: f64) -> Self {
        OracleReport {
            status: brute_status_name(bf.status),
            objective: finite(bf.objective),
            assignments: bf.assignments,
            uncertified: bf.uncertified,
            verdict: compare(oa, bf, tol),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_bounds_serialize_as_null() {
        let r = IterationRecord {
            iteration: 1,
            lower_bound: f64::NEG_INFINITY,
            upper_bound: f64::INFINITY,
            milp_objective: -1.5,
            assignment: vec![0, 2],
            subproblem: Some(ConicStatus::Infeasible),
            subproblem_objective: None,
            cuts_added: 2,
            total_cuts: 2,
            elapsed: 0.25,
        };
        let mut buf = Vec::new();
        write_trace_line(&mut buf, &r, false).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"iteration\":1,\"lower_bound\":null,\"upper_bound\":null,\"milp_objective\":-1.5,\
             \"assignment\":[0,2],\"subproblem\":\"infeasible\",\"subproblem_objective\":null,\
             \"cuts_added\":2,\"total_cuts\":2}\n"
        );
        let mut buf = Vec::new();
        write_trace_line(&mut buf, &r, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("\"elapsed\":0.25"));
    }
}
