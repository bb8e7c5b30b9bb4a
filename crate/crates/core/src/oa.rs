//! Conic outer approximation.
//!
//! The driver alternates an MILP over a polyhedral relaxation of `K`
//! (halfspaces `βᵀz ≥ 0` with `β ∈ K*`) with the continuous conic subproblem
//! at the MILP's integer assignment. Subproblem duals and infeasibility rays
//! both yield cuts.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::conic::{solve_conic, ConicSettings, ConicStatus};
use crate::cones::{dual, repair_dual, separate, Cone};
use crate::linalg::{dot, norm2, Matrix};
use crate::lp::{LpError, LpProblem};
use crate::milp::{solve_milp, MilpError, MilpStatus, DEFAULT_NODE_LIMIT};
use crate::program::{ConicProgram, ProgramError};

/// Tolerance of the `β ∈ K*` check on cuts.
pub const CUT_TOL: f64 = 1e-7;
const DUPLICATE_COSINE: f64 = 1.0 - 1e-10;
const IMPROVEMENT: f64 = 1e-9;
/// Consecutive uncertified visits without a violated factor before giving up.
const STALL_LIMIT: usize = 3;
pub const BRUTE_FORCE_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CutProvenance {
    SubproblemDual,
    InfeasibilityRay,
    Separation,
    InitialRelaxation,
}

impl CutProvenance {
    pub fn name(self) -> &'static str {
        match self {
            CutProvenance::SubproblemDual => "subproblem_dual",
            CutProvenance::InfeasibilityRay => "infeasibility_ray",
            CutProvenance::Separation => "separation",
            CutProvenance::InitialRelaxation => "initial_relaxation",
        }
    }
}

/// Halfspace `βᵀz ≥ 0` over the full `z` block.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub beta: Vec<f64>,
    pub provenance: CutProvenance,
    pub assignment: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CutError {
    Dimension,
    Zero,
    NotNormalized,
    /// `β` is outside `K*` on the given factor.
    InvalidCut(usize),
}

impl fmt::Display for CutError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutError::Dimension => f.write_str("cut has the wrong dimension"),
            CutError::Zero => f.write_str("zero cut"),
            CutError::NotNormalized => f.write_str("cut is not normalized to max-norm 1"),
            CutError::InvalidCut(k) => write!(f, "cut is outside the dual of factor {k}"),
        }
    }
}

impl core::error::Error for CutError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OaStatus {
    Optimal,
    Infeasible,
    AssumptionFailure,
    IterationLimit,
    TimeLimit,
}

impl OaStatus {
    pub fn name(self) -> &'static str {
        match self {
            OaStatus::Optimal => "optimal",
            OaStatus::Infeasible => "infeasible",
            OaStatus::AssumptionFailure => "assumption_failure",
            OaStatus::IterationLimit => "iteration_limit",
            OaStatus::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OaConfig {
    /// Relative gap `(z_U - z_L) / (1 + |z_U|)`.
    pub tol: f64,
    /// Bound on MILP solves.
    pub max_iters: usize,
    /// Seconds, measured by the supplied clock.
    pub time_limit: Option<f64>,
    pub node_limit: usize,
    pub conic: ConicSettings,
}

impl Default for OaConfig {
    fn default() -> Self {
        OaConfig {
            tol: 1e-5,
            max_iters: 1000,
            time_limit: None,
            node_limit: DEFAULT_NODE_LIMIT,
            conic: ConicSettings::default(),
        }
    }
}

/// Elapsed wall time in seconds. The core crate has no clock of its own.
pub trait Clock {
    fn elapsed(&self) -> f64;
}

/// A clock that never advances.
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}

/// One record per MILP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub milp_objective: f64,
    pub assignment: Vec<i64>,
    pub subproblem: Option<ConicStatus>,
    pub subproblem_objective: Option<f64>,
    pub cuts_added: usize,
    pub total_cuts: usize,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OaOutcome {
    pub status: OaStatus,
    pub x: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    /// Incumbent value, `+∞` without one.
    pub objective: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    /// Cuts added after initialization.
    pub cuts: usize,
    pub initial_cuts: usize,
    pub root_status: ConicStatus,
    pub trace: Vec<IterationRecord>,
    pub cut_pool: Vec<Cut>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OaError {
    Program(ProgramError),
    Milp(MilpError),
}

impl fmt::Display for OaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OaError::Program(e) => write!(f, "{e}"),
            OaError::Milp(e) => write!(f, "MILP failure: {e:?}"),
        }
    }
}

impl core::error::Error for OaError {}

impl From<ProgramError> for OaError {
    fn from(e: ProgramError) -> Self {
        OaError::Program(e)
    }
}

impl From<MilpError> for OaError {
    fn from(e: MilpError) -> Self {
        OaError::Milp(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Visit {
    lower: f64,
    upper: f64,
    certified: bool,
}

/// Mutable record of the outer approximation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OaState {
    pub upper: f64,
    pub lower: f64,
    pub tol: f64,
    pub cuts: Vec<Cut>,
    pub incumbent: Option<(Vec<f64>, Vec<f64>)>,
    visited: BTreeMap<Vec<i64>, Visit>,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// Cone factor of each `z` coordinate.
    factor_of: Vec<usize>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm2(a) * norm2(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}

/// `βᵀz ≥ 0` halfspaces implied by `z ∈ K` that keep the first MILP away
/// from trivial unboundedness.
fn initial_cuts(cone: &Cone) -> Vec<Vec<f64>> {
    let unit = |n: usize, k: usize| {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        v
    };
    match *cone {
        Cone::NonNeg(_) => Vec::new(),
        Cone::Soc(n) => {
            let mut out = Vec::new();
            for k in 1..n {
                for s in [1.0, -1.0] {
                    let mut v = unit(n, 0);
                    v[k] = s;
                    out.push(v);
                }
            }
            out
        }
        Cone::Rsoc(n) => {
            let mut out = vec![unit(n, 0), unit(n, 1)];
            for k in 2..n {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; n];
                    v[0] = 1.0;
                    v[1] = 1.0;
                    v[k] = s * core::f64::consts::SQRT_2;
                    out.push(v);
                }
            }
            out
        }
        Cone::Exp => vec![unit(3, 1), unit(3, 2)],
        Cone::Pow(_) => vec![unit(3, 0), unit(3, 1)],
    }
}

impl OaState {
    /// Empty bounds with the initial relaxation cuts of every factor.
    pub fn new(program: &ConicProgram, tol: f64) -> Self {
        let mut factor_of = Vec::with_capacity(program.nz());
        for (k, (_, r)) in program.cones.blocks().enumerate() {
            factor_of.extend(r.map(|_| k));
        }
        let mut state = OaState {
            upper: f64::INFINITY,
            lower: f64::NEG_INFINITY,
            tol,
            cuts: Vec::new(),
            incumbent: None,
            visited: BTreeMap::new(),
            iterations: 0,
            trace: Vec::new(),
            factor_of,
        };
        for (cone, r) in program.cones.blocks() {
            for local in initial_cuts(cone) {
                let n = max_norm(&local);
                let mut beta = vec![0.0; program.nz()];
                for (k, j) in r.clone().enumerate() {
                    beta[j] = local[k] / n;
                }
                let cut = Cut {
                    beta,
                    provenance: CutProvenance::InitialRelaxation,
                    assignment: None,
                };
                state.add_cut(program, cut).expect("initial cuts are valid");
            }
        }
        state
    }

    /// Relative gap; `+∞` without an incumbent.
    pub fn gap(&self) -> f64 {
        if self.upper == f64::INFINITY || self.lower == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        (self.upper - self.lower) / (1.0 + self.upper.abs())
    }

    pub fn non_initial_cuts(&self) -> usize {
        self.cuts
            .iter()
            .filter(|c| c.provenance != CutProvenance::InitialRelaxation)
            .count()
    }

    /// Appends the cut unless it duplicates a pooled one. Returns whether it
    /// was added.
    pub fn add_cut(&mut self, program: &ConicProgram, cut: Cut) -> Result<bool, CutError> {
        if cut.beta.len() != program.nz() {
            return Err(CutError::Dimension);
        }
        let norm = max_norm(&cut.beta);
        if norm == 0.0 {
            return Err(CutError::Zero);
        }
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CutError::NotNormalized);
        }
        for (k, (cone, r)) in program.cones.blocks().enumerate() {
            if !dual(cone).member(&cut.beta[r], CUT_TOL) {
                return Err(CutError::InvalidCut(k));
            }
        }
        if self.cuts.iter().any(|c| cosine(&c.beta, &cut.beta) > DUPLICATE_COSINE) {
            return Ok(false);
        }
        self.cuts.push(cut);
        Ok(true)
    }

    /// Splits `β ∈ K*` into per-factor cuts, each repaired into its factor's
    /// dual cone and normalized. Nonnegative factors are skipped: their cuts
    /// are implied by the variable bounds of the MILP.
    fn add_split(
        &mut self,
        program: &ConicProgram,
        beta: &[f64],
        provenance: CutProvenance,
        assignment: &[i64],
    ) -> usize {
        let scale = max_norm(beta);
        if !(scale > 0.0) || !scale.is_finite() {
            return 0;
        }
        let mut added = 0;
        for (cone, r) in program.cones.blocks() {
            if matches!(cone, Cone::NonNeg(_)) {
                continue;
            }
            let local = &beta[r.clone()];
            let n = max_norm(local);
            if n <= 1e-9 * scale {
                continue;
            }
            let unit: Vec<f64> = local.iter().map(|v| v / n).collect();
            let repaired = repair_dual(cone, &unit);
            let m = max_norm(&repaired);
            let mut full = vec![0.0; program.nz()];
            for (k, j) in r.enumerate() {
                full[j] = repaired[k] / m;
            }
            let cut = Cut {
                beta: full,
                provenance,
                assignment: Some(assignment.to_vec()),
            };
            if let Ok(true) = self.add_cut(program, cut) {
                added += 1;
            }
        }
        added
    }

    /// The MILP relaxation over `(x, z, s)`: program rows, then one row
    /// `βᵀz - s = 0` with `s ≥ 0` per cut.
    pub fn milp(&self, program: &ConicProgram) -> (LpProblem, Vec<bool>) {
        let (m, nx, nz, nc) = (program.rows(), program.nx(), program.nz(), self.cuts.len());
        let n = nx + nz + nc;
        let mut a = Matrix::zeros(m + nc, n);
        for i in 0..m {
            for j in 0..nx {
                a[(i, j)] = program.ax[(i, j)];
            }
            for j in 0..nz {
                a[(i, nx + j)] = program.az[(i, j)];
            }
        }
        for (k, cut) in self.cuts.iter().enumerate() {
            for j in 0..nz {
                a[(m + k, nx + j)] = cut.beta[j];
            }
            a[(m + k, nx + nz + k)] = -1.0;
        }
        let mut c = vec![0.0; n];
        c[nx..nx + nz].copy_from_slice(&program.c);
        let mut b = program.b.clone();
        b.resize(m + nc, 0.0);
        let mut lower = program.lower.clone();
        let mut upper = program.upper.clone();
        for (cone, r) in program.cones.blocks() {
            let lo = if matches!(cone, Cone::NonNeg(_)) { 0.0 } else { f64::NEG_INFINITY };
            for _ in r {
                lower.push(lo);
                upper.push(f64::INFINITY);
            }
        }
        lower.resize(n, 0.0);
        upper.resize(n, f64::INFINITY);
        let integer = (0..n).map(|j| j < nx).collect();
        (LpProblem::new(c, a, b, lower, upper), integer)
    }

    fn record_visit(&mut self, assignment: &[i64], certified: bool) {
        self.visited.insert(
            assignment.to_vec(),
            Visit {
                lower: self.lower,
                upper: self.upper,
                certified,
            },
        );
    }

    /// Factor that the `z` coordinate `j` belongs to.
    pub fn factor_of(&self, j: usize) -> usize {
        self.factor_of[j]
    }
}

fn finish(
    state: OaState,
    status: OaStatus,
    root_status: ConicStatus,
    diagnostic: Option<&str>,
) -> OaOutcome {
    let cuts = state.non_initial_cuts();
    let initial_cuts = state.cuts.len() - cuts;
    let (x, z) = match state.incumbent {
        Some((x, z)) => (Some(x), Some(z)),
        None => (None, None),
    };
    OaOutcome {
        status,
        x,
        z,
        objective: state.upper,
        lower_bound: state.lower,
        upper_bound: state.upper,
        iterations: state.iterations,
        cuts,
        initial_cuts,
        root_status,
        trace: state.trace,
        cut_pool: state.cuts,
        diagnostic: diagnostic.map(String::from),
    }
}

/// Runs the outer approximation without a clock or observer.
pub fn oa_solve(program: &ConicProgram, config: &OaConfig) -> Result<OaOutcome, OaError> {
    oa_solve_with(program, config, &NoClock, &mut |_| {})
}

/// Runs the outer approximation. `observer` sees every iteration record as it
/// is appended.
pub fn oa_solve_with(
    program: &ConicProgram,
    config: &OaConfig,
    clock: &dyn Clock,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<OaOutcome, OaError> {
    program.validate()?;
    let mut state = OaState::new(program, config.tol);

    // root relaxation
    let relax = program.relaxation();
    let root = solve_conic(&relax, &config.conic).expect("validated program");
    let root_status = root.status;
    let none: Vec<i64> = Vec::new();
    match root.status {
        ConicStatus::Optimal => {
            let beta: Vec<f64> = root.beta[..program.nz()].to_vec();
            state.add_split(program, &beta, CutProvenance::SubproblemDual, &none);
            state.lower = root.dual_objective.min(root.primal_objective) + program.obj_offset;
        }
        ConicStatus::Infeasible => {
            return Ok(finish(state, OaStatus::Infeasible, root_status, Some("continuous relaxation infeasible")));
        }
        // unbounded or uncertified: start from the initial cuts only
        _ => {}
    }

    let mut stall = 0usize;
    let mut last_assignment: Option<Vec<i64>> = None;
    loop {
        if state.iterations >= config.max_iters {
            return Ok(finish(state, OaStatus::IterationLimit, root_status, None));
        }
        if let Some(limit) = config.time_limit {
            if clock.elapsed() >= limit {
                return Ok(finish(state, OaStatus::TimeLimit, root_status, None));
            }
        }
        let (lp, integer) = state.milp(program);
        let milp = match solve_milp(&lp, &integer, config.node_limit) {
            Ok(m) => m,
            Err(MilpError::Lp(LpError::NumericFailure)) => {
                return Ok(finish(state, OaStatus::AssumptionFailure, root_status, Some("MILP numeric failure")));
            }
            Err(e) => return Err(e.into()),
        };
        state.iterations += 1;
        match milp.status {
            MilpStatus::Infeasible => {
                return Ok(finish(state, OaStatus::Infeasible, root_status, None));
            }
            MilpStatus::Unbounded => {
                let msg = if state.iterations == 1 {
                    "MILP relaxation unbounded"
                } else {
                    "MILP relaxation became unbounded"
                };
                return Ok(finish(state, OaStatus::AssumptionFailure, root_status, Some(msg)));
            }
            MilpStatus::NodeLimit => {
                return Ok(finish(state, OaStatus::IterationLimit, root_status, Some("MILP node limit")));
            }
            MilpStatus::Optimal => {}
        }
        let sol = milp.x.expect("optimal MILP has a point");
        let milp_value = milp.objective + program.obj_offset;
        let bound = milp.best_bound.min(milp.objective) + program.obj_offset;
        if bound > state.lower {
            state.lower = bound;
        }
        if state.lower > state.upper {
            state.lower = state.upper;
        }
        let assignment: Vec<i64> = sol[..program.nx()].iter().map(|v| libm::round(*v) as i64).collect();
        let x: Vec<f64> = assignment.iter().map(|&v| v as f64).collect();

        let mut record = IterationRecord {
            iteration: state.iterations,
            lower_bound: state.lower,
            upper_bound: state.upper,
            milp_objective: milp_value,
            assignment: assignment.clone(),
            subproblem: None,
            subproblem_objective: None,
            cuts_added: 0,
            total_cuts: state.non_initial_cuts(),
            elapsed: clock.elapsed(),
        };
        if state.gap() <= config.tol {
            observer(&record);
            state.trace.push(record);
            return Ok(finish(state, OaStatus::Optimal, root_status, None));
        }
        if let Some(prev) = state.visited.get(&assignment).copied() {
            let improved =
                state.lower - prev.lower > IMPROVEMENT || prev.upper - state.upper > IMPROVEMENT;
            if prev.certified && !improved {
                observer(&record);
                state.trace.push(record);
                return Ok(finish(
                    state,
                    OaStatus::AssumptionFailure,
                    root_status,
                    Some("integer assignment recurred without bound progress"),
                ));
            }
        }

        let sub = solve_conic(&program.subproblem(&x), &config.conic).expect("validated program");
        record.subproblem = Some(sub.status);
        let mut added = 0;
        let certified = match sub.status {
            ConicStatus::Optimal => {
                let v = sub.primal_objective + program.obj_offset;
                record.subproblem_objective = Some(v);
                added = state.add_split(program, &sub.beta, CutProvenance::SubproblemDual, &assignment);
                if v < state.upper {
                    state.upper = v;
                    state.incumbent = Some((x.clone(), sub.z.clone()));
                }
                if state.lower > state.upper {
                    state.lower = state.upper;
                }
                true
            }
            ConicStatus::Infeasible => {
                added = state.add_split(program, &sub.beta, CutProvenance::InfeasibilityRay, &assignment);
                true
            }
            _ => {
                // no certificate: separate the MILP point factor by factor
                let z = &sol[program.nx()..program.nx() + program.nz()];
                for (cone, r) in program.cones.blocks() {
                    if let Ok(Some(beta)) = separate(cone, &z[r.clone()]) {
                        let mut full = vec![0.0; program.nz()];
                        full[r].copy_from_slice(&beta);
                        let n = max_norm(&full);
                        full.iter_mut().for_each(|v| *v /= n);
                        let cut = Cut {
                            beta: full,
                            provenance: CutProvenance::Separation,
                            assignment: Some(assignment.clone()),
                        };
                        if let Ok(true) = state.add_cut(program, cut) {
                            added += 1;
                        }
                    }
                }
                false
            }
        };
        if certified || added > 0 || last_assignment.as_ref() != Some(&assignment) {
            stall = 0;
        }
        if !certified && added == 0 {
            stall += 1;
        }
        last_assignment = Some(assignment.clone());
        record.cuts_added = added;
        record.total_cuts = state.non_initial_cuts();
        record.lower_bound = state.lower;
        record.upper_bound = state.upper;
        observer(&record);
        state.trace.push(record);
        state.record_visit(&assignment, certified);

        if state.gap() <= config.tol {
            return Ok(finish(state, OaStatus::Optimal, root_status, None));
        }
        if stall >= STALL_LIMIT {
            return Ok(finish(
                state,
                OaStatus::AssumptionFailure,
                root_status,
                Some("subproblem uncertified and no cone factor violated"),
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Some assignment had no certified answer and none was optimal.
    NumericFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOutcome {
    pub status: BruteStatus,
    pub objective: f64,
    pub x: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub assignments: u64,
    /// Assignments whose subproblem ended without a certificate.
    pub uncertified: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BruteForceError {
    TooLarge(u64),
    Program(ProgramError),
}

impl fmt::Display for BruteForceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BruteForceError::TooLarge(n) => write!(f, "{n} integer assignments exceed the enumeration limit"),
            BruteForceError::Program(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for BruteForceError {}

/// Enumerates every integer assignment and solves each subproblem.
pub fn brute_force_solve(
    program: &ConicProgram,
    settings: &ConicSettings,
) -> Result<BruteForceOutcome, BruteForceError> {
    program.validate().map_err(BruteForceError::Program)?;
    let count = program.assignment_count();
    if count > BRUTE_FORCE_LIMIT {
        return Err(BruteForceError::TooLarge(count));
    }
    let nx = program.nx();
    let lo: Vec<i64> = program.lower.iter().map(|v| libm::ceil(*v) as i64).collect();
    let hi: Vec<i64> = program.upper.iter().map(|v| libm::floor(*v) as i64).collect();
    let mut cur = lo.clone();
    let mut out = BruteForceOutcome {
        status: BruteStatus::Infeasible,
        objective: f64::INFINITY,
        x: None,
        z: None,
        assignments: 0,
        uncertified: 0,
    };
    let mut unbounded = false;
    loop {
        let x: Vec<f64> = cur.iter().map(|&v| v as f64).collect();
        let cert = solve_conic(&program.subproblem(&x), settings).expect("validated program");
        out.assignments += 1;
        match cert.status {
            ConicStatus::Optimal => {
                let v = cert.primal_objective + program.obj_offset;
                if v < out.objective {
                    out.objective = v;
                    out.x = Some(x);
                    out.z = Some(cert.z);
                }
            }
            ConicStatus::Infeasible => {}
            ConicStatus::Unbounded => unbounded = true,
            ConicStatus::AlmostOptimal | ConicStatus::NumericFailure => out.uncertified += 1,
        }
        let mut k = 0;
        loop {
            if k == nx {
                out.status = if unbounded {
                    out.objective = f64::NEG_INFINITY;
                    BruteStatus::Unbounded
                } else if out.x.is_some() {
                    BruteStatus::Optimal
                } else if out.uncertified > 0 {
                    BruteStatus::NumericFailure
                } else {
                    BruteStatus::Infeasible
                };
                return Ok(out);
            }
            cur[k] += 1;
            if cur[k] <= hi[k] {
                break;
            }
            cur[k] = lo[k];
            k += 1;
        }
    }
}
