//! Continuous conic solver: `min cᵀz s.t. Az = r, z ∈ K`.
//!
//! Primal-dual path following on the homogeneous self-dual embedding
//!
//! ```text
//!  A z - r τ           = 0
//! -Aᵀλ + c τ - s       = 0
//!  rᵀλ - cᵀz - κ       = 0,   z ∈ K, s ∈ K*, τ, κ ≥ 0
//! ```
//!
//! with damped Newton steps on the barrier-defined central path (no scaling
//! point). The ratio τ/κ at the limit separates optimal, infeasible and
//! unbounded instances. Every reported certificate is checked against the
//! membership tests of [`crate::cones`] before it is labelled `Optimal`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cones::{barrier, in_dual_interior, in_interior, ConeProduct};
use crate::linalg::{dot, norm_inf, reduce_rows, Lu, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    pub a: Matrix,
    pub r: Vec<f64>,
    pub cones: ConeProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Unbounded,
    AlmostOptimal,
    NumericFailure,
}

/// Solver output.
///
/// - `Optimal`/`AlmostOptimal`: primal `z`, duals `lambda`, `beta = c - Aᵀλ`.
/// - `Infeasible`: `lambda` with `λᵀr = 1` and `beta = -Aᵀλ ∈ K*`; `z` empty.
/// - `Unbounded`: `z` is a recession direction with `Az = 0`, `cᵀz = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicCertificate {
    pub status: ConicStatus,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConicError {
    Malformed(&'static str),
}

impl fmt::Display for ConicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConicError::Malformed(what) => write!(f, "malformed conic problem: {what}"),
        }
    }
}

impl core::error::Error for ConicError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicSettings {
    pub max_iters: usize,
    /// Target scaled residual for early termination.
    pub tol: f64,
}

impl Default for ConicSettings {
    fn default() -> Self {
        ConicSettings {
            max_iters: 400,
            tol: 1e-9,
        }
    }
}

/// Thresholds of the certificate contract.
pub const CERT_FEAS_TOL: f64 = 1e-7;
pub const CERT_GAP_TOL: f64 = 1e-6;
const ALMOST_TOL: f64 = 1e-5;
/// A ray or Farkas direction must improve by this much relative to its own
/// largest entry; smaller values are limits of bounded sequences.
const RAY_MARGIN: f64 = 1e-8;

impl ConicProblem {
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.c.len();
        if n == 0 {
            return Err(ConicError::Malformed("no cone coordinates"));
        }
        if self.cones.dim() != n || self.a.cols() != n {
            return Err(ConicError::Malformed("column dimensions disagree"));
        }
        if self.a.rows() != self.r.len() {
            return Err(ConicError::Malformed("row dimensions disagree"));
        }
        if !self.a.is_finite() || self.c.iter().chain(&self.r).any(|v| !v.is_finite()) {
            return Err(ConicError::Malformed("non-finite data"));
        }
        self.cones
            .validate()
            .map_err(|_| ConicError::Malformed("invalid cone"))
    }
}

/// Why a certificate does not meet its contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateDefect {
    PrimalCone,
    PrimalResidual,
    DualCone,
    Gap,
    FarkasValue,
    RayResidual,
    Status,
}

/// Re-checks a certificate with the cone membership tests only.
pub fn validate_certificate(
    p: &ConicProblem,
    cert: &ConicCertificate,
    tol: f64,
    gap_tol: f64,
) -> Result<(), CertificateDefect> {
    match cert.status {
        ConicStatus::Optimal | ConicStatus::AlmostOptimal => {
            if cert.z.len() != p.c.len() || cert.lambda.len() != p.r.len() {
                return Err(CertificateDefect::Status);
            }
            if !p.cones.member(&cert.z, tol).unwrap_or(false) {
                return Err(CertificateDefect::PrimalCone);
            }
            let az = p.a.mul_vec(&cert.z);
            let res = az.iter().zip(&p.r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if !(res < tol) {
                return Err(CertificateDefect::PrimalResidual);
            }
            let beta = dual_slack(p, &cert.lambda);
            if !p.cones.dual_member(&beta, tol).unwrap_or(false) {
                return Err(CertificateDefect::DualCone);
            }
            let pobj = dot(&p.c, &cert.z);
            let dobj = dot(&p.r, &cert.lambda);
            if !((pobj - dobj).abs() < gap_tol * (1.0 + pobj.abs())) {
                return Err(CertificateDefect::Gap);
            }
            Ok(())
        }
        ConicStatus::Infeasible => {
            if cert.lambda.len() != p.r.len() {
                return Err(CertificateDefect::Status);
            }
            let beta: Vec<f64> = p.a.tr_mul_vec(&cert.lambda).iter().map(|v| -v).collect();
            if !p.cones.dual_member(&beta, tol).unwrap_or(false) {
                return Err(CertificateDefect::DualCone);
            }
            if !(dot(&cert.lambda, &p.r) > RAY_MARGIN * norm_inf(&cert.lambda)) {
                return Err(CertificateDefect::FarkasValue);
            }
            Ok(())
        }
        ConicStatus::Unbounded => {
            if !p.cones.member(&cert.z, tol).unwrap_or(false) {
                return Err(CertificateDefect::PrimalCone);
            }
            let cz = dot(&p.c, &cert.z);
            if !(norm_inf(&p.a.mul_vec(&cert.z)) < tol * -cz) || !(-cz > RAY_MARGIN * norm_inf(&cert.z)) {
                return Err(CertificateDefect::RayResidual);
            }
            Ok(())
        }
        ConicStatus::NumericFailure => Err(CertificateDefect::Status),
    }
}

fn dual_slack(p: &ConicProblem, lambda: &[f64]) -> Vec<f64> {
    let at = p.a.tr_mul_vec(lambda);
    p.c.iter().zip(&at).map(|(c, a)| c - a).collect()
}

#[derive(Clone)]
struct Point {
    z: Vec<f64>,
    s: Vec<f64>,
    lambda: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Dir {
    dz: Vec<f64>,
    ds: Vec<f64>,
    dl: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Solver<'a> {
    p: &'a ConicProblem,
    m: usize,
    n: usize,
    nu: f64,
}

struct Residuals {
    rp: Vec<f64>,
    rd: Vec<f64>,
    rg: f64,
}

impl<'a> Solver<'a> {
    fn mu(&self, pt: &Point) -> f64 {
        (dot(&pt.z, &pt.s) + pt.tau * pt.kappa) / (self.nu + 1.0)
    }

    fn residuals(&self, pt: &Point) -> Residuals {
        let p = self.p;
        let az = p.a.mul_vec(&pt.z);
        let rp = az.iter().zip(&p.r).map(|(a, r)| a - r * pt.tau).collect();
        let atl = p.a.tr_mul_vec(&pt.lambda);
        let rd = (0..self.n)
            .map(|j| -atl[j] + p.c[j] * pt.tau - pt.s[j])
            .collect();
        let rg = dot(&p.r, &pt.lambda) - dot(&p.c, &pt.z) - pt.kappa;
        Residuals { rp, rd, rg }
    }

    fn interior(&self, pt: &Point) -> bool {
        pt.tau > 0.0
            && pt.kappa > 0.0
            && self
                .p
                .cones
                .blocks()
                .all(|(c, r)| in_interior(c, &pt.z[r.clone()]) && in_dual_interior(c, &pt.s[r]))
    }

    /// `‖s + μ∇F(z)‖*/μ` in the local Hessian norm, including the τ/κ pair.
    fn proximity(&self, pt: &Point) -> Option<f64> {
        let mu = self.mu(pt);
        if !(mu > 0.0) {
            return None;
        }
        let mut acc = (pt.tau * pt.kappa - mu) * (pt.tau * pt.kappa - mu);
        for (c, r) in self.p.cones.blocks() {
            let b = barrier(c, &pt.z[r.clone()]).ok()?;
            let v: Vec<f64> = pt.s[r]
                .iter()
                .zip(&b.gradient)
                .map(|(s, g)| s + mu * g)
                .collect();
            let w = Lu::factor(&b.hessian, 1e-300)?.solve(&v);
            acc += dot(&v, &w);
        }
        if acc.is_finite() {
            Some(libm::sqrt(acc.max(0.0)) / mu)
        } else {
            None
        }
    }

    /// Newton direction towards the σμ-centre with residuals scaled by σ.
    /// `eta` is the residual reduction fraction (1 - σ for predictor steps,
    /// 0 for pure centring).
    fn direction(&self, pt: &Point, sigma: f64, eta: f64, res: &Residuals) -> Option<Dir> {
        let (m, n) = (self.m, self.n);
        let p = self.p;
        let mu = self.mu(pt);
        let size = m + n + 1;
        let mut k = Matrix::zeros(size, size);
        let mut rhs = vec![0.0; size];
        let mut grad = vec![0.0; n];
        for i in 0..m {
            for j in 0..n {
                k[(i, m + j)] = p.a[(i, j)];
            }
            k[(i, m + n)] = -p.r[i];
            rhs[i] = -eta * res.rp[i];
        }
        for (c, r) in p.cones.blocks() {
            let b = barrier(c, &pt.z[r.clone()]).ok()?;
            for (bi, gi) in r.clone().enumerate() {
                grad[gi] = b.gradient[bi];
                for (bj, gj) in r.clone().enumerate() {
                    k[(m + gi, m + gj)] = mu * b.hessian[(bi, bj)];
                }
            }
        }
        let qs: Vec<f64> = (0..n).map(|j| -pt.s[j] - sigma * mu * grad[j]).collect();
        let qk = -pt.kappa + sigma * mu / pt.tau;
        for j in 0..n {
            for i in 0..m {
                k[(m + j, i)] = -p.a[(i, j)];
            }
            k[(m + j, m + n)] = p.c[j];
            rhs[m + j] = -eta * res.rd[j] + qs[j];
        }
        for i in 0..m {
            k[(m + n, i)] = p.r[i];
        }
        for j in 0..n {
            k[(m + n, m + j)] = -p.c[j];
        }
        let htau = mu / (pt.tau * pt.tau);
        k[(m + n, m + n)] = htau;
        rhs[m + n] = -eta * res.rg + qk;

        let sol = solve_equilibrated(&k, &rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dl = sol[..m].to_vec();
        let dz = sol[m..m + n].to_vec();
        let dtau = sol[m + n];
        let hdz = {
            let mut out = vec![0.0; n];
            for i in 0..n {
                out[i] = (0..n).map(|j| k[(m + i, m + j)] * dz[j]).sum();
            }
            out
        };
        let ds = (0..n).map(|j| qs[j] - hdz[j]).collect();
        let dkappa = qk - htau * dtau;
        Some(Dir {
            dz,
            ds,
            dl,
            dtau,
            dkappa,
        })
    }

    fn step(pt: &Point, d: &Dir, alpha: f64) -> Point {
        Point {
            z: pt.z.iter().zip(&d.dz).map(|(a, b)| a + alpha * b).collect(),
            s: pt.s.iter().zip(&d.ds).map(|(a, b)| a + alpha * b).collect(),
            lambda: pt.lambda.iter().zip(&d.dl).map(|(a, b)| a + alpha * b).collect(),
            tau: pt.tau + alpha * d.dtau,
            kappa: pt.kappa + alpha * d.dkappa,
        }
    }

    /// Largest step in (0, 1] keeping the iterate interior, by bisection.
    fn max_step(&self, pt: &Point, d: &Dir) -> f64 {
        if self.interior(&Self::step(pt, d, 1.0)) {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if self.interior(&Self::step(pt, d, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

fn expand_rows(lambda: &[f64], keep: &[usize], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (k, &i) in keep.iter().enumerate() {
        out[i] = lambda[k];
    }
    out
}

/// Solves the continuous conic problem; the certificate contract is checked
/// independently before `Optimal` is reported.
pub fn solve_conic(p: &ConicProblem, settings: &ConicSettings) -> Result<ConicCertificate, ConicError> {
    p.validate()?;
    let m_full = p.r.len();
    let reduction = reduce_rows(&p.a, &p.r, 1e-10);
    if let Some(w) = reduction.inconsistency {
        let beta: Vec<f64> = p.a.tr_mul_vec(&w).iter().map(|v| -v).collect();
        return Ok(ConicCertificate {
            status: ConicStatus::Infeasible,
            z: Vec::new(),
            dual_objective: dot(&w, &p.r),
            lambda: w,
            beta,
            primal_objective: f64::INFINITY,
            iterations: 0,
        });
    }
    let keep = reduction.independent;
    let reduced = ConicProblem {
        c: p.c.clone(),
        a: p.a.select_rows(&keep),
        r: keep.iter().map(|&i| p.r[i]).collect(),
        cones: p.cones.clone(),
    };
    let mut cert = solve_reduced(&reduced, settings);
    if cert.status != ConicStatus::Unbounded {
        cert.lambda = expand_rows(&cert.lambda, &keep, m_full);
    }
    // recheck against the original rows
    match cert.status {
        ConicStatus::Optimal => {
            if validate_certificate(p, &cert, CERT_FEAS_TOL, CERT_GAP_TOL).is_err() {
                cert.status = if validate_certificate(p, &cert, ALMOST_TOL, ALMOST_TOL).is_ok() {
                    ConicStatus::AlmostOptimal
                } else {
                    ConicStatus::NumericFailure
                };
            }
        }
        ConicStatus::Infeasible | ConicStatus::Unbounded
            if validate_certificate(p, &cert, CERT_FEAS_TOL, CERT_GAP_TOL).is_err() => {
                cert.status = ConicStatus::NumericFailure;
            }
        _ => {}
    }
    Ok(cert)
}

/// Solves `k x = rhs` after Ruiz scaling of rows and columns; the KKT blocks
/// differ by many orders of magnitude late in the solve.
fn solve_equilibrated(k: &Matrix, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = k.rows();
    let mut dr = vec![1.0; n];
    let mut dc = vec![1.0; n];
    let mut ks = k.clone();
    for _ in 0..6 {
        let mut rn = vec![0.0f64; n];
        let mut cn = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..n {
                let v = ks[(i, j)].abs();
                rn[i] = rn[i].max(v);
                cn[j] = cn[j].max(v);
            }
        }
        for i in 0..n {
            let (fr, fc) = (
                if rn[i] > 0.0 { 1.0 / libm::sqrt(rn[i]) } else { 1.0 },
                if cn[i] > 0.0 { 1.0 / libm::sqrt(cn[i]) } else { 1.0 },
            );
            dr[i] *= fr;
            dc[i] *= fc;
        }
        for i in 0..n {
            for j in 0..n {
                ks[(i, j)] = dr[i] * k[(i, j)] * dc[j];
            }
        }
    }
    let lu = Lu::factor(&ks, 1e-18)?;
    let srhs: Vec<f64> = rhs.iter().zip(&dr).map(|(b, d)| b * d).collect();
    let mut y = lu.solve(&srhs);
    for _ in 0..2 {
        let r = ks.mul_vec(&y);
        let corr: Vec<f64> = srhs.iter().zip(&r).map(|(a, b)| a - b).collect();
        let d = lu.solve(&corr);
        y.iter_mut().zip(&d).for_each(|(s, d)| *s += d);
    }
    Some(y.iter().zip(&dc).map(|(v, d)| v * d).collect())
}

fn solve_reduced(p: &ConicProblem, settings: &ConicSettings) -> ConicCertificate {
    let m = p.r.len();
    let n = p.c.len();
    let solver = Solver {
        p,
        m,
        n,
        nu: p.cones.barrier_parameter(),
    };
    let mut z = vec![0.0; n];
    for (c, r) in p.cones.blocks() {
        z[r].copy_from_slice(&c.interior_point());
    }
    let mut s = vec![0.0; n];
    for (c, r) in p.cones.blocks() {
        let b = barrier(c, &z[r.clone()]).expect("interior start");
        for (k, j) in r.enumerate() {
            s[j] = -b.gradient[k];
        }
    }
    let mut pt = Point {
        z,
        s,
        lambda: vec![0.0; m],
        tau: 1.0,
        kappa: 1.0,
    };
    let r_scale = 1.0 + norm_inf(&p.r);
    let c_scale = 1.0 + norm_inf(&p.c);
    let tol = settings.tol;
    let mut iterations = 0;

    while iterations < settings.max_iters {
        // classification
        let res = solver.residuals(&pt);
        let cz = dot(&p.c, &pt.z);
        let rl = dot(&p.r, &pt.lambda);
        let pres = norm_inf(&res.rp) / pt.tau / r_scale;
        let dres = norm_inf(&res.rd) / pt.tau / c_scale;
        let pobj = cz / pt.tau;
        let dobj = rl / pt.tau;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        if pres <= tol && dres <= tol && gap <= tol {
            let cert = optimal_certificate(p, &pt, iterations, ConicStatus::Optimal);
            // near curved boundaries small residuals can still leave β just
            // outside K*; keep refining while the iterates allow it
            if validate_certificate(p, &cert, CERT_FEAS_TOL, CERT_GAP_TOL).is_ok() {
                return cert;
            }
        }
        if rl > 0.0 {
            let atl = p.a.tr_mul_vec(&pt.lambda);
            let inf_res = atl.iter().zip(&pt.s).fold(0.0f64, |acc, (a, s)| acc.max((a + s).abs()));
            if inf_res <= tol * rl && rl > RAY_MARGIN * norm_inf(&pt.lambda) {
                return infeasible_certificate(p, &pt, iterations);
            }
        }
        if cz < 0.0 {
            let az = p.a.mul_vec(&pt.z);
            if norm_inf(&az) <= tol * -cz && -cz > RAY_MARGIN * norm_inf(&pt.z) {
                return unbounded_certificate(p, &pt, iterations);
            }
        }

        let mu = solver.mu(&pt);
        if !(mu > 1e-300) {
            break;
        }
        // predictor
        let Some(aff) = solver.direction(&pt, 0.0, 1.0, &res) else {
            break;
        };
        let alpha_aff = solver.max_step(&pt, &aff);
        let sigma = libm::pow(1.0 - alpha_aff, 3.0).clamp(1e-6, 1.0);
        let Some(d) = solver.direction(&pt, sigma, 1.0 - sigma, &res) else {
            break;
        };
        let mut alpha = (0.98 * solver.max_step(&pt, &d)).min(1.0);
        let mut next = Solver::step(&pt, &d, alpha);
        let mut tries = 0;
        while solver.proximity(&next).is_none_or(|v| v > 0.9) && tries < 30 {
            alpha *= 0.7;
            next = Solver::step(&pt, &d, alpha);
            tries += 1;
        }
        if !(alpha > 1e-12) || !solver.interior(&next) {
            break;
        }
        pt = next;
        iterations += 1;

        // centring correctors
        for _ in 0..4 {
            let Some(prox) = solver.proximity(&pt) else {
                break;
            };
            if prox <= 0.5 {
                break;
            }
            let res = solver.residuals(&pt);
            let Some(cd) = solver.direction(&pt, 1.0, 0.0, &res) else {
                break;
            };
            let mut a = (0.98 * solver.max_step(&pt, &cd)).min(1.0);
            let mut improved = None;
            for _ in 0..8 {
                let cand = Solver::step(&pt, &cd, a);
                if let Some(v) = solver.proximity(&cand) {
                    if v < prox {
                        improved = Some(cand);
                        break;
                    }
                }
                a *= 0.5;
            }
            match improved {
                Some(c) => pt = c,
                None => break,
            }
        }
    }

    // stalled or out of iterations: take the best classification on offer
    let opt = optimal_certificate(p, &pt, iterations, ConicStatus::Optimal);
    if validate_certificate(p, &opt, CERT_FEAS_TOL, CERT_GAP_TOL).is_ok() {
        return opt;
    }
    if dot(&p.r, &pt.lambda) > 0.0 {
        let inf = infeasible_certificate(p, &pt, iterations);
        if validate_certificate(p, &inf, CERT_FEAS_TOL, CERT_GAP_TOL).is_ok() {
            return inf;
        }
    }
    if dot(&p.c, &pt.z) < 0.0 {
        let unb = unbounded_certificate(p, &pt, iterations);
        if validate_certificate(p, &unb, CERT_FEAS_TOL, CERT_GAP_TOL).is_ok() {
            return unb;
        }
    }
    let status = if validate_certificate(p, &opt, ALMOST_TOL, ALMOST_TOL).is_ok() {
        ConicStatus::AlmostOptimal
    } else {
        ConicStatus::NumericFailure
    };
    ConicCertificate { status, ..opt }
}

fn optimal_certificate(p: &ConicProblem, pt: &Point, iterations: usize, status: ConicStatus) -> ConicCertificate {
    let z: Vec<f64> = pt.z.iter().map(|v| v / pt.tau).collect();
    let lambda: Vec<f64> = pt.lambda.iter().map(|v| v / pt.tau).collect();
    let beta = dual_slack(p, &lambda);
    ConicCertificate {
        status,
        primal_objective: dot(&p.c, &z),
        dual_objective: dot(&p.r, &lambda),
        z,
        lambda,
        beta,
        iterations,
    }
}

fn infeasible_certificate(p: &ConicProblem, pt: &Point, iterations: usize) -> ConicCertificate {
    let rl = dot(&p.r, &pt.lambda);
    let lambda: Vec<f64> = pt.lambda.iter().map(|v| v / rl).collect();
    let beta: Vec<f64> = p.a.tr_mul_vec(&lambda).iter().map(|v| -v).collect();
    ConicCertificate {
        status: ConicStatus::Infeasible,
        z: Vec::new(),
        lambda,
        beta,
        primal_objective: f64::INFINITY,
        dual_objective: f64::INFINITY,
        iterations,
    }
}

fn unbounded_certificate(p: &ConicProblem, pt: &Point, iterations: usize) -> ConicCertificate {
    let cz = dot(&p.c, &pt.z);
    let z: Vec<f64> = pt.z.iter().map(|v| v / -cz).collect();
    ConicCertificate {
        status: ConicStatus::Unbounded,
        z,
        lambda: Vec::new(),
        beta: Vec::new(),
        primal_objective: f64::NEG_INFINITY,
        dual_objective: f64::NEG_INFINITY,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;

    fn problem(c: &[f64], rows: &[Vec<f64>], r: &[f64], cones: Vec<Cone>) -> ConicProblem {
        let a = if rows.is_empty() {
            Matrix::zeros(0, c.len())
        } else {
            Matrix::from_rows(rows)
        };
        ConicProblem {
            c: c.to_vec(),
            a,
            r: r.to_vec(),
            cones: ConeProduct::new(cones),
        }
    }

    #[test]
    fn linear_program_in_cone_form() {
        // min -x1 - 2x2 s.t. x1 + x2 + s = 1
        let p = problem(&[-1.0, -2.0, 0.0], &[vec![1.0, 1.0, 1.0]], &[1.0], vec![Cone::NonNeg(3)]);
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Optimal);
        assert!((cert.primal_objective + 2.0).abs() < 1e-7);
        assert!(validate_certificate(&p, &cert, 1e-7, 1e-6).is_ok());
    }

    #[test]
    fn circle_with_fixed_first_coordinate() {
        // (2.5, x1, x2) ∈ SOC₃, x1 = 2, maximize x2·sin15°
        let s15 = libm::sin(15f64.to_radians());
        let p = problem(
            &[0.0, 0.0, -s15],
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            &[2.5, 2.0],
            vec![Cone::Soc(3)],
        );
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Optimal);
        assert!((cert.z[2] - 1.5).abs() < 1e-6, "{:?}", cert.z);
    }

    #[test]
    fn missing_strong_duality_is_not_certified() {
        // min z s.t. x = 0, (x, y, z) ∈ RSOC₃
        let p = problem(&[0.0, 0.0, 1.0], &[vec![1.0, 0.0, 0.0]], &[0.0], vec![Cone::Rsoc(3)]);
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert!(
            matches!(cert.status, ConicStatus::AlmostOptimal | ConicStatus::NumericFailure),
            "{:?}",
            cert
        );
    }

    #[test]
    fn infeasible_second_order_system() {
        // t = 1, x = 2 in SOC₂: |2| ≤ 1 fails
        let p = problem(&[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 2.0], vec![Cone::Soc(2)]);
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Infeasible);
        assert!(validate_certificate(&p, &cert, 1e-7, 1e-6).is_ok());
    }

    #[test]
    fn unbounded_direction() {
        // min -t s.t. x = 1, (t, x) ∈ SOC₂
        let p = problem(&[-1.0, 0.0], &[vec![0.0, 1.0]], &[1.0], vec![Cone::Soc(2)]);
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Unbounded);
    }

    #[test]
    fn exponential_cone_log() {
        // max u s.t. (u, 1, 2) ∈ EXP → u = log 2
        let p = problem(
            &[-1.0, 0.0, 0.0],
            &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            &[1.0, 2.0],
            vec![Cone::Exp],
        );
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Optimal);
        assert!((cert.z[0] - libm::log(2.0)).abs() < 1e-6);
    }

    #[test]
    fn power_cone_mean() {
        // max w s.t. (w ≤) (4, 1, w) ∈ POW(0.5): w = 2
        let p = problem(
            &[0.0, 0.0, -1.0],
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            &[4.0, 1.0],
            vec![Cone::Pow(0.5)],
        );
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Optimal);
        assert!((cert.z[2] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let p = problem(
            &[1.0, 1.0],
            &[vec![1.0, 1.0], vec![2.0, 2.0]],
            &[1.0, 2.0],
            vec![Cone::NonNeg(2)],
        );
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Optimal);
        assert_eq!(cert.lambda.len(), 2);
        assert!((cert.primal_objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inconsistent_rows_give_immediate_certificate() {
        let p = problem(
            &[1.0, 1.0],
            &[vec![1.0, 1.0], vec![2.0, 2.0]],
            &[1.0, 3.0],
            vec![Cone::NonNeg(2)],
        );
        let cert = solve_conic(&p, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Infeasible);
        assert_eq!(cert.iterations, 0);
    }

    #[test]
    fn rejects_malformed() {
        let p = problem(&[1.0], &[], &[], vec![Cone::Soc(2)]);
        assert!(solve_conic(&p, &ConicSettings::default()).is_err());
    }
}
