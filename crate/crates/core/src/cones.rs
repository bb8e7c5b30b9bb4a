//! The five supported cone families: membership, dual cones, separating
//! hyperplanes and logarithmically homogeneous barriers.
//!
//! Coordinate conventions:
//!
//! - `Soc(n)`: `(t, x)` with `‖x‖ ≤ t`.
//! - `Rsoc(n)`: `(x, y, z)` with `2xy ≥ ‖z‖²`, `x, y ≥ 0`.
//! - `Exp`: closure of `{(x, y, z) : y·exp(x/y) ≤ z, y > 0}`.
//! - `Pow(α)`: `{(x, y, z) : |z| ≤ x^α y^(1-α), x, y ≥ 0}`.
//!
//! All membership tolerances are additive on the defining inequality.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, FRAC_1_SQRT_2};
use core::fmt;

use crate::linalg::{dot, norm2, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum ConeError {
    DimensionMismatch { expected: usize, got: usize },
    InvalidCone(Cone),
    NotInterior,
}

impl fmt::Display for ConeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeError::DimensionMismatch { expected, got } => {
                write!(f, "point has dimension {got}, cone expects {expected}")
            }
            ConeError::InvalidCone(c) => write!(f, "invalid cone {c}"),
            ConeError::NotInterior => f.write_str("point is not in the cone interior"),
        }
    }
}

impl core::error::Error for ConeError {}

/// One cone factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cone {
    NonNeg(usize),
    Soc(usize),
    Rsoc(usize),
    Exp,
    Pow(f64),
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cone::NonNeg(n) => write!(f, "NonNeg({n})"),
            Cone::Soc(n) => write!(f, "SOC({n})"),
            Cone::Rsoc(n) => write!(f, "RSOC({n})"),
            Cone::Exp => f.write_str("EXP"),
            Cone::Pow(a) => write!(f, "POW({a})"),
        }
    }
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(n) | Cone::Soc(n) | Cone::Rsoc(n) => n,
            Cone::Exp | Cone::Pow(_) => 3,
        }
    }

    pub fn validate(&self) -> Result<(), ConeError> {
        let ok = match *self {
            Cone::NonNeg(n) => n >= 1,
            Cone::Soc(n) => n >= 2,
            Cone::Rsoc(n) => n >= 3,
            Cone::Exp => true,
            Cone::Pow(a) => a > 0.0 && a < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ConeError::InvalidCone(*self))
        }
    }

    /// Barrier parameter ν of the barrier returned by [`barrier`].
    pub fn barrier_parameter(&self) -> f64 {
        match *self {
            Cone::NonNeg(n) => n as f64,
            Cone::Soc(_) | Cone::Rsoc(_) => 2.0,
            Cone::Exp | Cone::Pow(_) => 3.0,
        }
    }

    /// NonNeg, SOC and RSOC are polyhedral or self-dual and symmetric.
    pub fn is_self_dual(&self) -> bool {
        matches!(self, Cone::NonNeg(_) | Cone::Soc(_) | Cone::Rsoc(_))
    }

    /// A point in the interior, used to start interior-point iterations.
    pub fn interior_point(&self) -> Vec<f64> {
        match *self {
            Cone::NonNeg(n) => vec![1.0; n],
            Cone::Soc(n) => {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v
            }
            Cone::Rsoc(n) => {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v[1] = 1.0;
                v
            }
            // central point of the exponential-cone barrier
            Cone::Exp => vec![-0.8278383990656786, 0.8051020015847954, 1.290927709856958],
            Cone::Pow(_) => vec![1.0, 1.0, 0.0],
        }
    }

    fn check_dim(&self, point: &[f64]) -> Result<(), ConeError> {
        if point.len() == self.dim() {
            Ok(())
        } else {
            Err(ConeError::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            })
        }
    }
}

/// Description of a dual cone, which may leave the primal family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualCone {
    /// NonNeg, SOC and RSOC are their own duals.
    SelfDual(Cone),
    /// `cl{(u, v, w) : u < 0, -u·exp(v/u) ≤ e·w}`.
    Exp,
    /// `{(u, v, w) : (u/α)^α (v/(1-α))^(1-α) ≥ |w|, u, v ≥ 0}`.
    Pow(f64),
}

pub fn dual(cone: &Cone) -> DualCone {
    match *cone {
        Cone::NonNeg(_) | Cone::Soc(_) | Cone::Rsoc(_) => DualCone::SelfDual(*cone),
        Cone::Exp => DualCone::Exp,
        Cone::Pow(a) => DualCone::Pow(a),
    }
}

impl DualCone {
    pub fn member(&self, point: &[f64], tol: f64) -> bool {
        match *self {
            DualCone::SelfDual(c) => member_unchecked(&c, point, tol),
            DualCone::Exp => dual_exp_member(point, tol),
            DualCone::Pow(a) => dual_pow_member(a, point, tol),
        }
    }
}

/// Tests `point ∈ cone` up to an additive tolerance on the defining inequality.
pub fn member(cone: &Cone, point: &[f64], tol: f64) -> Result<bool, ConeError> {
    cone.check_dim(point)?;
    Ok(member_unchecked(cone, point, tol))
}

fn member_unchecked(cone: &Cone, p: &[f64], tol: f64) -> bool {
    if p.iter().any(|v| !v.is_finite()) {
        return false;
    }
    match *cone {
        Cone::NonNeg(_) => p.iter().all(|&v| v >= -tol),
        Cone::Soc(_) => p[0] - norm2(&p[1..]) >= -tol,
        Cone::Rsoc(_) => {
            p[0] >= -tol && p[1] >= -tol && 2.0 * p[0] * p[1] - dot(&p[2..], &p[2..]) >= -tol
        }
        Cone::Exp => exp_member(p, tol),
        Cone::Pow(a) => {
            let (x, y, z) = (p[0], p[1], p[2]);
            x >= -tol && y >= -tol && z.abs() <= pow_mean(a, x.max(0.0), y.max(0.0)) + tol
        }
    }
}

fn exp_member(p: &[f64], tol: f64) -> bool {
    let (x, y, z) = (p[0], p[1], p[2]);
    if y > 0.0 {
        let zt = z + tol;
        if zt > 0.0 && libm::log(y) + x / y <= libm::log(zt) {
            return true;
        }
    }
    y.abs() <= tol && x <= tol && z >= -tol
}

fn dual_exp_member(p: &[f64], tol: f64) -> bool {
    if p.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let (u, v, w) = (p[0], p[1], p[2]);
    if u < 0.0 {
        let rhs = E * w + tol;
        if rhs > 0.0 && libm::log(-u) + v / u <= libm::log(rhs) {
            return true;
        }
    }
    u.abs() <= tol && v >= -tol && w >= -tol
}

fn dual_pow_member(a: f64, p: &[f64], tol: f64) -> bool {
    if p.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let (u, v, w) = (p[0], p[1], p[2]);
    u >= -tol
        && v >= -tol
        && w.abs() <= pow_mean(a, u.max(0.0) / a, v.max(0.0) / (1.0 - a)) + tol
}

/// `x^a · y^(1-a)` for nonnegative arguments.
fn pow_mean(a: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        0.0
    } else {
        libm::exp(a * libm::log(x) + (1.0 - a) * libm::log(y))
    }
}

/// Strict interior test for the primal cone (the barrier domain).
pub fn in_interior(cone: &Cone, p: &[f64]) -> bool {
    if p.iter().any(|v| !v.is_finite()) {
        return false;
    }
    match *cone {
        Cone::NonNeg(_) => p.iter().all(|&v| v > 0.0),
        Cone::Soc(_) => p[0] > 0.0 && p[0] * p[0] - dot(&p[1..], &p[1..]) > 0.0,
        Cone::Rsoc(_) => p[0] > 0.0 && p[1] > 0.0 && 2.0 * p[0] * p[1] - dot(&p[2..], &p[2..]) > 0.0,
        Cone::Exp => {
            let (x, y, z) = (p[0], p[1], p[2]);
            y > 0.0 && z > 0.0 && y * libm::log(z / y) - x > 0.0
        }
        Cone::Pow(a) => {
            let (x, y, z) = (p[0], p[1], p[2]);
            x > 0.0 && y > 0.0 && pow_mean(a, x, y) * pow_mean(a, x, y) - z * z > 0.0
        }
    }
}

/// Strict interior test for the dual cone.
pub fn in_dual_interior(cone: &Cone, p: &[f64]) -> bool {
    if p.iter().any(|v| !v.is_finite()) {
        return false;
    }
    match *cone {
        Cone::NonNeg(_) | Cone::Soc(_) | Cone::Rsoc(_) => in_interior(cone, p),
        Cone::Exp => {
            let (u, v, w) = (p[0], p[1], p[2]);
            u < 0.0 && w > 0.0 && libm::log(-u) + v / u < 1.0 + libm::log(w)
        }
        Cone::Pow(a) => {
            let (u, v, w) = (p[0], p[1], p[2]);
            u > 0.0 && v > 0.0 && pow_mean(a, u / a, v / (1.0 - a)) > w.abs()
        }
    }
}

/// A fixed direction in the interior of the dual cone.
pub fn dual_interior_direction(cone: &Cone) -> Vec<f64> {
    match *cone {
        Cone::NonNeg(n) => vec![1.0; n],
        Cone::Soc(_) | Cone::Rsoc(_) => cone.interior_point(),
        Cone::Exp => vec![-1.0, 1.0, 1.0],
        Cone::Pow(_) => vec![1.0, 1.0, 0.0],
    }
}

/// Moves `beta` into the dual cone (tolerance zero) by adding the smallest
/// tried multiple of an interior dual direction. Returns the input unchanged
/// when it is already a member.
pub fn repair_dual(cone: &Cone, beta: &[f64]) -> Vec<f64> {
    let d = dual(cone);
    if d.member(beta, 0.0) {
        return beta.to_vec();
    }
    let dir = dual_interior_direction(cone);
    let scale = beta.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut delta = 1e-14 * scale;
    for _ in 0..200 {
        let cand: Vec<f64> = beta.iter().zip(&dir).map(|(b, e)| b + delta * e).collect();
        if d.member(&cand, 0.0) {
            return cand;
        }
        delta *= 2.0;
    }
    dir.iter().map(|e| e * scale).collect()
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm2(&v);
    if !(n > 0.0) || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

/// Returns a unit-length `β ∈ K*` with `βᵀ·point < 0`, or `None` when the point
/// lies in the cone (tolerance 1e-9).
///
/// The normal is the gradient of the cone's degree-one homogeneous defining
/// function at the point (the conic gradient inequality), with family-specific
/// fallbacks on the boundary pieces where that gradient does not exist.
pub fn separate(cone: &Cone, point: &[f64]) -> Result<Option<Vec<f64>>, ConeError> {
    cone.check_dim(point)?;
    if member_unchecked(cone, point, 1e-9) {
        return Ok(None);
    }
    let candidates = separation_candidates(cone, point);
    let d = dual(cone);
    let best = candidates
        .into_iter()
        .filter_map(normalized)
        .filter(|b| d.member(b, 1e-12))
        .map(|b| {
            let v = dot(&b, point);
            (v, b)
        })
        .filter(|(v, _)| *v < -1e-12)
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    Ok(best.map(|(_, b)| repair_dual(cone, &b)))
}

fn soc_candidates(p: &[f64]) -> Vec<Vec<f64>> {
    let xn = norm2(&p[1..]);
    let mut out = Vec::new();
    if xn > 0.0 {
        let mut b = Vec::with_capacity(p.len());
        b.push(1.0);
        b.extend(p[1..].iter().map(|x| -x / xn));
        out.push(b);
    }
    let mut e = vec![0.0; p.len()];
    e[0] = 1.0;
    out.push(e);
    out
}

/// The orthogonal involution mapping RSOC coordinates onto SOC coordinates.
fn rotate(p: &[f64]) -> Vec<f64> {
    let mut q = p.to_vec();
    q[0] = (p[0] + p[1]) * FRAC_1_SQRT_2;
    q[1] = (p[0] - p[1]) * FRAC_1_SQRT_2;
    q
}

fn exp_tangent(r: f64) -> Vec<f64> {
    // β(r) = (-e^r, -e^r (1 - r), 1), rescaled by e^{-r} when r > 0
    if r > 0.0 {
        vec![-1.0, r - 1.0, libm::exp(-r)]
    } else {
        let er = libm::exp(r);
        vec![-er, -er * (1.0 - r), 1.0]
    }
}

fn pow_tangent(a: f64, s: f64) -> [f64; 2] {
    // gradient normal at ratio s = x / y
    [a * libm::pow(s, a - 1.0), (1.0 - a) * libm::pow(s, a)]
}

fn separation_candidates(cone: &Cone, p: &[f64]) -> Vec<Vec<f64>> {
    match *cone {
        Cone::NonNeg(n) => (0..n)
            .filter(|&i| p[i] < 0.0)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect(),
        Cone::Soc(_) => soc_candidates(p),
        Cone::Rsoc(_) => soc_candidates(&rotate(p)).into_iter().map(|g| rotate(&g)).collect(),
        Cone::Exp => {
            let (x, y, z) = (p[0], p[1], p[2]);
            let mut out = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
            if y > 0.0 {
                out.push(exp_tangent(x / y));
            }
            // sweep of tangents for the y ≈ 0 boundary and badly scaled points
            let mut r = -30.0;
            while r <= 30.0 {
                out.push(exp_tangent(r));
                r += 0.5;
            }
            if x > 0.0 && z > 0.0 {
                let r0 = libm::log(z / x) + 1.0;
                for k in 0..8 {
                    out.push(exp_tangent(r0 + k as f64));
                }
            }
            out
        }
        Cone::Pow(a) => {
            let (x, y, z) = (p[0], p[1], p[2]);
            let sg = if z >= 0.0 { -1.0 } else { 1.0 };
            let mut out = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
            if x > 0.0 && y > 0.0 {
                let t = pow_tangent(a, x / y);
                out.push(vec![t[0], t[1], sg]);
            }
            let mut k = -12.0;
            while k <= 12.0 {
                let t = pow_tangent(a, libm::pow(10.0, k));
                out.push(vec![t[0], t[1], sg]);
                k += 0.25;
            }
            out
        }
    }
}

/// Barrier value, gradient and Hessian at an interior point.
#[derive(Debug, Clone)]
pub struct BarrierEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Matrix,
}

/// Evaluates the standard logarithmically homogeneous barrier:
///
/// - NonNeg: `-Σ log zᵢ`
/// - SOC: `-log(t² - ‖x‖²)`
/// - RSOC: `-log(2xy - ‖z‖²)`
/// - EXP: `-log(y·log(z/y) - x) - log y - log z`
/// - POW(α): `-log(x^{2α} y^{2(1-α)} - z²) - (1-α) log x - α log y`
pub fn barrier(cone: &Cone, p: &[f64]) -> Result<BarrierEval, ConeError> {
    cone.check_dim(p)?;
    if !in_interior(cone, p) {
        return Err(ConeError::NotInterior);
    }
    let n = p.len();
    Ok(match *cone {
        Cone::NonNeg(_) => {
            let mut h = Matrix::zeros(n, n);
            let mut g = vec![0.0; n];
            let mut val = 0.0;
            for i in 0..n {
                val -= libm::log(p[i]);
                g[i] = -1.0 / p[i];
                h[(i, i)] = 1.0 / (p[i] * p[i]);
            }
            BarrierEval {
                value: val,
                gradient: g,
                hessian: h,
            }
        }
        Cone::Soc(_) => {
            let phi = p[0] * p[0] - dot(&p[1..], &p[1..]);
            let mut grad_phi = vec![0.0; n];
            let mut hess_phi = Matrix::zeros(n, n);
            grad_phi[0] = 2.0 * p[0];
            hess_phi[(0, 0)] = 2.0;
            for i in 1..n {
                grad_phi[i] = -2.0 * p[i];
                hess_phi[(i, i)] = -2.0;
            }
            neg_log_barrier(phi, &grad_phi, &hess_phi)
        }
        Cone::Rsoc(_) => {
            let phi = 2.0 * p[0] * p[1] - dot(&p[2..], &p[2..]);
            let mut grad_phi = vec![0.0; n];
            let mut hess_phi = Matrix::zeros(n, n);
            grad_phi[0] = 2.0 * p[1];
            grad_phi[1] = 2.0 * p[0];
            hess_phi[(0, 1)] = 2.0;
            hess_phi[(1, 0)] = 2.0;
            for i in 2..n {
                grad_phi[i] = -2.0 * p[i];
                hess_phi[(i, i)] = -2.0;
            }
            neg_log_barrier(phi, &grad_phi, &hess_phi)
        }
        Cone::Exp => {
            let (x, y, z) = (p[0], p[1], p[2]);
            let lzy = libm::log(z / y);
            let psi = y * lzy - x;
            let grad_psi = [-1.0, lzy - 1.0, y / z];
            let mut hess_psi = Matrix::zeros(3, 3);
            hess_psi[(1, 1)] = -1.0 / y;
            hess_psi[(1, 2)] = 1.0 / z;
            hess_psi[(2, 1)] = 1.0 / z;
            hess_psi[(2, 2)] = -y / (z * z);
            let mut b = neg_log_barrier(psi, &grad_psi, &hess_psi);
            b.value -= libm::log(y) + libm::log(z);
            b.gradient[1] -= 1.0 / y;
            b.gradient[2] -= 1.0 / z;
            b.hessian[(1, 1)] += 1.0 / (y * y);
            b.hessian[(2, 2)] += 1.0 / (z * z);
            b
        }
        Cone::Pow(a) => {
            let (x, y, z) = (p[0], p[1], p[2]);
            let f = pow_mean(a, x, y) * pow_mean(a, x, y);
            let phi = f - z * z;
            let grad_phi = [2.0 * a * f / x, 2.0 * (1.0 - a) * f / y, -2.0 * z];
            let mut hess_phi = Matrix::zeros(3, 3);
            hess_phi[(0, 0)] = 2.0 * a * (2.0 * a - 1.0) * f / (x * x);
            hess_phi[(1, 1)] = 2.0 * (1.0 - a) * (1.0 - 2.0 * a) * f / (y * y);
            hess_phi[(0, 1)] = 4.0 * a * (1.0 - a) * f / (x * y);
            hess_phi[(1, 0)] = hess_phi[(0, 1)];
            hess_phi[(2, 2)] = -2.0;
            let mut b = neg_log_barrier(phi, &grad_phi, &hess_phi);
            b.value -= (1.0 - a) * libm::log(x) + a * libm::log(y);
            b.gradient[0] -= (1.0 - a) / x;
            b.gradient[1] -= a / y;
            b.hessian[(0, 0)] += (1.0 - a) / (x * x);
            b.hessian[(1, 1)] += a / (y * y);
            b
        }
    })
}

/// Value, gradient and Hessian of `-log φ` from those of `φ`.
fn neg_log_barrier(phi: f64, grad_phi: &[f64], hess_phi: &Matrix) -> BarrierEval {
    let n = grad_phi.len();
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = grad_phi[i] * grad_phi[j] / (phi * phi) - hess_phi[(i, j)] / phi;
        }
    }
    BarrierEval {
        value: -libm::log(phi),
        gradient: grad_phi.iter().map(|g| -g / phi).collect(),
        hessian: h,
    }
}

/// Ordered product of cone factors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConeProduct {
    factors: Vec<Cone>,
    offsets: Vec<usize>,
    dim: usize,
}

impl ConeProduct {
    pub fn new(factors: Vec<Cone>) -> Self {
        let mut offsets = Vec::with_capacity(factors.len());
        let mut dim = 0;
        for c in &factors {
            offsets.push(dim);
            dim += c.dim();
        }
        ConeProduct {
            factors,
            offsets,
            dim,
        }
    }

    pub fn push(&mut self, cone: Cone) -> usize {
        let start = self.dim;
        self.offsets.push(start);
        self.dim += cone.dim();
        self.factors.push(cone);
        start
    }

    pub fn factors(&self) -> &[Cone] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Coordinate range of factor `k`.
    pub fn range(&self, k: usize) -> core::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.factors[k].dim()
    }

    /// Iterates `(cone, coordinate range)`.
    pub fn blocks(&self) -> impl Iterator<Item = (&Cone, core::ops::Range<usize>)> + '_ {
        self.factors
            .iter()
            .zip(&self.offsets)
            .map(|(c, &o)| (c, o..o + c.dim()))
    }

    pub fn validate(&self) -> Result<(), ConeError> {
        self.factors.iter().try_for_each(|c| c.validate())
    }

    pub fn member(&self, z: &[f64], tol: f64) -> Result<bool, ConeError> {
        if z.len() != self.dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        Ok(self.blocks().all(|(c, r)| member_unchecked(c, &z[r], tol)))
    }

    pub fn dual_member(&self, beta: &[f64], tol: f64) -> Result<bool, ConeError> {
        if beta.len() != self.dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim,
                got: beta.len(),
            });
        }
        Ok(self.blocks().all(|(c, r)| dual(c).member(&beta[r], tol)))
    }

    pub fn barrier_parameter(&self) -> f64 {
        self.factors.iter().map(|c| c.barrier_parameter()).sum()
    }
}
