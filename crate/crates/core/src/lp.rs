//! Dense two-phase bounded-variable primal simplex.
//!
//! Problems have the form `min cᵀx s.t. Ax = b, l ≤ x ≤ u` with infinite
//! bounds allowed. One artificial column per row is appended for phase 1 and
//! kept (fixed at zero) during phase 2, so the artificial block of the
//! tableau always holds the basis inverse up to row signs.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{dot, Lu, Matrix};

const FEAS_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const TINY_PIVOT: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Primal point (the last basic solution when not optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y` with reduced costs `c - Aᵀy`.
    pub duals: Vec<f64>,
    /// For `Unbounded`: `A r = 0`, `cᵀr < 0`, and `r` respects the bounds.
    pub ray: Option<Vec<f64>>,
    /// For `Infeasible`: `y` with `yᵀb > max{yᵀAx : l ≤ x ≤ u}`.
    pub farkas: Option<Vec<f64>>,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    Malformed(&'static str),
    NumericFailure,
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Malformed(what) => write!(f, "malformed LP: {what}"),
            LpError::NumericFailure => f.write_str("simplex numeric failure"),
        }
    }
}

impl core::error::Error for LpError {}

impl LpProblem {
    pub fn new(c: Vec<f64>, a: Matrix, b: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        LpProblem {
            c,
            a,
            b,
            lower,
            upper,
        }
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.c.len();
        if self.a.cols() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("column dimensions disagree"));
        }
        if self.a.rows() != self.b.len() {
            return Err(LpError::Malformed("row dimensions disagree"));
        }
        if !self.a.is_finite() || self.c.iter().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(LpError::Malformed("non-finite data"));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::Malformed("inconsistent bounds"));
            }
        }
        Ok(())
    }

    /// `yᵀb - max{yᵀAx : l ≤ x ≤ u}`; positive exactly when `y` proves infeasibility.
    pub fn farkas_margin(&self, y: &[f64]) -> f64 {
        let g = self.a.tr_mul_vec(y);
        let mut best = 0.0;
        for j in 0..g.len() {
            let bound = if g[j] > 0.0 {
                self.upper[j]
            } else if g[j] < 0.0 {
                self.lower[j]
            } else {
                continue;
            };
            best += g[j] * bound;
        }
        dot(y, &self.b) - best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
    Free,
}

struct Tableau<'a> {
    p: &'a LpProblem,
    m: usize,
    n: usize,
    // [A | S] with S = diag(sign)
    full: Matrix,
    t: Matrix,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    pivots: usize,
    since_refactor: usize,
    // phase 1 objective is bounded below, so any ray it finds is drift
    phase1: bool,
    banned: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded(Vec<f64>),
}

impl<'a> Tableau<'a> {
    fn new(p: &'a LpProblem) -> Self {
        let m = p.a.rows();
        let n = p.c.len();
        let mut x = vec![0.0; n + m];
        let mut status = vec![Status::Free; n + m];
        for j in 0..n {
            let (l, u) = (p.lower[j], p.upper[j]);
            if l.is_finite() {
                x[j] = l;
                status[j] = Status::Lower;
            } else if u.is_finite() {
                x[j] = u;
                status[j] = Status::Upper;
            }
        }
        let resid: Vec<f64> = {
            let ax = p.a.mul_vec(&x[..n]);
            p.b.iter().zip(&ax).map(|(b, v)| b - v).collect()
        };
        let mut full = Matrix::zeros(m, n + m);
        let mut t = Matrix::zeros(m, n + m);
        for i in 0..m {
            let s = if resid[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                full[(i, j)] = p.a[(i, j)];
                t[(i, j)] = s * p.a[(i, j)];
            }
            full[(i, n + i)] = s;
            t[(i, n + i)] = 1.0;
            x[n + i] = resid[i].abs();
            status[n + i] = Status::Basic;
        }
        let mut lo = p.lower.clone();
        let mut hi = p.upper.clone();
        lo.extend(core::iter::repeat_n(0.0, m));
        hi.extend(core::iter::repeat_n(f64::INFINITY, m));
        let mut cost = vec![0.0; n];
        cost.extend(core::iter::repeat_n(1.0, m));
        let mut tab = Tableau {
            p,
            m,
            n,
            full,
            t,
            lo,
            hi,
            cost,
            x,
            d: vec![0.0; n + m],
            basis: (n..n + m).collect(),
            status,
            pivots: 0,
            since_refactor: 0,
            phase1: true,
            banned: vec![false; n + m],
        };
        tab.price();
        tab
    }

    /// Reduced costs from the current tableau and costs.
    fn price(&mut self) {
        let total = self.n + self.m;
        let mut d = self.cost.clone();
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = self.cost[bi];
            if cb != 0.0 {
                let row = self.t.row(i);
                for j in 0..total {
                    d[j] -= cb * row[j];
                }
            }
        }
        for &bi in &self.basis {
            d[bi] = 0.0;
        }
        self.d = d;
    }

    fn basis_lu(&self) -> Option<Lu> {
        let mut bm = Matrix::zeros(self.m, self.m);
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..self.m {
                bm[(i, k)] = self.full[(i, j)];
            }
        }
        Lu::factor(&bm, 1e-13)
    }

    /// Rebuilds tableau, basic values and reduced costs from a fresh factorization.
    fn refactor(&mut self) -> Result<(), LpError> {
        self.since_refactor = 0;
        if self.m == 0 {
            self.price();
            return Ok(());
        }
        let lu = self.basis_lu().ok_or(LpError::NumericFailure)?;
        let total = self.n + self.m;
        let mut t = Matrix::zeros(self.m, total);
        for j in 0..total {
            if self.status[j] == Status::Basic {
                continue;
            }
            let col = lu.solve(&self.full.column(j));
            for i in 0..self.m {
                t[(i, j)] = col[i];
            }
        }
        for (i, &bi) in self.basis.iter().enumerate() {
            t[(i, bi)] = 1.0;
        }
        self.t = t;
        let mut rhs = self.p.b.clone();
        for j in 0..total {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                for i in 0..self.m {
                    rhs[i] -= self.full[(i, j)] * self.x[j];
                }
            }
        }
        let xb = lu.solve(&rhs);
        for (i, &bi) in self.basis.iter().enumerate() {
            self.x[bi] = xb[i];
        }
        self.price();
        Ok(())
    }

    fn duals(&self) -> Vec<f64> {
        if self.m == 0 {
            return Vec::new();
        }
        match self.basis_lu() {
            Some(lu) => {
                let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
                lu.solve_transpose(&cb)
            }
            None => vec![0.0; self.m],
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let st = self.status[j];
            if st == Status::Basic || self.lo[j] == self.hi[j] || self.banned[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = match st {
                Status::Lower if dj < -COST_TOL => 1.0,
                Status::Upper if dj > COST_TOL => -1.0,
                Status::Free if dj.abs() > COST_TOL => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        let limit = 10 * (self.m + self.n);
        let max_pivots = 50_000 + 200 * (self.m + self.n);
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut tiny = 0usize;
        loop {
            if self.pivots > max_pivots {
                return Err(LpError::NumericFailure);
            }
            let Some((j, dir)) = self.entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            // ratio test
            let mut step = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, f64)> = None;
            let mut leave_alpha = 0.0f64;
            for i in 0..self.m {
                let alpha = dir * self.t[(i, j)];
                let bi = self.basis[i];
                let lim = if alpha > PIVOT_TOL && self.lo[bi].is_finite() {
                    (self.x[bi] - self.lo[bi]).max(0.0) / alpha
                } else if alpha < -PIVOT_TOL && self.hi[bi].is_finite() {
                    (self.hi[bi] - self.x[bi]).max(0.0) / -alpha
                } else {
                    continue;
                };
                let target = if alpha > 0.0 { self.lo[bi] } else { self.hi[bi] };
                let better = match leave {
                    None => lim < step,
                    Some(_) if bland => lim < step - 1e-12 || (lim <= step + 1e-12 && bi < self.basis[leave.unwrap().0]),
                    Some(_) => lim < step - 1e-12 || (lim <= step + 1e-12 && alpha.abs() > leave_alpha),
                };
                if better {
                    step = lim.min(step);
                    leave = Some((i, target));
                    leave_alpha = alpha.abs();
                }
            }
            if step == f64::INFINITY {
                // confirm against a fresh factorization before trusting the ray
                if self.since_refactor > 0 {
                    self.refactor()?;
                    continue;
                }
                if self.phase1 {
                    self.banned[j] = true;
                    continue;
                }
                let mut ray = vec![0.0; self.n + self.m];
                ray[j] = dir;
                for i in 0..self.m {
                    ray[self.basis[i]] = -dir * self.t[(i, j)];
                }
                return Ok(Outcome::Unbounded(ray));
            }
            if step <= 1e-12 {
                degenerate += 1;
                if degenerate > limit {
                    bland = true;
                }
            }
            // move
            self.x[j] += dir * step;
            for i in 0..self.m {
                let bi = self.basis[i];
                self.x[bi] -= dir * step * self.t[(i, j)];
            }
            self.pivots += 1;
            match leave {
                None => {
                    // bound flip
                    self.status[j] = if dir > 0.0 { Status::Upper } else { Status::Lower };
                    self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
                }
                Some((r, target)) => {
                    let piv = self.t[(r, j)];
                    if piv.abs() < TINY_PIVOT {
                        tiny += 1;
                        if tiny > 10 {
                            return Err(LpError::NumericFailure);
                        }
                    }
                    let out = self.basis[r];
                    self.pivot(r, j);
                    self.x[out] = target;
                    self.status[out] = if target == self.lo[out] {
                        Status::Lower
                    } else {
                        Status::Upper
                    };
                    self.status[j] = Status::Basic;
                    self.since_refactor += 1;
                    if self.since_refactor >= REFACTOR_EVERY {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let total = self.n + self.m;
        let piv = self.t[(r, j)];
        for k in 0..total {
            self.t[(r, k)] /= piv;
        }
        let prow: Vec<f64> = self.t.row(r).to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[(i, j)];
            if f != 0.0 {
                let row = self.t.row_mut(i);
                for k in 0..total {
                    row[k] -= f * prow[k];
                }
                row[j] = 0.0;
            }
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for k in 0..total {
                self.d[k] -= dj * prow[k];
            }
        }
        self.d[j] = 0.0;
        self.basis[r] = j;
    }

    fn infeasibility(&self) -> f64 {
        (self.n..self.n + self.m).map(|j| self.x[j].max(0.0)).sum()
    }
}

/// Solves the LP. Deterministic: identical inputs give identical pivots.
pub fn solve_lp(p: &LpProblem) -> Result<LpResult, LpError> {
    p.validate()?;
    let n = p.c.len();
    let mut tab = Tableau::new(p);

    // phase 1
    match tab.run()? {
        Outcome::Optimal => {}
        Outcome::Unbounded(_) => return Err(LpError::NumericFailure),
    }
    tab.refactor()?;
    // a fresh factorization can expose drift; polish once
    if tab.entering(false).is_some() {
        tab.run()?;
        tab.refactor()?;
    }
    let scale = 1.0 + p.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if tab.infeasibility() > FEAS_TOL * scale {
        let y = tab.duals();
        let x = tab.x[..n].to_vec();
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            objective: dot(&p.c, &x),
            x,
            duals: Vec::new(),
            ray: None,
            farkas: Some(y),
            pivots: tab.pivots,
        });
    }

    // phase 2: artificials fixed at zero
    tab.phase1 = false;
    tab.banned.iter_mut().for_each(|b| *b = false);
    for j in n..n + tab.m {
        tab.hi[j] = 0.0;
        tab.cost[j] = 0.0;
        if tab.status[j] != Status::Basic {
            tab.x[j] = 0.0;
            tab.status[j] = Status::Lower;
        }
    }
    tab.cost[..n].copy_from_slice(&p.c);
    tab.refactor()?;
    let outcome = tab.run()?;
    if let Outcome::Unbounded(ray) = outcome {
        let x = tab.x[..n].to_vec();
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            x,
            duals: Vec::new(),
            ray: Some(ray[..n].to_vec()),
            farkas: None,
            pivots: tab.pivots,
        });
    }
    tab.refactor()?;
    if tab.entering(false).is_some() {
        if let Outcome::Unbounded(ray) = tab.run()? {
            let x = tab.x[..n].to_vec();
            return Ok(LpResult {
                status: LpStatus::Unbounded,
                objective: f64::NEG_INFINITY,
                x,
                duals: Vec::new(),
                ray: Some(ray[..n].to_vec()),
                farkas: None,
                pivots: tab.pivots,
            });
        }
        tab.refactor()?;
    }
    let mut x = tab.x[..n].to_vec();
    // snap to bounds that rounding pushed slightly past
    for j in 0..n {
        x[j] = x[j].clamp(p.lower[j], p.upper[j]);
    }
    Ok(LpResult {
        status: LpStatus::Optimal,
        objective: dot(&p.c, &x),
        x,
        duals: tab.duals(),
        ray: None,
        farkas: None,
        pivots: tab.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn lp(c: &[f64], rows: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> LpProblem {
        let a = if rows.is_empty() {
            Matrix::zeros(0, c.len())
        } else {
            Matrix::from_rows(rows)
        };
        LpProblem::new(c.to_vec(), a, b.to_vec(), lo.to_vec(), hi.to_vec())
    }

    #[test]
    fn bounded_single_variable() {
        // min -x, x ≤ 1 via slack, x ≥ 0
        let p = lp(&[-1.0, 0.0], &[vec![1.0, 1.0]], &[1.0], &[0.0, 0.0], &[INF, INF]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-12);
        assert!((r.objective + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_with_certificate() {
        // x + s = -1, x, s ≥ 0
        let p = lp(&[1.0, 0.0], &[vec![1.0, 1.0]], &[-1.0], &[0.0, 0.0], &[INF, INF]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(p.farkas_margin(r.farkas.as_ref().unwrap()) > 0.5);
    }

    #[test]
    fn unbounded_ray() {
        let p = lp(&[-1.0, 0.0], &[vec![1.0, -1.0]], &[0.0], &[-INF, -INF], &[INF, INF]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        let ray = r.ray.unwrap();
        assert!(dot(&p.c, &ray) < 0.0);
        assert!(p.a.mul_vec(&ray)[0].abs() < 1e-12);
    }

    #[test]
    fn rotated_cone_cuts_leave_lp_unbounded() {
        // min z s.t. x = 0 with finitely many valid cuts β ∈ RSOC₃ on (x, y, z):
        // the ray (0, y_r, z_r) with z_r < 0 survives every finite cut set
        let cuts = [
            [1.0, 1.0, 1.0],
            [1.0, 1.0, -1.0],
            [2.0, 0.5, 1.0],
            [0.5, 4.0, -2.0],
            [10.0, 0.1, 1.4],
        ];
        let mut rows = vec![vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]];
        let mut b = vec![0.0];
        for (k, c) in cuts.iter().enumerate() {
            let mut row = vec![c[0], c[1], c[2], 0.0, 0.0, 0.0, 0.0, 0.0];
            row[3 + k] = -1.0;
            rows.push(row);
            b.push(0.0);
        }
        let mut lo = vec![-INF; 3];
        lo.extend([0.0; 5]);
        let p = lp(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], &rows, &b, &lo, &[INF; 8]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        let ray = r.ray.unwrap();
        assert!(ray[0].abs() < 1e-12 && ray[2] < 0.0);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let rows = [vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]];
        let p = lp(&[1.0, 2.0, 3.0], &rows, &[1.0, 2.0, 1.0], &[0.0; 3], &[INF; 3]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        // x2 = 1 - x1 and x3 = 1 - x2 = x1: cost x1 + 2 - 2x1 + 3x1 = 2 + 2x1
        assert!((r.objective - 2.0).abs() < 1e-10);
    }

    #[test]
    fn free_and_upper_bounded_columns() {
        // min x + y, x free, y ≤ 3, x - y = -5 (x = y - 5)
        let p = lp(&[1.0, 1.0], &[vec![1.0, -1.0]], &[-5.0], &[-INF, -INF], &[INF, 3.0]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        let p = lp(&[1.0, 1.0], &[vec![1.0, -1.0]], &[-5.0], &[-INF, -2.0], &[INF, 3.0]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 9.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_inconsistent_bounds() {
        let p = lp(&[1.0], &[], &[], &[1.0], &[0.0]);
        assert!(matches!(solve_lp(&p), Err(LpError::Malformed(_))));
    }

    #[test]
    fn empty_row_set() {
        let p = lp(&[1.0, -1.0], &[], &[], &[0.0, -1.0], &[2.0, 4.0]);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 4.0).abs() < 1e-12);
    }
}
