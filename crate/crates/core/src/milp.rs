//! Best-bound branch and bound over [`solve_lp`].

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::lp::{solve_lp, LpError, LpProblem, LpStatus};

pub const INT_TOL: f64 = 1e-6;
pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;
const REL_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
    /// Recession direction of the LP relaxation when `Unbounded`.
    pub ray: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MilpError {
    UnboundedInteger(usize),
    Lp(LpError),
}

impl fmt::Display for MilpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MilpError::UnboundedInteger(j) => write!(f, "integer column {j} lacks finite bounds"),
            MilpError::Lp(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MilpError {}

impl From<LpError> for MilpError {
    fn from(e: LpError) -> Self {
        MilpError::Lp(e)
    }
}

struct Node {
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed so the max-heap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn most_fractional(x: &[f64], integer: &[bool]) -> Option<usize> {
    let mut best = None;
    let mut best_frac = INT_TOL;
    for (j, &is_int) in integer.iter().enumerate() {
        if !is_int {
            continue;
        }
        let f = x[j] - libm::floor(x[j]);
        let dist = f.min(1.0 - f);
        if dist > best_frac {
            best_frac = dist;
            best = Some(j);
        }
    }
    best
}

fn within_gap(incumbent: f64, bound: f64) -> bool {
    incumbent - bound <= REL_GAP * incumbent.abs().max(1.0)
}

/// Solves `min cᵀx` over the LP with `x_j ∈ Z` wherever `integer[j]`.
pub fn solve_milp(
    problem: &LpProblem,
    integer: &[bool],
    node_limit: usize,
) -> Result<MilpResult, MilpError> {
    problem.validate()?;
    let n = problem.c.len();
    if integer.len() != n {
        return Err(MilpError::Lp(LpError::Malformed("integer flags length")));
    }
    let mut root = problem.clone();
    for j in 0..n {
        if integer[j] {
            if !root.lower[j].is_finite() || !root.upper[j].is_finite() {
                return Err(MilpError::UnboundedInteger(j));
            }
            root.lower[j] = libm::ceil(root.lower[j] - INT_TOL);
            root.upper[j] = libm::floor(root.upper[j] + INT_TOL);
        }
    }
    let infeasible = |nodes| MilpResult {
        status: MilpStatus::Infeasible,
        x: None,
        objective: f64::INFINITY,
        best_bound: f64::INFINITY,
        nodes,
        ray: None,
    };
    if (0..n).any(|j| root.lower[j] > root.upper[j]) {
        return Ok(infeasible(0));
    }

    let lp = solve_lp(&root)?;
    match lp.status {
        LpStatus::Infeasible => return Ok(infeasible(1)),
        LpStatus::Unbounded => {
            // Integer columns are bounded, so the ray moves continuous columns
            // only and any integer-feasible point extends along it.
            let mut feas = root.clone();
            feas.c.iter_mut().for_each(|v| *v = 0.0);
            let inner = solve_milp(&feas, integer, node_limit)?;
            return Ok(match inner.status {
                MilpStatus::Optimal => MilpResult {
                    status: MilpStatus::Unbounded,
                    x: inner.x,
                    objective: f64::NEG_INFINITY,
                    best_bound: f64::NEG_INFINITY,
                    nodes: inner.nodes + 1,
                    ray: lp.ray,
                },
                MilpStatus::NodeLimit => MilpResult {
                    status: MilpStatus::NodeLimit,
                    x: None,
                    objective: f64::INFINITY,
                    best_bound: f64::NEG_INFINITY,
                    nodes: inner.nodes + 1,
                    ray: lp.ray,
                },
                _ => infeasible(inner.nodes + 1),
            });
        }
        LpStatus::Optimal => {}
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 1usize;
    heap.push(Node {
        bound: lp.objective,
        id: 0,
        lower: root.lower.clone(),
        upper: root.upper.clone(),
        x: lp.x,
    });
    let mut nodes = 1usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut sub = root.clone();

    while let Some(node) = heap.pop() {
        if let Some((val, _)) = &incumbent {
            if within_gap(*val, node.bound) {
                heap.push(node);
                break;
            }
        }
        let Some(j) = most_fractional(&node.x, integer) else {
            let mut x = node.x;
            for k in 0..n {
                if integer[k] {
                    x[k] = libm::round(x[k]);
                }
            }
            let better = incumbent.as_ref().is_none_or(|(v, _)| node.bound < *v);
            if better {
                incumbent = Some((node.bound, x));
            }
            continue;
        };
        if nodes >= node_limit {
            heap.push(node);
            let best_bound = heap.peek().map_or(f64::INFINITY, |n| n.bound);
            let (objective, x) = match incumbent {
                Some((v, x)) => (v, Some(x)),
                None => (f64::INFINITY, None),
            };
            return Ok(MilpResult {
                status: MilpStatus::NodeLimit,
                x,
                objective,
                best_bound: best_bound.min(objective),
                nodes,
                ray: None,
            });
        }
        let v = node.x[j];
        for down in [true, false] {
            sub.lower.copy_from_slice(&node.lower);
            sub.upper.copy_from_slice(&node.upper);
            if down {
                sub.upper[j] = libm::floor(v);
            } else {
                sub.lower[j] = libm::ceil(v);
            }
            if sub.lower[j] > sub.upper[j] {
                continue;
            }
            nodes += 1;
            let r = solve_lp(&sub)?;
            if r.status != LpStatus::Optimal {
                continue;
            }
            if let Some((val, _)) = &incumbent {
                if within_gap(*val, r.objective) {
                    continue;
                }
            }
            heap.push(Node {
                bound: r.objective.max(node.bound),
                id: next_id,
                lower: sub.lower.clone(),
                upper: sub.upper.clone(),
                x: r.x,
            });
            next_id += 1;
        }
    }

    Ok(match incumbent {
        Some((val, x)) => {
            let open = heap.peek().map_or(val, |n| n.bound);
            MilpResult {
                status: MilpStatus::Optimal,
                x: Some(x),
                objective: val,
                best_bound: open.min(val),
                nodes,
                ray: None,
            }
        }
        None => infeasible(nodes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use alloc::vec;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn integer_maximum_in_box() {
        // max x over x ∈ [0, 2.5] integer
        let p = LpProblem::new(vec![-1.0], Matrix::zeros(0, 1), vec![], vec![0.0], vec![2.5]);
        let r = solve_milp(&p, &[true], DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert_eq!(r.x.unwrap()[0], 2.0);
    }

    #[test]
    fn binary_knapsack() {
        // min -(3x1 + 2x2) s.t. 2x1 + x2 + s = 2
        let a = Matrix::from_rows(&[vec![2.0, 1.0, 1.0]]);
        let p = LpProblem::new(vec![-3.0, -2.0, 0.0], a, vec![2.0], vec![0.0; 3], vec![1.0, 1.0, INF]);
        let r = solve_milp(&p, &[true, true, false], DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert!((r.objective + 3.0).abs() < 1e-9);
        let x = r.x.unwrap();
        assert_eq!((x[0], x[1]), (1.0, 0.0));
    }

    #[test]
    fn fractional_only_polytope_is_infeasible() {
        // 2x = 1 with x integer
        let a = Matrix::from_rows(&[vec![2.0]]);
        let p = LpProblem::new(vec![0.0], a, vec![1.0], vec![0.0], vec![3.0]);
        let r = solve_milp(&p, &[true], DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(r.status, MilpStatus::Infeasible);
    }

    #[test]
    fn unbounded_continuous_part() {
        // min y s.t. y - x ≤ 0 is free below; x ∈ {0, 1}
        let a = Matrix::from_rows(&[vec![-1.0, 1.0, 1.0]]);
        let p = LpProblem::new(vec![0.0, 1.0, 0.0], a, vec![0.0], vec![0.0, -INF, 0.0], vec![1.0, INF, INF]);
        let r = solve_milp(&p, &[true, false, false], DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(r.status, MilpStatus::Unbounded);
    }

    #[test]
    fn rejects_unbounded_integer() {
        let p = LpProblem::new(vec![1.0], Matrix::zeros(0, 1), vec![], vec![0.0], vec![INF]);
        assert_eq!(solve_milp(&p, &[true], 10), Err(MilpError::UnboundedInteger(0)));
    }

    #[test]
    fn node_limit_keeps_valid_bound() {
        // min -Σx s.t. Σ 2x_i = 2k+1 style parity problem forces branching
        let a = Matrix::from_rows(&[vec![2.0, 2.0, 2.0, 2.0, 1.0]]);
        let p = LpProblem::new(
            vec![-1.0, -1.0, -1.0, -1.0, 0.0],
            a,
            vec![7.0],
            vec![0.0; 5],
            vec![3.0, 3.0, 3.0, 3.0, 1.5],
        );
        let full = solve_milp(&p, &[true, true, true, true, false], DEFAULT_NODE_LIMIT).unwrap();
        assert_eq!(full.status, MilpStatus::Optimal);
        let cut = solve_milp(&p, &[true, true, true, true, false], 2).unwrap();
        assert_eq!(cut.status, MilpStatus::NodeLimit);
        assert!(cut.best_bound <= full.objective + 1e-9);
    }
}
