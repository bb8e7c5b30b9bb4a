//! Mixed-integer conic standard form
//!
//! ```text
//! min cᵀz + offset  s.t.  A_x x + A_z z = b,  L ≤ x ≤ U,  x ∈ ℤⁿ,  z ∈ K
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::conic::ConicProblem;
use crate::cones::{Cone, ConeProduct};
use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub c: Vec<f64>,
    pub obj_offset: f64,
    pub ax: Matrix,
    pub az: Matrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cones: ConeProduct,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProgramError {
    Dimension(&'static str),
    NonFinite,
    InvalidCone(usize),
    UnboundedInteger(usize),
    EmptyBounds(usize),
}

impl fmt::Display for ProgramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramError::Dimension(what) => write!(f, "dimension mismatch: {what}"),
            ProgramError::NonFinite => f.write_str("non-finite data"),
            ProgramError::InvalidCone(k) => write!(f, "invalid cone factor {k}"),
            ProgramError::UnboundedInteger(j) => write!(f, "integer column {j} lacks finite bounds"),
            ProgramError::EmptyBounds(j) => write!(f, "integer column {j} has no integer in its bounds"),
        }
    }
}

impl core::error::Error for ProgramError {}

impl ConicProgram {
    pub fn nx(&self) -> usize {
        self.lower.len()
    }

    pub fn nz(&self) -> usize {
        self.c.len()
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let (m, nx, nz) = (self.rows(), self.nx(), self.nz());
        if nz == 0 {
            return Err(ProgramError::Dimension("no cone coordinates"));
        }
        if self.upper.len() != nx || self.ax.cols() != nx {
            return Err(ProgramError::Dimension("integer columns"));
        }
        if self.az.cols() != nz || self.cones.dim() != nz {
            return Err(ProgramError::Dimension("cone columns"));
        }
        if self.ax.rows() != m || self.az.rows() != m {
            return Err(ProgramError::Dimension("rows"));
        }
        if !self.ax.is_finite()
            || !self.az.is_finite()
            || !self.obj_offset.is_finite()
            || self.c.iter().chain(&self.b).any(|v| !v.is_finite())
        {
            return Err(ProgramError::NonFinite);
        }
        for (k, cone) in self.cones.factors().iter().enumerate() {
            cone.validate().map_err(|_| ProgramError::InvalidCone(k))?;
        }
        for j in 0..nx {
            if !self.lower[j].is_finite() || !self.upper[j].is_finite() {
                return Err(ProgramError::UnboundedInteger(j));
            }
            if libm::ceil(self.lower[j]) > libm::floor(self.upper[j]) {
                return Err(ProgramError::EmptyBounds(j));
            }
        }
        Ok(())
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        dot(&self.c, z) + self.obj_offset
    }

    /// Number of integer assignments, saturating.
    pub fn assignment_count(&self) -> u64 {
        (0..self.nx()).fold(1u64, |acc, j| {
            let span = libm::floor(self.upper[j]) - libm::ceil(self.lower[j]) + 1.0;
            acc.saturating_mul(span.max(0.0) as u64)
        })
    }

    /// Continuous problem over `z` with the integers fixed at `x`. Its
    /// objective omits the offset.
    pub fn subproblem(&self, x: &[f64]) -> ConicProblem {
        let ax = self.ax.mul_vec(x);
        ConicProblem {
            c: self.c.clone(),
            a: self.az.clone(),
            r: self.b.iter().zip(&ax).map(|(b, a)| b - a).collect(),
            cones: self.cones.clone(),
        }
    }

    /// Continuous relaxation over `(z, p, q)` with `x = L + p`,
    /// `p + q = U - L`. The first `rows()` duals belong to the original
    /// rows, so `c - A_zᵀλ` is a valid cut for the program.
    pub fn relaxation(&self) -> ConicProblem {
        let (m, nx, nz) = (self.rows(), self.nx(), self.nz());
        let n = nz + 2 * nx;
        let mut a = Matrix::zeros(m + nx, n);
        let mut r = vec![0.0; m + nx];
        let lx = self.ax.mul_vec(&self.lower);
        for i in 0..m {
            for j in 0..nz {
                a[(i, j)] = self.az[(i, j)];
            }
            for j in 0..nx {
                a[(i, nz + j)] = self.ax[(i, j)];
            }
            r[i] = self.b[i] - lx[i];
        }
        for j in 0..nx {
            a[(m + j, nz + j)] = 1.0;
            a[(m + j, nz + nx + j)] = 1.0;
            r[m + j] = self.upper[j] - self.lower[j];
        }
        let mut cones = self.cones.clone();
        for _ in 0..2 * nx {
            cones.push(Cone::NonNeg(1));
        }
        let mut c = self.c.clone();
        c.resize(n, 0.0);
        ConicProblem { c, a, r, cones }
    }

    /// Whether `(x, z)` is feasible to within `tol`.
    pub fn is_feasible(&self, x: &[f64], z: &[f64], tol: f64) -> bool {
        if x.len() != self.nx() || z.len() != self.nz() {
            return false;
        }
        let ints = x.iter().enumerate().all(|(j, &v)| {
            libm::fabs(v - libm::round(v)) <= tol && v >= self.lower[j] - tol && v <= self.upper[j] + tol
        });
        let ax = self.ax.mul_vec(x);
        let az = self.az.mul_vec(z);
        let rows = (0..self.rows()).all(|i| libm::fabs(ax[i] + az[i] - self.b[i]) <= tol * (1.0 + libm::fabs(self.b[i])));
        ints && rows && self.cones.member(z, tol).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve_conic, ConicSettings, ConicStatus};

    fn toy() -> ConicProgram {
        // x ∈ [0, 2], (t, x, 1) ∈ SOC, min t
        let mut az = Matrix::zeros(2, 3);
        az[(0, 1)] = 1.0;
        az[(1, 2)] = 1.0;
        let mut ax = Matrix::zeros(2, 1);
        ax[(0, 0)] = -1.0;
        ConicProgram {
            c: vec![1.0, 0.0, 0.0],
            obj_offset: 0.5,
            ax,
            az,
            b: vec![0.0, 1.0],
            lower: vec![0.0],
            upper: vec![2.0],
            cones: ConeProduct::new(vec![Cone::Soc(3)]),
        }
    }

    #[test]
    fn validation() {
        let p = toy();
        assert_eq!(p.validate(), Ok(()));
        assert_eq!(p.assignment_count(), 3);
        let mut q = p.clone();
        q.upper[0] = f64::INFINITY;
        assert_eq!(q.validate(), Err(ProgramError::UnboundedInteger(0)));
        let mut q = p.clone();
        q.lower[0] = 0.2;
        q.upper[0] = 0.8;
        assert_eq!(q.validate(), Err(ProgramError::EmptyBounds(0)));
        let mut q = p;
        q.c.push(0.0);
        assert!(q.validate().is_err());
    }

    #[test]
    fn subproblem_and_relaxation() {
        let p = toy();
        let sub = p.subproblem(&[2.0]);
        let cert = solve_conic(&sub, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Optimal);
        assert!((cert.primal_objective - libm::sqrt(5.0)).abs() < 1e-6);
        assert!(p.is_feasible(&[2.0], &cert.z, 1e-6));

        let relax = p.relaxation();
        let cert = solve_conic(&relax, &ConicSettings::default()).unwrap();
        assert_eq!(cert.status, ConicStatus::Optimal);
        assert!((cert.primal_objective - 1.0).abs() < 1e-6);
    }
}
