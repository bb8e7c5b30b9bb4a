use alloc::vec::Vec;
use core::fmt;

use super::atoms::{AtomKind, Arity};

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(usize),
    Const(f64),
    /// `Σ coefᵢ · childᵢ + offset`
    Affine { terms: Vec<(f64, Expr)>, offset: f64 },
    Atom { atom: AtomKind, args: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DcpError {
    UndeclaredVariable(usize),
    Arity { atom: AtomKind, got: usize },
    BadParameter(AtomKind),
}

impl fmt::Display for DcpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DcpError::UndeclaredVariable(i) => write!(f, "undeclared variable index {i}"),
            DcpError::Arity { atom, got } => {
                write!(f, "{} takes {}, got {got} arguments", atom.name(), atom.arity())
            }
            DcpError::BadParameter(atom) => write!(f, "invalid parameter for {}", atom.name()),
        }
    }
}

impl core::error::Error for DcpError {}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    /// Builds an atom application, checking arity and parameters.
    pub fn atom(atom: AtomKind, args: Vec<Expr>) -> Result<Expr, DcpError> {
        let ok = match atom.arity() {
            Arity::Fixed(k) => args.len() == k,
            Arity::AtLeastOne => !args.is_empty(),
        };
        if !ok {
            return Err(DcpError::Arity {
                atom,
                got: args.len(),
            });
        }
        if let AtomKind::PowRational(p) = atom {
            if !(p >= 1.0) || !p.is_finite() {
                return Err(DcpError::BadParameter(atom));
            }
        }
        Ok(Expr::Atom { atom, args })
    }

    pub fn add(self, other: Expr) -> Expr {
        Expr::Affine {
            terms: alloc::vec![(1.0, self), (1.0, other)],
            offset: 0.0,
        }
    }

    pub fn sub(self, other: Expr) -> Expr {
        Expr::Affine {
            terms: alloc::vec![(1.0, self), (-1.0, other)],
            offset: 0.0,
        }
    }

    pub fn scale(self, c: f64) -> Expr {
        Expr::Affine {
            terms: alloc::vec![(c, self)],
            offset: 0.0,
        }
    }

    pub fn neg(self) -> Expr {
        self.scale(-1.0)
    }

    pub fn plus(self, offset: f64) -> Expr {
        Expr::Affine {
            terms: alloc::vec![(1.0, self)],
            offset,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Var(_) | Expr::Const(_) => Vec::new(),
            Expr::Affine { terms, .. } => terms.iter().map(|(_, e)| e).collect(),
            Expr::Atom { args, .. } => args.iter().collect(),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            Expr::Const(_) => None,
            _ => self.children().into_iter().filter_map(|c| c.max_var()).max(),
        }
    }

    pub fn check_vars(&self, nvars: usize) -> Result<(), DcpError> {
        match self {
            Expr::Var(i) if *i >= nvars => Err(DcpError::UndeclaredVariable(*i)),
            _ => self.children().into_iter().try_for_each(|c| c.check_vars(nvars)),
        }
    }

    /// Evaluates at `x`; `None` outside the expression's domain.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        match self {
            Expr::Var(i) => x.get(*i).copied(),
            Expr::Const(v) => Some(*v),
            Expr::Affine { terms, offset } => {
                let mut acc = *offset;
                for (c, e) in terms {
                    acc += c * e.eval(x)?;
                }
                Some(acc)
            }
            Expr::Atom { atom, args } => {
                let vals: Option<Vec<f64>> = args.iter().map(|a| a.eval(x)).collect();
                atom.eval(&vals?)
            }
        }
    }

    /// `Some(v)` when the tree contains no variables.
    pub fn constant_value(&self) -> Option<f64> {
        if self.max_var().is_some() {
            None
        } else {
            self.eval(&[])
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }
}
