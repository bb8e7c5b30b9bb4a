//! Expression trees, atoms and curvature verification by composition rules.

mod atoms;
mod expr;

pub use atoms::{
    atom_library, Arity, AtomInfo, AtomKind, Curvature, Lin, Monotonicity, Sign, Template,
};
pub use expr::{DcpError, Expr};

use alloc::string::String;
use alloc::vec::Vec;
use alloc::vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub integer: bool,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Variable {
            name: name.into(),
            integer: false,
            lower,
            upper,
        }
    }

    pub fn integer(name: &str, lower: f64, upper: f64) -> Self {
        Variable {
            name: name.into(),
            integer: true,
            lower,
            upper,
        }
    }

    pub fn free(name: &str) -> Self {
        Variable::continuous(name, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn sign(&self) -> Sign {
        if self.lower >= 0.0 {
            Sign::Positive
        } else if self.upper <= 0.0 {
            Sign::Negative
        } else {
            Sign::Unknown
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `lhs ≤ rhs`
    Le,
    /// `lhs = rhs`
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl Constraint {
    pub fn le(lhs: Expr, rhs: Expr) -> Self {
        Constraint {
            kind: ConstraintKind::Le,
            lhs,
            rhs,
        }
    }

    pub fn eq(lhs: Expr, rhs: Expr) -> Self {
        Constraint {
            kind: ConstraintKind::Eq,
            lhs,
            rhs,
        }
    }

    /// `lhs - rhs`, which must be `≤ 0` or `= 0`.
    pub fn body(&self) -> Expr {
        self.lhs.clone().sub(self.rhs.clone())
    }
}

/// Minimize `objective` over the declared variables subject to `constraints`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcpModel {
    pub vars: Vec<Variable>,
    pub objective: Expr,
    pub constraints: Vec<Constraint>,
}

impl DcpModel {
    pub fn new(vars: Vec<Variable>) -> Self {
        DcpModel {
            vars,
            objective: Expr::Const(0.0),
            constraints: Vec::new(),
        }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn num_integers(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }
}

/// Sign of an expression from variable bounds.
pub fn sign_of(expr: &Expr, vars: &[Variable]) -> Sign {
    match expr {
        Expr::Var(i) => vars.get(*i).map_or(Sign::Unknown, |v| v.sign()),
        Expr::Const(v) => Sign::of(*v),
        Expr::Affine { terms, offset } => {
            // None stands for an identically zero partial sum
            let mut acc: Option<Sign> = if *offset == 0.0 { None } else { Some(Sign::of(*offset)) };
            for (c, e) in terms {
                if *c == 0.0 {
                    continue;
                }
                let s = sign_of(e, vars);
                let s = if *c < 0.0 { s.flip() } else { s };
                acc = Some(acc.map_or(s, |a| a.add(s)));
            }
            acc.unwrap_or(Sign::Positive)
        }
        Expr::Atom { atom, args } => {
            let signs: Vec<Sign> = args.iter().map(|a| sign_of(a, vars)).collect();
            atom.sign(&signs)
        }
    }
}

/// Whether argument curvature `arg` composes into an atom of curvature `f`
/// with the given monotonicity.
fn composes(f: Curvature, arg: Curvature, m: Monotonicity) -> bool {
    if arg.is_affine() {
        return true;
    }
    match f {
        Curvature::Convex => {
            (arg == Curvature::Convex && m == Monotonicity::Nondecreasing)
                || (arg == Curvature::Concave && m == Monotonicity::Nonincreasing)
        }
        Curvature::Concave => {
            (arg == Curvature::Concave && m == Monotonicity::Nondecreasing)
                || (arg == Curvature::Convex && m == Monotonicity::Nonincreasing)
        }
        _ => false,
    }
}

/// Curvature provable by the composition rules. Variable signs come from the
/// declared bounds.
pub fn curvature_of(expr: &Expr, vars: &[Variable]) -> Result<Curvature, DcpError> {
    expr.check_vars(vars.len())?;
    Ok(curvature_unchecked(expr, vars))
}

fn curvature_unchecked(expr: &Expr, vars: &[Variable]) -> Curvature {
    match expr {
        Expr::Var(_) => Curvature::Affine,
        Expr::Const(_) => Curvature::Constant,
        Expr::Affine { terms, .. } => terms.iter().fold(Curvature::Constant, |acc, (c, e)| {
            let k = if *c == 0.0 {
                Curvature::Constant
            } else if *c < 0.0 {
                curvature_unchecked(e, vars).negate()
            } else {
                curvature_unchecked(e, vars)
            };
            acc.join(k)
        }),
        Expr::Atom { atom, args } => {
            let curvs: Vec<Curvature> = args.iter().map(|a| curvature_unchecked(a, vars)).collect();
            if curvs.iter().all(|c| *c == Curvature::Constant) {
                return Curvature::Constant;
            }
            let f = atom.curvature();
            let ok = args
                .iter()
                .zip(&curvs)
                .all(|(a, c)| composes(f, *c, atom.monotonicity(sign_of(a, vars))));
            if ok {
                f
            } else {
                Curvature::Unknown
            }
        }
    }
}

/// Path (child indices from the root) to the deepest node whose curvature is
/// `Unknown` while all of its children are known.
fn unknown_origin(expr: &Expr, vars: &[Variable]) -> Option<Vec<usize>> {
    if curvature_unchecked(expr, vars) != Curvature::Unknown {
        return None;
    }
    for (i, child) in expr.children().into_iter().enumerate() {
        if let Some(mut p) = unknown_origin(child, vars) {
            p.insert(0, i);
            return Some(p);
        }
    }
    Some(Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Objective,
    Constraint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    UndeclaredVariable,
    /// Curvature could not be established by any rule.
    UnknownCurvature,
    /// Objective or `≤` body is concave but not affine.
    NotConvex,
    /// Equality body is not affine.
    NotAffine,
    /// Integer variable without finite bounds; the path holds its index.
    UnboundedInteger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: Location,
    /// For constraints the path is rooted at `lhs - rhs`: child 0 is `lhs`,
    /// child 1 is `rhs`.
    pub path: Vec<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_body(expr: &Expr, vars: &[Variable], location: Location, need_affine: bool) -> Option<Violation> {
    if expr.check_vars(vars.len()).is_err() {
        return Some(Violation {
            location,
            path: Vec::new(),
            kind: ViolationKind::UndeclaredVariable,
        });
    }
    let curv = curvature_unchecked(expr, vars);
    if curv == Curvature::Unknown {
        return Some(Violation {
            location,
            path: unknown_origin(expr, vars).unwrap_or_default(),
            kind: ViolationKind::UnknownCurvature,
        });
    }
    let kind = if need_affine && !curv.is_affine() {
        ViolationKind::NotAffine
    } else if !curv.is_convex() {
        ViolationKind::NotConvex
    } else {
        return None;
    };
    Some(Violation {
        location,
        path: Vec::new(),
        kind,
    })
}

/// Checks the DCP ruleset on every part of the model.
pub fn dcp_verify(model: &DcpModel) -> VerificationReport {
    let mut violations = Vec::new();
    for (i, v) in model.vars.iter().enumerate() {
        if v.integer && !(v.lower.is_finite() && v.upper.is_finite()) {
            violations.push(Violation {
                location: Location::Objective,
                path: vec![i],
                kind: ViolationKind::UnboundedInteger,
            });
        }
    }
    violations.extend(check_body(&model.objective, &model.vars, Location::Objective, false));
    for (i, c) in model.constraints.iter().enumerate() {
        let need_affine = c.kind == ConstraintKind::Eq;
        violations.extend(check_body(&c.body(), &model.vars, Location::Constraint(i), need_affine));
    }
    VerificationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn atom(k: AtomKind, args: Vec<Expr>) -> Expr {
        Expr::atom(k, args).unwrap()
    }

    #[test]
    fn max_of_exp_square_is_convex() {
        let vars = vec![Variable::free("x")];
        let e = atom(
            AtomKind::Max,
            vec![atom(AtomKind::Exp, vec![atom(AtomKind::Square, vec![x(0)])]), x(0).scale(-2.0)],
        );
        assert_eq!(curvature_of(&e, &vars).unwrap(), Curvature::Convex);
    }

    #[test]
    fn difference_of_squares_is_unknown() {
        let vars = vec![Variable::free("x1"), Variable::free("x2")];
        let e = atom(AtomKind::Square, vec![x(0)]).sub(atom(AtomKind::Square, vec![x(1)]));
        assert_eq!(curvature_of(&e, &vars).unwrap(), Curvature::Unknown);
    }

    #[test]
    fn affine_combination() {
        let vars = vec![Variable::free("x1"), Variable::free("x2")];
        let e = x(0).scale(3.0).add(x(1).scale(2.0)).plus(-7.0);
        assert_eq!(curvature_of(&e, &vars).unwrap(), Curvature::Affine);
    }

    #[test]
    fn undeclared_variable() {
        assert_eq!(
            curvature_of(&x(3), &[Variable::free("a")]),
            Err(DcpError::UndeclaredVariable(3))
        );
    }

    #[test]
    fn sign_dependent_composition() {
        // square of a concave nonnegative expression is not provable; of a
        // convex nonnegative one it is
        let vars = vec![Variable::continuous("x", 1.0, 4.0)];
        let conv = atom(AtomKind::Square, vec![atom(AtomKind::Exp, vec![x(0)])]);
        assert_eq!(curvature_of(&conv, &vars).unwrap(), Curvature::Convex);
        let conc = atom(AtomKind::Square, vec![atom(AtomKind::Log, vec![x(0)])]);
        assert_eq!(curvature_of(&conc, &vars).unwrap(), Curvature::Unknown);
        // inv_pos is nonincreasing, so it accepts a concave argument
        let inv = atom(AtomKind::InvPos, vec![atom(AtomKind::Log, vec![x(0)])]);
        assert_eq!(curvature_of(&inv, &vars).unwrap(), Curvature::Convex);
        // a negative argument makes abs nonincreasing
        let neg = vec![Variable::continuous("y", -3.0, -1.0)];
        let e = atom(AtomKind::Abs, vec![atom(AtomKind::Log, vec![x(0).neg()]).neg().neg()]);
        assert_eq!(curvature_of(&e, &neg).unwrap(), Curvature::Unknown);
    }

    #[test]
    fn constant_atoms_fold() {
        let e = atom(AtomKind::Square, vec![Expr::constant(3.0)]);
        assert_eq!(curvature_of(&e, &[]).unwrap(), Curvature::Constant);
        assert_eq!(e.constant_value(), Some(9.0));
    }

    #[test]
    fn verify_models() {
        let mut m = DcpModel::new(vec![Variable::free("x")]);
        m.objective = x(0);
        m.constraints.push(Constraint::le(atom(AtomKind::Exp, vec![x(0)]).plus(-3.0), Expr::constant(0.0)));
        assert!(dcp_verify(&m).is_ok());

        let mut bad = DcpModel::new(vec![Variable::continuous("x", 0.0, 10.0)]);
        bad.constraints.push(Constraint::le(atom(AtomKind::Log, vec![x(0)]), Expr::constant(0.0)));
        let report = dcp_verify(&bad);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].location, Location::Constraint(0));
        assert_eq!(report.violations[0].kind, ViolationKind::NotConvex);

        let mut eq = DcpModel::new(vec![Variable::free("x")]);
        eq.constraints.push(Constraint::eq(atom(AtomKind::Square, vec![x(0)]), Expr::constant(1.0)));
        assert_eq!(dcp_verify(&eq).violations[0].kind, ViolationKind::NotAffine);
    }

    #[test]
    fn violation_path_points_at_offending_node() {
        let vars = vec![Variable::free("a"), Variable::free("b")];
        let mut m = DcpModel::new(vars);
        // exp(square(a) - square(b)) ≤ 1: the subtraction is the origin
        let inner = atom(AtomKind::Square, vec![x(0)]).sub(atom(AtomKind::Square, vec![x(1)]));
        m.constraints.push(Constraint::le(atom(AtomKind::Exp, vec![inner]), Expr::constant(1.0)));
        let v = &dcp_verify(&m).violations[0];
        assert_eq!(v.kind, ViolationKind::UnknownCurvature);
        assert_eq!(v.path, vec![0, 0]);
    }

    #[test]
    fn per_term_squares_verify() {
        let n = 3;
        let mut vars: Vec<Variable> = (0..n).map(|i| Variable::integer(&alloc::format!("x{i}"), 0.0, 1.0)).collect();
        let mut m = DcpModel::new(core::mem::take(&mut vars));
        let terms: Vec<(f64, Expr)> = (0..n)
            .map(|i| (1.0, atom(AtomKind::Square, vec![x(i).plus(-0.5)])))
            .collect();
        m.constraints.push(Constraint::le(
            Expr::Affine { terms, offset: 0.0 },
            Expr::constant((n as f64 - 1.0) / 4.0),
        ));
        assert!(dcp_verify(&m).is_ok());
    }
}
