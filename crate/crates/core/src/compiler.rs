//! Lowering of DCP models to mixed-integer conic form by recursive epigraph
//! expansion.
//!
//! Every expression node is compiled to an affine form over the program's
//! `x` and `z` columns. In `Upper` sense the form bounds the node from above
//! on the emitted feasible set with equality attainable, in `Lower` sense
//! from below. Atom applications instantiate the atom's template with fresh
//! cone factors; affine nodes are inlined.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::cones::{Cone, ConeProduct};
use crate::dcp::{
    dcp_verify, sign_of, AtomKind, ConstraintKind, Curvature, DcpModel, Expr, Lin, Location,
    Monotonicity, VerificationReport,
};
use crate::linalg::Matrix;
use crate::program::ConicProgram;

#[derive(Debug, Clone, PartialEq)]
pub enum CompileError {
    NotDcp(VerificationReport),
    UnboundedInteger(usize),
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::NotDcp(r) => write!(f, "model is not DCP ({} violations)", r.violations.len()),
            CompileError::UnboundedInteger(i) => write!(f, "integer variable {i} lacks finite bounds"),
        }
    }
}

impl core::error::Error for CompileError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPart {
    /// Distance above the lower bound (or below the upper bound).
    Primary,
    /// Distance below the upper bound, or the negative part of a free variable.
    Secondary,
}

/// What a `z` column stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnOwner {
    Split { var: usize, part: SplitPart },
    Slack { constraint: usize },
    /// `x - L` of an integer variable used in the objective.
    Mirror { var: usize },
    Atom { block: usize },
}

/// How a model variable is read back from a program solution.
#[derive(Debug, Clone, PartialEq)]
pub enum VarColumns {
    Integer { column: usize },
    /// `offset + Σ coef·z[col]`
    Continuous { offset: f64, terms: Vec<(usize, f64)> },
}

/// Auxiliary block of one atom application.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomBlock {
    pub location: Location,
    /// Child indices from the objective or the constraint body `lhs - rhs`.
    pub path: Vec<usize>,
    pub atom: AtomKind,
    pub columns: Range<usize>,
    pub factors: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompilationMap {
    pub vars: Vec<VarColumns>,
    pub x_owner: Vec<usize>,
    pub z_owner: Vec<ColumnOwner>,
    pub atoms: Vec<AtomBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionMismatch {
    pub expected: (usize, usize),
    pub got: (usize, usize),
}

impl fmt::Display for DimensionMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "expected {} integer and {} cone coordinates, got {} and {}",
            self.expected.0, self.expected.1, self.got.0, self.got.1
        )
    }
}

impl core::error::Error for DimensionMismatch {}

impl CompilationMap {
    /// Projects a program solution onto the model variables.
    pub fn recover_solution(&self, x: &[f64], z: &[f64]) -> Result<Vec<f64>, DimensionMismatch> {
        if x.len() != self.x_owner.len() || z.len() != self.z_owner.len() {
            return Err(DimensionMismatch {
                expected: (self.x_owner.len(), self.z_owner.len()),
                got: (x.len(), z.len()),
            });
        }
        Ok(self
            .vars
            .iter()
            .map(|v| match v {
                VarColumns::Integer { column } => x[*column],
                VarColumns::Continuous { offset, terms } => {
                    offset + terms.iter().map(|&(j, c)| c * z[j]).sum::<f64>()
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sense {
    Upper,
    Lower,
}

impl Sense {
    fn flip(self) -> Sense {
        match self {
            Sense::Upper => Sense::Lower,
            Sense::Lower => Sense::Upper,
        }
    }
}

/// Sparse affine form over program columns.
#[derive(Debug, Clone, Default, PartialEq)]
struct Aff {
    x: BTreeMap<usize, f64>,
    z: BTreeMap<usize, f64>,
    constant: f64,
}

impl Aff {
    fn constant(v: f64) -> Aff {
        Aff {
            constant: v,
            ..Aff::default()
        }
    }

    fn z(j: usize, c: f64) -> Aff {
        let mut a = Aff::default();
        a.z.insert(j, c);
        a
    }

    fn add_scaled(&mut self, c: f64, other: &Aff) {
        for (&j, &v) in &other.x {
            *self.x.entry(j).or_insert(0.0) += c * v;
        }
        for (&j, &v) in &other.z {
            *self.z.entry(j).or_insert(0.0) += c * v;
        }
        self.constant += c * other.constant;
    }

    fn is_constant(&self) -> bool {
        self.x.values().chain(self.z.values()).all(|v| *v == 0.0)
    }
}

struct Builder<'a> {
    model: &'a DcpModel,
    var_forms: Vec<Aff>,
    map: CompilationMap,
    cones: Vec<Cone>,
    /// Rows `form = 0`.
    rows: Vec<Aff>,
    mirrors: BTreeMap<usize, usize>,
}

impl<'a> Builder<'a> {
    fn push_factor(&mut self, cone: Cone, owner: ColumnOwner) -> usize {
        let start = self.map.z_owner.len();
        for _ in 0..cone.dim() {
            self.map.z_owner.push(owner);
        }
        self.cones.push(cone);
        start
    }

    fn row(&mut self, form: Aff) {
        if form.is_constant() && form.constant == 0.0 {
            return;
        }
        self.rows.push(form);
    }

    fn declare_vars(&mut self) -> Result<(), CompileError> {
        for (i, v) in self.model.vars.iter().enumerate() {
            if v.integer {
                if !(v.lower.is_finite() && v.upper.is_finite()) {
                    return Err(CompileError::UnboundedInteger(i));
                }
                let column = self.map.x_owner.len();
                self.map.x_owner.push(i);
                self.map.vars.push(VarColumns::Integer { column });
                let mut f = Aff::default();
                f.x.insert(column, 1.0);
                self.var_forms.push(f);
                continue;
            }
            let split = |b: &mut Self, part| b.push_factor(Cone::NonNeg(1), ColumnOwner::Split { var: i, part });
            let (offset, terms) = match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) => {
                    let p = split(self, SplitPart::Primary);
                    let q = split(self, SplitPart::Secondary);
                    let mut r = Aff::z(p, 1.0);
                    r.z.insert(q, 1.0);
                    r.constant = -(v.upper - v.lower);
                    self.row(r);
                    (v.lower, vec![(p, 1.0)])
                }
                (true, false) => (v.lower, vec![(split(self, SplitPart::Primary), 1.0)]),
                (false, true) => (v.upper, vec![(split(self, SplitPart::Primary), -1.0)]),
                (false, false) => {
                    let p = split(self, SplitPart::Primary);
                    let q = split(self, SplitPart::Secondary);
                    (0.0, vec![(p, 1.0), (q, -1.0)])
                }
            };
            let mut f = Aff::constant(offset);
            for &(j, c) in &terms {
                f.z.insert(j, c);
            }
            self.var_forms.push(f);
            self.map.vars.push(VarColumns::Continuous { offset, terms });
        }
        Ok(())
    }

    fn compile(&mut self, e: &Expr, sense: Sense, location: Location, path: &mut Vec<usize>) -> Aff {
        if let Some(v) = e.constant_value() {
            return Aff::constant(v);
        }
        match e {
            Expr::Var(i) => self.var_forms[*i].clone(),
            Expr::Const(v) => Aff::constant(*v),
            Expr::Affine { terms, offset } => {
                let mut out = Aff::constant(*offset);
                for (k, (c, child)) in terms.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    let s = if *c < 0.0 { sense.flip() } else { sense };
                    path.push(k);
                    let f = self.compile(child, s, location, path);
                    path.pop();
                    out.add_scaled(*c, &f);
                }
                out
            }
            Expr::Atom { atom, args } => self.compile_atom(*atom, args, sense, location, path),
        }
    }

    fn compile_atom(
        &mut self,
        atom: AtomKind,
        args: &[Expr],
        sense: Sense,
        location: Location,
        path: &mut Vec<usize>,
    ) -> Aff {
        // verification guarantees the sense matches the curvature
        debug_assert!(match atom.curvature() {
            Curvature::Convex => sense == Sense::Upper,
            _ => sense == Sense::Lower,
        });
        let mut forms = Vec::with_capacity(args.len());
        for (k, arg) in args.iter().enumerate() {
            let s = match atom.monotonicity(sign_of(arg, &self.model.vars)) {
                Monotonicity::Nonincreasing => sense.flip(),
                _ => sense,
            };
            path.push(k);
            let f = self.compile(arg, s, location, path);
            path.pop();
            forms.push(f);
        }
        let template = atom.template(args.len());
        let block = self.map.atoms.len();
        let factor_start = self.cones.len();
        let column_start = self.map.z_owner.len();
        for cone in &template.cones {
            self.push_factor(*cone, ColumnOwner::Atom { block });
        }
        self.map.atoms.push(AtomBlock {
            location,
            path: path.clone(),
            atom,
            columns: column_start..self.map.z_owner.len(),
            factors: factor_start..self.cones.len(),
        });
        let lin = |lin: &Lin| {
            let mut out = Aff::constant(lin.constant);
            for &(u, c) in &lin.aux {
                *out.z.entry(column_start + u).or_insert(0.0) += c;
            }
            for &(a, c) in &lin.args {
                out.add_scaled(c, &forms[a]);
            }
            out
        };
        let rows: Vec<Aff> = template.rows.iter().map(lin).collect();
        let output = lin(&template.output);
        for r in rows {
            self.row(r);
        }
        output
    }

    fn slack_row(&mut self, mut form: Aff, constraint: usize) {
        let s = self.push_factor(Cone::NonNeg(1), ColumnOwner::Slack { constraint });
        form.z.insert(s, 1.0);
        self.rows.push(form);
    }

    /// Rewrites `x` terms of the objective through mirror columns.
    fn objective(&mut self, form: Aff) -> (Vec<(usize, f64)>, f64) {
        let mut terms: Vec<(usize, f64)> = form.z.into_iter().collect();
        let mut offset = form.constant;
        for (col, c) in form.x {
            if c == 0.0 {
                continue;
            }
            let var = self.map.x_owner[col];
            let lower = self.model.vars[var].lower;
            let m = match self.mirrors.get(&col) {
                Some(&m) => m,
                None => {
                    let m = self.push_factor(Cone::NonNeg(1), ColumnOwner::Mirror { var });
                    let mut r = Aff::z(m, 1.0);
                    r.x.insert(col, -1.0);
                    r.constant = lower;
                    self.rows.push(r);
                    self.mirrors.insert(col, m);
                    m
                }
            };
            terms.push((m, c));
            offset += c * lower;
        }
        (terms, offset)
    }
}

/// Compiles a verified model. Projection of the emitted feasible set onto
/// the model variables (see [`CompilationMap::recover_solution`]) is the
/// model's feasible set, and the optimal values agree.
pub fn emit_conic(model: &DcpModel) -> Result<(ConicProgram, CompilationMap), CompileError> {
    if let Some(i) = model
        .vars
        .iter()
        .position(|v| v.integer && !(v.lower.is_finite() && v.upper.is_finite()))
    {
        return Err(CompileError::UnboundedInteger(i));
    }
    let report = dcp_verify(model);
    if !report.is_ok() {
        return Err(CompileError::NotDcp(report));
    }
    let mut b = Builder {
        model,
        var_forms: Vec::new(),
        map: CompilationMap {
            vars: Vec::new(),
            x_owner: Vec::new(),
            z_owner: Vec::new(),
            atoms: Vec::new(),
        },
        cones: Vec::new(),
        rows: Vec::new(),
        mirrors: BTreeMap::new(),
    };
    b.declare_vars()?;
    let mut path = Vec::new();
    let obj = b.compile(&model.objective, Sense::Upper, Location::Objective, &mut path);
    for (i, c) in model.constraints.iter().enumerate() {
        let body = b.compile(&c.body(), Sense::Upper, Location::Constraint(i), &mut path);
        match c.kind {
            ConstraintKind::Le => b.slack_row(body, i),
            ConstraintKind::Eq => {
                if body.is_constant() && body.constant != 0.0 {
                    // keep the inconsistent row so the program stays infeasible
                    b.rows.push(body);
                } else {
                    b.row(body);
                }
            }
        }
    }
    let (obj_terms, obj_offset) = b.objective(obj);
    if b.cones.is_empty() {
        // a program needs at least one cone coordinate
        b.push_factor(Cone::NonNeg(1), ColumnOwner::Slack { constraint: usize::MAX });
    }

    let nx = b.map.x_owner.len();
    let nz = b.map.z_owner.len();
    let m = b.rows.len();
    let mut ax = Matrix::zeros(m, nx);
    let mut az = Matrix::zeros(m, nz);
    let mut rhs = vec![0.0; m];
    for (i, r) in b.rows.iter().enumerate() {
        for (&j, &v) in &r.x {
            ax[(i, j)] += v;
        }
        for (&j, &v) in &r.z {
            az[(i, j)] += v;
        }
        rhs[i] = -r.constant;
    }
    let mut c = vec![0.0; nz];
    for (j, v) in obj_terms {
        c[j] += v;
    }
    let lower = b.map.x_owner.iter().map(|&i| model.vars[i].lower).collect();
    let upper = b.map.x_owner.iter().map(|&i| model.vars[i].upper).collect();
    let program = ConicProgram {
        c,
        obj_offset,
        ax,
        az,
        b: rhs,
        lower,
        upper,
        cones: ConeProduct::new(b.cones),
    };
    Ok((program, b.map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcp::{Constraint, Variable};
    use alloc::format;

    fn atom(k: AtomKind, args: Vec<Expr>) -> Expr {
        Expr::atom(k, args).unwrap()
    }

    fn count(p: &ConicProgram, f: impl Fn(&Cone) -> bool) -> usize {
        p.cones.factors().iter().filter(|c| f(c)).count()
    }

    #[test]
    fn nested_max_exp_square() {
        // t ≥ max{exp(x²), -2x}
        let mut m = DcpModel::new(vec![Variable::free("x"), Variable::free("t")]);
        m.objective = Expr::var(1);
        let inner = atom(AtomKind::Exp, vec![atom(AtomKind::Square, vec![Expr::var(0)])]);
        let mx = atom(AtomKind::Max, vec![inner, Expr::var(0).scale(-2.0)]);
        m.constraints.push(Constraint::le(mx, Expr::var(1)));
        let (p, map) = emit_conic(&m).unwrap();
        assert_eq!(count(&p, |c| *c == Cone::Rsoc(3)), 1);
        assert_eq!(count(&p, |c| *c == Cone::Exp), 1);
        let kinds: Vec<AtomKind> = map.atoms.iter().map(|a| a.atom).collect();
        assert_eq!(kinds, vec![AtomKind::Square, AtomKind::Exp, AtomKind::Max]);
        assert_eq!(map.atoms[0].path, vec![0, 0, 0]);
    }

    #[test]
    fn per_term_squares_give_rotated_cones() {
        let n = 3;
        let vars = (0..n).map(|i| Variable::integer(&format!("x{i}"), 0.0, 1.0)).collect();
        let mut m = DcpModel::new(vars);
        let terms = (0..n)
            .map(|i| (1.0, atom(AtomKind::Square, vec![Expr::var(i).plus(-0.5)])))
            .collect();
        m.constraints.push(Constraint::le(
            Expr::Affine { terms, offset: 0.0 },
            Expr::constant((n as f64 - 1.0) / 4.0),
        ));
        let (p, map) = emit_conic(&m).unwrap();
        assert_eq!(p.nx(), 3);
        assert_eq!(count(&p, |c| *c == Cone::Rsoc(3)), 3);
        assert_eq!(count(&p, |c| matches!(c, Cone::NonNeg(_))), 1);
        assert_eq!(p.cones.len(), 4);
        let sol = map.recover_solution(&[1.0, 0.0, 1.0], &vec![0.0; p.nz()]).unwrap();
        assert_eq!(sol, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn sumsquares_is_one_cone() {
        let vars = (0..4).map(|i| Variable::integer(&format!("x{i}"), 0.0, 1.0)).collect();
        let mut m = DcpModel::new(vars);
        let args = (0..4).map(|i| Expr::var(i).plus(-0.5)).collect();
        m.constraints.push(Constraint::le(atom(AtomKind::SumSquares, args), Expr::constant(0.75)));
        let (p, _) = emit_conic(&m).unwrap();
        assert_eq!(count(&p, |c| matches!(c, Cone::Soc(_))), 1);
        assert_eq!(count(&p, |c| matches!(c, Cone::Rsoc(_))), 0);
    }

    #[test]
    fn rejects_non_dcp_and_unbounded_integers() {
        let mut m = DcpModel::new(vec![Variable::free("x")]);
        m.constraints.push(Constraint::le(atom(AtomKind::Log, vec![Expr::var(0)]), Expr::constant(0.0)));
        assert!(matches!(emit_conic(&m), Err(CompileError::NotDcp(_))));
        let m = DcpModel::new(vec![Variable::integer("k", 0.0, f64::INFINITY)]);
        assert_eq!(emit_conic(&m), Err(CompileError::UnboundedInteger(0)));
    }

    #[test]
    fn identity_model_recovers_verbatim() {
        let vars = vec![
            Variable::continuous("a", -1.0, 2.0),
            Variable::continuous("b", 1.0, f64::INFINITY),
            Variable::continuous("c", f64::NEG_INFINITY, 3.0),
            Variable::free("d"),
            Variable::integer("k", -2.0, 2.0),
        ];
        let m = DcpModel::new(vars);
        let (p, map) = emit_conic(&m).unwrap();
        // a: p + q = 3, a = -1 + p; b = 1 + p; c = 3 - p; d = p - q
        let mut z = vec![0.0; p.nz()];
        z[0] = 2.5;
        z[1] = 0.5;
        z[2] = 4.0;
        z[3] = 1.0;
        z[4] = 0.25;
        z[5] = 1.0;
        let sol = map.recover_solution(&[-1.0], &z).unwrap();
        assert_eq!(sol, vec![1.5, 5.0, 2.0, -0.75, -1.0]);
        assert!(p.is_feasible(&[-1.0], &z, 1e-12));
        assert!(map.recover_solution(&[], &z).is_err());
    }

    #[test]
    fn integer_objective_uses_mirror() {
        let mut m = DcpModel::new(vec![Variable::integer("k", 2.0, 5.0)]);
        m.objective = Expr::var(0).scale(3.0).plus(1.0);
        let (p, map) = emit_conic(&m).unwrap();
        assert_eq!(map.z_owner, vec![ColumnOwner::Mirror { var: 0 }]);
        assert_eq!(p.c, vec![3.0]);
        assert_eq!(p.obj_offset, 7.0);
        // m = k - 2 at k = 4
        assert!(p.is_feasible(&[4.0], &[2.0], 1e-12));
        assert_eq!(p.objective(&[2.0]), 13.0);
    }

    #[test]
    fn recompiling_is_stable() {
        let mut m = DcpModel::new(vec![Variable::continuous("x", 0.5, 4.0), Variable::integer("k", 0.0, 3.0)]);
        m.objective = atom(AtomKind::InvPos, vec![Expr::var(0)]).add(Expr::var(1));
        m.constraints.push(Constraint::le(
            atom(AtomKind::LogSumExp, vec![Expr::var(0), Expr::var(1)]),
            Expr::constant(5.0),
        ));
        let (p1, m1) = emit_conic(&m).unwrap();
        let (p2, m2) = emit_conic(&m).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(m1, m2);
    }
}
