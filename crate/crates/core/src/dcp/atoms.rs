use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use core::fmt;

use crate::cones::Cone;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Constant,
    Affine,
    Convex,
    Concave,
    Unknown,
}

impl Curvature {
    /// Least upper bound in the curvature lattice.
    pub fn join(self, other: Curvature) -> Curvature {
        use Curvature::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Constant, x) | (x, Constant) => x,
            (Affine, x) | (x, Affine) => x,
            (Convex, Convex) => Convex,
            (Concave, Concave) => Concave,
            _ => Unknown,
        }
    }

    pub fn negate(self) -> Curvature {
        match self {
            Curvature::Convex => Curvature::Concave,
            Curvature::Concave => Curvature::Convex,
            c => c,
        }
    }

    pub fn is_convex(self) -> bool {
        matches!(self, Curvature::Constant | Curvature::Affine | Curvature::Convex)
    }

    pub fn is_concave(self) -> bool {
        matches!(self, Curvature::Constant | Curvature::Affine | Curvature::Concave)
    }

    pub fn is_affine(self) -> bool {
        matches!(self, Curvature::Constant | Curvature::Affine)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    None,
}

/// Sign lattice; `Positive` and `Negative` are non-strict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Unknown,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v >= 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
            Sign::Unknown => Sign::Unknown,
        }
    }

    /// Sign of a sum.
    pub fn add(self, other: Sign) -> Sign {
        if self == other {
            self
        } else {
            Sign::Unknown
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    AtLeastOne,
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Fixed(k) => write!(f, "{k}"),
            Arity::AtLeastOne => f.write_str("one or more"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomKind {
    Abs,
    Square,
    SumSquares,
    Norm2,
    GeoMean,
    Exp,
    Log,
    /// `-x log x`
    Entropy,
    LogSumExp,
    /// `|x|^p` for `p ≥ 1`
    PowRational(f64),
    /// `1/x` on `x > 0`
    InvPos,
    Max,
}

/// Linear form over template auxiliaries `u` and atom arguments `a`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lin {
    pub aux: Vec<(usize, f64)>,
    pub args: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Lin {
    fn aux(terms: &[(usize, f64)]) -> Self {
        Lin {
            aux: terms.to_vec(),
            ..Lin::default()
        }
    }

    fn with_args(mut self, terms: &[(usize, f64)]) -> Self {
        self.args.extend_from_slice(terms);
        self
    }

    fn with_const(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn eval(&self, u: &[f64], a: &[f64]) -> f64 {
        self.aux.iter().map(|&(i, c)| c * u[i]).sum::<f64>()
            + self.args.iter().map(|&(i, c)| c * a[i]).sum::<f64>()
            + self.constant
    }
}

/// Conic graph implementation of an atom.
///
/// Auxiliaries `u` range over the product of `cones`; every row is a linear
/// equation `row(u, a) = 0`. For convex atoms `output(u, a) ≥ f(a)` on every
/// feasible `u` with equality attainable; concave atoms satisfy the mirror
/// statement with `≤`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub cones: Vec<Cone>,
    pub rows: Vec<Lin>,
    pub output: Lin,
}

impl Template {
    pub fn aux_dim(&self) -> usize {
        self.cones.iter().map(|c| c.dim()).sum()
    }
}

/// Library entry describing one atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomInfo {
    pub kind: AtomKind,
    pub name: &'static str,
    pub arity: Arity,
    pub curvature: Curvature,
}

/// The supported atoms. `PowRational` is listed with `p = 2`; any `p ≥ 1`
/// is accepted.
pub fn atom_library() -> Vec<AtomInfo> {
    [
        AtomKind::Abs,
        AtomKind::Square,
        AtomKind::SumSquares,
        AtomKind::Norm2,
        AtomKind::GeoMean,
        AtomKind::Exp,
        AtomKind::Log,
        AtomKind::Entropy,
        AtomKind::LogSumExp,
        AtomKind::PowRational(2.0),
        AtomKind::InvPos,
        AtomKind::Max,
    ]
    .into_iter()
    .map(|kind| AtomInfo {
        kind,
        name: kind.name(),
        arity: kind.arity(),
        curvature: kind.curvature(),
    })
    .collect()
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl AtomKind {
    pub fn name(&self) -> &'static str {
        match self {
            AtomKind::Abs => "abs",
            AtomKind::Square => "square",
            AtomKind::SumSquares => "sumsquares",
            AtomKind::Norm2 => "norm2",
            AtomKind::GeoMean => "geo_mean",
            AtomKind::Exp => "exp",
            AtomKind::Log => "log",
            AtomKind::Entropy => "entropy",
            AtomKind::LogSumExp => "logsumexp",
            AtomKind::PowRational(_) => "pow_rational",
            AtomKind::InvPos => "inv_pos",
            AtomKind::Max => "max",
        }
    }

    /// Looks up a parameter-free atom by name.
    pub fn from_name(name: &str) -> Option<AtomKind> {
        Some(match name {
            "abs" => AtomKind::Abs,
            "square" => AtomKind::Square,
            "sumsquares" => AtomKind::SumSquares,
            "norm2" => AtomKind::Norm2,
            "geo_mean" => AtomKind::GeoMean,
            "exp" => AtomKind::Exp,
            "log" => AtomKind::Log,
            "entropy" => AtomKind::Entropy,
            "logsumexp" => AtomKind::LogSumExp,
            "inv_pos" => AtomKind::InvPos,
            "max" => AtomKind::Max,
            _ => return None,
        })
    }

    pub fn arity(&self) -> Arity {
        match self {
            AtomKind::SumSquares | AtomKind::Norm2 | AtomKind::LogSumExp | AtomKind::Max => {
                Arity::AtLeastOne
            }
            AtomKind::GeoMean => Arity::Fixed(2),
            _ => Arity::Fixed(1),
        }
    }

    pub fn curvature(&self) -> Curvature {
        match self {
            AtomKind::GeoMean | AtomKind::Log | AtomKind::Entropy => Curvature::Concave,
            _ => Curvature::Convex,
        }
    }

    /// Monotonicity in one argument given that argument's sign.
    pub fn monotonicity(&self, arg_sign: Sign) -> Monotonicity {
        let even = match arg_sign {
            Sign::Positive => Monotonicity::Nondecreasing,
            Sign::Negative => Monotonicity::Nonincreasing,
            Sign::Unknown => Monotonicity::None,
        };
        match self {
            AtomKind::Abs
            | AtomKind::Square
            | AtomKind::SumSquares
            | AtomKind::Norm2
            | AtomKind::PowRational(_) => even,
            AtomKind::GeoMean
            | AtomKind::Exp
            | AtomKind::Log
            | AtomKind::LogSumExp
            | AtomKind::Max => Monotonicity::Nondecreasing,
            AtomKind::InvPos => Monotonicity::Nonincreasing,
            AtomKind::Entropy => Monotonicity::None,
        }
    }

    pub fn sign(&self, arg_signs: &[Sign]) -> Sign {
        match self {
            AtomKind::Abs
            | AtomKind::Square
            | AtomKind::SumSquares
            | AtomKind::Norm2
            | AtomKind::GeoMean
            | AtomKind::Exp
            | AtomKind::PowRational(_)
            | AtomKind::InvPos => Sign::Positive,
            AtomKind::Max => {
                if arg_signs.contains(&Sign::Positive) {
                    Sign::Positive
                } else if arg_signs.iter().all(|s| *s == Sign::Negative) {
                    Sign::Negative
                } else {
                    Sign::Unknown
                }
            }
            AtomKind::Log | AtomKind::Entropy | AtomKind::LogSumExp => Sign::Unknown,
        }
    }

    /// Function value; `None` outside the domain.
    pub fn eval(&self, a: &[f64]) -> Option<f64> {
        let v = match self {
            AtomKind::Abs => a[0].abs(),
            AtomKind::Square => a[0] * a[0],
            AtomKind::SumSquares => a.iter().map(|v| v * v).sum(),
            AtomKind::Norm2 => libm::sqrt(a.iter().map(|v| v * v).sum()),
            AtomKind::GeoMean => {
                if a[0] < 0.0 || a[1] < 0.0 {
                    return None;
                }
                libm::sqrt(a[0] * a[1])
            }
            AtomKind::Exp => libm::exp(a[0]),
            AtomKind::Log => {
                if a[0] <= 0.0 {
                    return None;
                }
                libm::log(a[0])
            }
            AtomKind::Entropy => {
                if a[0] < 0.0 {
                    return None;
                }
                if a[0] == 0.0 {
                    0.0
                } else {
                    -a[0] * libm::log(a[0])
                }
            }
            AtomKind::LogSumExp => {
                let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                m + libm::log(a.iter().map(|v| libm::exp(v - m)).sum())
            }
            AtomKind::PowRational(p) => libm::pow(a[0].abs(), *p),
            AtomKind::InvPos => {
                if a[0] <= 0.0 {
                    return None;
                }
                1.0 / a[0]
            }
            AtomKind::Max => a.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        };
        Some(v)
    }

    /// Conic graph implementation for `k` arguments.
    pub fn template(&self, k: usize) -> Template {
        if *self == AtomKind::PowRational(1.0) {
            return AtomKind::Abs.template(k);
        }
        match *self {
            AtomKind::Abs => Template {
                // s₁ = t - a, s₂ = t + a
                cones: vec![Cone::NonNeg(1), Cone::NonNeg(1)],
                rows: vec![Lin::aux(&[(1, 0.5), (0, -0.5)]).with_args(&[(0, -1.0)])],
                output: Lin::aux(&[(0, 0.5), (1, 0.5)]),
            },
            AtomKind::Square => Template {
                // (t, 1/2, a) ∈ RSOC₃
                cones: vec![Cone::Rsoc(3)],
                rows: vec![
                    Lin::aux(&[(1, 1.0)]).with_const(-0.5),
                    Lin::aux(&[(2, 1.0)]).with_args(&[(0, -1.0)]),
                ],
                output: Lin::aux(&[(0, 1.0)]),
            },
            AtomKind::SumSquares => {
                // (u₁, u₂, a) ∈ SOC with u₁ - u₂ = 1, so u₁ + u₂ ≥ ‖a‖²
                let mut rows = vec![Lin::aux(&[(0, 1.0), (1, -1.0)]).with_const(-1.0)];
                for i in 0..k {
                    rows.push(Lin::aux(&[(2 + i, 1.0)]).with_args(&[(i, -1.0)]));
                }
                Template {
                    cones: vec![Cone::Soc(k + 2)],
                    rows,
                    output: Lin::aux(&[(0, 1.0), (1, 1.0)]),
                }
            }
            AtomKind::Norm2 => Template {
                cones: vec![Cone::Soc(k + 1)],
                rows: (0..k)
                    .map(|i| Lin::aux(&[(1 + i, 1.0)]).with_args(&[(i, -1.0)]))
                    .collect(),
                output: Lin::aux(&[(0, 1.0)]),
            },
            AtomKind::GeoMean => Template {
                // (a₁/√2, a₂/√2, t) ∈ RSOC₃
                cones: vec![Cone::Rsoc(3)],
                rows: vec![
                    Lin::aux(&[(0, 1.0)]).with_args(&[(0, -FRAC_1_SQRT_2)]),
                    Lin::aux(&[(1, 1.0)]).with_args(&[(1, -FRAC_1_SQRT_2)]),
                ],
                output: Lin::aux(&[(2, 1.0)]),
            },
            AtomKind::Exp => Template {
                // (a, 1, t) ∈ EXP
                cones: vec![Cone::Exp],
                rows: vec![
                    Lin::aux(&[(0, 1.0)]).with_args(&[(0, -1.0)]),
                    Lin::aux(&[(1, 1.0)]).with_const(-1.0),
                ],
                output: Lin::aux(&[(2, 1.0)]),
            },
            AtomKind::Log => Template {
                // (t, 1, a) ∈ EXP
                cones: vec![Cone::Exp],
                rows: vec![
                    Lin::aux(&[(1, 1.0)]).with_const(-1.0),
                    Lin::aux(&[(2, 1.0)]).with_args(&[(0, -1.0)]),
                ],
                output: Lin::aux(&[(0, 1.0)]),
            },
            AtomKind::Entropy => Template {
                // (t, a, 1) ∈ EXP
                cones: vec![Cone::Exp],
                rows: vec![
                    Lin::aux(&[(1, 1.0)]).with_args(&[(0, -1.0)]),
                    Lin::aux(&[(2, 1.0)]).with_const(-1.0),
                ],
                output: Lin::aux(&[(0, 1.0)]),
            },
            AtomKind::LogSumExp => {
                // (aᵢ - t, 1, wᵢ) ∈ EXP, Σwᵢ + s = 1, with t = a₁ - u₁ of the first factor
                let mut cones = vec![Cone::Exp; k];
                cones.push(Cone::NonNeg(1));
                let mut rows = Vec::new();
                for i in 1..k {
                    rows.push(
                        Lin::aux(&[(3 * i, 1.0), (0, -1.0)]).with_args(&[(i, -1.0), (0, 1.0)]),
                    );
                }
                for i in 0..k {
                    rows.push(Lin::aux(&[(3 * i + 1, 1.0)]).with_const(-1.0));
                }
                let mut sum: Vec<(usize, f64)> = (0..k).map(|i| (3 * i + 2, 1.0)).collect();
                sum.push((3 * k, 1.0));
                rows.push(Lin::aux(&sum).with_const(-1.0));
                Template {
                    cones,
                    rows,
                    output: Lin::aux(&[(0, -1.0)]).with_args(&[(0, 1.0)]),
                }
            }
            AtomKind::PowRational(p) => Template {
                // (t, 1, a) ∈ POW(1/p): |a| ≤ t^{1/p}
                cones: vec![Cone::Pow(1.0 / p)],
                rows: vec![
                    Lin::aux(&[(1, 1.0)]).with_const(-1.0),
                    Lin::aux(&[(2, 1.0)]).with_args(&[(0, -1.0)]),
                ],
                output: Lin::aux(&[(0, 1.0)]),
            },
            AtomKind::InvPos => Template {
                // (a/√2, t/√2, 1) ∈ RSOC₃
                cones: vec![Cone::Rsoc(3)],
                rows: vec![
                    Lin::aux(&[(0, 1.0)]).with_args(&[(0, -FRAC_1_SQRT_2)]),
                    Lin::aux(&[(2, 1.0)]).with_const(-1.0),
                ],
                output: Lin::aux(&[(1, SQRT_2)]),
            },
            AtomKind::Max => {
                // t = aᵢ + sᵢ for every i
                let rows = (1..k)
                    .map(|i| Lin::aux(&[(0, 1.0), (i, -1.0)]).with_args(&[(0, 1.0), (i, -1.0)]))
                    .collect();
                Template {
                    cones: vec![Cone::NonNeg(1); k],
                    rows,
                    output: Lin::aux(&[(0, 1.0)]).with_args(&[(0, 1.0)]),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::member;

    #[test]
    fn lattice_join() {
        use Curvature::*;
        assert_eq!(Affine.join(Convex), Convex);
        assert_eq!(Convex.join(Concave), Unknown);
        assert_eq!(Constant.join(Concave), Concave);
        assert_eq!(Unknown.join(Constant), Unknown);
    }

    #[test]
    fn library_is_complete() {
        let names: Vec<&str> = atom_library().iter().map(|a| a.name).collect();
        for n in [
            "abs", "square", "sumsquares", "norm2", "geo_mean", "exp", "log", "entropy",
            "logsumexp", "pow_rational", "inv_pos", "max",
        ] {
            assert!(names.contains(&n), "{n}");
        }
    }

    #[test]
    fn abs_template_is_two_nonnegative_rows() {
        let t = AtomKind::Abs.template(1);
        assert_eq!(t.cones, vec![Cone::NonNeg(1), Cone::NonNeg(1)]);
        // with t and a given, s₁ = t - a and s₂ = t + a
        let (tv, a) = (3.0, -1.0);
        let u = [tv - a, tv + a];
        assert!(t.rows[0].eval(&u, &[a]).abs() < 1e-15);
        assert_eq!(t.output.eval(&u, &[a]), tv);
    }

    #[test]
    fn inv_pos_rotated_cone_encodes_reciprocal() {
        // 2·(x/√2)(t/√2) ≥ 1 ⟺ xt ≥ 1
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let x = 0.01 + 5.0 * next();
            let t = 0.01 + 5.0 * next();
            let point = [x * FRAC_1_SQRT_2, t * FRAC_1_SQRT_2, 1.0];
            let inside = member(&Cone::Rsoc(3), &point, 0.0).unwrap();
            assert_eq!(inside, x * t >= 1.0, "x = {x}, t = {t}");
        }
    }

    #[test]
    fn monotonicity_depends_on_sign() {
        assert_eq!(AtomKind::Square.monotonicity(Sign::Positive), Monotonicity::Nondecreasing);
        assert_eq!(AtomKind::Square.monotonicity(Sign::Negative), Monotonicity::Nonincreasing);
        assert_eq!(AtomKind::Square.monotonicity(Sign::Unknown), Monotonicity::None);
        assert_eq!(AtomKind::InvPos.monotonicity(Sign::Unknown), Monotonicity::Nonincreasing);
    }
}
