//! Instance generators.

use micone_core::cones::{Cone, ConeProduct};
use micone_core::conic::ConicProblem;
use micone_core::dcp::{AtomKind, Constraint, DcpModel, Expr, Variable};
use micone_core::linalg::Matrix;
use micone_core::program::ConicProgram;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn atom(kind: AtomKind, args: Vec<Expr>) -> Expr {
    Expr::atom(kind, args).expect("generator arity")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeBallVariant {
    /// `Σ(xᵢ - ½)² ≤ (n-1)/4` as a single `sumsquares`, one second-order cone.
    Naive,
    /// `Σ tᵢ ≤ (n-1)/4` with `tᵢ ≥ (xᵢ - ½)²` per coordinate.
    Extended,
}

/// Binary `x ∈ {0,1}ⁿ` inside the ball of radius `√(n-1)/2` around the cube
/// centre. The ball meets no vertex, so the problem is infeasible for any
/// objective.
pub fn cube_ball(n: usize, variant: CubeBallVariant) -> DcpModel {
    assert!(n >= 2);
    let vars = (0..n).map(|i| Variable::integer(&format!("x{}", i + 1), 0.0, 1.0)).collect();
    let mut m = DcpModel::new(vars);
    m.objective = Expr::Affine {
        terms: (0..n).map(|i| (1.0, Expr::var(i))).collect(),
        offset: 0.0,
    };
    let centred: Vec<Expr> = (0..n).map(|i| Expr::var(i).plus(-0.5)).collect();
    let nf = n as f64;
    match variant {
        CubeBallVariant::Naive => m.constraints.push(Constraint::le(
            atom(AtomKind::SumSquares, centred),
            Expr::constant((nf - 1.0) / 4.0),
        )),
        CubeBallVariant::Extended => {
            let terms = centred
                .into_iter()
                .map(|e| (1.0, atom(AtomKind::Square, vec![e])))
                .collect();
            m.constraints.push(Constraint::le(
                Expr::Affine { terms, offset: 0.0 },
                Expr::constant((nf - 1.0) / 4.0),
            ));
        }
    }
    m
}

pub const FIG1_ANGLE_DEG: f64 = 15.0;
pub const FIG1_RADIUS: f64 = 2.5;

/// Maximize `x₁cos15° + x₂sin15°` over the disc of radius 2.5 with integer
/// `x₁ ∈ [-2, 2]`, written as a minimization.
pub fn disc_example() -> DcpModel {
    let (s, c) = FIG1_ANGLE_DEG.to_radians().sin_cos();
    let mut m = DcpModel::new(vec![
        Variable::integer("x1", -2.0, 2.0),
        Variable::continuous("x2", -FIG1_RADIUS, FIG1_RADIUS),
    ]);
    m.objective = Expr::Affine {
        terms: vec![(-c, Expr::var(0)), (-s, Expr::var(1))],
        offset: 0.0,
    };
    m.constraints.push(Constraint::le(
        atom(AtomKind::Norm2, vec![Expr::var(0), Expr::var(1)]),
        Expr::constant(FIG1_RADIUS),
    ));
    m
}

/// `min z₃ s.t. x + z₁ = 0, z ∈ RSOC₃, x ∈ {0, 1}`: feasible, optimal value 0,
/// but without strong duality at `x = 0`.
pub fn no_strong_duality() -> ConicProgram {
    let mut ax = Matrix::zeros(1, 1);
    ax[(0, 0)] = 1.0;
    let mut az = Matrix::zeros(1, 3);
    az[(0, 0)] = 1.0;
    ConicProgram {
        c: vec![0.0, 0.0, 1.0],
        obj_offset: 0.0,
        ax,
        az,
        b: vec![0.0],
        lower: vec![0.0],
        upper: vec![1.0],
        cones: ConeProduct::new(vec![Cone::Rsoc(3)]),
    }
}

/// Two-pattern cutting-stock style constraint
/// `-√(x₁y₁) - √(x₂y₂) ≤ w/2 - 3` with integer pattern counts `x`.
pub fn trimloss_toy() -> DcpModel {
    let mut m = DcpModel::new(vec![
        Variable::integer("x1", 0.0, 4.0),
        Variable::integer("x2", 0.0, 4.0),
        Variable::continuous("y1", 0.0, 3.0),
        Variable::continuous("y2", 0.0, 3.0),
        Variable::continuous("w", 0.0, 10.0),
    ]);
    m.objective = Expr::Affine {
        terms: vec![
            (1.0, Expr::var(0)),
            (1.5, Expr::var(1)),
            (0.5, Expr::var(2)),
            (0.25, Expr::var(3)),
            (2.0, Expr::var(4)),
        ],
        offset: 0.0,
    };
    let lhs = Expr::Affine {
        terms: vec![
            (-1.0, atom(AtomKind::GeoMean, vec![Expr::var(0), Expr::var(2)])),
            (-1.0, atom(AtomKind::GeoMean, vec![Expr::var(1), Expr::var(3)])),
        ],
        offset: 0.0,
    };
    m.constraints.push(Constraint::le(
        lhs,
        Expr::Affine {
            terms: vec![(0.5, Expr::var(4))],
            offset: -3.0,
        },
    ));
    m
}

fn sample_interior(rng: &mut ChaCha8Rng, cone: &Cone) -> Vec<f64> {
    match *cone {
        Cone::NonNeg(n) => (0..n).map(|_| rng.gen_range(0.2..2.0)).collect(),
        Cone::Soc(n) => {
            let x: Vec<f64> = (1..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut out = vec![norm + rng.gen_range(0.2..1.0)];
            out.extend(x);
            out
        }
        Cone::Rsoc(n) => {
            let z: Vec<f64> = (2..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = z.iter().map(|v| v * v).sum::<f64>();
            let a = rng.gen_range(0.3..2.0);
            let b = q / (2.0 * a) + rng.gen_range(0.2..1.0);
            let mut out = vec![a, b];
            out.extend(z);
            out
        }
        Cone::Exp => {
            let y: f64 = rng.gen_range(0.3..2.0);
            let x = rng.gen_range(-1.5..1.0);
            vec![x, y, y * (x / y).exp() + rng.gen_range(0.2..1.0)]
        }
        Cone::Pow(a) => {
            let x: f64 = rng.gen_range(0.3..2.0);
            let y: f64 = rng.gen_range(0.3..2.0);
            let bound = x.powf(a) * y.powf(1.0 - a);
            vec![x, y, bound * rng.gen_range(-0.8..0.8)]
        }
    }
}

fn sample_dual_interior(rng: &mut ChaCha8Rng, cone: &Cone) -> Vec<f64> {
    match *cone {
        Cone::Exp => {
            let u: f64 = -rng.gen_range(0.3..2.0);
            let v = rng.gen_range(-1.0..1.5);
            let w = -u * (v / u).exp() / std::f64::consts::E + rng.gen_range(0.2..1.0);
            vec![u, v, w]
        }
        Cone::Pow(a) => {
            let u: f64 = rng.gen_range(0.3..2.0);
            let v: f64 = rng.gen_range(0.3..2.0);
            let bound = (u / a).powf(a) * (v / (1.0 - a)).powf(1.0 - a);
            vec![u, v, bound * rng.gen_range(-0.8..0.8)]
        }
        _ => sample_interior(rng, cone),
    }
}

fn random_cone(rng: &mut ChaCha8Rng) -> Cone {
    match rng.gen_range(0..5) {
        0 => Cone::NonNeg(rng.gen_range(1..=3)),
        1 => Cone::Soc(rng.gen_range(2..=4)),
        2 => Cone::Rsoc(rng.gen_range(3..=4)),
        3 => Cone::Exp,
        _ => Cone::Pow([0.25, 0.5, 0.7][rng.gen_range(0..3)]),
    }
}

/// A random program that is feasible (at a sampled integer point, strictly)
/// and bounded below for every integer assignment: `c = β₀ + A_zᵀy₀` with
/// `β₀ ∈ int K*`.
pub fn random_program(rng: &mut ChaCha8Rng) -> ConicProgram {
    let nx = rng.gen_range(1..=4);
    let nfactors = rng.gen_range(1..=3);
    let mut cones: Vec<Cone> = (0..nfactors).map(|_| random_cone(rng)).collect();
    // every program gets at least one nonlinear factor
    if cones.iter().all(|c| matches!(c, Cone::NonNeg(_))) {
        cones.push(Cone::Soc(3));
    }
    let product = ConeProduct::new(cones);
    let nz = product.dim();
    let m = rng.gen_range(1..=nz.min(4));
    let lower: Vec<f64> = (0..nx).map(|_| rng.gen_range(-2..=0) as f64).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(1..=4) as f64).collect();
    let mut ax = Matrix::zeros(m, nx);
    let mut az = Matrix::zeros(m, nz);
    for i in 0..m {
        for j in 0..nx {
            if rng.gen_bool(0.6) {
                ax[(i, j)] = rng.gen_range(-2..=2) as f64 * 0.5;
            }
        }
        for j in 0..nz {
            if rng.gen_bool(0.7) {
                az[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    let x0: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| rng.gen_range(*l as i64..=*u as i64) as f64)
        .collect();
    let mut z0 = Vec::with_capacity(nz);
    let mut beta0 = Vec::with_capacity(nz);
    for cone in product.factors() {
        z0.extend(sample_interior(rng, cone));
        beta0.extend(sample_dual_interior(rng, cone));
    }
    let axv = ax.mul_vec(&x0);
    let azv = az.mul_vec(&z0);
    let b = (0..m).map(|i| axv[i] + azv[i]).collect();
    let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let aty = az.tr_mul_vec(&y0);
    let c = beta0.iter().zip(&aty).map(|(b, a)| b + a).collect();
    ConicProgram {
        c,
        obj_offset: 0.0,
        ax,
        az,
        b,
        lower,
        upper,
        cones: product,
    }
}

fn random_dense(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    let mut a = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    a
}

fn stacked(rng: &mut ChaCha8Rng, cones: &ConeProduct, dual: bool) -> Vec<f64> {
    let mut v = Vec::with_capacity(cones.dim());
    for c in cones.factors() {
        v.extend(if dual { sample_dual_interior(rng, c) } else { sample_interior(rng, c) });
    }
    v
}

fn random_product(rng: &mut ChaCha8Rng) -> ConeProduct {
    let k = rng.gen_range(1..=3);
    ConeProduct::new((0..k).map(|_| random_cone(rng)).collect())
}

/// Continuous problem with strictly feasible primal and dual:
/// `r = A z₀`, `c = Aᵀy₀ + β₀`.
pub fn random_feasible_conic(rng: &mut ChaCha8Rng) -> ConicProblem {
    let cones = random_product(rng);
    let n = cones.dim();
    let m = rng.gen_range(0..n);
    let a = random_dense(rng, m, n);
    let z0 = stacked(rng, &cones, false);
    let beta0 = stacked(rng, &cones, true);
    let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let aty = a.tr_mul_vec(&y0);
    let c = beta0.iter().zip(&aty).map(|(b, a)| b + a).collect();
    let r = a.mul_vec(&z0);
    ConicProblem { c, a, r, cones }
}

/// Continuous problem with a planted Farkas vector: `Aᵀλ₀ = -β₀`,
/// `β₀ ∈ int K*`, `λ₀ᵀr > 0`.
pub fn random_infeasible_conic(rng: &mut ChaCha8Rng) -> ConicProblem {
    let cones = random_product(rng);
    let n = cones.dim();
    let m = rng.gen_range(1..=n);
    let mut a = random_dense(rng, m, n);
    let lambda0: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
    let beta0 = stacked(rng, &cones, true);
    let g = a.tr_mul_vec(&lambda0);
    for j in 0..n {
        a[(0, j)] += (-beta0[j] - g[j]) / lambda0[0];
    }
    let mut r: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let lr: f64 = lambda0.iter().zip(&r).map(|(l, r)| l * r).sum();
    if lr < 0.1 {
        r[0] += (0.1 - lr + rng.gen_range(0.0..1.0)) / lambda0[0];
    }
    let c = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ConicProblem { c, a, r, cones }
}

/// Point of the cone scaled to unit size, mixing interior samples with
/// boundary points.
pub fn sample_cone_point(rng: &mut ChaCha8Rng, cone: &Cone) -> Vec<f64> {
    let mut p = sample_interior(rng, cone);
    if rng.gen_bool(0.5) {
        // push to the boundary
        match *cone {
            Cone::NonNeg(_) => {
                let k = rng.gen_range(0..p.len());
                p[k] = 0.0;
            }
            Cone::Soc(_) => p[0] = p[1..].iter().map(|v| v * v).sum::<f64>().sqrt(),
            Cone::Rsoc(_) => p[1] = p[2..].iter().map(|v| v * v).sum::<f64>() / (2.0 * p[0]),
            Cone::Exp => p[2] = p[1] * (p[0] / p[1]).exp(),
            Cone::Pow(a) => {
                let b = p[0].powf(a) * p[1].powf(1.0 - a);
                p[2] = if p[2] >= 0.0 { b } else { -b };
            }
        }
    }
    let scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    p.iter().map(|v| v / scale).collect()
}

/// `count` programs from a fixed seed.
pub fn corpus(seed: u64, count: usize) -> Vec<ConicProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_program(&mut rng)).collect()
}
