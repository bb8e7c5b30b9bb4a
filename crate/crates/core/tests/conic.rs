mod common;

use common::{dot, interior_dual, interior_primal, random_cones};
use micone_core::cones::ConeProduct;
use micone_core::conic::{solve_conic, validate_certificate, ConicProblem, ConicSettings, ConicStatus};
use micone_core::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stack(cones: &ConeProduct, rng: &mut ChaCha8Rng, dual: bool) -> Vec<f64> {
    let mut v = Vec::new();
    for c in cones.factors() {
        v.extend(if dual { interior_dual(c, rng) } else { interior_primal(c, rng) });
    }
    v
}

fn random_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    if m == 0 {
        Matrix::zeros(0, n)
    } else {
        Matrix::from_rows(&rows)
    }
}

/// Strictly feasible primal and dual: `r = A z₀`, `c = Aᵀy₀ + β₀`.
fn feasible_instance(rng: &mut ChaCha8Rng, families: &[u8]) -> ConicProblem {
    let cones = ConeProduct::new(random_cones(rng, families));
    let n = cones.dim();
    let m = rng.gen_range(0..n);
    let a = random_matrix(m, n, rng);
    let z0 = stack(&cones, rng, false);
    let beta0 = stack(&cones, rng, true);
    let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let aty = a.tr_mul_vec(&y0);
    let c = beta0.iter().zip(&aty).map(|(b, a)| b + a).collect();
    let r = a.mul_vec(&z0);
    ConicProblem { c, a, r, cones }
}

/// `Aᵀλ₀ = -β₀` with `β₀ ∈ int K*` and `λ₀ᵀr > 0`.
fn infeasible_instance(rng: &mut ChaCha8Rng, families: &[u8]) -> ConicProblem {
    let cones = ConeProduct::new(random_cones(rng, families));
    let n = cones.dim();
    let m = rng.gen_range(1..=n);
    let mut a = random_matrix(m, n, rng);
    let lambda0: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
    let beta0 = stack(&cones, rng, true);
    let g = a.tr_mul_vec(&lambda0);
    for j in 0..n {
        a[(0, j)] += (-beta0[j] - g[j]) / lambda0[0];
    }
    let mut r: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let lr = dot(&lambda0, &r);
    if lr < 0.1 {
        r[0] += (0.1 - lr + rng.gen_range(0.0..1.0)) / lambda0[0];
    }
    let c = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ConicProblem { c, a, r, cones }
}

const ALL: [u8; 5] = [0, 1, 2, 3, 4];

#[test]
fn strictly_feasible_programs_reach_strong_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let settings = ConicSettings::default();
    for (label, families) in [("SOC/RSOC/EXP", &[1u8, 2, 3][..]), ("all", &ALL[..])] {
        let mut optimal = 0;
        for case in 0..100 {
            let p = feasible_instance(&mut rng, families);
            let cert = solve_conic(&p, &settings).unwrap();
            assert_eq!(cert.status, ConicStatus::Optimal, "{label} case {case}: {p:?}");
            assert!(validate_certificate(&p, &cert, 1e-7, 1e-6).is_ok());
            let gap = (cert.primal_objective - cert.dual_objective).abs();
            assert!(gap < 1e-6 * (1.0 + cert.primal_objective.abs()));
            optimal += 1;
        }
        assert_eq!(optimal, 100);
    }
}

#[test]
fn infeasible_programs_yield_farkas_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let settings = ConicSettings::default();
    for case in 0..100 {
        let p = infeasible_instance(&mut rng, &ALL);
        let cert = solve_conic(&p, &settings).unwrap();
        assert_eq!(cert.status, ConicStatus::Infeasible, "case {case}: {p:?}");
        assert!(p.cones.dual_member(&cert.beta, 1e-7).unwrap());
        assert!(dot(&cert.lambda, &p.r) > 1e-8);
    }
}

#[test]
fn solver_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10 {
        let p = feasible_instance(&mut rng, &ALL);
        let s = ConicSettings::default();
        assert_eq!(solve_conic(&p, &s).unwrap(), solve_conic(&p, &s).unwrap());
    }
}
