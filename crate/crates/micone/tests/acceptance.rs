//! One line per acceptance criterion, `PASS` or `FAIL`, then a combined
//! assertion.

use std::time::Instant;

use micone::generate::{
    corpus, cube_ball, disc_example, no_strong_duality, random_feasible_conic,
    random_infeasible_conic, sample_cone_point, trimloss_toy, CubeBallVariant, FIG1_ANGLE_DEG,
    FIG1_RADIUS,
};
use micone_core::compiler::emit_conic;
use micone_core::cones::Cone;
use micone_core::conic::{solve_conic, validate_certificate, ConicSettings, ConicStatus};
use micone_core::oa::{brute_force_solve, oa_solve, BruteStatus, OaConfig, OaOutcome, OaStatus};
use micone_core::program::ConicProgram;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn line(&mut self, id: u32, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("criterion {id}: {tag} {detail}");
        if !ok {
            self.failures.push(format!("criterion {id}: {detail}"));
        }
    }
}

fn compile(m: &micone_core::dcp::DcpModel) -> ConicProgram {
    emit_conic(m).expect("generated models compile").0
}

/// Extended cube-ball runs for n = 2..=8.
fn extended_runs() -> (Vec<(usize, OaOutcome)>, f64) {
    let t = Instant::now();
    let runs = (2..=8)
        .map(|n| {
            let p = compile(&cube_ball(n, CubeBallVariant::Extended));
            (n, oa_solve(&p, &OaConfig::default()).unwrap())
        })
        .collect();
    (runs, t.elapsed().as_secs_f64())
}

fn naive_runs() -> (Vec<(usize, OaOutcome, f64)>, f64) {
    let t = Instant::now();
    let runs = (2..=5)
        .map(|n| {
            let s = Instant::now();
            let p = compile(&cube_ball(n, CubeBallVariant::Naive));
            let out = oa_solve(&p, &OaConfig::default()).unwrap();
            (n, out, s.elapsed().as_secs_f64())
        })
        .collect();
    (runs, t.elapsed().as_secs_f64())
}

fn disc_oracle() -> f64 {
    let (s, c) = FIG1_ANGLE_DEG.to_radians().sin_cos();
    let best = (-2..=2)
        .map(|x1| {
            let x1 = x1 as f64;
            x1 * c + (FIG1_RADIUS * FIG1_RADIUS - x1 * x1).sqrt() * s
        })
        .fold(f64::NEG_INFINITY, f64::max);
    -best
}

fn pure_soc(p: &ConicProgram) -> bool {
    p.cones
        .factors()
        .iter()
        .all(|c| matches!(c, Cone::NonNeg(_) | Cone::Soc(_) | Cone::Rsoc(_)))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Whether the OA result and the enumeration agree; disagreements come back
/// with a classification.
fn compare(oa: &OaOutcome, bf: &micone_core::oa::BruteForceOutcome) -> Result<(), String> {
    match (oa.status, bf.status) {
        (OaStatus::Optimal, BruteStatus::Optimal) if rel_close(oa.objective, bf.objective, 1e-5) => Ok(()),
        (OaStatus::Infeasible, BruteStatus::Infeasible) => Ok(()),
        _ => {
            let numeric = bf.uncertified > 0
                || oa.status == OaStatus::AssumptionFailure
                || oa.trace.iter().any(|r| {
                    matches!(r.subproblem, Some(ConicStatus::NumericFailure | ConicStatus::AlmostOptimal))
                });
            let what = format!(
                "oa {:?} {} vs enumeration {:?} {}",
                oa.status, oa.objective, bf.status, bf.objective
            );
            if numeric {
                Err(format!("numeric failure: {what}"))
            } else {
                Err(format!("SILENT MISMATCH: {what}"))
            }
        }
    }
}

#[test]
fn acceptance() {
    let mut report = Report { failures: Vec::new() };
    let settings = ConicSettings::default();

    // 1: extended formulation infeasible in at most 3 iterations
    let (ext, ext_time) = extended_runs();
    let ok1 = ext
        .iter()
        .all(|(_, o)| o.status == OaStatus::Infeasible && o.iterations <= 3)
        && ext_time < 5.0;
    let iters: Vec<String> = ext.iter().map(|(n, o)| format!("n={n}:{:?}/{}", o.status, o.iterations)).collect();
    report.line(1, ok1, format!("[{}] in {ext_time:.2}s (limit 5s)", iters.join(" ")));

    // 2: naive formulation needs at least 2^n cuts
    let (naive, _) = naive_runs();
    let ok2 = naive
        .iter()
        .all(|(n, o, secs)| o.status == OaStatus::Infeasible && o.cuts >= 1 << n && (*n < 5 || *secs < 60.0));
    let cuts: Vec<String> = naive
        .iter()
        .map(|(n, o, s)| format!("n={n}:{:?}/{} cuts (>= {}) {s:.2}s", o.status, o.cuts, 1 << n))
        .collect();
    report.line(2, ok2, format!("[{}]", cuts.join(" ")));

    // 3: contrast between the two formulations
    let ok3 = ext.iter().all(|(_, o)| o.iterations <= 3)
        && naive.iter().all(|(n, o, _)| o.cuts >= 1 << n)
        && naive.windows(2).all(|w| w[1].1.cuts > w[0].1.cuts);
    let ext_max = ext.iter().map(|(_, o)| o.iterations).max().unwrap_or(0);
    let naive_cuts: Vec<usize> = naive.iter().map(|(_, o, _)| o.cuts).collect();
    report.line(3, ok3, format!("extended max iterations {ext_max}, naive cuts {naive_cuts:?}"));

    // 4: disc example
    let model = disc_example();
    let (p, map) = emit_conic(&model).unwrap();
    let out = oa_solve(&p, &OaConfig::default()).unwrap();
    let oracle = disc_oracle();
    let point = match (&out.x, &out.z) {
        (Some(x), Some(z)) => map.recover_solution(x, z).unwrap(),
        _ => vec![f64::NAN, f64::NAN],
    };
    let ok4 = out.status == OaStatus::Optimal
        && out.iterations <= 3
        && (out.objective - oracle).abs() <= 1e-6
        && (point[0] - 2.0).abs() <= 1e-6
        && (point[1] - 1.5).abs() <= 1e-5;
    report.line(
        4,
        ok4,
        format!(
            "{:?} in {} iterations at ({:.6}, {:.6}), value {:.9} vs oracle {oracle:.9}",
            out.status, out.iterations, point[0], point[1], out.objective
        ),
    );

    // 5: pathological instance
    let t = Instant::now();
    let out = oa_solve(&no_strong_duality(), &OaConfig::default()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok5 = out.status == OaStatus::AssumptionFailure && out.iterations <= 50 && secs <= 10.0;
    report.line(
        5,
        ok5,
        format!(
            "{:?} after {} iterations in {secs:.2}s ({})",
            out.status,
            out.iterations,
            out.diagnostic.clone().unwrap_or_default()
        ),
    );

    // 6 and 7: corpus against enumeration, and cut validity
    let programs = corpus(2024, 60);
    let mut agree = 0;
    let mut silent = Vec::new();
    let mut numeric = Vec::new();
    let mut pools = Vec::new();
    for (k, p) in programs.iter().enumerate() {
        let oa = oa_solve(p, &OaConfig::default()).unwrap_or_else(|e| panic!("corpus #{k}: {e:?}"));
        let bf = brute_force_solve(p, &settings).unwrap();
        match compare(&oa, &bf) {
            Ok(()) => agree += 1,
            Err(msg) if msg.starts_with("numeric") => numeric.push(format!("#{k} {msg}")),
            Err(msg) => silent.push(format!("#{k} {msg}")),
        }
        pools.push((p.clone(), oa.cut_pool));
    }
    let rate = agree as f64 / programs.len() as f64;
    let ok6 = rate >= 0.95 && silent.is_empty();
    report.line(
        6,
        ok6,
        format!(
            "{agree}/{} agree ({:.1}%), {} numeric, {} silent {:?} {:?}",
            programs.len(),
            100.0 * rate,
            numeric.len(),
            silent.len(),
            numeric,
            silent
        ),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0usize;
    let mut worst = f64::INFINITY;
    let mut worst_nonlinear = f64::INFINITY;
    for (p, pool) in &pools {
        for cut in pool {
            for (cone, r) in p.cones.blocks() {
                let local = &cut.beta[r];
                if local.iter().all(|v| *v == 0.0) {
                    continue;
                }
                for _ in 0..10_000 {
                    let z = sample_cone_point(&mut rng, cone);
                    let v: f64 = local.iter().zip(&z).map(|(b, z)| b * z).sum();
                    worst = worst.min(v);
                    if !matches!(cone, Cone::NonNeg(_)) {
                        worst_nonlinear = worst_nonlinear.min(v);
                    }
                }
            }
            checked += 1;
        }
    }
    report.line(7, worst >= -1e-7, format!("{checked} cuts, min βᵀz = {worst:.3e}, on nonlinear factors {worst_nonlinear:.3e} (limit -1e-7)"));

    // 8: certificate suite
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut opt_ok = 0;
    let mut inf_ok = 0;
    for _ in 0..100 {
        let q = random_feasible_conic(&mut rng);
        let c = solve_conic(&q, &settings).unwrap();
        let gap = (c.primal_objective - c.dual_objective).abs();
        if c.status == ConicStatus::Optimal
            && validate_certificate(&q, &c, 1e-7, 1e-6).is_ok()
            && gap < 1e-6 * (1.0 + c.primal_objective.abs())
        {
            opt_ok += 1;
        }
        let q = random_infeasible_conic(&mut rng);
        let c = solve_conic(&q, &settings).unwrap();
        let lr: f64 = c.lambda.iter().zip(&q.r).map(|(l, r)| l * r).sum();
        if c.status == ConicStatus::Infeasible && q.cones.dual_member(&c.beta, 1e-7).unwrap() && lr > 0.0 {
            inf_ok += 1;
        }
    }
    report.line(8, opt_ok == 100 && inf_ok == 100, format!("optimal {opt_ok}/100, infeasible {inf_ok}/100"));

    // 9: trimloss toy
    let p = compile(&trimloss_toy());
    let oa = oa_solve(&p, &OaConfig::default()).unwrap();
    let bf = brute_force_solve(&p, &settings).unwrap();
    let ok9 = pure_soc(&p)
        && oa.status == OaStatus::Optimal
        && bf.status == BruteStatus::Optimal
        && rel_close(oa.objective, bf.objective, 1e-5);
    report.line(
        9,
        ok9,
        format!(
            "pure SOC {}, oa {:?} {:.8} in {} iterations, enumeration {:?} {:.8}",
            pure_soc(&p),
            oa.status,
            oa.objective,
            oa.iterations,
            bf.status,
            bf.objective
        ),
    );

    assert!(report.failures.is_empty(), "{:#?}", report.failures);
}
