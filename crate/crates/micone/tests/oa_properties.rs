use micone::generate::corpus;
use micone_core::conic::{solve_conic, ConicSettings, ConicStatus};
use micone_core::oa::{brute_force_solve, oa_solve, BruteStatus, OaConfig, OaStatus};
use std::collections::HashSet;

#[test]
fn bounds_sandwich_the_enumerated_optimum() {
    let config = OaConfig::default();
    let mut checked = 0;
    for (k, p) in corpus(31, 40).into_iter().enumerate() {
        let out = oa_solve(&p, &config).unwrap();
        let bf = brute_force_solve(&p, &ConicSettings::default()).unwrap();
        let slack = 1e-5 * (1.0 + bf.objective.abs());

        // bounds move one way only
        for w in out.trace.windows(2) {
            assert!(w[1].lower_bound >= w[0].lower_bound - 1e-9, "#{k}: lower bound fell");
            assert!(w[1].upper_bound <= w[0].upper_bound, "#{k}: upper bound rose");
        }
        // only the terminating visit may repeat an assignment
        let mut seen = HashSet::new();
        for (i, r) in out.trace.iter().enumerate() {
            let fresh = seen.insert(r.assignment.clone());
            assert!(fresh || i + 1 == out.trace.len(), "#{k}: {:?} revisited at {i}", r.assignment);
        }

        if bf.status != BruteStatus::Optimal {
            continue;
        }
        checked += 1;
        for r in &out.trace {
            assert!(r.lower_bound <= bf.objective + slack, "#{k}: lower {} above {}", r.lower_bound, bf.objective);
            assert!(r.upper_bound >= bf.objective - slack, "#{k}: upper {} below {}", r.upper_bound, bf.objective);
        }
        if out.status == OaStatus::Optimal {
            let gap = (out.upper_bound - out.lower_bound) / (1.0 + out.upper_bound.abs());
            assert!(gap <= config.tol, "#{k}: stopped with gap {gap}");
            assert!((out.objective - bf.objective).abs() <= slack, "#{k}");
        }

        let root = solve_conic(&p.relaxation(), &ConicSettings::default()).unwrap();
        if root.status == ConicStatus::Optimal {
            let v = root.primal_objective + p.obj_offset;
            assert!(v <= bf.objective + 1e-6 * (1.0 + bf.objective.abs()), "#{k}: relaxation {v}");
        }
    }
    assert!(checked >= 20, "{checked} instances with an optimum");
}

#[test]
fn incumbent_is_feasible() {
    for (k, p) in corpus(32, 40).into_iter().enumerate() {
        let out = oa_solve(&p, &OaConfig::default()).unwrap();
        if let (Some(x), Some(z)) = (&out.x, &out.z) {
            assert!(p.is_feasible(x, z, 1e-6), "#{k}");
            assert!((p.objective(z) - out.objective).abs() <= 1e-9 * (1.0 + out.objective.abs()), "#{k}");
        }
    }
}
