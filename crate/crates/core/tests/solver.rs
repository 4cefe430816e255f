use proptest::prelude::*;

use rlsmcg::linalg::{dot, SquareMatrix};
use rlsmcg::params::{SigmaRule, SolverParams};
use rlsmcg::problem::Problem;
use rlsmcg::problems::lookup;
use rlsmcg::smcg::{solve_quadratic_subproblem, solve_regularized_subproblem, CurvatureSnapshot};
use rlsmcg::solver::{run, run_with_observer, IterationRecord};
use rlsmcg::state::{IterationType, RunStatus};
use rlsmcg::subspace::{qr_update, rbfgs_update, SubspaceHessian};

fn records(problem: &Problem, params: &SolverParams) -> (Vec<IterationRecord>, RunStatus) {
    let mut out = vec![];
    let r = run_with_observer(problem, params, &mut |rec| out.push(rec.clone())).unwrap();
    (out, r.status)
}

/// `½xᵀAx − bᵀx` with `A = diag(d) + uuᵀ`.
fn rank_one_quadratic(d: Vec<f64>, u: Vec<f64>, b: Vec<f64>) -> Problem {
    let n = d.len();
    let (d2, u2, b2) = (d.clone(), u.clone(), b.clone());
    Problem::from_fns(
        "rank_one_quadratic",
        vec![0.0; n],
        move |x| {
            let ux = dot(&u, x);
            0.5 * (x.iter().zip(&d).map(|(xi, di)| di * xi * xi).sum::<f64>() + ux * ux) - dot(&b, x)
        },
        move |x, g| {
            let ux = dot(&u2, x);
            for i in 0..g.len() {
                g[i] = d2[i] * x[i] + ux * u2[i] - b2[i];
            }
        },
    )
    .unwrap()
}

#[test]
fn converges_on_classic_problems() {
    for name in ["ext_rosenbrock(100)", "ext_powell(12)", "trigonometric(100)", "quad_hilbert(10)", "palmer_poly(8)"] {
        let spec = lookup(name).unwrap();
        let r = run(&spec.problem, &SolverParams::for_dim(spec.dim)).unwrap();
        assert_eq!(r.status, RunStatus::Converged, "{name}");
        assert!(r.final_gnorm_inf <= 1e-6);
        if let Some(fmin) = spec.known_fmin {
            assert!((r.final_f - fmin).abs() <= 1e-6 * fmin.abs().max(1.0), "{name}: {}", r.final_f);
        }
    }
}

#[test]
fn ill_conditioned_quadratic_loses_orthogonality_without_rqn() {
    let spec = lookup("quad_hilbert(10)").unwrap();
    let mut p = SolverParams::for_dim(spec.dim);
    p.memory_m = 11;
    p.enable_rqn = false;
    p.grad_tol = 1e-10;
    let (recs, status) = records(&spec.problem, &p);
    assert_eq!(status, RunStatus::Converged);
    assert!(recs.iter().any(|r| r.orthogonality_lost));
    assert!(recs.iter().all(|r| r.state == IterationType::Smcg));
}

#[test]
fn iteration_cap_is_reported() {
    let spec = lookup("ext_rosenbrock(10)").unwrap();
    let mut p = SolverParams::for_dim(spec.dim);
    p.max_iter = 5;
    let r = run(&spec.problem, &p).unwrap();
    assert_eq!(r.status, RunStatus::IterCap);
    assert_eq!(r.n_iter, 5);
}

#[test]
fn already_stationary_start_takes_no_steps() {
    let spec = lookup("quad_diag(10)").unwrap();
    let start = spec.problem.with_start(vec![0.0; 10]).unwrap();
    let r = run(&start, &SolverParams::for_dim(10)).unwrap();
    assert_eq!((r.status, r.n_iter), (RunStatus::Converged, 0));
}

#[test]
fn unregularized_runs_keep_the_ledger() {
    for name in ["ext_wood(4)", "fletchcr(100)", "dixon_price(100)"] {
        let spec = lookup(name).unwrap();
        let mut p = SolverParams::for_dim(spec.dim);
        p.sigma_rule = SigmaRule::Fixed(0.0);
        let (recs, status) = records(&spec.problem, &p);
        assert_eq!(status, RunStatus::Converged, "{name}");
        for r in &recs {
            assert!(r.f_after <= r.ck_after + 1e-12 * r.ck_after.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ledger_bounds_every_iterate(
        d in prop::collection::vec(0.01f64..100.0, 2..30),
        seed in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let n = d.len();
        let u = seed[..n].to_vec();
        let b: Vec<f64> = seed.iter().rev().take(n).cloned().collect();
        let problem = rank_one_quadratic(d, u, b);
        let (recs, status) = records(&problem, &SolverParams::for_dim(n));
        prop_assert_eq!(status, RunStatus::Converged);
        for r in &recs {
            prop_assert!(r.f_after <= r.ck_after + 1e-12 * r.ck_after.abs().max(1.0));
            if r.k >= 1 {
                prop_assert!(r.ck_after <= r.ck_before + 1e-12 * r.ck_before.abs().max(1.0));
            }
            prop_assert!(r.g_td < 0.0);
        }
    }

    #[test]
    fn regularized_solution_is_stationary(
        g in prop::collection::vec(-1.0f64..1.0, 4),
        s in prop::collection::vec(-1.0f64..1.0, 4),
        scale in prop::collection::vec(0.1f64..10.0, 4),
        sigma in 0.0f64..10.0,
    ) {
        let y: Vec<f64> = s.iter().zip(&scale).map(|(a, b)| a * b).collect();
        let snap = CurvatureSnapshot::from_vectors(&g, &s, &y);
        prop_assume!(snap.s_ty > 1e-6 && snap.g_tg > 1e-6);
        let r = solve_regularized_subproblem(&snap, sigma).unwrap();
        let (u0, v0) = solve_quadratic_subproblem(&snap).unwrap();
        // (1 + σ‖w‖) B̄w = −c
        let f = 1.0 + sigma * r.varpi_star;
        let res_u = f * (r.rho_k * r.u + snap.g_ty * r.v) + snap.g_tg;
        let res_v = f * (snap.g_ty * r.u + snap.s_ty * r.v) + snap.g_ts;
        let tol = 1e-9 * (snap.g_tg.abs() + snap.g_ts.abs()).max(1.0);
        prop_assert!(res_u.abs() <= tol && res_v.abs() <= tol);
        prop_assert!((snap.model_norm_sq(r.u, r.v).sqrt() - r.varpi_star).abs() <= 1e-9 * r.varpi_star.max(1.0));
        // shrinks the quadratic step, never flips it
        prop_assert!(r.u * u0 >= 0.0 && r.v * v0 >= 0.0);
        prop_assert!(snap.model_norm_sq(r.u, r.v) <= snap.model_norm_sq(u0, v0) * (1.0 + 1e-12));
    }

    #[test]
    fn bfgs_update_stays_positive_definite(
        pairs in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), prop::collection::vec(-1.0f64..1.0, 3)), 1..40),
        mu in 0.0f64..1.0,
    ) {
        let p = SolverParams::for_dim(10);
        let mut h = SubspaceHessian::identity(3, mu);
        for (k, (s, y)) in pairs.iter().enumerate() {
            h = rbfgs_update(&h, s, y, k + 1, &p);
            prop_assert!(h.b_hat.cholesky().is_some());
            prop_assert!(h.b_hat.max_asymmetry() <= 1e-12);
        }
    }

    #[test]
    fn qr_columns_are_orthonormal_and_reproduce_directions(
        dirs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 1..6),
    ) {
        let Some(f) = qr_update(&dirs) else { return Ok(()) };
        for (i, zi) in f.z.iter().enumerate() {
            for (j, zj) in f.z.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(zi, zj) - want).abs() <= 1e-10);
            }
        }
        for (j, d) in f.source_dirs.iter().enumerate() {
            let back: Vec<f64> = (0..d.len()).map(|t| (0..=j).map(|i| f.z[i][t] * f.r_bar[i][j]).sum()).collect();
            for (a, b) in back.iter().zip(d) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn square_matrix_cholesky_rejects_indefinite() {
    let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
    assert!(m.cholesky().is_none());
}
