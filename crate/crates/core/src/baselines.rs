//! Reference solvers sharing the evaluator, line search and nonmonotone
//! ledger of the main driver, so their counters compare directly.

use std::collections::VecDeque;
use std::fmt;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, norm2, norm2_sq, norm_inf, point_along, sub};
use crate::linesearch::{bb_stepsizes, clip_step, quad_interp_min, wolfe_search, LineFunction, NonmonotoneLedger, Ray};
use crate::params::{CurvatureRule, SolverParams};
use crate::problem::{Evaluator, Problem};
use crate::state::{RunReport, RunStatus};

/// Pairs with `sᵀy ≤ SKIP_TOL·‖s‖‖y‖` are not stored by L-BFGS.
pub const SKIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Hestenes–Stiefel conjugate gradient.
    HsCg,
    Lbfgs { memory: usize },
    /// Steepest descent with alternating Barzilai–Borwein steps.
    BbSd,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::HsCg => "hs",
            BaselineKind::Lbfgs { .. } => "lbfgs",
            BaselineKind::BbSd => "bbsd",
        }
    }

    /// Defaults for this baseline: the main solver's defaults, except that
    /// HS uses a strong Wolfe search with `σ = 0.1`, which conjugate
    /// gradient methods need to keep producing descent directions.
    pub fn default_params(&self, n: usize) -> SolverParams {
        let mut p = SolverParams::for_dim(n);
        if *self == BaselineKind::HsCg {
            p.curvature = CurvatureRule::Strong;
            p.sigma_wolfe = 0.1;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BaselineKind::Lbfgs { memory: 0 } => {
                Err(Error::InvalidParameter { name: "memory", reason: "must be at least 1".into() })
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-iteration view of a baseline run.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRecord {
    pub k: usize,
    pub alpha: f64,
    pub g_td: f64,
    pub g_norm_sq: f64,
    pub f_after: f64,
    /// `‖g_{k+1}‖∞`
    pub gnorm_inf: f64,
    pub ck_after: f64,
    /// The direction was reset to `−g`.
    pub restarted: bool,
}

/// L-BFGS two-loop recursion: returns `H·q` where `H` is the inverse
/// Hessian approximation built from `pairs` (oldest first) on top of
/// `gamma·I`.
pub fn two_loop(q: &[f64], pairs: &[(Vec<f64>, Vec<f64>)], gamma: f64) -> Vec<f64> {
    let mut r = q.to_vec();
    let mut alphas = vec![0.0; pairs.len()];
    for (i, (s, y)) in pairs.iter().enumerate().rev() {
        let rho = 1.0 / dot(s, y);
        alphas[i] = rho * dot(s, &r);
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri -= alphas[i] * yi;
        }
    }
    for ri in r.iter_mut() {
        *ri *= gamma;
    }
    for (i, (s, y)) in pairs.iter().enumerate() {
        let rho = 1.0 / dot(s, y);
        let beta = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (alphas[i] - beta) * si;
        }
    }
    r
}

struct Memory {
    cap: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sty = dot(&s, &y);
        if !(sty > SKIP_TOL * norm2(&s) * norm2(&y)) {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
    }

    fn direction(&mut self, g: &[f64]) -> Vec<f64> {
        let gamma = match self.pairs.back() {
            Some((s, y)) => dot(s, y) / norm2_sq(y),
            None => 1.0,
        };
        let pairs = self.pairs.make_contiguous();
        two_loop(g, pairs, gamma).into_iter().map(|v| -v).collect()
    }
}

pub fn run_baseline(kind: BaselineKind, problem: &Problem, params: &SolverParams) -> Result<RunReport> {
    run_baseline_with_observer(kind, problem, params, &mut |_| {})
}

pub fn run_baseline_with_observer(
    kind: BaselineKind,
    problem: &Problem,
    params: &SolverParams,
    observer: &mut dyn FnMut(&BaselineRecord),
) -> Result<RunReport> {
    params.validate()?;
    kind.validate()?;
    let start = Instant::now();
    let n = problem.dim();
    let mut ev = Evaluator::new(problem);
    let mut x = problem.x0().to_vec();
    let mut f = ev.f(&x);
    let mut g = vec![0.0; n];
    ev.g(&x, &mut g);
    let mut ledger = NonmonotoneLedger::new(f);
    let mut memory = Memory { cap: if let BaselineKind::Lbfgs { memory } = kind { memory } else { 0 }, pairs: VecDeque::new() };
    let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None; // (s, y, d)
    let mut prev_alpha_gtd: Option<(f64, f64)> = None;
    let mut k = 0;

    let status = if !f.is_finite() || !all_finite(&g) {
        RunStatus::NumericFail
    } else {
        loop {
            if norm_inf(&g) <= params.grad_tol {
                break RunStatus::Converged;
            }
            if k >= params.max_iter {
                break RunStatus::IterCap;
            }

            let mut restarted = false;
            let mut d = match (kind, &prev) {
                (BaselineKind::HsCg, Some((_, y, d_prev))) => {
                    let dty = dot(d_prev, y);
                    let beta = dot(&g, y) / dty;
                    // Powell's restart: successive gradients far from orthogonal
                    let g_prev_tg = norm2_sq(&g) - dot(&g, y);
                    if beta.is_finite() && dty != 0.0 && g_prev_tg.abs() < 0.2 * norm2_sq(&g) {
                        g.iter().zip(d_prev).map(|(gi, di)| -gi + beta * di).collect()
                    } else {
                        restarted = true;
                        g.iter().map(|v| -v).collect()
                    }
                }
                (BaselineKind::Lbfgs { .. }, _) => memory.direction(&g),
                _ => g.iter().map(|v| -v).collect(),
            };
            let mut g_td = dot(&g, &d);
            if !(g_td < 0.0) {
                restarted = true;
                d = g.iter().map(|v| -v).collect();
                g_td = -norm2_sq(&g);
            }

            let mut line = Ray::new(&mut ev, &x, &d).with_origin(f);
            let alpha0 = {
                match (kind, &prev) {
                    _ if k == 0 => first_step(f, g_td, &g, &mut line, params),
                    (BaselineKind::BbSd, Some((s, y, _))) => match bb_stepsizes(s, y) {
                        Some((bb1, bb2)) => clip_step(if k % 2 == 1 { bb1 } else { bb2 }, params),
                        None => clip_step(1.0 / norm_inf(&g), params),
                    },
                    (BaselineKind::Lbfgs { .. }, _) if !restarted => 1.0,
                    _ => match prev_alpha_gtd {
                        // α_{k−1}·g_{k−1}ᵀd_{k−1} / g_kᵀd_k
                        Some((a, gtd)) => clip_step(a * gtd / g_td, params),
                        None => clip_step(1.0 / norm_inf(&g), params),
                    },
                }
            };
            let ls = wolfe_search(&mut line, f, g_td, alpha0, &ledger, 1.0, params);
            let ls = match ls {
                Ok(r) => r,
                Err(_) => break RunStatus::LinesearchFail,
            };
            if !ls.f_trial.is_finite() || !all_finite(&ls.g_trial) {
                break RunStatus::NumericFail;
            }

            let mut x_next = vec![0.0; n];
            point_along(&x, ls.alpha, &d, &mut x_next);
            let s = sub(&x_next, &x);
            let y = sub(&ls.g_trial, &g);
            let g_norm_sq = norm2_sq(&g);
            ledger = ledger.update(ls.f_trial);
            x = x_next;
            f = ls.f_trial;
            g = ls.g_trial;
            if matches!(kind, BaselineKind::Lbfgs { .. }) {
                memory.push(s.clone(), y.clone());
            }
            prev_alpha_gtd = Some((ls.alpha, g_td));
            prev = Some((s, y, d));
            observer(&BaselineRecord {
                k,
                alpha: ls.alpha,
                g_td,
                g_norm_sq,
                f_after: f,
                gnorm_inf: norm_inf(&g),
                ck_after: ledger.ck,
                restarted,
            });
            k += 1;
        }
    };

    Ok(RunReport {
        n_iter: k,
        n_f: ev.n_f(),
        n_g: ev.n_g(),
        wall_time: start.elapsed().as_secs_f64(),
        status,
        final_gnorm_inf: norm_inf(&g),
        final_f: f,
        x,
        rescues: 0,
    })
}

/// `clip(1/‖g‖∞)` improved by one quadratic interpolation, as in the main
/// driver's first iteration.
fn first_step<L: LineFunction>(f: f64, g_td: f64, g: &[f64], line: &mut L, params: &SolverParams) -> f64 {
    let a = clip_step(1.0 / norm_inf(g), params);
    let phi = line.value(a);
    match quad_interp_min(f, g_td, phi, a) {
        Some(t) if t > 0.0 && phi.is_finite() => clip_step(t, params),
        _ => a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm(n: usize) -> Problem {
        Problem::from_fns("half_norm", vec![1.0; n], |x| 0.5 * norm2_sq(x), |x, g| g.copy_from_slice(x)).unwrap()
    }

    fn quad2() -> Problem {
        // ½xᵀAx with A = [[3, 1], [1, 2]]
        Problem::from_fns(
            "quad2",
            vec![1.0, -2.0],
            |x| 0.5 * (3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 2.0 * x[1] * x[1]),
            |x, g| {
                g[0] = 3.0 * x[0] + x[1];
                g[1] = x[0] + 2.0 * x[1];
            },
        )
        .unwrap()
    }

    #[test]
    fn bbsd_on_identity_hessian() {
        let r = run_baseline(BaselineKind::BbSd, &half_norm(5), &SolverParams::for_dim(5)).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        assert!(r.n_iter <= 2, "{r:?}");
    }

    #[test]
    fn hs_finite_termination_in_two_dims() {
        let mut p = SolverParams::for_dim(2);
        p.curvature = CurvatureRule::Strong;
        p.sigma_wolfe = 1e-4;
        let r = run_baseline(BaselineKind::HsCg, &quad2(), &p).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        assert!(r.n_iter <= 3, "{r:?}");
    }

    #[test]
    fn lbfgs_converges_on_quadratic() {
        let r = run_baseline(BaselineKind::Lbfgs { memory: 3 }, &quad2(), &SolverParams::for_dim(2)).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
    }

    #[test]
    fn two_loop_without_pairs_scales_gradient() {
        assert_eq!(two_loop(&[2.0, -4.0], &[], 0.5), vec![1.0, -2.0]);
    }

    #[test]
    fn two_loop_secant_condition() {
        // the newest pair satisfies H y = s exactly
        let pairs = vec![(vec![1.0, 0.5, 0.0], vec![2.0, 0.3, 0.1]), (vec![0.2, -1.0, 0.4], vec![0.5, -2.0, 1.0])];
        let hy = two_loop(&pairs[1].1, &pairs, 0.7);
        for (a, b) in hy.iter().zip(&pairs[1].0) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn memory_skips_bad_pairs() {
        let mut m = Memory { cap: 2, pairs: VecDeque::new() };
        m.push(vec![1.0, 0.0], vec![-1.0, 0.0]);
        m.push(vec![1.0, 0.0], vec![0.0, 1.0]);
        assert!(m.pairs.is_empty());
        for i in 1..=3 {
            m.push(vec![i as f64, 0.0], vec![1.0, 0.0]);
        }
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.pairs[0].0[0], 2.0);
    }

    #[test]
    fn zero_memory_is_rejected() {
        let err = run_baseline(BaselineKind::Lbfgs { memory: 0 }, &half_norm(2), &SolverParams::for_dim(2)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "memory", .. }));
    }
}
