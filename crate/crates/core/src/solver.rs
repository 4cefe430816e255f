//! Iteration driver: the SMCG/RQN state machine with restarts, line
//! search, acceleration and the nonmonotone ledger.

use std::time::Instant;

use log::{debug, info};

use crate::acceleration::{accel_decision, apply_acceleration, TrialPoint};
use crate::error::Result;
use crate::linalg::{all_finite, dot, norm2_sq, norm_inf, point_along, sub, SquareMatrix};
use crate::linesearch::{
    bb_stepsizes, clip_step, initial_stepsize, quad_interp_min, wolfe_search, AcceptedBy, InitialCase,
    InitialStepContext, LineFunction, Ray, StepResult,
};
use crate::params::SolverParams;
use crate::problem::{Evaluator, Problem};
use crate::smcg::{is_quadratic_like, quadratic_closeness, smcg_direction};
use crate::state::{CaseTag, DirectionRecord, IterationType, RestartCounters, RunReport, RunStatus, SolverState};
use crate::subspace::{
    change_basis, orthogonality_lost, orthogonality_restored, qr_update, ratio, rbfgs_update, rqn_direction, update_mu,
    SubspaceHessian,
};

/// Everything observable about one completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub case: CaseTag,
    /// Iteration type that produced the direction.
    pub state: IterationType,
    /// Accepted line-search step.
    pub alpha: f64,
    /// Acceleration multiplier actually applied (1 when none).
    pub eta_bar: f64,
    pub accelerated: bool,
    pub accepted_by: AcceptedBy,
    /// `g_kᵀd_k`
    pub g_td: f64,
    /// `‖g_k‖²`
    pub g_norm_sq: f64,
    pub f_before: f64,
    pub f_after: f64,
    /// `‖g_{k+1}‖∞`
    pub gnorm_inf: f64,
    pub ck_before: f64,
    pub ck_after: f64,
    pub mu: f64,
    /// `B̂` after this iteration's update, for subspace iterations.
    pub bhat: Option<SquareMatrix>,
    pub bhat_reset: bool,
    /// The new gradient lies in the span of the stored directions. Evaluated
    /// in SMCG iterations even when RQN is disabled.
    pub orthogonality_lost: bool,
    pub entered_rqn: bool,
    pub exited_rqn: bool,
    /// The direction came from the steepest-descent rescue.
    pub rescued: bool,
    pub restarted: bool,
}

/// Per-iteration callback.
pub type Observer<'a> = &'a mut dyn FnMut(&IterationRecord);

/// Result of [`step`].
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Continue(IterationRecord),
    /// The trial point satisfied the gradient tolerance.
    Converged(IterationRecord),
    Failed(RunStatus),
}

/// Counter update after an iteration with quadratic-closeness `t_k`.
pub fn update_restart_counters(
    counters: RestartCounters,
    t_k: f64,
    restarted: bool,
    params: &SolverParams,
) -> RestartCounters {
    if restarted {
        return RestartCounters { iter_restart: 0, iter_quad: 0, min_quad: counters.min_quad };
    }
    RestartCounters {
        iter_restart: counters.iter_restart + 1,
        iter_quad: if t_k <= params.xi4 { counters.iter_quad + 1 } else { 0 },
        min_quad: counters.min_quad,
    }
}

fn rescue_step(state: &SolverState, params: &SolverParams) -> f64 {
    let bb1 = match (&state.s_prev, &state.y_prev) {
        (Some(s), Some(y)) => bb_stepsizes(s, y).map(|(b1, _)| b1),
        _ => None,
    };
    clip_step(bb1.unwrap_or_else(|| 1.0 / norm_inf(&state.g)), params)
}

fn first_step<L: LineFunction>(state: &SolverState, dir: &DirectionRecord, line: &mut L, params: &SolverParams) -> f64 {
    let a = clip_step(1.0 / norm_inf(&state.g), params);
    let phi = line.value(a);
    match quad_interp_min(state.f, dir.g_td, phi, a) {
        Some(t) if t > 0.0 && phi.is_finite() => clip_step(t, params),
        _ => a,
    }
}

fn search(
    ev: &mut Evaluator<'_>,
    state: &SolverState,
    dir: &DirectionRecord,
    alpha0: Option<f64>,
    params: &SolverParams,
) -> Option<StepResult> {
    let mut line = Ray::new(ev, &state.x, &dir.d).with_origin(state.f);
    let alpha0 = match alpha0 {
        Some(a) => a,
        None if state.k == 0 => first_step(state, dir, &mut line, params),
        None => {
            let case = match dir.case_tag {
                CaseTag::Rqn => InitialCase::Rqn { identity: state.bhat.as_ref().map_or(true, |h| h.is_identity()) },
                CaseTag::NegGrad => InitialCase::SteepestDescent,
                _ => InitialCase::Subspace,
            };
            let s_prev = state.s_prev.as_deref().unwrap_or(&[]);
            let y_prev = state.y_prev.as_deref().unwrap_or(&[]);
            let ctx = InitialStepContext {
                case,
                phi0: state.f,
                dphi0: dir.g_td,
                quad_like: is_quadratic_like(state.t_cur, state.t_prev, params),
                g_norm_sq: norm2_sq(&state.g),
                prev_was_steepest: state.case_prev == Some(CaseTag::NegGrad),
                g_ts_prev: if s_prev.is_empty() { 0.0 } else { dot(&state.g, s_prev) },
                s_prev,
                y_prev,
            };
            initial_stepsize(&ctx, &mut line, params)
        }
    };
    wolfe_search(&mut line, state.f, dir.g_td, alpha0, &state.ledger, 1.0, params).ok()
}

/// One full iteration from `state`.
///
/// On `Continue` and `Converged` the state has been advanced to `x_{k+1}`.
pub fn step(state: &mut SolverState, ev: &mut Evaluator<'_>, params: &SolverParams) -> StepOutcome {
    let iter_type = state.state_flag;
    let mut restarted = false;

    let mut dir = match iter_type {
        IterationType::Smcg => {
            if state.k == 0 {
                DirectionRecord::steepest_descent(&state.g)
            } else if state.counters.restart_due() {
                restarted = true;
                DirectionRecord::steepest_descent(&state.g)
            } else {
                smcg_direction(state, params)
            }
        }
        IterationType::Rqn => {
            let z = state.subspace.as_ref().expect("subspace iteration without a basis");
            let h = state.bhat.as_mut().expect("subspace iteration without a model");
            match rqn_direction(z, h, &state.g) {
                Ok(rec) if rec.g_td < 0.0 => rec,
                Ok(_) => {
                    debug!("k={}: subspace direction not descent, using -g", state.k);
                    DirectionRecord::steepest_descent(&state.g)
                }
                Err(_) => return StepOutcome::Failed(RunStatus::NumericFail),
            }
        }
    };

    let mut rescued = false;
    let mut result = search(ev, state, &dir, None, params);
    let needs_rescue = match &result {
        None => true,
        Some(r) => r.accepted_by == AcceptedBy::MaxBacktrack && state.consecutive_ls_failures >= 1,
    };
    if needs_rescue {
        debug!("k={}: line search failed along {}, trying -g", state.k, dir.case_tag);
        dir = DirectionRecord::steepest_descent(&state.g);
        rescued = true;
        result = search(ev, state, &dir, Some(rescue_step(state, params)), params);
        match &result {
            Some(r) if r.accepted_by == AcceptedBy::Wolfe => {}
            _ => return StepOutcome::Failed(RunStatus::LinesearchFail),
        }
    }
    let ls = result.expect("line search result");
    state.consecutive_ls_failures = match ls.accepted_by {
        AcceptedBy::Wolfe => 0,
        AcceptedBy::MaxBacktrack => state.consecutive_ls_failures + 1,
    };

    let n = state.x.len();
    let mut z_bar = vec![0.0; n];
    point_along(&state.x, ls.alpha, &dir.d, &mut z_bar);
    if !all_finite(&ls.g_trial) || !ls.f_trial.is_finite() {
        return StepOutcome::Failed(RunStatus::NumericFail);
    }
    let converged = norm_inf(&ls.g_trial) <= params.grad_tol;

    let (x_next, f_next, g_next, eta_bar, accelerated) = if converged || !params.enable_acceleration {
        (z_bar, ls.f_trial, ls.g_trial.clone(), 1.0, false)
    } else {
        let trial = TrialPoint { z_bar: &z_bar, f_zbar: ls.f_trial, g_zbar: &ls.g_trial, alpha: ls.alpha, d: &dir.d };
        let decision = accel_decision(state, &trial, params);
        if decision.attempted {
            let out = apply_acceleration(ev, state, &trial, &decision, params);
            (out.x_next, out.f_next, out.g_next, out.eta_bar, out.accepted)
        } else {
            (z_bar.clone(), ls.f_trial, ls.g_trial.clone(), 1.0, false)
        }
    };

    let s = sub(&x_next, &state.x);
    let y = sub(&g_next, &state.g);
    let t_new = quadratic_closeness(state.f, f_next, dot(&g_next, &s), dot(&s, &y)).unwrap_or(f64::INFINITY);

    // subspace model bookkeeping uses the old point
    let mut bhat_reset = false;
    if iter_type == IterationType::Rqn && dir.case_tag == CaseTag::Rqn {
        let z = state.subspace.as_ref().expect("basis");
        let h = state.bhat.as_ref().expect("model");
        let g_hat = z.project(&state.g);
        let d_hat = z.project(&dir.d);
        let s_hat = z.project(&s);
        let y_hat = z.project(&y);
        let r = ratio(state.f, f_next, eta_bar * ls.alpha, &g_hat, &d_hat, &h.b_hat).unwrap_or(f64::NEG_INFINITY);
        let mu = update_mu(h.mu, r, norm2_sq(&s_hat), params);
        state.rqn_iters += 1;
        let shifted = SubspaceHessian { mu, ..h.clone() };
        let next = rbfgs_update(&shifted, &s_hat, &y_hat, state.rqn_iters, params);
        bhat_reset = next.is_identity();
        state.mu = mu;
        state.bhat = Some(next);
    }

    let ck_before = state.ledger.ck;
    state.counters = update_restart_counters(state.counters, t_new, restarted, params);
    state.ledger = state.ledger.update(f_next);

    let record_k = state.k;
    let g_norm_sq = norm2_sq(&state.g);
    let f_before = state.f;
    state.x = x_next;
    state.f = f_next;
    state.g = g_next;
    state.s_prev = Some(s);
    state.y_prev = Some(y);
    state.t_prev = state.t_cur;
    state.t_cur = t_new;
    state.case_prev = Some(dir.case_tag);
    state.push_direction(dir.d.clone(), params.memory_m);
    state.d_prev = Some(dir.d.clone());
    state.k += 1;

    let (mut lost, mut entered, mut exited) = (false, false, false);
    if !converged {
        match state.state_flag {
            IterationType::Smcg => {
                let dirs: Vec<Vec<f64>> = state.dir_history.iter().cloned().collect();
                if let Some(fact) = qr_update(&dirs) {
                    lost = orthogonality_lost(&fact, &state.g, params);
                    if lost && params.enable_rqn {
                        info!("k={}: gradient inside span of {} directions, switching to RQN", state.k, fact.rank());
                        state.bhat = Some(SubspaceHessian::identity(fact.rank(), params.mu_min));
                        state.mu = params.mu_min;
                        state.subspace = Some(fact);
                        state.state_flag = IterationType::Rqn;
                        state.rqn_iters = 0;
                        entered = true;
                    }
                }
            }
            IterationType::Rqn => {
                // slide the basis window and carry B̂ into it
                let dirs: Vec<Vec<f64>> = state.dir_history.iter().cloned().collect();
                if let Some(fact) = qr_update(&dirs) {
                    let old = state.subspace.as_ref().expect("basis");
                    let h = state.bhat.as_ref().expect("model");
                    state.bhat = Some(change_basis(h, old, &fact));
                    state.subspace = Some(fact);
                }
                let z = state.subspace.as_ref().expect("basis");
                if orthogonality_restored(z, &state.g, params) {
                    info!("k={}: orthogonality restored after {} RQN iterations", state.k, state.rqn_iters);
                    state.state_flag = IterationType::Smcg;
                    state.subspace = None;
                    state.bhat = None;
                    exited = true;
                }
            }
        }
    }

    let record = IterationRecord {
        k: record_k,
        case: dir.case_tag,
        state: iter_type,
        alpha: ls.alpha,
        eta_bar,
        accelerated,
        accepted_by: ls.accepted_by,
        g_td: dir.g_td,
        g_norm_sq,
        f_before,
        f_after: state.f,
        gnorm_inf: norm_inf(&state.g),
        ck_before,
        ck_after: state.ledger.ck,
        mu: state.mu,
        bhat: if iter_type == IterationType::Rqn { state.bhat.as_ref().map(|h| h.b_hat.clone()) } else { None },
        bhat_reset,
        orthogonality_lost: lost,
        entered_rqn: entered,
        exited_rqn: exited,
        rescued,
        restarted,
    };
    if converged {
        StepOutcome::Converged(record)
    } else {
        StepOutcome::Continue(record)
    }
}

/// Runs the method from the problem's start point.
pub fn run(problem: &Problem, params: &SolverParams) -> Result<RunReport> {
    run_with_observer(problem, params, &mut |_| {})
}

/// [`run`] with a callback invoked after every iteration.
pub fn run_with_observer(problem: &Problem, params: &SolverParams, observer: Observer<'_>) -> Result<RunReport> {
    params.validate()?;
    let start = Instant::now();
    let mut ev = Evaluator::new(problem);
    let x0 = problem.x0().to_vec();
    let f0 = ev.f(&x0);
    let mut g0 = vec![0.0; x0.len()];
    ev.g(&x0, &mut g0);
    let mut state = SolverState::new(x0, f0, g0, params.min_quad);
    let mut rescues = 0;

    let status = if !f0.is_finite() || !all_finite(&state.g) {
        RunStatus::NumericFail
    } else {
        loop {
            if norm_inf(&state.g) <= params.grad_tol {
                break RunStatus::Converged;
            }
            if state.k >= params.max_iter {
                break RunStatus::IterCap;
            }
            match step(&mut state, &mut ev, params) {
                StepOutcome::Continue(rec) => {
                    rescues += rec.rescued as usize;
                    observer(&rec);
                }
                StepOutcome::Converged(rec) => {
                    rescues += rec.rescued as usize;
                    observer(&rec);
                    break RunStatus::Converged;
                }
                StepOutcome::Failed(status) => break status,
            }
        }
    };

    Ok(RunReport {
        n_iter: state.k,
        n_f: ev.n_f(),
        n_g: ev.n_g(),
        wall_time: start.elapsed().as_secs_f64(),
        status,
        final_gnorm_inf: norm_inf(&state.g),
        final_f: state.f,
        x: state.x,
        rescues,
    })
}
