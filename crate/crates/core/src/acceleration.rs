//! Secant-based acceleration of an accepted line-search step.
//!
//! After the search returns `z̄ = x_k + α_k d_k`, the step length along
//! `d_k` is rescaled by `η̄ = −ā/b̄`, the minimizer of the quadratic that
//! interpolates the slopes at `x_k` and `z̄`.

use crate::linalg::{dot, norm2_sq, point_along, sub};
use crate::linesearch::{curvature_ok, sufficient_decrease_ok};
use crate::params::SolverParams;
use crate::problem::Evaluator;
use crate::state::SolverState;

/// The unaccelerated point produced by the line search.
#[derive(Debug, Clone, Copy)]
pub struct TrialPoint<'a> {
    pub z_bar: &'a [f64],
    pub f_zbar: f64,
    pub g_zbar: &'a [f64],
    pub alpha: f64,
    pub d: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelDecision {
    pub attempted: bool,
    pub eta_bar: f64,
    /// `α·gᵀd`
    pub a_bar: f64,
    /// `α·(g_z̄ − g)ᵀd`
    pub b_bar: f64,
    /// `|t̄_{k+1}|`, NaN when undefined.
    pub t_bar: f64,
}

/// Evaluates all five clauses of the acceleration test.
pub fn accel_decision(state: &SolverState, trial: &TrialPoint<'_>, params: &SolverParams) -> AccelDecision {
    let g_td = dot(&state.g, trial.d);
    let a_bar = trial.alpha * g_td;
    let b_bar = trial.alpha * (dot(trial.g_zbar, trial.d) - g_td);
    let s_z = sub(trial.z_bar, &state.x);
    let sg = dot(&s_z, trial.g_zbar);
    let t_bar = if sg != 0.0 {
        (2.0 * (state.f - trial.f_zbar + sg) / sg - 1.0).abs()
    } else {
        f64::NAN
    };
    let attempted = b_bar >= params.eps_bar
        && norm2_sq(&s_z) <= params.tau_bar
        && norm2_sq(&state.g) <= params.tau_hat
        && t_bar < params.c_bar
        && sg.abs() >= params.varsigma.max(params.varsigma_bar * b_bar);
    let eta_bar = if attempted { accel_parameter(a_bar, b_bar) } else { 1.0 };
    AccelDecision { attempted, eta_bar, a_bar, b_bar, t_bar }
}

pub fn accel_criterion(state: &SolverState, trial: &TrialPoint<'_>, params: &SolverParams) -> bool {
    accel_decision(state, trial, params).attempted
}

/// `η̄ = −ā/b̄`
pub fn accel_parameter(a_bar: f64, b_bar: f64) -> f64 {
    -a_bar / b_bar
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelOutcome {
    pub x_next: Vec<f64>,
    pub f_next: f64,
    pub g_next: Vec<f64>,
    pub eta_bar: f64,
    pub accepted: bool,
}

/// Evaluates `x_k + η̄αd` and keeps it if it passes both line-search
/// conditions with the scaled step; otherwise returns the trial point.
///
/// Charges exactly one function and one gradient evaluation.
pub fn apply_acceleration(
    ev: &mut Evaluator<'_>,
    state: &SolverState,
    trial: &TrialPoint<'_>,
    decision: &AccelDecision,
    params: &SolverParams,
) -> AccelOutcome {
    let g_td = dot(&state.g, trial.d);
    let eta = decision.eta_bar;
    let mut x_plus = vec![0.0; state.x.len()];
    point_along(&state.x, eta * trial.alpha, trial.d, &mut x_plus);
    let f_plus = ev.f(&x_plus);
    let mut g_plus = vec![0.0; state.x.len()];
    ev.g(&x_plus, &mut g_plus);

    let finite = f_plus.is_finite() && g_plus.iter().all(|v| v.is_finite());
    let ok = finite
        && sufficient_decrease_ok(&state.ledger, f_plus, trial.alpha, g_td, eta, &params.delta)
        && curvature_ok(dot(&g_plus, trial.d), g_td, params.sigma_wolfe, params.curvature);
    if ok {
        AccelOutcome { x_next: x_plus, f_next: f_plus, g_next: g_plus, eta_bar: eta, accepted: true }
    } else {
        AccelOutcome {
            x_next: trial.z_bar.to_vec(),
            f_next: trial.f_zbar,
            g_next: trial.g_zbar.to_vec(),
            eta_bar: 1.0,
            accepted: false,
        }
    }
}
