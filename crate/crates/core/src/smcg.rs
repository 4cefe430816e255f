//! Search directions of the subspace-minimization CG iteration.
//!
//! The direction lives in `span{g_k, s_{k-1}}`, `d = u·g + v·s`, where
//! `(u, v)` minimizes a 2-D model whose Hessian is
//!
//! ```text
//!     B̄ = | ρ_k    gᵀy |     ρ_k = 1.5 · (yᵀy / sᵀy) · gᵀg
//!         | gᵀy    sᵀy |
//! ```
//!
//! and whose linear term is `(gᵀg, gᵀs)`. Four cases pick between the
//! cubic-regularized model, the plain quadratic model, a Hestenes–Stiefel
//! step and steepest descent.

use log::debug;

use crate::linalg::{dot, norm2_sq};
use crate::params::SolverParams;
use crate::state::{CaseTag, DirectionRecord, SolverState};

/// Pairwise inner products of `g_k`, `s_{k-1}` and `y_{k-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSnapshot {
    pub s_ty: f64,
    pub s_ts: f64,
    pub y_ty: f64,
    pub g_tg: f64,
    pub g_ts: f64,
    pub g_ty: f64,
}

impl CurvatureSnapshot {
    pub fn from_vectors(g: &[f64], s: &[f64], y: &[f64]) -> Self {
        Self {
            s_ty: dot(s, y),
            s_ts: norm2_sq(s),
            y_ty: norm2_sq(y),
            g_tg: norm2_sq(g),
            g_ts: dot(g, s),
            g_ty: dot(g, y),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.s_ty, self.s_ts, self.y_ty, self.g_tg, self.g_ts, self.g_ty]
            .iter()
            .all(|v| v.is_finite())
    }

    /// `Δ_k = ρ_k·sᵀy − (gᵀy)²`
    pub fn determinant(&self) -> f64 {
        rho_estimate(self) * self.s_ty - self.g_ty * self.g_ty
    }

    /// `‖(u, v)‖²` in the `B̄` norm.
    pub fn model_norm_sq(&self, u: f64, v: f64) -> f64 {
        let rho = rho_estimate(self);
        rho * u * u + 2.0 * self.g_ty * u * v + self.s_ty * v * v
    }
}

/// `t_k = |2(f_{k-1} − f_k + g_kᵀs_{k-1}) / (s_{k-1}ᵀy_{k-1}) − 1|`.
///
/// Returns `None` when `sᵀy = 0` or the value is not finite.
pub fn quadratic_closeness(f_prev: f64, f_cur: f64, g_ts: f64, s_ty: f64) -> Option<f64> {
    if s_ty == 0.0 {
        return None;
    }
    let t = (2.0 * (f_prev - f_cur + g_ts) / s_ty - 1.0).abs();
    t.is_finite().then_some(t)
}

/// `t_k ≤ ξ̄₄` or (`t_k ≤ ξ̄₅` and `t_{k-1} ≤ ξ̄₅`).
pub fn is_quadratic_like(t_k: f64, t_prev: f64, params: &SolverParams) -> bool {
    t_k <= params.xi4 || (t_k <= params.xi5 && t_prev <= params.xi5)
}

/// `ξ̄₁ ≤ sᵀy/sᵀs ≤ yᵀy/sᵀy ≤ ξ̄₂`.
pub fn is_well_conditioned(snap: &CurvatureSnapshot, params: &SolverParams) -> bool {
    if !(snap.s_ty > 0.0) || !(snap.s_ts > 0.0) {
        return false;
    }
    let lower = snap.s_ty / snap.s_ts;
    let upper = snap.y_ty / snap.s_ty;
    params.xi1 <= lower && lower <= upper && upper <= params.xi2
}

/// `|gᵀy·gᵀs| ≤ ξ̄₃·sᵀy·gᵀg` and `sᵀy ≥ ξ̄₁·sᵀs`.
pub fn hs_fallback_ok(snap: &CurvatureSnapshot, params: &SolverParams) -> bool {
    (snap.g_ty * snap.g_ts).abs() <= params.xi3 * snap.s_ty * snap.g_tg
        && snap.s_ty >= params.xi1 * snap.s_ts
}

/// `ρ_k = 1.5 · (yᵀy / sᵀy) · ‖g‖²`.
///
/// Panics unless `sᵀy > 0`; callers gate on the conditioning tests.
pub fn rho_estimate(snap: &CurvatureSnapshot) -> f64 {
    assert!(snap.s_ty > 0.0, "rho_estimate requires sᵀy > 0");
    1.5 * (snap.y_ty / snap.s_ty) * snap.g_tg
}

/// Unique minimizer of the quadratic 2-D model, or `None` when the model is
/// degenerate (`sᵀy ≤ 0` or `Δ_k ≤ 0`).
pub fn solve_quadratic_subproblem(snap: &CurvatureSnapshot) -> Option<(f64, f64)> {
    if !(snap.s_ty > 0.0) {
        return None;
    }
    let rho = rho_estimate(snap);
    let det = rho * snap.s_ty - snap.g_ty * snap.g_ty;
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let u = (snap.g_ty * snap.g_ts - snap.s_ty * snap.g_tg) / det;
    let v = (snap.g_ty * snap.g_tg - rho * snap.g_ts) / det;
    (u.is_finite() && v.is_finite()).then_some((u, v))
}

/// Solution of the cubic-regularized 2-D model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedSolve {
    pub sigma_k: f64,
    /// `B̄`-norm of the regularized solution.
    pub varpi_star: f64,
    pub rho_k: f64,
    pub delta_k_det: f64,
    pub u: f64,
    pub v: f64,
}

/// Minimizes `cᵀw + ½wᵀB̄w + (σ/3)‖w‖³_B̄` over `w = (u, v)`.
///
/// Stationarity gives `(1 + σ‖w‖_B̄) B̄w = −c`, so `w` is the quadratic
/// solution `w₀` scaled by `1/(1+σϖ)` where `ϖ = ‖w‖_B̄` is the nonnegative
/// root of `σϖ² + ϖ − ‖w₀‖_B̄ = 0`.
pub fn solve_regularized_subproblem(snap: &CurvatureSnapshot, sigma_k: f64) -> Option<RegularizedSolve> {
    assert!(sigma_k >= 0.0, "regularization weight must be nonnegative");
    let (u0, v0) = solve_quadratic_subproblem(snap)?;
    let rho_k = rho_estimate(snap);
    let delta_k_det = rho_k * snap.s_ty - snap.g_ty * snap.g_ty;
    if sigma_k == 0.0 {
        let varpi_star = snap.model_norm_sq(u0, v0).max(0.0).sqrt();
        return Some(RegularizedSolve { sigma_k, varpi_star, rho_k, delta_k_det, u: u0, v: v0 });
    }
    let n0 = snap.model_norm_sq(u0, v0).max(0.0).sqrt();
    let varpi_star = 2.0 * n0 / (1.0 + (1.0 + 4.0 * sigma_k * n0).sqrt());
    let scale = 1.0 / (1.0 + sigma_k * varpi_star);
    let (u, v) = (scale * u0, scale * v0);
    (u.is_finite() && v.is_finite()).then_some(RegularizedSolve {
        sigma_k,
        varpi_star,
        rho_k,
        delta_k_det,
        u,
        v,
    })
}

/// `d = −g + (gᵀy / dᵀy)·d_prev`, or `None` when `dᵀy = 0`.
pub fn hs_direction(g: &[f64], y_prev: &[f64], d_prev: &[f64]) -> Option<Vec<f64>> {
    let dty = dot(d_prev, y_prev);
    if dty == 0.0 || !dty.is_finite() {
        return None;
    }
    let beta = dot(g, y_prev) / dty;
    if !beta.is_finite() {
        return None;
    }
    Some(g.iter().zip(d_prev).map(|(gi, di)| -gi + beta * di).collect())
}

fn combine(u: f64, g: &[f64], v: f64, s: &[f64]) -> Vec<f64> {
    g.iter().zip(s).map(|(gi, si)| u * gi + v * si).collect()
}

/// Direction of an SMCG iteration.
///
/// At `k = 0` (or without a previous step) this is `−g`. Otherwise:
///
/// | conditioning | quadratic-like | hs gate | direction          |
/// |--------------|----------------|---------|--------------------|
/// | yes          | no             | -       | regularized model  |
/// | yes          | yes            | -       | quadratic model    |
/// | no           | -              | yes     | Hestenes–Stiefel   |
/// | no           | -              | no      | `−g`               |
///
/// Degenerate models and non-finite intermediates fall back to `−g`.
pub fn smcg_direction(state: &SolverState, params: &SolverParams) -> DirectionRecord {
    let g = &state.g;
    let (s, y) = match (&state.s_prev, &state.y_prev) {
        (Some(s), Some(y)) if state.k > 0 => (s, y),
        _ => return DirectionRecord::steepest_descent(g),
    };
    let snap = CurvatureSnapshot::from_vectors(g, s, y);
    if !snap.is_finite() {
        debug!("k={}: non-finite curvature snapshot, using -g", state.k);
        return DirectionRecord::steepest_descent(g);
    }

    let record = if is_well_conditioned(&snap, params) {
        if is_quadratic_like(state.t_cur, state.t_prev, params) {
            solve_quadratic_subproblem(&snap).map(|(u, v)| (combine(u, g, v, s), CaseTag::QuadSubproblem))
        } else {
            let sigma = params.sigma_rule.weight(&snap, state.t_cur);
            if sigma.is_finite() && sigma >= 0.0 {
                solve_regularized_subproblem(&snap, sigma)
                    .map(|r| (combine(r.u, g, r.v, s), CaseTag::RegSubproblem))
            } else {
                None
            }
        }
    } else if hs_fallback_ok(&snap, params) {
        state
            .d_prev
            .as_deref()
            .and_then(|d_prev| hs_direction(g, y, d_prev))
            .map(|d| (d, CaseTag::Hs))
    } else {
        None
    };

    match record {
        Some((d, case_tag)) => {
            let g_td = dot(g, &d);
            if g_td.is_finite() && g_td < 0.0 && d.iter().all(|v| v.is_finite()) {
                DirectionRecord { d, case_tag, g_td }
            } else {
                debug!("k={}: {case_tag} direction not a descent direction, using -g", state.k);
                DirectionRecord::steepest_descent(g)
            }
        }
        None => DirectionRecord::steepest_descent(g),
    }
}
