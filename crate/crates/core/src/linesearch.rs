//! Initial stepsize selection and the generalized nonmonotone Wolfe search.

use log::trace;

use crate::linalg::{dot, norm2_sq, point_along};
use crate::params::{CurvatureRule, DeltaRule, SolverParams};
use crate::problem::Evaluator;

/// Reference value `C_k` and weight `Q_k` of the nonmonotone test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonmonotoneLedger {
    pub ck: f64,
    pub qk: f64,
    /// `η` used by the most recent update (0.9 before the first one).
    pub eta_k: f64,
    pub k: usize,
}

impl NonmonotoneLedger {
    pub fn new(f0: f64) -> Self {
        Self { ck: f0, qk: 1.0, eta_k: 0.9, k: 0 }
    }

    /// `η_k` for a prospective `f_{k+1}`.
    pub fn eta_for(&self, f_next: f64) -> f64 {
        if self.ck - f_next > 0.95 * self.ck.abs() && self.k > 100 {
            1.0
        } else {
            0.9
        }
    }

    /// `Q_{k+1}` for a prospective `f_{k+1}`; `2.0` on the first step.
    pub fn q_next(&self, f_next: f64) -> f64 {
        if self.k == 0 {
            2.0
        } else {
            self.eta_for(f_next) * self.qk + 1.0
        }
    }

    /// Advances the ledger to index `k+1` with the accepted `f_{k+1}`.
    pub fn update(&self, f_next: f64) -> Self {
        let eta = self.eta_for(f_next);
        if self.k == 0 {
            return Self { ck: self.ck.min(f_next + 1.0), qk: 2.0, eta_k: eta, k: 1 };
        }
        let q = eta * self.qk + 1.0;
        Self { ck: (eta * self.qk * self.ck + f_next) / q, qk: q, eta_k: eta, k: self.k + 1 }
    }
}

/// Free-function form of [`NonmonotoneLedger::update`].
pub fn ledger_update(ledger: &NonmonotoneLedger, f_next: f64) -> NonmonotoneLedger {
    ledger.update(f_next)
}

/// `f ≤ C_k + Q_{k+1}·δ_k·η̄·α·gᵀd`, with `Q_{k+1}` and `δ_k` computed from
/// the trial value itself.
pub fn sufficient_decrease_ok(
    ledger: &NonmonotoneLedger,
    f_trial: f64,
    alpha: f64,
    g_td: f64,
    eta_bar: f64,
    delta: &DeltaRule,
) -> bool {
    if !f_trial.is_finite() {
        return false;
    }
    let q = ledger.q_next(f_trial);
    f_trial <= ledger.ck + q * delta.delta_k(q) * eta_bar * alpha * g_td
}

/// Curvature condition on `g(α)ᵀd` relative to `gᵀd`.
pub fn curvature_ok(slope: f64, g_td: f64, sigma: f64, rule: CurvatureRule) -> bool {
    if !slope.is_finite() {
        return false;
    }
    match rule {
        CurvatureRule::Weak => slope >= sigma * g_td,
        CurvatureRule::Strong => slope.abs() <= sigma * g_td.abs(),
    }
}

/// Minimizer of the quadratic with value `phi0` and slope `dphi0` at 0 and
/// value `phi_a` at `a`; `None` when the fit is not convex.
pub fn quad_interp_min(phi0: f64, dphi0: f64, phi_a: f64, a: f64) -> Option<f64> {
    let denom = 2.0 * (phi_a - phi0 - dphi0 * a);
    if !(denom > 0.0) {
        return None;
    }
    let t = -dphi0 * a * a / denom;
    t.is_finite().then_some(t)
}

/// `(sᵀs/sᵀy, sᵀy/yᵀy)`, or `None` unless `sᵀy > 0`.
pub fn bb_stepsizes(s: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let sty = dot(s, y);
    if !(sty > 0.0) {
        return None;
    }
    Some((norm2_sq(s) / sty, sty / norm2_sq(y)))
}

pub fn clip_step(a: f64, params: &SolverParams) -> f64 {
    if a.is_nan() {
        return params.alpha_min;
    }
    a.max(params.alpha_min).min(params.alpha_max)
}

/// `φ(α) = f(x + αd)` together with its slope, as seen by the line search.
pub trait LineFunction {
    fn value(&mut self, alpha: f64) -> f64;
    /// `(φ(α), φ'(α))`
    fn value_slope(&mut self, alpha: f64) -> (f64, f64);
    /// Full gradient at `x + αd`.
    fn gradient_at(&mut self, alpha: f64) -> Vec<f64>;
    /// `(function, gradient)` evaluations so far.
    fn evaluations(&self) -> (usize, usize);
}

/// [`LineFunction`] along a ray of an [`Evaluator`].
///
/// Function values are cached per `α` so a probe such as `φ(1)` is never
/// paid twice.
pub struct Ray<'e, 'p> {
    ev: &'e mut Evaluator<'p>,
    x: &'e [f64],
    d: &'e [f64],
    point: Vec<f64>,
    f_cache: Vec<(f64, f64)>,
    last_grad: Option<(f64, Vec<f64>)>,
    n_f: usize,
    n_g: usize,
}

impl<'e, 'p> Ray<'e, 'p> {
    pub fn new(ev: &'e mut Evaluator<'p>, x: &'e [f64], d: &'e [f64]) -> Self {
        let n = x.len();
        Self { ev, x, d, point: vec![0.0; n], f_cache: Vec::new(), last_grad: None, n_f: 0, n_g: 0 }
    }

    /// Seeds the cache with the known `φ(0)`.
    pub fn with_origin(mut self, f0: f64) -> Self {
        self.f_cache.push((0.0, f0));
        self
    }

    fn cached(&self, alpha: f64) -> Option<f64> {
        self.f_cache.iter().find(|(a, _)| *a == alpha).map(|&(_, f)| f)
    }
}

impl LineFunction for Ray<'_, '_> {
    fn value(&mut self, alpha: f64) -> f64 {
        if let Some(f) = self.cached(alpha) {
            return f;
        }
        point_along(self.x, alpha, self.d, &mut self.point);
        let f = self.ev.f(&self.point);
        self.n_f += 1;
        self.f_cache.push((alpha, f));
        f
    }

    fn value_slope(&mut self, alpha: f64) -> (f64, f64) {
        let f = self.value(alpha);
        let g = self.gradient_at(alpha);
        (f, dot(&g, self.d))
    }

    fn gradient_at(&mut self, alpha: f64) -> Vec<f64> {
        if let Some((a, g)) = &self.last_grad {
            if *a == alpha {
                return g.clone();
            }
        }
        point_along(self.x, alpha, self.d, &mut self.point);
        let mut g = vec![0.0; self.x.len()];
        self.ev.g(&self.point, &mut g);
        self.n_g += 1;
        self.last_grad = Some((alpha, g.clone()));
        g
    }

    fn evaluations(&self) -> (usize, usize) {
        (self.n_f, self.n_g)
    }
}

/// Which rule chose the direction the initial step is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCase {
    /// Subspace quasi-Newton direction; `identity` when `B̂ = I`.
    Rqn { identity: bool },
    /// Two-dimensional subspace or conjugate gradient direction.
    Subspace,
    /// `d = −g`
    SteepestDescent,
}

#[derive(Debug, Clone, Copy)]
pub struct InitialStepContext<'a> {
    pub case: InitialCase,
    pub phi0: f64,
    pub dphi0: f64,
    /// Whether the quadratic-likeness test holds for the latest step.
    pub quad_like: bool,
    pub g_norm_sq: f64,
    pub prev_was_steepest: bool,
    /// `g_kᵀ s_{k-1}`
    pub g_ts_prev: f64,
    pub s_prev: &'a [f64],
    pub y_prev: &'a [f64],
}

/// BB fallback: the short BB step after a step that overshot along `g`
/// (`gᵀs > 0`), the long one otherwise.
pub fn bb_fallback(ctx: &InitialStepContext<'_>, params: &SolverParams) -> f64 {
    match bb_stepsizes(ctx.s_prev, ctx.y_prev) {
        Some((bb1, bb2)) => clip_step(if ctx.g_ts_prev > 0.0 { bb2 } else { bb1 }, params),
        None => params.alpha_min,
    }
}

/// Trial stepsize `α⁰_k` for the given direction case.
pub fn initial_stepsize<L: LineFunction>(
    ctx: &InitialStepContext<'_>,
    line: &mut L,
    params: &SolverParams,
) -> f64 {
    match ctx.case {
        InitialCase::Rqn { .. } | InitialCase::Subspace => {
            let phi1 = line.value(1.0);
            let fallback = || match ctx.case {
                InitialCase::Rqn { identity: true } => bb_fallback(ctx, params),
                _ => 1.0,
            };
            if !phi1.is_finite() {
                return fallback();
            }
            let varpi = (phi1 - ctx.phi0).abs() / (params.tau1 + ctx.phi0.abs());
            match quad_interp_min(ctx.phi0, ctx.dphi0, phi1, 1.0) {
                Some(a) if a > 0.0 && (ctx.quad_like || varpi <= params.tau2) => clip_step(a, params),
                _ => fallback(),
            }
        }
        InitialCase::SteepestDescent => {
            let bb = bb_fallback(ctx, params);
            if !(ctx.quad_like && ctx.g_norm_sq <= 1.0 && !ctx.prev_was_steepest) {
                return bb;
            }
            let phi_b = line.value(bb);
            match quad_interp_min(ctx.phi0, ctx.dphi0, phi_b, bb) {
                Some(a) if a > 0.0 && phi_b.is_finite() => clip_step(a, params),
                _ => bb,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptedBy {
    Wolfe,
    /// Round cap hit; the best decrease found was taken.
    MaxBacktrack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub alpha: f64,
    pub f_trial: f64,
    pub g_trial: Vec<f64>,
    /// `g_trialᵀd`
    pub slope: f64,
    pub n_f_used: usize,
    pub n_g_used: usize,
    pub accepted_by: AcceptedBy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchFailure {
    pub n_f_used: usize,
    pub n_g_used: usize,
}

/// Bracketing and zoom search for a step satisfying the nonmonotone
/// sufficient-decrease test against `ledger` and the configured curvature
/// condition.
///
/// After `params.max_ls_rounds` trial points the step with the lowest value
/// is returned as [`AcceptedBy::MaxBacktrack`], provided it improves on
/// `φ(0)`; otherwise the search fails.
pub fn wolfe_search<L: LineFunction>(
    line: &mut L,
    phi0: f64,
    g_td: f64,
    alpha0: f64,
    ledger: &NonmonotoneLedger,
    eta_bar: f64,
    params: &SolverParams,
) -> Result<StepResult, LineSearchFailure> {
    assert!(g_td < 0.0, "wolfe_search needs a descent direction");
    let start = line.evaluations();
    let sd = |f: f64, a: f64| sufficient_decrease_ok(ledger, f, a, g_td, eta_bar, &params.delta);
    let curv = |s: f64| curvature_ok(s, g_td, params.sigma_wolfe, params.curvature);

    let mut best: Option<(f64, f64)> = None;
    let note = |a: f64, f: f64, best: &mut Option<(f64, f64)>| {
        if f.is_finite() && f < phi0 && best.map_or(true, |(_, fb)| f < fb) {
            *best = Some((a, f));
        }
    };

    let finish = |line: &mut L, a: f64, f: f64, slope: Option<f64>, by: AcceptedBy| {
        let slope = slope.unwrap_or_else(|| line.value_slope(eta_bar * a).1);
        let g = line.gradient_at(eta_bar * a);
        let (nf, ng) = line.evaluations();
        StepResult {
            alpha: a,
            f_trial: f,
            g_trial: g,
            slope,
            n_f_used: nf - start.0,
            n_g_used: ng - start.1,
            accepted_by: by,
        }
    };

    // lo: best point known to satisfy the decrease test; hi: the other end
    let (mut lo, mut f_lo, mut s_lo) = (0.0, phi0, g_td);
    let mut hi: Option<(f64, f64)> = None;
    let mut a = clip_step(alpha0, params);
    let mut rounds = 0;

    while rounds < params.max_ls_rounds {
        rounds += 1;
        let (f, s) = line.value_slope(eta_bar * a);
        note(a, f, &mut best);
        trace!("ls round {rounds}: alpha={a:e} f={f:e} slope={s:e}");

        if !f.is_finite() || !s.is_finite() || !sd(f, a) || (hi.is_none() && lo > 0.0 && f >= f_lo) {
            hi = Some((a, f));
        } else if curv(s) {
            return Ok(finish(line, a, f, Some(s), AcceptedBy::Wolfe));
        } else {
            let toward_hi = hi.map_or(1.0, |(h, _)| h - lo);
            if s * toward_hi >= 0.0 {
                hi = Some((lo, f_lo));
            }
            lo = a;
            f_lo = f;
            s_lo = s;
        }

        a = match hi {
            None => {
                if lo >= params.alpha_max {
                    break;
                }
                let secant = if s_lo < 0.0 && s_lo > g_td && lo > 0.0 { lo * g_td / (g_td - s_lo) } else { f64::INFINITY };
                clip_step((10.0 * lo).min((2.0 * lo).max(secant)), params)
            }
            Some((h, f_h)) => {
                let width = h - lo;
                if width.abs() <= f64::EPSILON * lo.abs().max(h.abs()) || width == 0.0 {
                    break;
                }
                let lower = lo + 0.1 * width;
                let upper = lo + 0.9 * width;
                let (lower, upper) = if lower <= upper { (lower, upper) } else { (upper, lower) };
                let guess = if f_h.is_finite() {
                    let c = (f_h - f_lo - s_lo * width) / (width * width);
                    if c > 0.0 {
                        lo - s_lo / (2.0 * c)
                    } else {
                        lo + 0.5 * width
                    }
                } else {
                    lo + 0.5 * width
                };
                if guess.is_finite() {
                    guess.max(lower).min(upper)
                } else {
                    lo + 0.5 * width
                }
            }
        };
    }

    match best {
        Some((a, f)) => Ok(finish(line, a, f, None, AcceptedBy::MaxBacktrack)),
        None => {
            let (nf, ng) = line.evaluations();
            Err(LineSearchFailure { n_f_used: nf - start.0, n_g_used: ng - start.1 })
        }
    }
}
