//! Tunable constants of the solver.
//!
//! [`SolverParams::for_dim`] returns the published default configuration for
//! an `n`-dimensional problem. Fields are public so experiments can override
//! them; every solver entry point calls [`SolverParams::validate`] first.

use crate::error::{Error, Result};
use crate::smcg::CurvatureSnapshot;

/// Lower bound of the admissible Armijo-type coefficient range.
pub const DELTA_MIN: f64 = 1e-6;
/// Upper bound of the admissible Armijo-type coefficient range.
pub const DELTA_MAX: f64 = 0.9;

/// How the coefficient `δ_k` of the nonmonotone sufficient-decrease test is
/// chosen at each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    /// `δ_k = δ` for every `k`.
    Constant(f64),
    /// `δ_k = δ / Q_{k+1}`, which turns the test into the Zhang–Hager
    /// condition `f ≤ C_k + δ·η̄·α·gᵀd`.
    ZhangHager(f64),
}

impl DeltaRule {
    pub fn base(&self) -> f64 {
        match *self {
            DeltaRule::Constant(d) | DeltaRule::ZhangHager(d) => d,
        }
    }

    /// `δ_k` given the weight `Q_{k+1}` of the next ledger state.
    #[inline]
    pub fn delta_k(&self, q_next: f64) -> f64 {
        match *self {
            DeltaRule::Constant(d) => d,
            DeltaRule::ZhangHager(d) => d / q_next,
        }
    }
}

/// Curvature condition applied by the line search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureRule {
    /// `g(α)ᵀd ≥ σ gᵀd`
    Weak,
    /// `|g(α)ᵀd| ≤ σ |gᵀd|`, used to emulate near-exact line searches.
    Strong,
}

/// Choice of the cubic regularization weight `σ_k` in the 2-D subproblem.
#[derive(Debug, Clone, Copy)]
pub enum SigmaRule {
    /// `σ_k = min(t_k, 1) · sᵀy / sᵀs`
    CurvatureScaled,
    /// A fixed weight, mostly for experiments.
    Fixed(f64),
    /// Caller-supplied strategy; receives the curvature snapshot and `t_k`.
    Custom(fn(&CurvatureSnapshot, f64) -> f64),
}

impl SigmaRule {
    pub fn weight(&self, snap: &CurvatureSnapshot, t_k: f64) -> f64 {
        match *self {
            SigmaRule::CurvatureScaled => {
                let t = if t_k.is_finite() { t_k.min(1.0) } else { 1.0 };
                t * snap.s_ty / snap.s_ts
            }
            SigmaRule::Fixed(s) => s,
            SigmaRule::Custom(f) => f(snap, t_k),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Lower curvature threshold `ξ̄₁` of the conditioning test.
    pub xi1: f64,
    /// Upper curvature threshold `ξ̄₂` of the conditioning test.
    pub xi2: f64,
    /// HS fallback threshold `ξ̄₃`.
    pub xi3: f64,
    /// Quadratic-closeness threshold `ξ̄₄`.
    pub xi4: f64,
    /// Relaxed quadratic-closeness threshold `ξ̄₅`.
    pub xi5: f64,
    /// Orthogonality-loss threshold `η̃₀`.
    pub eta0_tilde: f64,
    /// Orthogonality-restored threshold `η̃₁`.
    pub eta1_tilde: f64,
    /// Curvature floor `υ` of the subspace BFGS update.
    pub upsilon: f64,
    pub memory_m: usize,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub tau_hat: f64,
    pub tau_bar: f64,
    pub c_bar: f64,
    pub varsigma: f64,
    pub varsigma_bar: f64,
    pub eps_bar: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub delta: DeltaRule,
    pub sigma_wolfe: f64,
    pub curvature: CurvatureRule,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub min_quad: usize,
    /// Bracketing/zoom rounds before the line search gives up.
    pub max_ls_rounds: usize,
    pub sigma_rule: SigmaRule,
    /// Allow switching into the subspace quasi-Newton iteration.
    pub enable_rqn: bool,
    pub enable_acceleration: bool,
}

impl SolverParams {
    pub fn for_dim(n: usize) -> Self {
        Self {
            xi1: 1e-10,
            xi2: 1.2e4,
            xi3: 5e-5,
            xi4: 1e-4,
            xi5: 0.08,
            eta0_tilde: 1e-9,
            eta1_tilde: 0.5,
            upsilon: 5e-7,
            memory_m: n.clamp(1, 11),
            sigma1: 0.1,
            sigma2: 5.0,
            sigma3: 0.85,
            mu_min: 1e-6,
            mu_max: 1.0,
            tau_hat: 1.0,
            tau_bar: 0.225,
            c_bar: 0.1,
            varsigma: if n <= 11 { 5e-5 } else { 5e-6 },
            varsigma_bar: 5e-3,
            eps_bar: 1e-10,
            tau1: 0.1,
            tau2: 135.0,
            delta: DeltaRule::Constant(0.0005),
            sigma_wolfe: 0.9999,
            curvature: CurvatureRule::Weak,
            alpha_min: 1e-30,
            alpha_max: 1e30,
            grad_tol: 1e-6,
            max_iter: 200_000,
            min_quad: 50,
            max_ls_rounds: 50,
            sigma_rule: SigmaRule::CurvatureScaled,
            enable_rqn: true,
            enable_acceleration: true,
        }
    }

    /// Sets a field from its textual form, as used by config files:
    /// field names as above, `delta` (constant δ), `delta_zh` (Zhang–Hager
    /// δ), `curvature` (`weak`|`strong`) and `sigma_fixed` (fixed σ_k).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(name: &'static str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| Error::InvalidParameter { name, reason: format!("cannot parse `{v}`") })
        }
        fn flag(name: &'static str, v: &str) -> Result<bool> {
            match v.trim() {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(Error::InvalidParameter { name, reason: format!("expected a boolean, got `{v}`") }),
            }
        }
        macro_rules! fields {
            ($($name:ident),*) => {
                match key {
                    $(stringify!($name) => { self.$name = num(stringify!($name), value)?; return Ok(()); })*
                    _ => {}
                }
            };
        }
        fields!(
            xi1, xi2, xi3, xi4, xi5, eta0_tilde, eta1_tilde, upsilon, memory_m, sigma1, sigma2, sigma3, mu_min,
            mu_max, tau_hat, tau_bar, c_bar, varsigma, varsigma_bar, eps_bar, tau1, tau2, sigma_wolfe, alpha_min,
            alpha_max, grad_tol, max_iter, min_quad, max_ls_rounds
        );
        match key {
            "delta" => self.delta = DeltaRule::Constant(num("delta", value)?),
            "delta_zh" => self.delta = DeltaRule::ZhangHager(num("delta_zh", value)?),
            "curvature" => {
                self.curvature = match value.trim() {
                    "weak" => CurvatureRule::Weak,
                    "strong" => CurvatureRule::Strong,
                    _ => {
                        return Err(Error::InvalidParameter {
                            name: "curvature",
                            reason: format!("expected `weak` or `strong`, got `{value}`"),
                        })
                    }
                }
            }
            "sigma_fixed" => self.sigma_rule = SigmaRule::Fixed(num("sigma_fixed", value)?),
            "enable_rqn" => self.enable_rqn = flag("enable_rqn", value)?,
            "enable_acceleration" => self.enable_acceleration = flag("enable_acceleration", value)?,
            _ => return Err(Error::InvalidParameter { name: "key", reason: format!("unknown parameter `{key}`") }),
        }
        Ok(())
    }

    /// BFGS reset period `max(m², 20)`.
    pub fn l_reset(&self) -> usize {
        (self.memory_m * self.memory_m).max(20)
    }

    /// Sufficient-descent constant `min{1/2, 1−ξ̄₃, 2/(3ξ̄₂), 1/(3ξ̄₂), 2/(5ξ̄₂)}`.
    pub fn descent_constant(&self) -> f64 {
        [
            0.5,
            1.0 - self.xi3,
            2.0 / (3.0 * self.xi2),
            1.0 / (3.0 * self.xi2),
            2.0 / (5.0 * self.xi2),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("must be positive and finite, got {v}") })
            }
        }
        fn check(ok: bool, name: &'static str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: reason.to_string() })
            }
        }

        for (name, v) in [
            ("xi1", self.xi1),
            ("xi2", self.xi2),
            ("xi4", self.xi4),
            ("xi5", self.xi5),
            ("upsilon", self.upsilon),
            ("mu_min", self.mu_min),
            ("mu_max", self.mu_max),
            ("tau_hat", self.tau_hat),
            ("tau_bar", self.tau_bar),
            ("c_bar", self.c_bar),
            ("varsigma", self.varsigma),
            ("varsigma_bar", self.varsigma_bar),
            ("eps_bar", self.eps_bar),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("alpha_min", self.alpha_min),
            ("alpha_max", self.alpha_max),
            ("grad_tol", self.grad_tol),
        ] {
            positive(name, v)?;
        }
        check(self.xi1 <= self.xi2, "xi1", "must not exceed xi2")?;
        check((0.0..=1.0).contains(&self.xi3), "xi3", "must lie in [0, 1]")?;
        check(self.xi4 < self.xi5, "xi4", "must be smaller than xi5")?;
        check(
            self.eta0_tilde > 0.0 && self.eta0_tilde < self.eta1_tilde && self.eta1_tilde < 1.0,
            "eta0_tilde",
            "need 0 < eta0_tilde < eta1_tilde < 1",
        )?;
        check(self.memory_m >= 1, "memory_m", "must be at least 1")?;
        check(self.sigma1 > 0.0 && self.sigma1 <= 1.0, "sigma1", "must lie in (0, 1]")?;
        check(self.sigma2 > 1.0, "sigma2", "must exceed 1")?;
        check(self.sigma3 > 0.0 && self.sigma3 <= 1.0, "sigma3", "must lie in (0, 1]")?;
        check(self.mu_min <= self.mu_max, "mu_min", "must not exceed mu_max")?;
        let d = self.delta.base();
        check(
            d > DELTA_MIN && d < DELTA_MAX,
            "delta",
            &format!("must lie in ({DELTA_MIN}, {DELTA_MAX}), got {d}"),
        )?;
        check(self.sigma_wolfe > 0.0 && self.sigma_wolfe < 1.0, "sigma_wolfe", "must lie in (0, 1)")?;
        check(self.alpha_min < self.alpha_max, "alpha_min", "must be smaller than alpha_max")?;
        check(self.max_iter >= 1, "max_iter", "must be at least 1")?;
        check(self.min_quad >= 1, "min_quad", "must be at least 1")?;
        check(self.max_ls_rounds >= 1, "max_ls_rounds", "must be at least 1")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_published_values() {
        let p = SolverParams::for_dim(100);
        assert_eq!(p.xi1, 1e-10);
        assert_eq!(p.xi2, 1.2e4);
        assert_eq!(p.xi3, 5e-5);
        assert_eq!(p.xi4, 1e-4);
        assert_eq!(p.xi5, 0.08);
        assert_eq!(p.eta0_tilde, 1e-9);
        assert_eq!(p.eta1_tilde, 0.5);
        assert_eq!(p.upsilon, 5e-7);
        assert_eq!(p.memory_m, 11);
        assert_eq!(p.sigma1, 0.1);
        assert_eq!(p.sigma2, 5.0);
        assert_eq!(p.sigma3, 0.85);
        assert_eq!(p.tau_hat, 1.0);
        assert_eq!(p.tau_bar, 0.225);
        assert_eq!(p.c_bar, 0.1);
        assert_eq!(p.varsigma, 5e-6);
        assert_eq!(p.varsigma_bar, 5e-3);
        assert_eq!(p.tau1, 0.1);
        assert_eq!(p.tau2, 135.0);
        assert_eq!(p.delta, DeltaRule::Constant(0.0005));
        assert_eq!(p.sigma_wolfe, 0.9999);
        assert_eq!(p.grad_tol, 1e-6);
        assert_eq!(p.max_iter, 200_000);
        assert_eq!(p.l_reset(), 121);
        p.validate().unwrap();
    }

    #[test]
    fn small_dimension_defaults() {
        let p = SolverParams::for_dim(4);
        assert_eq!(p.memory_m, 4);
        assert_eq!(p.varsigma, 5e-5);
        assert_eq!(p.l_reset(), 20);
        assert_eq!(SolverParams::for_dim(11).varsigma, 5e-5);
        assert_eq!(SolverParams::for_dim(12).varsigma, 5e-6);
    }

    #[test]
    fn textual_overrides() {
        let mut p = SolverParams::for_dim(10);
        p.set("grad_tol", "1e-8").unwrap();
        p.set("memory_m", "5").unwrap();
        p.set("curvature", "strong").unwrap();
        p.set("delta_zh", "0.001").unwrap();
        p.set("enable_rqn", "false").unwrap();
        assert_eq!((p.grad_tol, p.memory_m, p.curvature), (1e-8, 5, CurvatureRule::Strong));
        assert_eq!(p.delta, DeltaRule::ZhangHager(0.001));
        assert!(!p.enable_rqn);
        assert!(p.set("nosuch", "1").is_err());
        assert!(p.set("max_iter", "-3").is_err());
        assert!(p.set("curvature", "medium").is_err());
    }

    #[test]
    fn descent_constant_at_defaults() {
        let c = SolverParams::for_dim(10).descent_constant();
        assert_eq!(c, 1.0 / (3.0 * 1.2e4));
        assert!((c - 2.78e-5).abs() < 1e-7);
    }

    #[test]
    fn validation_rejects_bad_orderings() {
        let mut p = SolverParams::for_dim(10);
        p.eta0_tilde = 0.6;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "eta0_tilde", .. })));

        let mut p = SolverParams::for_dim(10);
        p.sigma2 = 1.0;
        assert!(p.validate().is_err());

        let mut p = SolverParams::for_dim(10);
        p.delta = DeltaRule::Constant(0.95);
        assert!(p.validate().is_err());

        let mut p = SolverParams::for_dim(10);
        p.xi5 = 1e-5;
        assert!(p.validate().is_err());

        let mut p = SolverParams::for_dim(10);
        p.sigma_wolfe = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zhang_hager_delta_scales_with_weight() {
        let r = DeltaRule::ZhangHager(0.001);
        assert_eq!(r.delta_k(2.0), 0.0005);
        assert_eq!(DeltaRule::Constant(0.001).delta_k(2.0), 0.001);
    }
}
