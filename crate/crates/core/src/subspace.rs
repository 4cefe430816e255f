//! Orthogonality monitoring and the regularized quasi-Newton iteration
//! restricted to the span of recent search directions.
//!
//! When the current gradient lies almost inside `S_k = span{d_{k-1}, …,
//! d_{k-m}}`, the driver minimizes `f(x_k + z)` over `z ∈ S_k` with a BFGS
//! model `B̂(μ)` of dimension `m`, where the curvature pairs are shifted as
//! `ŷ(μ) = ŷ + μŝ`. The parameter `μ` follows a trust-region style ratio
//! test.

use log::debug;

use crate::linalg::{dot, norm2, norm2_sq, Cholesky, SquareMatrix};
use crate::params::SolverParams;
use crate::state::{CaseTag, DirectionRecord};

/// Relative residual below which a direction is treated as dependent on the
/// ones before it.
pub const RANK_DROP_TOL: f64 = 1e-12;

/// Thin QR factorization `S = Z·R̄` of the stored directions.
#[derive(Debug, Clone)]
pub struct SubspaceFactorization {
    /// Orthonormal columns of `Z`.
    pub z: Vec<Vec<f64>>,
    /// Upper-triangular `R̄`, row-major; `r_bar[i][j]` for `j ≥ i`.
    pub r_bar: Vec<Vec<f64>>,
    /// The directions that survived the rank check, in column order.
    pub source_dirs: Vec<Vec<f64>>,
}

impl SubspaceFactorization {
    pub fn rank(&self) -> usize {
        self.z.len()
    }

    /// `Zᵀv`
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.z.iter().map(|col| dot(col, v)).collect()
    }

    /// `Z·w`
    pub fn lift(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.rank());
        let n = self.z.first().map_or(0, |c| c.len());
        let mut out = vec![0.0; n];
        for (col, &wi) in self.z.iter().zip(w) {
            for (o, c) in out.iter_mut().zip(col) {
                *o += wi * c;
            }
        }
        out
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
///
/// Columns whose residual after projection is at most
/// [`RANK_DROP_TOL`] times their original norm are dropped, so the rank of
/// the result may be smaller than `dirs.len()`. Returns `None` when nothing
/// survives.
pub fn qr_update(dirs: &[Vec<f64>]) -> Option<SubspaceFactorization> {
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(dirs.len());
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(dirs.len());
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(dirs.len());

    for d in dirs {
        let orig = norm2(d);
        if !(orig > 0.0) || !orig.is_finite() {
            continue;
        }
        let mut w = d.clone();
        let mut r = vec![0.0; z.len()];
        for _pass in 0..2 {
            for (j, q) in z.iter().enumerate() {
                let c = dot(q, &w);
                r[j] += c;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let res = norm2(&w);
        if res <= RANK_DROP_TOL * orig {
            continue;
        }
        for wi in w.iter_mut() {
            *wi /= res;
        }
        r.push(res);
        z.push(w);
        coeffs.push(r);
        kept.push(d.clone());
    }

    if z.is_empty() {
        return None;
    }
    let m = z.len();
    let mut r_bar = vec![vec![0.0; m]; m];
    for (j, col) in coeffs.iter().enumerate() {
        for (i, &c) in col.iter().enumerate() {
            r_bar[i][j] = c;
        }
    }
    Some(SubspaceFactorization { z, r_bar, source_dirs: kept })
}

/// `‖Zᵀg‖² ≥ (1 − η̃₀²)‖g‖²`: the gradient has (almost) no component outside
/// the subspace.
pub fn orthogonality_lost(z: &SubspaceFactorization, g: &[f64], params: &SolverParams) -> bool {
    let proj = norm2_sq(&z.project(g));
    proj >= (1.0 - params.eta0_tilde * params.eta0_tilde) * norm2_sq(g)
}

/// `‖Zᵀg‖² ≤ (1 − η̃₁²)‖g‖²`: the gradient points far enough out of the
/// subspace.
pub fn orthogonality_restored(z: &SubspaceFactorization, g: &[f64], params: &SolverParams) -> bool {
    let proj = norm2_sq(&z.project(g));
    proj <= (1.0 - params.eta1_tilde * params.eta1_tilde) * norm2_sq(g)
}

/// Subspace Hessian approximation `B̂(μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceHessian {
    pub b_hat: SquareMatrix,
    pub updates_since_reset: usize,
    pub mu: f64,
}

impl SubspaceHessian {
    pub fn identity(m: usize, mu: f64) -> Self {
        Self { b_hat: SquareMatrix::identity(m), updates_since_reset: 0, mu }
    }

    pub fn dim(&self) -> usize {
        self.b_hat.dim()
    }

    pub fn is_identity(&self) -> bool {
        self.b_hat.is_identity()
    }
}

/// Re-expresses `B̂` in a new basis: `QᵀB̂Q + (I − QᵀQ)` with
/// `Q = Z_oldᵀZ_new`, so directions inside the old span keep their learned
/// curvature and new ones start at the identity.
///
/// Falls back to the identity if the result is not positive definite.
pub fn change_basis(h: &SubspaceHessian, old: &SubspaceFactorization, new: &SubspaceFactorization) -> SubspaceHessian {
    assert_eq!(h.dim(), old.rank());
    let (p, q) = (old.rank(), new.rank());
    let qm: Vec<Vec<f64>> = old.z.iter().map(|zo| new.z.iter().map(|zn| dot(zo, zn)).collect()).collect();
    let mut b = SquareMatrix::zeros(q);
    for i in 0..q {
        for j in 0..q {
            let mut v = 0.0;
            let mut qtq = 0.0;
            for a in 0..p {
                qtq += qm[a][i] * qm[a][j];
                for c in 0..p {
                    v += qm[a][i] * h.b_hat.get(a, c) * qm[c][j];
                }
            }
            let id = if i == j { 1.0 } else { 0.0 };
            b.set(i, j, v + id - qtq);
        }
    }
    for i in 0..q {
        for j in 0..i {
            let m = 0.5 * (b.get(i, j) + b.get(j, i));
            b.set(i, j, m);
            b.set(j, i, m);
        }
    }
    if b.all_finite() && b.cholesky().is_some() {
        SubspaceHessian { b_hat: b, updates_since_reset: h.updates_since_reset, mu: h.mu }
    } else {
        debug!("basis change produced an indefinite model, resetting");
        SubspaceHessian::identity(q, h.mu)
    }
}

/// Regularized BFGS update of `B̂(μ)` with the pair `(ŝ, ŷ + μŝ)`.
///
/// `k` counts updates within the current subspace phase; every
/// `l_reset`-th call, and every call whose shifted curvature
/// `ŝᵀŷ(μ)/ŝᵀŝ` falls below `υ`, returns the identity instead.
pub fn rbfgs_update(
    h: &SubspaceHessian,
    s_hat: &[f64],
    y_hat: &[f64],
    k: usize,
    params: &SolverParams,
) -> SubspaceHessian {
    let m = h.dim();
    assert_eq!(s_hat.len(), m);
    assert_eq!(y_hat.len(), m);
    let reset = SubspaceHessian::identity(m, h.mu);

    let y_mu: Vec<f64> = y_hat.iter().zip(s_hat).map(|(y, s)| y + h.mu * s).collect();
    let sts = norm2_sq(s_hat);
    let sty = dot(s_hat, &y_mu);
    if k % params.l_reset() == 0 || !(sts > 0.0) || !(sty / sts >= params.upsilon) {
        return reset;
    }

    let bs = h.b_hat.mul_vec(s_hat);
    let sbs = dot(s_hat, &bs);
    if !(sbs > 0.0) {
        return reset;
    }
    let mut next = h.b_hat.clone();
    for i in 0..m {
        for j in 0..=i {
            let v = h.b_hat.get(i, j) - bs[i] * bs[j] / sbs + y_mu[i] * y_mu[j] / sty;
            next.set(i, j, v);
            next.set(j, i, v);
        }
    }
    if !next.all_finite() || next.cholesky().is_none() {
        debug!("subspace BFGS update lost positive definiteness, resetting");
        return reset;
    }
    SubspaceHessian { b_hat: next, updates_since_reset: h.updates_since_reset + 1, mu: h.mu }
}

/// Actual-to-predicted reduction ratio of a subspace step, with the model
/// `q̂ = f + α·ĝᵀd̂ + ½α²·d̂ᵀB̂(μ)d̂`.
///
/// Returns `None` when the model predicts no decrease.
pub fn ratio(
    f_cur: f64,
    f_trial: f64,
    alpha: f64,
    g_hat: &[f64],
    d_hat: &[f64],
    b_hat_mu: &SquareMatrix,
) -> Option<f64> {
    let q = f_cur + alpha * dot(g_hat, d_hat) + 0.5 * alpha * alpha * b_hat_mu.quad_form(d_hat);
    let predicted = f_cur - q;
    if !(predicted > 0.0) || !predicted.is_finite() {
        return None;
    }
    Some((f_cur - f_trial) / predicted)
}

/// Trust-region style update of the regularization parameter.
///
/// Short steps (`‖ŝ‖² ≤ τ̂`) shrink `μ` by `σ₁` on a good ratio and grow it
/// by `σ₂` otherwise; long steps switch regularization off. Passing a NaN or
/// `-∞` ratio selects the growth branch.
pub fn update_mu(mu: f64, r: f64, s_hat_norm2: f64, params: &SolverParams) -> f64 {
    if s_hat_norm2 > params.tau_hat {
        return 0.0;
    }
    if r >= params.sigma3 {
        params.mu_min.max(params.sigma1 * mu)
    } else {
        params.mu_max.min((params.sigma2 * mu).max(params.mu_min))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqnError {
    /// Even the identity model produced a non-finite direction.
    NumericFailure,
}

fn solve_direction(chol: &Cholesky, z: &SubspaceFactorization, g_hat: &[f64], g: &[f64]) -> Option<DirectionRecord> {
    let d_hat = chol.solve(g_hat);
    let d: Vec<f64> = z.lift(&d_hat).into_iter().map(|v| -v).collect();
    let g_td = dot(g, &d);
    (g_td.is_finite() && d.iter().all(|v| v.is_finite())).then_some(DirectionRecord {
        d,
        case_tag: CaseTag::Rqn,
        g_td,
    })
}

/// `d = −Z·B̂(μ)⁻¹·Zᵀg` via a Cholesky solve.
///
/// A failed factorization resets `h` to the identity and retries once.
pub fn rqn_direction(
    z: &SubspaceFactorization,
    h: &mut SubspaceHessian,
    g: &[f64],
) -> Result<DirectionRecord, RqnError> {
    let g_hat = z.project(g);
    if let Some(rec) = h.b_hat.cholesky().and_then(|c| solve_direction(&c, z, &g_hat, g)) {
        return Ok(rec);
    }
    debug!("subspace model not positive definite, resetting to identity");
    *h = SubspaceHessian::identity(h.dim(), h.mu);
    h.b_hat
        .cholesky()
        .and_then(|c| solve_direction(&c, z, &g_hat, g))
        .ok_or(RqnError::NumericFailure)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn p() -> SolverParams {
        SolverParams::for_dim(10)
    }

    #[test]
    fn qr_single_unit_vector() {
        let f = qr_update(&[e(3, 0)]).unwrap();
        assert_eq!(f.z, vec![e(3, 0)]);
        assert_eq!(f.r_bar, vec![vec![1.0]]);
    }

    #[test]
    fn qr_hand_gram_schmidt() {
        let f = qr_update(&[e(3, 0), vec![1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(f.rank(), 2);
        assert_eq!(f.z[0], e(3, 0));
        assert_eq!(f.z[1], e(3, 1));
        assert_eq!(f.r_bar, vec![vec![1.0, 1.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn qr_drops_dependent_column() {
        let f = qr_update(&[e(3, 0), vec![2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(f.rank(), 1);
        assert!(qr_update(&[vec![0.0; 3]]).is_none());
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal() {
        let dirs: Vec<Vec<f64>> = (0..5)
            .map(|j| (0..12).map(|i| (0.37 * ((i + 1) * (j + 1)) as f64).sin() + 0.1 * (i * j % 5) as f64).collect())
            .collect();
        let f = qr_update(&dirs).unwrap();
        assert_eq!(f.rank(), 5);
        for a in 0..5 {
            for b in 0..5 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot(&f.z[a], &f.z[b]) - want).abs() <= 1e-12);
            }
            assert!(f.r_bar[a][a] > 0.0);
        }
        for (j, d) in f.source_dirs.iter().enumerate() {
            let col: Vec<f64> = (0..5).map(|i| f.r_bar[i][j]).collect();
            let back = f.lift(&col);
            let err: f64 = back.iter().zip(d).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 1e-10 * norm2(d));
        }
    }

    #[test]
    fn orthogonality_predicates() {
        let params = p();
        let f = qr_update(&[e(3, 0), e(3, 1)]).unwrap();
        assert!(orthogonality_lost(&f, &[1.0, 2.0, 0.0], &params));
        assert!(!orthogonality_restored(&f, &[1.0, 2.0, 0.0], &params));
        assert!(!orthogonality_lost(&f, &[0.0, 0.0, 1.0], &params));
        assert!(orthogonality_restored(&f, &[0.0, 0.0, 1.0], &params));
        // out-of-span relative component 1e-3 is far above η̃₀ = 1e-9
        assert!(!orthogonality_lost(&f, &[1.0, 0.0, 1e-3], &params));
        // ‖Zᵀg‖²/‖g‖² = 0.7 ≤ 0.75
        let g = [0.7f64.sqrt(), 0.0, 0.3f64.sqrt()];
        assert!(orthogonality_restored(&f, &g, &params));
    }

    #[test]
    fn bfgs_fixed_point_and_hand_update() {
        let params = p();
        let h = SubspaceHessian::identity(2, 0.0);
        let same = rbfgs_update(&h, &[1.0, 0.0], &[1.0, 0.0], 1, &params);
        assert_eq!(same.b_hat, SquareMatrix::identity(2));
        let next = rbfgs_update(&h, &[1.0, 0.0], &[2.0, 0.0], 1, &params);
        assert_eq!(next.b_hat, SquareMatrix::from_diag(&[2.0, 1.0]));
        assert_eq!(next.updates_since_reset, 1);
    }

    #[test]
    fn bfgs_resets_on_weak_curvature_and_period() {
        let params = p();
        let h = SubspaceHessian { b_hat: SquareMatrix::from_diag(&[3.0, 2.0]), updates_since_reset: 4, mu: 0.0 };
        let weak = rbfgs_update(&h, &[1.0, 0.0], &[1e-8, 0.0], 1, &params);
        assert!(weak.is_identity());
        assert_eq!(weak.updates_since_reset, 0);
        let periodic = rbfgs_update(&h, &[1.0, 0.0], &[2.0, 0.0], params.l_reset(), &params);
        assert!(periodic.is_identity());
    }

    #[test]
    fn mu_shift_rescues_negative_curvature() {
        let params = p();
        let h = SubspaceHessian::identity(1, 0.5);
        // ŝᵀŷ = −0.1 but ŝᵀŷ(μ) = 0.4
        let next = rbfgs_update(&h, &[1.0], &[-0.1], 1, &params);
        assert!((next.b_hat.get(0, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn basis_change_keeps_curvature_on_shared_span() {
        // old basis {e1, e2}, new basis {e2, e3}
        let old = qr_update(&[e(3, 0), e(3, 1)]).unwrap();
        let new = qr_update(&[e(3, 1), e(3, 2)]).unwrap();
        let h = SubspaceHessian { b_hat: SquareMatrix::from_diag(&[4.0, 9.0]), updates_since_reset: 3, mu: 1e-3 };
        let out = change_basis(&h, &old, &new);
        assert_eq!(out.b_hat, SquareMatrix::from_diag(&[9.0, 1.0]));
        assert_eq!((out.updates_since_reset, out.mu), (3, 1e-3));

        let same = change_basis(&h, &old, &old);
        assert_eq!(same.b_hat, h.b_hat);
    }

    #[test]
    fn ratio_examples() {
        let b = SquareMatrix::identity(1);
        assert_eq!(ratio(1.0, 0.4, 1.0, &[-1.0], &[1.0], &b), Some(0.6 / 0.5));
        assert_eq!(ratio(1.0, 1.0, 1.0, &[-1.0], &[1.0], &b), Some(0.0));
        // f(x) = ½x² from x = 1 along d = −1 with B = 1 matches the model
        let r = ratio(0.5, 0.125, 0.5, &[1.0], &[-1.0], &b).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert_eq!(ratio(1.0, 0.0, 1.0, &[1.0], &[1.0], &b), None);
    }

    #[test]
    fn mu_update_examples() {
        let params = p();
        assert!((update_mu(1e-3, 0.9, 0.5, &params) - 1e-4).abs() < 1e-18);
        assert!((update_mu(1e-3, 0.1, 0.5, &params) - 5e-3).abs() < 1e-18);
        assert_eq!(update_mu(1e-3, 0.9, 2.0, &params), 0.0);
        assert_eq!(update_mu(1e-7, 0.9, 0.5, &params), params.mu_min);
        assert_eq!(update_mu(0.5, 0.0, 0.5, &params), params.mu_max);
        assert_eq!(update_mu(1e-3, f64::NEG_INFINITY, 0.5, &params), 5e-3);
    }

    #[test]
    fn rqn_direction_examples() {
        let z = qr_update(&[e(2, 0)]).unwrap();
        let mut h = SubspaceHessian { b_hat: SquareMatrix::from_diag(&[2.0]), updates_since_reset: 1, mu: 0.0 };
        let rec = rqn_direction(&z, &mut h, &[4.0, 1.0]).unwrap();
        assert!((rec.d[0] + 2.0).abs() < 1e-15 && rec.d[1] == 0.0);
        assert_eq!(rec.case_tag, CaseTag::Rqn);

        let z2 = qr_update(&[e(3, 0), e(3, 1)]).unwrap();
        let mut id = SubspaceHessian::identity(2, 0.0);
        assert_eq!(rqn_direction(&z2, &mut id, &[1.0, 2.0, 3.0]).unwrap().d, vec![-1.0, -2.0, 0.0]);
        assert_eq!(rqn_direction(&z2, &mut id, &[0.0, 0.0, 3.0]).unwrap().d, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn rqn_direction_resets_broken_model() {
        let z = qr_update(&[e(2, 0)]).unwrap();
        let mut h = SubspaceHessian { b_hat: SquareMatrix::from_diag(&[-1.0]), updates_since_reset: 3, mu: 0.0 };
        let rec = rqn_direction(&z, &mut h, &[4.0, 1.0]).unwrap();
        assert!(h.is_identity());
        assert_eq!(rec.d, vec![-4.0, 0.0]);
    }
}
