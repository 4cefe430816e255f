//! Objective abstraction and evaluation accounting.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A smooth function `R^n -> R` with its exact gradient.
///
/// Implementations must be pure functions of `x` so that independent runs
/// can share one instance across threads.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
}

/// Adapter turning a pair of closures into an [`Objective`].
pub struct FnObjective<F, G> {
    dim: usize,
    f: F,
    g: G,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F, g: G) -> Self {
        Self { dim, f, g }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        (self.g)(x, g)
    }
}

/// A named objective together with its standard starting point.
#[derive(Clone)]
pub struct Problem {
    name: String,
    x0: Vec<f64>,
    objective: Arc<dyn Objective>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem").field("name", &self.name).field("dim", &self.dim()).finish()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, x0: Vec<f64>, objective: Arc<dyn Objective>) -> Result<Self> {
        let n = objective.dim();
        if n == 0 {
            return Err(Error::InvalidParameter { name: "dim", reason: "must be at least 1".into() });
        }
        if x0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
        }
        Ok(Self { name: name.into(), x0, objective })
    }

    pub fn from_fns<F, G>(name: impl Into<String>, x0: Vec<f64>, f: F, g: G) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let n = x0.len();
        Self::new(name, x0, Arc::new(FnObjective::new(n, f, g)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Same objective, different starting point.
    pub fn with_start(&self, x0: Vec<f64>) -> Result<Self> {
        Self::new(self.name.clone(), x0, Arc::clone(&self.objective))
    }

    pub fn objective(&self) -> &dyn Objective {
        &*self.objective
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.objective.gradient(x, &mut g);
        g
    }
}

/// Counts every function and gradient evaluation of one run.
///
/// All solvers evaluate the objective exclusively through this wrapper.
pub struct Evaluator<'p> {
    problem: &'p Problem,
    n_f: usize,
    n_g: usize,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p Problem) -> Self {
        Self { problem, n_f: 0, n_g: 0 }
    }

    pub fn problem(&self) -> &'p Problem {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn f(&mut self, x: &[f64]) -> f64 {
        self.n_f += 1;
        self.problem.objective.value(x)
    }

    pub fn g(&mut self, x: &[f64], out: &mut [f64]) {
        self.n_g += 1;
        self.problem.objective.gradient(x, out);
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }
}

/// Fourth-order central-difference gradient with per-coordinate step
/// `1e-3·(1+|x_i|)`.
///
/// The stencil is exact for polynomials up to degree four, so the step can
/// be large enough to keep cancellation error small on badly scaled
/// objectives.
pub fn finite_diff_gradient(objective: &dyn Objective, x: &[f64]) -> Result<Vec<f64>> {
    let n = objective.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let mut xp = x.to_vec();
    let mut out = vec![0.0; n];
    let at = |xp: &mut Vec<f64>, i: usize, v: f64| {
        xp[i] = v;
        objective.value(xp)
    };
    for i in 0..n {
        let h = 1e-3 * (1.0 + x[i].abs());
        let f2 = at(&mut xp, i, x[i] + 2.0 * h);
        let f1 = at(&mut xp, i, x[i] + h);
        let m1 = at(&mut xp, i, x[i] - h);
        let m2 = at(&mut xp, i, x[i] - 2.0 * h);
        xp[i] = x[i];
        if ![f2, f1, m1, m2].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        out[i] = (8.0 * (f1 - m1) - (f2 - m2)) / (12.0 * h);
    }
    Ok(out)
}
