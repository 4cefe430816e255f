//! Registry of analytic test problems addressable as `family(dim)`.

mod families;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{finite_diff_gradient, FnObjective, Problem};

pub use families::{hilbert, palmer_abscissae};

/// A registered problem instance together with what is known about it.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub family: &'static str,
    pub dim: usize,
    pub known_fmin: Option<f64>,
    pub known_minimizer: Option<Vec<f64>>,
    /// The objective is a convex quadratic.
    pub quadratic: bool,
    pub problem: Problem,
}

impl ProblemSpec {
    /// `family(dim)`
    pub fn name(&self) -> String {
        format!("{}({})", self.family, self.dim)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum DimRule {
    Any,
    /// At least this many variables.
    AtLeast(usize),
    MultipleOf(usize),
}

/// A scalable problem family.
#[derive(Clone, Copy)]
pub struct Family {
    pub name: &'static str,
    rule: DimRule,
    /// Dimensions included in [`registry`].
    pub suite_dims: &'static [usize],
    build: fn(usize) -> families::Built,
}

impl std::fmt::Debug for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Family").field("name", &self.name).finish()
    }
}

const SCALABLE: &[usize] = &[10, 100, 1000];

const FAMILIES: &[Family] = &[
    Family { name: "quad_diag", rule: DimRule::Any, suite_dims: SCALABLE, build: families::quad_diag },
    Family { name: "quad_hilbert", rule: DimRule::Any, suite_dims: &[6, 8, 10], build: families::quad_hilbert },
    Family { name: "palmer_poly", rule: DimRule::AtLeast(4), suite_dims: &[8], build: families::palmer_poly },
    Family { name: "ext_rosenbrock", rule: DimRule::MultipleOf(2), suite_dims: SCALABLE, build: families::ext_rosenbrock },
    Family { name: "ext_powell", rule: DimRule::MultipleOf(4), suite_dims: &[12, 100, 1000], build: families::ext_powell },
    Family { name: "trigonometric", rule: DimRule::Any, suite_dims: SCALABLE, build: families::trigonometric },
    Family { name: "broyden_tridiag", rule: DimRule::Any, suite_dims: SCALABLE, build: families::broyden_tridiag },
    Family { name: "ext_beale", rule: DimRule::MultipleOf(2), suite_dims: SCALABLE, build: families::ext_beale },
    Family { name: "ext_wood", rule: DimRule::MultipleOf(4), suite_dims: &[4, 100, 1000], build: families::ext_wood },
    Family { name: "raydan1", rule: DimRule::Any, suite_dims: SCALABLE, build: families::raydan1 },
    Family { name: "raydan2", rule: DimRule::Any, suite_dims: SCALABLE, build: families::raydan2 },
    Family { name: "penalty1", rule: DimRule::Any, suite_dims: SCALABLE, build: families::penalty1 },
    Family { name: "arwhead", rule: DimRule::AtLeast(2), suite_dims: SCALABLE, build: families::arwhead },
    Family { name: "dqdrtic", rule: DimRule::AtLeast(3), suite_dims: SCALABLE, build: families::dqdrtic },
    Family { name: "engval1", rule: DimRule::AtLeast(2), suite_dims: SCALABLE, build: families::engval1 },
    Family { name: "fletchcr", rule: DimRule::AtLeast(2), suite_dims: SCALABLE, build: families::fletchcr },
    Family { name: "ext_himmelblau", rule: DimRule::MultipleOf(2), suite_dims: SCALABLE, build: families::ext_himmelblau },
    Family { name: "tridia", rule: DimRule::Any, suite_dims: SCALABLE, build: families::tridia },
    Family { name: "liarwhd", rule: DimRule::Any, suite_dims: SCALABLE, build: families::liarwhd },
    Family { name: "quartc", rule: DimRule::Any, suite_dims: SCALABLE, build: families::quartc },
    Family { name: "dixon_price", rule: DimRule::AtLeast(2), suite_dims: SCALABLE, build: families::dixon_price },
    Family { name: "ext_tridiag1", rule: DimRule::AtLeast(2), suite_dims: SCALABLE, build: families::ext_tridiag1 },
];

pub fn families() -> &'static [Family] {
    FAMILIES
}

pub fn family(name: &str) -> Option<&'static Family> {
    FAMILIES.iter().find(|f| f.name == name)
}

impl Family {
    pub fn instantiate(&self, dim: usize) -> Result<ProblemSpec> {
        let bad = |reason: String| Error::InvalidDimension { family: self.name.to_string(), dim, reason };
        match self.rule {
            _ if dim == 0 => return Err(bad("must be positive".into())),
            DimRule::AtLeast(m) if dim < m => return Err(bad(format!("must be at least {m}"))),
            DimRule::MultipleOf(m) if dim % m != 0 => return Err(bad(format!("must be a multiple of {m}"))),
            _ => {}
        }
        let b = (self.build)(dim);
        let problem = Problem::new(format!("{}({dim})", self.name), b.x0, Arc::new(FnObjective::new(dim, b.f, b.g)))?;
        Ok(ProblemSpec {
            family: self.name,
            dim,
            known_fmin: b.fmin,
            known_minimizer: b.minimizer,
            quadratic: b.quadratic,
            problem,
        })
    }
}

/// Every family at each of its suite dimensions.
pub fn registry() -> Vec<ProblemSpec> {
    FAMILIES
        .iter()
        .flat_map(|f| f.suite_dims.iter().map(move |&d| f.instantiate(d).expect("suite dimension is valid")))
        .collect()
}

/// Resolves `family(dim)`; a bare family name uses its smallest suite
/// dimension.
pub fn lookup(name: &str) -> Result<ProblemSpec> {
    let name = name.trim();
    let not_found = || Error::UnknownProblem(name.to_string());
    let (fam, dim) = match name.split_once('(') {
        Some((fam, rest)) => {
            let digits = rest.strip_suffix(')').ok_or_else(not_found)?;
            (fam.trim(), Some(digits.trim().parse::<usize>().map_err(|_| not_found())?))
        }
        None => (name, None),
    };
    let f = family(fam).ok_or_else(not_found)?;
    f.instantiate(dim.unwrap_or(f.suite_dims[0]))
}

/// Outcome of [`verify_gradients`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub passed: bool,
    pub worst_rel_err: f64,
    /// First violation: `(point index, coordinate, analytic, finite difference)`.
    pub failure: Option<(usize, usize, f64, f64)>,
}

/// Relative error tolerance of [`verify_gradients`].
pub const GRADIENT_TOL: f64 = 1e-6;

/// Compares the analytic gradient against finite differences at `n_points`
/// random points `x0 + 0.1·(1+|x0|)·u`, `u ∈ [-1,1]ⁿ`.
///
/// The error of coordinate `i` is `|g_i − fd_i| / max(1, |g_i|)`.
pub fn verify_gradients(problem: &Problem, n_points: usize, seed: u64) -> Result<GradientCheck> {
    if n_points == 0 {
        return Err(Error::InvalidParameter { name: "n_points", reason: "must be at least 1".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failure = None;
    for p in 0..n_points {
        let x: Vec<f64> = problem.x0().iter().map(|&v| v + 0.1 * (1.0 + v.abs()) * rng.gen_range(-1.0..=1.0)).collect();
        let g = problem.gradient(&x);
        let fd = finite_diff_gradient(problem.objective(), &x)?;
        for (i, (&a, &b)) in g.iter().zip(&fd).enumerate() {
            let err = (a - b).abs() / a.abs().max(1.0);
            if !(err <= GRADIENT_TOL) && failure.is_none() {
                failure = Some((p, i, a, b));
            }
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
    }
    Ok(GradientCheck { passed: failure.is_none(), worst_rel_err: worst, failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_lookup() {
        let spec = lookup("ext_rosenbrock(100)").unwrap();
        assert_eq!(spec.dim, 100);
        assert_eq!(&spec.problem.x0()[..4], &[-1.2, 1.0, -1.2, 1.0]);
        assert_eq!(spec.name(), "ext_rosenbrock(100)");
    }

    #[test]
    fn hilbert_lookup() {
        let spec = lookup("quad_hilbert(8)").unwrap();
        assert_eq!(spec.known_fmin, Some(0.0));
        let e3 = {
            let mut v = vec![0.0; 8];
            v[2] = 1.0;
            v
        };
        // ½ H_33 = ½ · 1/5
        assert!((spec.problem.value(&e3) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unknown_and_invalid_names() {
        assert_eq!(lookup("nosuch").unwrap_err(), Error::UnknownProblem("nosuch".into()));
        assert!(matches!(lookup("ext_rosenbrock(3)"), Err(Error::InvalidDimension { .. })));
        assert!(matches!(lookup("quad_diag(x)"), Err(Error::UnknownProblem(_))));
        assert!(matches!(lookup("quad_diag(4"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn registry_is_large_enough() {
        let reg = registry();
        let fams: std::collections::BTreeSet<_> = reg.iter().map(|s| s.family).collect();
        assert!(fams.len() >= 20);
        assert!(reg.iter().any(|s| s.dim == 1000));
        assert!(reg.iter().any(|s| s.dim <= 10));
    }

    #[test]
    fn known_minima_are_reproduced() {
        for f in families() {
            let spec = f.instantiate(f.suite_dims[0]).unwrap();
            if let (Some(x), Some(fmin)) = (&spec.known_minimizer, spec.known_fmin) {
                let v = spec.problem.value(x);
                assert!((v - fmin).abs() <= 1e-12, "{}: {v} vs {fmin}", spec.name());
            }
        }
    }

    #[test]
    fn gradient_checks_on_small_instances() {
        for f in families() {
            let spec = f.instantiate(f.suite_dims[0]).unwrap();
            let r = verify_gradients(&spec.problem, 3, 7).unwrap();
            assert!(r.passed, "{}: {r:?}", spec.name());
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let spec = lookup("ext_rosenbrock(10)").unwrap();
        let inner = spec.problem.clone();
        let bad = Problem::from_fns(
            "bad",
            inner.x0().to_vec(),
            {
                let p = inner.clone();
                move |x| p.value(x)
            },
            move |x, g| {
                g.copy_from_slice(&inner.gradient(x));
                g[3] += 0.5;
            },
        )
        .unwrap();
        let r = verify_gradients(&bad, 2, 1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failure.unwrap().1, 3);
    }
}
