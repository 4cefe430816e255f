//! Flat `key = value` benchmark configuration.
//!
//! ```text
//! # comment
//! solvers     = rlsmcg, hs, lbfgs(5), bbsd
//! problems    = suite            # or a list: ext_rosenbrock(100), quad_hilbert(8)
//! output      = results.csv
//! repetitions = 3
//! seed        = 7
//! jitter      = 0.0
//! threads     = 4
//! param.grad_tol = 1e-6
//! ```
//!
//! Keys may appear in any order; a repeated key is an error. `param.<name>`
//! lines override solver parameters (see [`SolverParams::set`]).

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::params::SolverParams;
use crate::problems::{lookup, registry};

use super::SolverKind;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub solvers: Vec<SolverKind>,
    /// Problem names as `family(dim)`.
    pub problems: Vec<String>,
    pub output: PathBuf,
    /// Timed runs per cell; wall time is the best of them.
    pub repetitions: usize,
    pub seed: u64,
    /// Relative size of the seeded start-point perturbation; 0 keeps the
    /// standard start points.
    pub jitter: f64,
    /// Worker threads; 0 picks the rayon default.
    pub threads: usize,
    /// `param.*` overrides in file order.
    pub params: Vec<(String, String)>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            solvers: vec![],
            problems: vec![],
            output: PathBuf::from("results.csv"),
            repetitions: 1,
            seed: 0,
            jitter: 0.0,
            threads: 0,
            params: vec![],
        }
    }
}

/// Splits on commas that are not inside parentheses.
fn split_list(v: &str) -> Vec<String> {
    let mut out = vec![];
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in v.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur.trim().to_string());
    out.retain(|s| !s.is_empty());
    out
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BenchConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| Error::Config { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("`{key}` expects an integer, got `{v}`")));
            match key {
                "solvers" => {
                    cfg.solvers = split_list(value)
                        .iter()
                        .map(|s| SolverKind::parse(s).map_err(|e| err(e.to_string())))
                        .collect::<Result<_>>()?;
                }
                "problems" => {
                    cfg.problems = if value == "suite" {
                        registry().iter().map(|s| s.name()).collect()
                    } else {
                        let names = split_list(value);
                        for n in &names {
                            lookup(n).map_err(|e| err(e.to_string()))?;
                        }
                        names
                    };
                }
                "output" => cfg.output = PathBuf::from(value),
                "repetitions" => cfg.repetitions = int(value)?.max(1) as usize,
                "seed" => cfg.seed = int(value)?,
                "threads" => cfg.threads = int(value)? as usize,
                "jitter" => {
                    cfg.jitter = value
                        .parse::<f64>()
                        .ok()
                        .filter(|j| j.is_finite() && *j >= 0.0)
                        .ok_or_else(|| err(format!("`jitter` expects a nonnegative number, got `{value}`")))?;
                }
                _ => match key.strip_prefix("param.") {
                    Some(name) => {
                        SolverParams::for_dim(10).set(name, value).map_err(|e| err(e.to_string()))?;
                        cfg.params.push((name.to_string(), value.to_string()));
                    }
                    None => return Err(err(format!("unknown key `{key}`"))),
                },
            }
        }
        if cfg.solvers.is_empty() {
            return Err(Error::Config { line: 0, message: "no solvers given".into() });
        }
        if cfg.problems.is_empty() {
            return Err(Error::Config { line: 0, message: "no problems given".into() });
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parameters for `solver` on an `n`-dimensional problem with the
    /// overrides applied.
    pub fn params_for(&self, solver: SolverKind, n: usize) -> Result<SolverParams> {
        let mut p = solver.default_params(n);
        for (k, v) in &self.params {
            p.set(k, v)?;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;

    #[test]
    fn full_config() {
        let cfg = BenchConfig::parse(
            "# demo\nsolvers = rlsmcg, lbfgs(5)\nproblems = ext_rosenbrock(10), quad_hilbert(8)\n\
             output = out.csv\nrepetitions = 2\nseed = 9 # trailing\nparam.grad_tol = 1e-8\n",
        )
        .unwrap();
        assert_eq!(cfg.solvers, vec![SolverKind::RlSmcg, SolverKind::Baseline(BaselineKind::Lbfgs { memory: 5 })]);
        assert_eq!(cfg.problems, vec!["ext_rosenbrock(10)", "quad_hilbert(8)"]);
        assert_eq!((cfg.repetitions, cfg.seed), (2, 9));
        assert_eq!(cfg.params_for(SolverKind::RlSmcg, 4).unwrap().grad_tol, 1e-8);
    }

    #[test]
    fn suite_keyword_expands() {
        let cfg = BenchConfig::parse("solvers = hs\nproblems = suite\n").unwrap();
        assert_eq!(cfg.problems.len(), registry().len());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("solvers = rlsmcg\nproblems = nosuch(3)\n", 2),
            ("solvers = newton\n", 1),
            ("solvers = hs\nsolvers = hs\n", 2),
            ("solvers = hs\nproblems = suite\nparam.bogus = 1\n", 3),
            ("solvers = hs\nwhat\n", 2),
            ("solvers = hs\nproblems = suite\nseed = -1\n", 3),
        ];
        for (text, want) in cases {
            match BenchConfig::parse(text) {
                Err(Error::Config { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(BenchConfig::parse("problems = suite\n"), Err(Error::Config { line: 0, .. })));
    }
}
