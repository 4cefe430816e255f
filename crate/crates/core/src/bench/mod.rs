//! Benchmark harness: solver × problem matrices, result tables,
//! performance profiles and per-iteration traces.

pub mod config;
pub mod profile;

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, run_baseline_with_observer, BaselineKind};
use crate::error::{Error, Result};
use crate::params::SolverParams;
use crate::problem::Problem;
use crate::problems::lookup;
use crate::solver::{run, run_with_observer};
use crate::state::RunReport;

pub use config::BenchConfig;
pub use profile::{gnuplot_script, performance_profile, write_profile_csv, Metric, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    RlSmcg,
    Baseline(BaselineKind),
}

impl SolverKind {
    /// `rlsmcg`, `hs`, `lbfgs`, `lbfgs(<memory>)` or `bbsd`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "rlsmcg" => SolverKind::RlSmcg,
            "hs" => SolverKind::Baseline(BaselineKind::HsCg),
            "lbfgs" => SolverKind::Baseline(BaselineKind::Lbfgs { memory: 11 }),
            "bbsd" => SolverKind::Baseline(BaselineKind::BbSd),
            _ => {
                let memory = s
                    .strip_prefix("lbfgs(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|m| m.trim().parse::<usize>().ok())
                    .filter(|&m| m >= 1)
                    .ok_or_else(|| Error::UnknownSolver(s.to_string()))?;
                SolverKind::Baseline(BaselineKind::Lbfgs { memory })
            }
        })
    }

    pub fn default_params(&self, n: usize) -> SolverParams {
        match self {
            SolverKind::RlSmcg => SolverParams::for_dim(n),
            SolverKind::Baseline(b) => b.default_params(n),
        }
    }

    pub fn run(&self, problem: &Problem, params: &SolverParams) -> Result<RunReport> {
        match *self {
            SolverKind::RlSmcg => run(problem, params),
            SolverKind::Baseline(b) => run_baseline(b, problem, params),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::RlSmcg => f.write_str("rlsmcg"),
            SolverKind::Baseline(BaselineKind::Lbfgs { memory: 11 }) => f.write_str("lbfgs"),
            SolverKind::Baseline(BaselineKind::Lbfgs { memory }) => write!(f, "lbfgs({memory})"),
            SolverKind::Baseline(b) => write!(f, "{b}"),
        }
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub solver: String,
    pub problem: String,
    pub dim: usize,
    pub n_iter: usize,
    pub n_f: usize,
    pub n_g: usize,
    pub wall_time_s: f64,
    pub status: String,
    pub final_gnorm_inf: f64,
}

/// Standard start point moved by `jitter·(1+|x0_i|)·u_i`, `u ∈ [-1,1]ⁿ`,
/// from a stream keyed by `seed` and the problem name.
pub fn jittered(problem: &Problem, seed: u64, jitter: f64) -> Result<Problem> {
    if jitter == 0.0 {
        return Ok(problem.clone());
    }
    let key = problem.name().bytes().fold(seed, |h, b| h.wrapping_mul(0x100000001b3).wrapping_add(b as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let x0 = problem.x0().iter().map(|&v| v + jitter * (1.0 + v.abs()) * rng.gen_range(-1.0..=1.0)).collect();
    problem.with_start(x0)
}

/// Runs every (solver, problem) cell of `cfg`; rows are sorted by solver,
/// problem and dimension.
pub fn run_matrix(cfg: &BenchConfig) -> Result<Vec<ResultRow>> {
    let mut cells = vec![];
    for name in &cfg.problems {
        let spec = lookup(name)?;
        let problem = jittered(&spec.problem, cfg.seed, cfg.jitter)?;
        for &solver in &cfg.solvers {
            let params = cfg.params_for(solver, spec.dim)?;
            params.validate()?;
            cells.push((solver, spec.family, spec.dim, problem.clone(), params));
        }
    }
    let work = || -> Result<Vec<ResultRow>> {
        cells
            .par_iter()
            .map(|(solver, family, dim, problem, params)| {
                let mut report = solver.run(problem, params)?;
                for _ in 1..cfg.repetitions {
                    report.wall_time = report.wall_time.min(solver.run(problem, params)?.wall_time);
                }
                Ok(ResultRow {
                    solver: solver.to_string(),
                    problem: format!("{family}({dim})"),
                    dim: *dim,
                    n_iter: report.n_iter,
                    n_f: report.n_f,
                    n_g: report.n_g,
                    wall_time_s: report.wall_time,
                    status: report.status.as_str().to_string(),
                    final_gnorm_inf: report.final_gnorm_inf,
                })
            })
            .collect()
    };
    let mut rows = if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        pool.install(work)?
    } else {
        work()?
    };
    rows.sort_by(|a, b| (&a.solver, &a.problem, a.dim).cmp(&(&b.solver, &b.problem, b.dim)));
    Ok(rows)
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// One line of a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    pub case: String,
    pub alpha: f64,
    pub gnorm_inf: f64,
    #[serde(rename = "Ck")]
    pub ck: f64,
    pub state: String,
    pub mu: f64,
}

/// Per-iteration trace of one run. Baselines report their own name as the
/// case and `-` as the state.
pub fn trace(solver: SolverKind, problem: &Problem, params: &SolverParams) -> Result<(Vec<TraceRow>, RunReport)> {
    let mut rows = vec![];
    let report = match solver {
        SolverKind::RlSmcg => run_with_observer(problem, params, &mut |r| {
            rows.push(TraceRow {
                k: r.k,
                case: r.case.to_string(),
                alpha: r.alpha,
                gnorm_inf: r.gnorm_inf,
                ck: r.ck_after,
                state: r.state.to_string(),
                mu: r.mu,
            })
        })?,
        SolverKind::Baseline(b) => {
            let tag = solver.to_string().to_uppercase();
            run_baseline_with_observer(b, problem, params, &mut |r| {
                rows.push(TraceRow {
                    k: r.k,
                    case: tag.clone(),
                    alpha: r.alpha,
                    gnorm_inf: r.gnorm_inf,
                    ck: r.ck_after,
                    state: "-".into(),
                    mu: 0.0,
                })
            })?
        }
    };
    Ok((rows, report))
}

pub fn write_trace<W: std::io::Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
