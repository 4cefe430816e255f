//! Solver state container and the records a run produces.

use std::collections::VecDeque;
use std::fmt;

use crate::linesearch::NonmonotoneLedger;
use crate::subspace::{SubspaceFactorization, SubspaceHessian};

/// Which rule produced a search direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// Minimizer of the cubic-regularized 2-D model.
    RegSubproblem,
    /// Minimizer of the plain quadratic 2-D model.
    QuadSubproblem,
    /// Hestenes–Stiefel conjugate gradient direction.
    Hs,
    /// Steepest descent.
    NegGrad,
    /// Regularized quasi-Newton step in the direction subspace.
    Rqn,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::RegSubproblem => "REG_SUBPROBLEM",
            CaseTag::QuadSubproblem => "QUAD_SUBPROBLEM",
            CaseTag::Hs => "HS",
            CaseTag::NegGrad => "NEG_GRAD",
            CaseTag::Rqn => "RQN",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionRecord {
    pub d: Vec<f64>,
    pub case_tag: CaseTag,
    /// `g_kᵀ d_k`
    pub g_td: f64,
}

impl DirectionRecord {
    pub fn steepest_descent(g: &[f64]) -> Self {
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        let g_td = -crate::linalg::norm2_sq(g);
        Self { d, case_tag: CaseTag::NegGrad, g_td }
    }
}

/// Iteration type of the driver's state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationType {
    Smcg,
    Rqn,
}

impl IterationType {
    pub fn as_str(&self) -> &'static str {
        match self {
            IterationType::Smcg => "SMCG",
            IterationType::Rqn => "RQN",
        }
    }
}

impl fmt::Display for IterationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RunStatus {
    Converged,
    IterCap,
    LinesearchFail,
    NumericFail,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "CONVERGED",
            RunStatus::IterCap => "ITER_CAP",
            RunStatus::LinesearchFail => "LINESEARCH_FAIL",
            RunStatus::NumericFail => "NUMERIC_FAIL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CONVERGED" => Some(RunStatus::Converged),
            "ITER_CAP" => Some(RunStatus::IterCap),
            "LINESEARCH_FAIL" => Some(RunStatus::LinesearchFail),
            "NUMERIC_FAIL" => Some(RunStatus::NumericFail),
            _ => None,
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub n_iter: usize,
    pub n_f: usize,
    pub n_g: usize,
    pub wall_time: f64,
    pub status: RunStatus,
    pub final_gnorm_inf: f64,
    pub final_f: f64,
    pub x: Vec<f64>,
    /// Iterations that needed the steepest-descent rescue after a failed
    /// line search.
    pub rescues: usize,
}

/// Consecutive-iteration counters behind the periodic restart rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestartCounters {
    pub iter_restart: usize,
    pub iter_quad: usize,
    pub min_quad: usize,
}

impl RestartCounters {
    pub fn new(min_quad: usize) -> Self {
        Self { iter_restart: 0, iter_quad: 0, min_quad }
    }

    /// True when the counter rule forces `d = -g` this iteration.
    pub fn restart_due(&self) -> bool {
        self.iter_quad == self.min_quad && self.iter_quad != self.iter_restart
    }
}

/// Everything the driver carries from one iteration to the next.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub k: usize,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub f: f64,
    pub s_prev: Option<Vec<f64>>,
    pub y_prev: Option<Vec<f64>>,
    pub d_prev: Option<Vec<f64>>,
    pub case_prev: Option<CaseTag>,
    /// Quadratic-closeness of the latest step; `+∞` when undefined.
    pub t_cur: f64,
    /// Quadratic-closeness of the step before; `+∞` until two samples exist.
    pub t_prev: f64,
    pub ledger: NonmonotoneLedger,
    pub state_flag: IterationType,
    pub counters: RestartCounters,
    pub dir_history: VecDeque<Vec<f64>>,
    pub mu: f64,
    pub subspace: Option<SubspaceFactorization>,
    pub bhat: Option<SubspaceHessian>,
    /// Iterations completed in the current subspace quasi-Newton phase.
    pub rqn_iters: usize,
    pub consecutive_ls_failures: usize,
}

impl SolverState {
    pub fn new(x: Vec<f64>, f: f64, g: Vec<f64>, min_quad: usize) -> Self {
        Self {
            k: 0,
            ledger: NonmonotoneLedger::new(f),
            x,
            g,
            f,
            s_prev: None,
            y_prev: None,
            d_prev: None,
            case_prev: None,
            t_cur: f64::INFINITY,
            t_prev: f64::INFINITY,
            state_flag: IterationType::Smcg,
            counters: RestartCounters::new(min_quad),
            dir_history: VecDeque::new(),
            mu: 0.0,
            subspace: None,
            bhat: None,
            rqn_iters: 0,
            consecutive_ls_failures: 0,
        }
    }

    /// Appends `d` to the direction ring buffer, dropping the oldest entry
    /// once `memory` directions are stored.
    pub fn push_direction(&mut self, d: Vec<f64>, memory: usize) {
        self.dir_history.push_front(d);
        while self.dir_history.len() > memory {
            self.dir_history.pop_back();
        }
    }
}
