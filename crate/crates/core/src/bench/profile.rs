//! Dolan–Moré performance profiles over a results table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::state::RunStatus;

use super::ResultRow;

/// Points on the log-spaced `τ` grid.
pub const GRID_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Iterations,
    FunctionEvals,
    GradientEvals,
    WallTime,
}

impl Metric {
    pub fn value(&self, row: &ResultRow) -> f64 {
        match self {
            Metric::Iterations => row.n_iter as f64,
            Metric::FunctionEvals => row.n_f as f64,
            Metric::GradientEvals => row.n_g as f64,
            Metric::WallTime => row.wall_time_s,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Iterations => "n_iter",
            Metric::FunctionEvals => "n_f",
            Metric::GradientEvals => "n_g",
            Metric::WallTime => "wall_time",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "n_iter" | "iter" | "niter" => Metric::Iterations,
            "n_f" | "nf" => Metric::FunctionEvals,
            "n_g" | "ng" => Metric::GradientEvals,
            "wall_time" | "time" | "wall_time_s" => Metric::WallTime,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "metric",
                    reason: format!("expected n_iter, n_f, n_g or wall_time, got `{s}`"),
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub metric: Metric,
    pub solvers: Vec<String>,
    pub taus: Vec<f64>,
    /// `curves[s][i] = ρ_s(taus[i])`
    pub curves: Vec<Vec<f64>>,
    /// Problems that no solver solved. They have no ratios but still count
    /// in the denominator of `ρ_s`.
    pub dropped: Vec<String>,
    /// Ratios `r_{p,s}` per kept problem, `+∞` when unsolved.
    pub ratios: BTreeMap<String, Vec<f64>>,
}

impl Profile {
    /// `ρ_s(τ)` for an arbitrary `τ`.
    pub fn rho(&self, solver: usize, tau: f64) -> f64 {
        let n = self.ratios.len() + self.dropped.len();
        if n == 0 {
            return 0.0;
        }
        self.ratios.values().filter(|r| r[solver] <= tau).count() as f64 / n as f64
    }
}

fn ratio(m: f64, best: f64) -> f64 {
    if best > 0.0 {
        m / best
    } else if m <= best {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Builds the profile of `metric` from `rows`.
///
/// Only `CONVERGED` runs count as solved. A problem is keyed by
/// `problem` plus `dim`; a (solver, problem) pair missing from the table
/// counts as unsolved.
pub fn performance_profile(rows: &[ResultRow], metric: Metric) -> Result<Profile> {
    let mut solvers: Vec<String> = rows.iter().map(|r| r.solver.clone()).collect();
    solvers.sort();
    solvers.dedup();
    if solvers.is_empty() {
        return Err(Error::InvalidParameter { name: "rows", reason: "no results to profile".into() });
    }
    let mut table: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        let key = if r.problem.ends_with(')') { r.problem.clone() } else { format!("{}({})", r.problem, r.dim) };
        let entry = table.entry(key).or_insert_with(|| vec![f64::INFINITY; solvers.len()]);
        let s = solvers.binary_search(&r.solver).expect("solver listed");
        if r.status == RunStatus::Converged.as_str() {
            entry[s] = metric.value(r);
        }
    }

    let mut dropped = vec![];
    let mut ratios = BTreeMap::new();
    for (p, vals) in table {
        let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            warn!("no solver solved {p}; dropped from the profile");
            dropped.push(p);
            continue;
        }
        ratios.insert(p, vals.iter().map(|&m| if m.is_finite() { ratio(m, best) } else { f64::INFINITY }).collect::<Vec<_>>());
    }

    let max_ratio = ratios.values().flatten().cloned().filter(|r| r.is_finite()).fold(1.0f64, f64::max);
    let taus: Vec<f64> = if max_ratio <= 1.0 {
        vec![1.0]
    } else {
        let l = max_ratio.ln();
        (0..GRID_POINTS)
            .map(|i| if i + 1 == GRID_POINTS { max_ratio } else { (l * i as f64 / (GRID_POINTS - 1) as f64).exp() })
            .collect()
    };
    let mut profile = Profile { metric, solvers, taus, curves: vec![], dropped, ratios };
    profile.curves = (0..profile.solvers.len()).map(|s| profile.taus.iter().map(|&t| profile.rho(s, t)).collect()).collect();
    Ok(profile)
}

/// `tau,<solver1>,<solver2>,...`
pub fn write_profile_csv(profile: &Profile, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["tau".to_string()];
    header.extend(profile.solvers.iter().cloned());
    w.write_record(&header)?;
    for (i, tau) in profile.taus.iter().enumerate() {
        let mut rec = vec![tau.to_string()];
        rec.extend(profile.curves.iter().map(|c| c[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A gnuplot script that plots `csv_path` with a log τ axis.
pub fn gnuplot_script(profile: &Profile, csv_path: &str) -> String {
    let mut s = String::new();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set key bottom right").unwrap();
    writeln!(s, "set logscale x 2").unwrap();
    writeln!(s, "set xlabel 'tau'").unwrap();
    writeln!(s, "set ylabel 'fraction of problems ({})'", profile.metric.as_str()).unwrap();
    writeln!(s, "set yrange [0:1.05]").unwrap();
    let plots: Vec<String> = profile
        .solvers
        .iter()
        .enumerate()
        .map(|(i, name)| format!("'{csv_path}' using 1:{} with steps title '{name}'", i + 2))
        .collect();
    writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
    s
}
