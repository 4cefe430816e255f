use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rlsmcg::bench::{
    gnuplot_script, performance_profile, read_results, run_matrix, trace, write_profile_csv, write_results, write_trace,
    BenchConfig, Metric, SolverKind,
};
use rlsmcg::error::Result;
use rlsmcg::problems::{lookup, registry};

#[derive(Parser)]
#[command(name = "bench", about = "Benchmark harness for the RL_SMCG solver and its baselines")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a solver x problem matrix and write the results CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Performance profile of a results CSV.
    Profile {
        #[arg(long, default_value = "n_g")]
        metric: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Gnuplot script path; defaults to the output path with a `.gp` extension.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Per-iteration trace of one run, as CSV.
    Trace {
        #[arg(long, default_value = "rlsmcg")]
        solver: String,
        #[arg(long)]
        problem: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parameter override `name=value`; repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
    },
    /// List the registered problems.
    List,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run { config, out } => {
            let mut cfg = BenchConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            let rows = run_matrix(&cfg)?;
            write_results(&rows, &cfg.output)?;
            let solved = rows.iter().filter(|r| r.status == "CONVERGED").count();
            eprintln!("{} runs, {solved} converged, written to {}", rows.len(), cfg.output.display());
        }
        Cmd::Profile { metric, input, out, gnuplot } => {
            let metric: Metric = metric.parse()?;
            let rows = read_results(&input)?;
            let profile = performance_profile(&rows, metric)?;
            write_profile_csv(&profile, &out)?;
            let gp = gnuplot.unwrap_or_else(|| out.with_extension("gp"));
            std::fs::write(&gp, gnuplot_script(&profile, &out.to_string_lossy()))?;
            for (s, name) in profile.solvers.iter().enumerate() {
                eprintln!("{name}: rho(1) = {:.3}", profile.rho(s, 1.0));
            }
        }
        Cmd::Trace { solver, problem, out, params } => {
            let solver = SolverKind::parse(&solver)?;
            let spec = lookup(&problem)?;
            let mut p = solver.default_params(spec.dim);
            for kv in &params {
                let (k, v) = kv.split_once('=').ok_or_else(|| rlsmcg::error::Error::InvalidParameter {
                    name: "param",
                    reason: format!("expected NAME=VALUE, got `{kv}`"),
                })?;
                p.set(k.trim(), v)?;
            }
            let (rows, report) = trace(solver, &spec.problem, &p)?;
            match out {
                Some(path) => write_trace(&rows, std::fs::File::create(path)?)?,
                None => write_trace(&rows, std::io::stdout().lock())?,
            }
            eprintln!("{}: {} after {} iterations", spec.name(), report.status, report.n_iter);
        }
        Cmd::List => {
            for spec in registry() {
                println!("{}", spec.name());
            }
        }
    }
    Ok(())
}
