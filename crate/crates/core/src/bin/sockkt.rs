use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sockkt::config::Settings;
use sockkt::kkt::Verdict;
use sockkt::lp;
use sockkt::report::{
    check_summary, run_check, run_convexity, run_cq, run_derivative, ProblemFile, RunError,
    RunOptions,
};

/// Second-order KKT checker for smooth inequality-constrained vector programs.
#[derive(Parser)]
#[command(name = "sockkt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify or refute the second-order conditions at each point.
    Check(Common),
    /// Constraint-qualification falsifiers.
    Cq(Common),
    /// Generalized-convexity probes of one function.
    Convexity(Common),
    /// Second-order directional derivative of one function.
    Deriv(Common),
}

/// Comma-separated vector argument.
#[derive(Clone, Debug)]
struct Vector(Vec<f64>);

fn vector(s: &str) -> Result<Vector, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Vector)
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    file: PathBuf,
    /// Index of the point to analyse.
    #[arg(long)]
    point: Option<usize>,
    /// Index of a direction listed for the point.
    #[arg(long)]
    direction: Option<usize>,
    /// Literal direction, e.g. `1,0`.
    #[arg(long, value_parser = vector, allow_hyphen_values = true)]
    d: Option<Vector>,
    /// Curvature vector of the curve x + t d + t²z/2.
    #[arg(long, value_parser = vector, allow_hyphen_values = true)]
    z: Option<Vector>,
    /// Function label (f1, g2, ...).
    #[arg(long)]
    function: Option<String>,
    /// Probe the negated function.
    #[arg(long)]
    concave: bool,
    /// Samples per falsifier (per convexity probe for `convexity`).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    skip_cq: bool,
    /// Print a readable summary to stderr.
    #[arg(long)]
    summary: bool,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tol_rel: Option<f64>,
    #[arg(long)]
    richardson: bool,
    /// Sampled critical directions per point.
    #[arg(long)]
    n_dir: Option<usize>,
    #[arg(long)]
    tangent_steps: Option<usize>,
    #[arg(long)]
    tangent_search_evals: Option<usize>,
    /// Log simplex pivots to stderr.
    #[arg(long)]
    lp_trace: bool,
}

impl Common {
    fn settings(&self, convexity: bool) -> Settings {
        let mut s = Settings::default();
        if let Some(n) = self.samples {
            if convexity {
                s.convexity_samples = n;
            } else {
                s.samples = n;
            }
        }
        s.seed = self.seed.unwrap_or(s.seed);
        s.skip_cq = self.skip_cq;
        s.grid.t0 = self.t0.unwrap_or(s.grid.t0);
        s.grid.rho = self.rho.unwrap_or(s.grid.rho);
        s.grid.steps = self.steps.unwrap_or(s.grid.steps);
        s.grid.tol_rel = self.tol_rel.unwrap_or(s.grid.tol_rel);
        s.grid.richardson = self.richardson;
        s.n_dir = self.n_dir.unwrap_or(s.n_dir);
        s.tangent.steps = self.tangent_steps.unwrap_or(s.tangent.steps);
        s.tangent.search_evals = self.tangent_search_evals.unwrap_or(s.tangent.search_evals);
        s
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            point: self.point,
            direction: self.direction,
            d: self.d.as_ref().map(|v| v.0.clone()),
            z: self.z.as_ref().map(|v| v.0.clone()),
            function: self.function.clone(),
            concave: self.concave,
        }
    }
}

fn emit<T: Serialize>(report: &T) {
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    // a closed pipe is not an error of the run
    let _ = writeln!(std::io::stdout().lock(), "{json}");
}

fn run(cli: Cli) -> Result<ExitCode, RunError> {
    let (Command::Check(c) | Command::Cq(c) | Command::Convexity(c) | Command::Deriv(c)) =
        &cli.command;
    lp::set_trace(c.lp_trace);
    let file = ProblemFile::load(&c.file)?;
    let opts = c.options();
    match &cli.command {
        Command::Check(_) => {
            let r = run_check(&file, &c.settings(false), &opts)?;
            emit(&r);
            if c.summary {
                eprint!("{}", check_summary(&r));
            }
            let refuted = r.body.verdict == Verdict::Refuted;
            return Ok(ExitCode::from(if refuted { 1 } else { 0 }));
        }
        Command::Cq(_) => emit(&run_cq(&file, &c.settings(false), &opts)?),
        Command::Convexity(_) => emit(&run_convexity(&file, &c.settings(true), &opts)?),
        Command::Deriv(_) => emit(&run_derivative(&file, &c.settings(false), &opts)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sockkt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
