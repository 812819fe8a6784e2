use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use malab::experiments::{
    log_range, run_blowup, run_catalog, run_instability, run_linearized, run_negative_alpha, ExperimentConfig,
    ExperimentName, Report, SolveSummary,
};
use malab::masolver::{solve, DirichletProblem, SolverOptions};

/// Numerical laboratory for det D^2 u = |x|^alpha on the unit disc.
///
/// Exit status: 0 completed, 2 completed with inconclusive verdicts, 1 error.
#[derive(Parser)]
#[command(name = "malab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Out {
    /// Directory for report.json and CSV tables; without it the report is
    /// printed to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Homogeneous solutions by exponent and symmetry order.
    Catalog {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 0.0, 2.0, 6.0])]
        alpha_list: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        k_max: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Boundary data u0 - eps cos(2 theta): section traces and verdicts.
    Instability {
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        alpha: f64,
        /// Comma-separated amplitudes; defaults to the standard sweep.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Section heights as `hi,lo,count`, log-spaced.
        #[arg(long, value_delimiter = ',')]
        t_range: Option<Vec<f64>>,
        #[command(flatten)]
        out: Out,
    },
    /// Negative exponent with boundary data u0 (1 + delta cos theta).
    Negative {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
        perturbation: f64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Blow-ups of a saved field against the catalog.
    Blowup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1])]
        r_list: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        k_max: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Decay exponent of the cos(2 theta) mode of the linearized operator.
    Linearized {
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Solve a Dirichlet problem file and save the solution field.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Serialize)]
struct SolveReport {
    problem: String,
    field: Option<String>,
    solver: SolveSummary,
}

impl Report for SolveReport {}

fn emit<R: Report>(report: &R, out: &Out) -> malab::Result<bool> {
    match &out.out {
        Some(dir) => report.write(dir)?,
        None => {
            let text = serde_json::to_string_pretty(report)?;
            // a closed pipe (`malab ... | head`) is not an error
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(malab::Error::io("<stdout>", e)),
                _ => {}
            }
        }
    }
    Ok(report.inconclusive())
}

fn run(cli: Cli) -> malab::Result<bool> {
    match cli.command {
        Command::Catalog { alpha_list, k_max, out } => {
            let mut cfg = ExperimentConfig::new(ExperimentName::Catalog);
            cfg.alpha_list = alpha_list;
            cfg.k_max = k_max;
            emit(&run_catalog(&cfg)?, &out)
        }
        Command::Instability { alpha, eps, grid, t_range, out } => {
            let mut cfg = ExperimentConfig::new(ExperimentName::Instability);
            cfg.alpha = alpha;
            cfg.grid_n = grid;
            if let Some(e) = eps {
                cfg.epsilons = e;
            }
            if let Some(t) = t_range {
                cfg.t_range = parse_log_range(&t)?;
            }
            emit(&run_instability(&cfg)?, &out)
        }
        Command::Negative { alpha, perturbation, grid, out } => {
            let mut cfg = ExperimentConfig::new(ExperimentName::NegativeAlpha);
            cfg.alpha = alpha;
            cfg.perturbation = perturbation;
            cfg.grid_n = grid;
            emit(&run_negative_alpha(&cfg)?, &out)
        }
        Command::Blowup { input, alpha, r_list, k_max, out } => {
            let mut cfg = ExperimentConfig::new(ExperimentName::Blowup);
            cfg.alpha = alpha;
            cfg.input = Some(input);
            cfg.r_range = r_list;
            cfg.k_max = k_max;
            emit(&run_blowup(&cfg)?, &out)
        }
        Command::Linearized { alpha, grid, out } => {
            let mut cfg = ExperimentConfig::new(ExperimentName::Linearized);
            cfg.alpha = alpha;
            cfg.grid_n = grid;
            emit(&run_linearized(&cfg)?, &out)
        }
        Command::Solve { problem, tol, out } => {
            let p = DirichletProblem::load(&problem)?;
            let opts = SolverOptions { tol, ..SolverOptions::default() };
            let sol = solve(&p, &opts)?;
            let field = match &out.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| malab::Error::io(dir, e))?;
                    let path = dir.join("solution.field");
                    sol.save(&path)?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            let report = SolveReport {
                problem: problem.display().to_string(),
                field,
                solver: SolveSummary::from(&sol),
            };
            emit(&report, &out)
        }
    }
}

fn parse_log_range(v: &[f64]) -> malab::Result<Vec<f64>> {
    match v {
        [hi, lo, n] if *n >= 2.0 && n.fract() == 0.0 => Ok(log_range(*hi, *lo, *n as usize)),
        _ => Err(malab::Error::Domain(format!(
            "expected `hi,lo,count` with an integer count >= 2, got {v:?}"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors exit 1; status 2 is reserved for inconclusive runs
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
