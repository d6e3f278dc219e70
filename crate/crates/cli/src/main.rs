use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use aeds::{list_examples, run_file, CommandKind, Overrides};

/// Symbolic-numeric exterior differential systems on Lie algebroids.
#[derive(Parser)]
#[command(name = "aeds", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Problem file (TOML).
    file: PathBuf,
    /// Emit the machine-readable JSON report on stdout.
    #[arg(long)]
    json: bool,
    /// Override the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the absolute tolerance.
    #[arg(long)]
    tol_abs: Option<f64>,
    /// Override the relative tolerance.
    #[arg(long)]
    tol_rel: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the algebroid axioms (antisymmetry, anchor compatibility,
    /// Jacobi identity).
    Validate(Common),
    /// Check whether the generators span a differential ideal.
    IdealCheck(Common),
    /// Check a bundle section against the integral-manifold system and
    /// the dependency condition.
    IntegralCheck(Common),
    /// Build the inverse-problem algebroid and report its derived fields
    /// and structural identities.
    IpReport(Common),
    /// Check a candidate multiplier against the reduced Helmholtz
    /// conditions.
    Helmholtz(Common),
    /// Check the closed-two-form formulation for a candidate multiplier.
    TwoForm(Common),
    /// Check an extended section against the sigma-form system.
    SigmaCheck(Common),
    /// Search for a multiplier by polynomial collocation.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Largest total ansatz degree to try.
        #[arg(long, default_value_t = 2)]
        max_degree: u32,
        /// Random null-space combinations per degree.
        #[arg(long, default_value_t = 32)]
        trials: usize,
    },
    /// Decide the invariant-Lagrangian cohomology obstruction.
    Cohomology(Common),
    /// Integrate the configured system with fixed-step RK4 and compare
    /// against closed forms.
    Ode(Common),
    /// List the bundled example problems.
    ListExamples,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();

    let (kind, common, max_degree, trials) = match cli.command {
        Command::Validate(c) => (CommandKind::Validate, c, None, None),
        Command::IdealCheck(c) => (CommandKind::IdealCheck, c, None, None),
        Command::IntegralCheck(c) => (CommandKind::IntegralCheck, c, None, None),
        Command::IpReport(c) => (CommandKind::IpReport, c, None, None),
        Command::Helmholtz(c) => (CommandKind::Helmholtz, c, None, None),
        Command::TwoForm(c) => (CommandKind::TwoForm, c, None, None),
        Command::SigmaCheck(c) => (CommandKind::SigmaCheck, c, None, None),
        Command::Solve {
            common,
            max_degree,
            trials,
        } => (CommandKind::Solve, common, Some(max_degree), Some(trials)),
        Command::Cohomology(c) => (CommandKind::Cohomology, c, None, None),
        Command::Ode(c) => (CommandKind::Ode, c, None, None),
        Command::ListExamples => {
            print!("{}", list_examples());
            return ExitCode::SUCCESS;
        }
    };

    let opts = Overrides {
        seed: common.seed,
        samples: common.samples,
        tol_abs: common.tol_abs,
        tol_rel: common.tol_rel,
        max_degree,
        trials,
    };

    match run_file(kind, &common.file, &opts) {
        Ok(report) => {
            if common.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.render_text());
                println!("wall: {} ms", started.elapsed().as_millis());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("aeds {}: {e}", kind.name());
            ExitCode::from(2)
        }
    }
}
