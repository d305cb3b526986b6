use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lebesgue_circle::extension::{CLOSURE_TOL, DEFAULT_STEP};
use lebesgue_circle::homotopy::{DEFAULT_SAMPLES, PATH_TOL};
use lebesgue_circle::transfer::{DEFAULT_GRID, DEFAULT_ITERATIONS};
use lebesgue_circle_cli::commands::{DENSITY_TOL, VERIFY_TOL};
use lebesgue_circle_cli::{
    run_density, run_export, run_extend, run_loop, run_path, run_verify, CommandOutcome, DensityOptions,
    ExportFormat, ExtendMethod, ExtendOptions, PathCommandOptions,
};

/// Lebesgue-preserving expanding circle maps of degree two.
#[derive(Debug, Parser)]
#[command(name = "circlemap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Ode,
    Transport,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extend a first branch (JSON knots) to a Lebesgue-preserving map.
    Extend {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "transport")]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = CLOSURE_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check membership of a map in the Lebesgue-preserving space.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = VERIFY_TOL)]
        tol: f64,
    },
    /// Iterate the transfer operator from the uniform density.
    Density {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iters: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DENSITY_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a path from a map to the doubling map.
    Path {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        steps: usize,
        #[arg(long, default_value_t = PATH_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the generator loop and print its winding number.
    Loop {
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the graph of a map.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(command: Command) -> CommandOutcome {
    match command {
        Command::Extend { input, method, step, tol, out } => {
            let method = match method {
                MethodArg::Ode => ExtendMethod::Ode,
                MethodArg::Transport => ExtendMethod::Transport,
                MethodArg::Both => ExtendMethod::Both,
            };
            run_extend(&input, ExtendOptions { method, step, tol }, &out)
        }
        Command::Verify { input, grid, tol } => run_verify(&input, grid, tol),
        Command::Density { input, iters, grid, tol, out } => {
            run_density(&input, DensityOptions { iters, grid, tol }, &out)
        }
        Command::Path { input, steps, tol, grid, out } => {
            run_path(&input, PathCommandOptions { steps, tol, grid }, &out)
        }
        Command::Loop { steps, out } => run_loop(steps, &out),
        Command::Export { input, format, grid, out } => {
            let format = match format {
                FormatArg::Csv => ExportFormat::Csv,
            };
            run_export(&input, format, grid, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = run(cli.command);
    if outcome.exit_code == 0 {
        println!("{}", outcome.summary);
    } else {
        eprintln!("{}", outcome.summary);
    }
    if let Some(path) = &outcome.report_path {
        println!("wrote {}", path.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
