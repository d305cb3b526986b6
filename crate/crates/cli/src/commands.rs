//! The six subcommands as library functions returning a [`CommandOutcome`].

use std::fs;
use std::path::{Path, PathBuf};

use lebesgue_circle::extension::{second_branch_gap, CLOSURE_TOL, DEFAULT_STEP};
use lebesgue_circle::homotopy::{DEFAULT_SAMPLES, PATH_TOL};
use lebesgue_circle::transfer::{DEFAULT_GRID, DEFAULT_ITERATIONS};
use lebesgue_circle::{
    build_path_with, extend_by_ode, extend_by_transport, generator_loop, iterate_to_invariant, validate_map_on,
    winding_number, DensityGrid, Method, PathOptions,
};

use crate::error::{CliError, Result};
use crate::io::{self, sig12};

/// Residual bound used by `verify` for preservation and gluing.
pub const VERIFY_TOL: f64 = 1e-6;

/// Fixed-point residual at which `density` reports success.
pub const DENSITY_TOL: f64 = 1e-6;

/// Sup-grid size of the `extend --method both` cross-check.
const CROSS_CHECK_GRID: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    /// 0 success, 1 validation failure, 2 input error.
    pub exit_code: i32,
    pub report_path: Option<PathBuf>,
    pub summary: String,
}

impl CommandOutcome {
    fn new(exit_code: i32, report_path: Option<&Path>, summary: String) -> Self {
        Self { exit_code, report_path: report_path.map(Path::to_path_buf), summary }
    }

    fn from_result(result: Result<CommandOutcome>) -> Self {
        result.unwrap_or_else(|e| Self { exit_code: e.exit_code(), report_path: None, summary: e.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendMethod {
    Ode,
    Transport,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendOptions {
    pub method: ExtendMethod,
    pub step: f64,
    pub tol: f64,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        Self { method: ExtendMethod::Transport, step: DEFAULT_STEP, tol: CLOSURE_TOL }
    }
}

/// Extends the first branch in `input` and writes the map to `out`. With
/// `Both` the transport map is written and the ODE map must agree within `tol`.
pub fn run_extend(input: &Path, options: ExtendOptions, out: &Path) -> CommandOutcome {
    CommandOutcome::from_result(extend(input, options, out))
}

fn extend(input: &Path, options: ExtendOptions, out: &Path) -> Result<CommandOutcome> {
    let f1 = io::read_branch(input)?;
    let (result, gap) = match options.method {
        ExtendMethod::Transport => (extend_by_transport(&f1)?, None),
        ExtendMethod::Ode => (extend_by_ode(&f1, options.step, options.tol)?, None),
        ExtendMethod::Both => {
            let transport = extend_by_transport(&f1)?;
            let ode = extend_by_ode(&f1, options.step, options.tol)?;
            let gap = second_branch_gap(&transport.map, &ode.map, CROSS_CHECK_GRID);
            (transport, Some(gap))
        }
    };
    io::write_map(out, &result.map)?;
    let method = match result.method {
        Method::Ode => "ode",
        Method::Transport => "transport",
    };
    let mut summary = format!(
        "extended with {method}: closure_residual={} knots={}",
        sig12(result.closure_residual),
        result.map.branch2().knots().len()
    );
    let mut code = 0;
    if let Some(gap) = gap {
        summary.push_str(&format!(" cross_check={}", sig12(gap)));
        if gap > options.tol {
            summary.push_str(" (exceeds tolerance)");
            code = 1;
        }
    }
    Ok(CommandOutcome::new(code, Some(out), summary))
}

/// Validates the map in `input`; exit 0 iff preservation and gluing residuals
/// are within `tol` and the map is expanding with full branches.
pub fn run_verify(input: &Path, grid: usize, tol: f64) -> CommandOutcome {
    CommandOutcome::from_result(verify(input, grid, tol))
}

fn verify(input: &Path, grid: usize, tol: f64) -> Result<CommandOutcome> {
    let m = io::read_map(input)?;
    let r = validate_map_on(&m, grid);
    let mut summary = format!(
        "is_full_branch={} is_expanding={} min_derivative={} preservation_residual={} gluing_residual={} closure_residual={}",
        r.is_full_branch,
        r.is_expanding,
        sig12(r.min_derivative),
        sig12(r.preservation_residual),
        sig12(r.gluing_residual),
        sig12(r.closure_residual)
    );
    let preserved = r.preservation_residual <= tol;
    let glued = r.gluing_residual <= tol;
    let code = if r.passes(tol, tol) { 0 } else { 1 };
    if code == 1 {
        let verdict = match (preserved, glued) {
            (true, false) => "; preservation passed, gluing failed",
            (false, true) => "; preservation failed, gluing passed",
            (false, false) => "; preservation and gluing failed",
            (true, true) => "; not expanding or branches not full",
        };
        summary.push_str(verdict);
    }
    Ok(CommandOutcome::new(code, None, summary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    pub iters: usize,
    pub grid: usize,
    pub tol: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { iters: DEFAULT_ITERATIONS, grid: DEFAULT_GRID, tol: DENSITY_TOL }
    }
}

/// Iterates the transfer operator from the uniform density and writes
/// `density.csv` and `history.csv` into `out`.
pub fn run_density(input: &Path, options: DensityOptions, out: &Path) -> CommandOutcome {
    CommandOutcome::from_result(density(input, options, out))
}

fn density(input: &Path, options: DensityOptions, out: &Path) -> Result<CommandOutcome> {
    let m = io::read_map(input)?;
    let h0 = DensityGrid::uniform(options.grid).map_err(CliError::Input)?;
    let result = iterate_to_invariant(&m, &h0, options.iters, options.tol)?;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    io::write_density_csv(&out.join("density.csv"), &result.density)?;
    io::write_history_csv(&out.join("history.csv"), &result.history)?;
    let residual = *result.history.last().expect("at least one residual");
    let summary = format!(
        "iterations={} residual={} converged={}",
        result.iterations,
        sig12(residual),
        result.converged
    );
    Ok(CommandOutcome::new(if result.converged { 0 } else { 1 }, Some(out), summary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCommandOptions {
    pub steps: usize,
    pub tol: f64,
    pub grid: usize,
}

impl Default for PathCommandOptions {
    fn default() -> Self {
        Self { steps: DEFAULT_SAMPLES, tol: PATH_TOL, grid: DEFAULT_GRID }
    }
}

/// Path from the map in `input` to the doubling map, written into `out`.
pub fn run_path(input: &Path, options: PathCommandOptions, out: &Path) -> CommandOutcome {
    CommandOutcome::from_result(path(input, options, out))
}

fn path(input: &Path, options: PathCommandOptions, out: &Path) -> Result<CommandOutcome> {
    let m = io::read_map(input)?;
    let p = build_path_with(&m, PathOptions { samples: options.steps, preservation_tol: options.tol, grid: options.grid })?;
    io::write_path(out, &p)?;
    let worst = p.reports().iter().map(|r| r.preservation_residual).fold(0.0, f64::max);
    let summary = format!("samples={} max_preservation_residual={}", p.samples().len(), sig12(worst));
    Ok(CommandOutcome::new(0, Some(out), summary))
}

/// The generator loop with `steps` intervals, written into `out`, and its
/// winding number.
pub fn run_loop(steps: usize, out: &Path) -> CommandOutcome {
    CommandOutcome::from_result(generator(steps, out))
}

fn generator(steps: usize, out: &Path) -> Result<CommandOutcome> {
    let p = generator_loop(steps).map_err(CliError::Input)?;
    io::write_path(out, &p)?;
    let winding = winding_number(&p)?;
    Ok(CommandOutcome::new(0, Some(out), format!("samples={} winding={winding}", p.samples().len())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
}

/// Graph of the normalized map at `grid + 1` nodes (plus the branch point's
/// left limit) as CSV.
pub fn run_export(input: &Path, format: ExportFormat, grid: usize, out: &Path) -> CommandOutcome {
    CommandOutcome::from_result(export(input, format, grid, out))
}

fn export(input: &Path, format: ExportFormat, grid: usize, out: &Path) -> Result<CommandOutcome> {
    let m = io::read_map(input)?;
    match format {
        ExportFormat::Csv => io::write_export_csv(out, &m, grid)?,
    }
    Ok(CommandOutcome::new(0, Some(out), format!("rows={}", grid.max(1) + 2)))
}
