use thiserror::Error;

/// Errors raised by branch construction, extension, parametrization and path
/// building.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a branch needs at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("non-finite knot data at index {index}")]
    NonFinite { index: usize },
    #[error("knot {index} breaks strict monotonicity of positions or values")]
    NonMonotoneInput { index: usize },
    #[error("knot {index} has slope {slope} which is not above 1 + margin ({margin})")]
    NotExpanding { index: usize, slope: f64, margin: f64 },
    #[error("interpolant derivative dips to {min_derivative} on piece {piece}")]
    InterpolantViolation { piece: usize, min_derivative: f64 },
    #[error("position {x} outside branch domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("value {y} outside branch range [{lo}, {hi}]")]
    OutOfRange { y: f64, lo: f64, hi: f64 },
    #[error("root finder did not converge")]
    NoConvergence,
    #[error("branch is not full: endpoint residual {residual}")]
    NotFullBranch { residual: f64 },
    #[error("branch domains do not tile the circle: {0}")]
    DomainMismatch(&'static str),
    #[error("local error estimate {estimate} exceeds tolerance {tol}")]
    StepTooLarge { estimate: f64, tol: f64 },
    #[error("integration state {value} left [0, 1]")]
    StateOutOfRange { value: f64 },
    #[error("extension does not close: |f2(1) - 1| = {residual}")]
    ClosureFailure { residual: f64 },
    #[error("ode and transport extensions differ by {difference}")]
    ExtensionMismatch { difference: f64 },
    #[error("density grid with {0} cells is too coarse (need at least 16)")]
    GridTooCoarse(usize),
    #[error("negative or non-finite density value at node {index}")]
    InvalidDensity { index: usize },
    #[error("map is not in the Lebesgue-preserving space: {reason} = {value}")]
    NotInSpace { reason: &'static str, value: f64 },
    #[error("gluing residual {residual} exceeds {tol}")]
    GluingViolation { residual: f64, tol: f64 },
    #[error("arc endpoints coincide or arc length {length} is degenerate")]
    DegenerateArc { length: f64 },
    #[error("canonical parameters a = {a}, c = {c} give middle slope {middle} <= 1")]
    OutsideValidity { a: f64, c: f64, middle: f64 },
    #[error("endpoint derivatives differ by {difference}")]
    EndpointMismatch { difference: f64 },
    #[error("path leaves the canonical validity region at t = {t}")]
    PathLeavesValidity { t: f64 },
    #[error("path sample {index} fails validation: {reason} = {value}")]
    SampleInvalid { index: usize, reason: &'static str, value: f64 },
    #[error("path is not closed: endpoint distance {distance}")]
    NotClosed { distance: f64 },
    #[error("branch point jumps by {jump} between samples {index} and {next}", next = index + 1)]
    SamplingTooCoarse { index: usize, jump: f64 },
    #[error("need at least {min} samples, got {got}")]
    InvalidSampleCount { got: usize, min: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
