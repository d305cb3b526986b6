//! Extension of an expanding first branch to the unique Lebesgue-preserving
//! full-branch map.
//!
//! Two independent routes produce the second branch `f2` on `[a, 1]`:
//!
//! * [`extend_by_transport`] uses the measure identity
//!   `f1⁻¹(y) + (f2⁻¹(y) - a) = y`, i.e. `f2⁻¹(y) = a + y - f1⁻¹(y)`.
//! * [`extend_by_ode`] integrates `f2' = s / (s - 1)` with
//!   `s = f1'(f1⁻¹(f2))` from `f2(a) = 0` using classical RK4.
//!
//! The transport route is the reference; the ODE route is kept as a cross-check.

use alloc::vec::Vec;

use crate::branch::{BranchFunction, Knot, Slope};
use crate::circle::CircleMap;
use crate::{Error, Result};

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Closure residual below which the last ODE knot is pinned to `(1, 1)`.
pub const CLOSURE_TOL: f64 = 1e-6;

/// Largest knot count of an ODE-built second branch.
pub const MAX_ODE_KNOTS: usize = 512;

/// Target knot count of a transport-built second branch.
pub const TRANSPORT_KNOTS: usize = 2048;

const GRADING_REFINEMENT: usize = 4;

const THIN_BISECTIONS: usize = 12;

/// Largest jump of `1/f2'` between neighbouring nodes handed to the thinning.
const REFINE_JUMP: f64 = 1e-4;

const MAX_SUBSTEPS: usize = 256;

/// Accepted interior states may leave `[0, 1]` by at most this much.
const STATE_SLACK: f64 = 1e-10;

/// Accepted deviation of `f1(0)` and `f1(a)` from 0 and 1.
const FULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ode,
    Transport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionResult {
    pub map: CircleMap,
    /// `|f2(1) - 1|` before any pinning.
    pub closure_residual: f64,
    pub method: Method,
    /// Integration steps (ODE) or tabulated knots (transport).
    pub steps_used: usize,
}

fn check_first_branch(f1: &BranchFunction) -> Result<f64> {
    let first = f1.first();
    let last = f1.last();
    let residual = first.y.abs().max((last.y - 1.0).abs()).max(first.x.abs());
    if residual > FULL_TOL {
        return Err(Error::NotFullBranch { residual });
    }
    let a = last.x;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::DomainMismatch("first branch must end inside (0, 1)"));
    }
    match f1.slope() {
        Slope::Expanding { margin } if margin > 0.0 => Ok(a),
        _ => {
            let slope = f1.min_derivative();
            Err(Error::NotExpanding { index: 0, slope, margin: f1.margin() })
        }
    }
}

/// The slope `f1'(f1⁻¹(v)) / (f1'(f1⁻¹(v)) - 1)` demanded of `f2` at value `v`.
fn second_slope(f1: &BranchFunction, v: f64) -> Result<f64> {
    let u = f1.invert(v)?;
    let s = f1.derivative(u)?;
    Ok(s / (s - 1.0))
}

/// Second branch from the closed-form preimage identity.
///
/// Knot values are spread so that they split the length of the curve
/// `y ↦ (y, f2'(y))` evenly, and always include the knot values of `f1`; the
/// slope of `f2` moves fastest where `f1'` approaches 1.
pub fn extend_by_transport(f1: &BranchFunction) -> Result<ExtensionResult> {
    let a = check_first_branch(f1)?;
    let pieces = f1.pieces();
    let fine = (GRADING_REFINEMENT * TRANSPORT_KNOTS).div_ceil(pieces).max(GRADING_REFINEMENT);
    let profiles = f1
        .knots()
        .windows(2)
        .map(|pair| slope_curve(f1, pair[0].y, pair[1].y, fine))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = profiles.iter().map(|(_, len)| len[len.len() - 1]).sum();
    let mut knots = Vec::with_capacity(TRANSPORT_KNOTS + 2 * pieces);
    let knot = |y: f64, u: f64| -> Result<Knot> {
        let s = f1.derivative(u)?;
        Ok(Knot::new(a + (y - u), y, s / (s - 1.0)))
    };
    let first = f1.first();
    knots.push(knot(first.y, first.x)?);
    for (pair, (ys, len)) in f1.knots().windows(2).zip(&profiles) {
        let share = len[len.len() - 1] / total;
        let n = libm::round(share * TRANSPORT_KNOTS as f64).max(1.0) as usize;
        for y in equidistribute(ys, len, n) {
            knots.push(knot(y, f1.invert(y)?)?);
        }
        knots.push(knot(pair[1].y, pair[1].x)?);
    }
    let last = knots.len() - 1;
    knots[0] = Knot::new(a, 0.0, knots[0].dy);
    let closure_residual = (knots[last].x - 1.0).abs();
    knots[last].x = 1.0;
    knots[last].y = 1.0;
    let f2 = BranchFunction::new(knots, f1.margin())?;
    let steps_used = f2.knots().len();
    Ok(ExtensionResult {
        map: CircleMap::new(f1.clone(), f2, 0.0)?,
        closure_residual,
        method: Method::Transport,
        steps_used,
    })
}

/// Values `y0 = y_0 < ... < y_fine = y1` and the cumulative length of
/// `(y, f2'(y))` along them.
fn slope_curve(f1: &BranchFunction, y0: f64, y1: f64, fine: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ys = Vec::with_capacity(fine + 1);
    let mut length = Vec::with_capacity(fine + 1);
    let mut prev = (y0, second_slope(f1, y0)?);
    ys.push(y0);
    length.push(0.0);
    for j in 1..=fine {
        let y = if j == fine { y1 } else { y0 + (y1 - y0) * j as f64 / fine as f64 };
        let g = second_slope(f1, y)?;
        length.push(length[j - 1] + libm::hypot(y - prev.0, g - prev.1));
        ys.push(y);
        prev = (y, g);
    }
    Ok((ys, length))
}

/// `n - 1` values strictly inside `ys`, equally spaced in `length`.
fn equidistribute(ys: &[f64], length: &[f64], n: usize) -> Vec<f64> {
    let (y0, y1) = (ys[0], ys[ys.len() - 1]);
    let total = length[length.len() - 1];
    let mut out: Vec<f64> = Vec::with_capacity(n.saturating_sub(1));
    let mut j = 0;
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        while j + 2 < length.len() && length[j + 1] < target {
            j += 1;
        }
        let span = length[j + 1] - length[j];
        let t = if span > 0.0 { ((target - length[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
        let y = ys[j] + t * (ys[j + 1] - ys[j]);
        if y > y0 && y < y1 && out.last().is_none_or(|&p| y > p) {
            out.push(y);
        }
    }
    out
}

/// Raw RK4 trajectory of the second branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(x, f2(x), f2'(x))` at the integration nodes `a + k h`.
    pub nodes: Vec<Knot>,
    pub step: f64,
}

impl Trajectory {
    pub fn closure_residual(&self) -> f64 {
        (self.nodes[self.nodes.len() - 1].y - 1.0).abs()
    }
}

/// Integrates the second-branch ODE from `f2(a) = 0` to `x = 1` with a fixed
/// step no larger than `step`.
pub fn integrate_extension(f1: &BranchFunction, step: f64) -> Result<Trajectory> {
    let a = check_first_branch(f1)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::StepTooLarge { estimate: step, tol: 0.0 });
    }
    let n = libm::ceil((1.0 - a) / step).max(1.0) as usize;
    integrate_steps(f1, a, n)
}

/// RK4 with exactly `n` equal steps on `[a, 1]`.
fn integrate_steps(f1: &BranchFunction, a: f64, n: usize) -> Result<Trajectory> {
    let h = (1.0 - a) / n as f64;
    // stage states may overshoot the ends by the local truncation error; the
    // slope is read at the nearest end there
    let rhs = |v: f64| second_slope(f1, v.clamp(0.0, 1.0));
    let mut nodes = Vec::with_capacity(n + 1);
    let mut v = 0.0;
    let mut k1 = rhs(v)?;
    nodes.push(Knot::new(a, v, k1));
    for k in 1..=n {
        let k2 = rhs(v + 0.5 * h * k1)?;
        let k3 = rhs(v + 0.5 * h * k2)?;
        let k4 = rhs(v + h * k3)?;
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if k < n && !(v > -STATE_SLACK && v < 1.0 + STATE_SLACK) {
            return Err(Error::StateOutOfRange { value: v });
        }
        let x = if k == n { 1.0 } else { a + k as f64 * h };
        k1 = rhs(v)?;
        nodes.push(Knot::new(x, v, k1));
    }
    Ok(Trajectory { nodes, step: h })
}

/// Second branch by RK4 with a half-step rerun as the local error estimate.
pub fn extend_by_ode(f1: &BranchFunction, step: f64, tol: f64) -> Result<ExtensionResult> {
    let coarse = integrate_extension(f1, step)?;
    let a = f1.hi();
    let fine = integrate_steps(f1, a, 2 * (coarse.nodes.len() - 1))?;
    // Richardson: the coarse error is about 16/15 of the coarse-fine gap
    let estimate = coarse
        .nodes
        .iter()
        .enumerate()
        .map(|(k, c)| (c.y - fine.nodes[2 * k].y).abs())
        .fold(0.0, f64::max)
        * 16.0
        / 15.0;
    if estimate > tol {
        return Err(Error::StepTooLarge { estimate, tol });
    }
    let closure_residual = coarse.closure_residual();
    if closure_residual > CLOSURE_TOL {
        return Err(Error::ClosureFailure { residual: closure_residual });
    }
    let dense = refine(f1, &coarse.nodes)?;
    let mut nodes = thin(&dense, MAX_ODE_KNOTS);
    let last = nodes.len() - 1;
    nodes[last].y = 1.0;
    nodes[last].dy = second_slope(f1, 1.0)?;
    nodes[0].y = 0.0;
    let f2 = BranchFunction::new(nodes, f1.margin())?;
    Ok(ExtensionResult {
        map: CircleMap::new(f1.clone(), f2, 0.0)?,
        closure_residual,
        method: Method::Ode,
        steps_used: coarse.nodes.len() - 1,
    })
}

/// Re-integrates every step across which `1/f2'` jumps by more than
/// [`REFINE_JUMP`] with RK4 substeps, so steep stretches near the branch ends
/// are resolved finer than the fixed step.
fn refine(f1: &BranchFunction, nodes: &[Knot]) -> Result<Vec<Knot>> {
    let rhs = |v: f64| second_slope(f1, v.clamp(0.0, 1.0));
    let mut out = Vec::with_capacity(nodes.len());
    out.push(nodes[0]);
    for pair in nodes.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        let jump = (1.0 / q.dy - 1.0 / p.dy).abs();
        let m = libm::ceil(jump / REFINE_JUMP).clamp(1.0, MAX_SUBSTEPS as f64) as usize;
        let h = (q.x - p.x) / m as f64;
        let mut v = p.y;
        let mut k1 = p.dy;
        for k in 1..m {
            let k2 = rhs(v + 0.5 * h * k1)?;
            let k3 = rhs(v + 0.5 * h * k2)?;
            let k4 = rhs(v + h * k3)?;
            v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            k1 = rhs(v)?;
            if v > out[out.len() - 1].y && v < q.y {
                out.push(Knot::new(p.x + k as f64 * h, v, k1));
            }
        }
        out.push(q);
    }
    Ok(out)
}

/// Curvature-adaptive knot selection: greedily keeps the longest Hermite pieces
/// that reproduce every dropped node's value and reciprocal slope within a
/// tolerance, which is tightened by bisection to the smallest value leaving at
/// most `max_knots` knots.
fn thin(nodes: &[Knot], max_knots: usize) -> Vec<Knot> {
    if nodes.len() <= max_knots {
        return nodes.to_vec();
    }
    let mut lo = 1e-15;
    let mut hi = lo;
    let mut best = loop {
        let picked = thin_with(nodes, hi);
        if picked.len() <= max_knots {
            break picked;
        }
        lo = hi;
        hi *= 4.0;
    };
    for _ in 0..THIN_BISECTIONS {
        let mid = libm::sqrt(lo * hi);
        let picked = thin_with(nodes, mid);
        if picked.len() <= max_knots {
            hi = mid;
            best = picked;
        } else {
            lo = mid;
        }
    }
    best
}

fn thin_with(nodes: &[Knot], tol: f64) -> Vec<Knot> {
    let fits = |i: usize, j: usize| -> bool {
        let Ok(piece) = BranchFunction::increasing([nodes[i], nodes[j]]) else {
            return false;
        };
        nodes[i + 1..j].iter().all(|k| {
            let (y, dy) = piece.eval_both(k.x).expect("inside piece");
            (y - k.y).abs() <= tol && (1.0 / dy - 1.0 / k.dy).abs() <= tol
        })
    };
    let last = nodes.len() - 1;
    let mut out = alloc::vec![nodes[0]];
    let mut i = 0;
    while i < last {
        // grow geometrically, then bisect back to the longest fitting piece
        let mut good = i + 1;
        let mut width = 1;
        let mut bad = None;
        while good < last {
            let probe = (i + 2 * width).min(last);
            if fits(i, probe) {
                good = probe;
                width *= 2;
                if probe == last {
                    break;
                }
            } else {
                bad = Some(probe);
                break;
            }
        }
        if let Some(mut hi) = bad {
            let mut lo = good;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if fits(i, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            good = lo;
        }
        out.push(nodes[good]);
        i = good;
    }
    out
}

/// `|f1'(0) - f1'(a) / (f1'(a) - 1)|` and whether it is within `tol`.
///
/// A vanishing residual is exactly the condition for the extended map to be
/// C¹ on the circle.
pub fn check_gluing(f1: &BranchFunction, tol: f64) -> (bool, f64) {
    let d0 = f1.first().dy;
    let da = f1.last().dy;
    let residual = (d0 - da / (da - 1.0)).abs();
    (residual <= tol, residual)
}

/// Sup over `n + 1` uniform points of `[a, 1]` of the difference between the
/// second branches of two extensions of the same first branch.
pub fn second_branch_gap(m1: &CircleMap, m2: &CircleMap, n: usize) -> f64 {
    let a = m1.branch_point();
    (0..=n)
        .map(|i| {
            let x = a + (1.0 - a) * i as f64 / n as f64;
            let x = x.min(1.0);
            (m1.branch2().eval(x).unwrap() - m2.branch2().eval(x).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}
