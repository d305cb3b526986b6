//! Monotone C¹ branches stored as cubic Hermite data.
//!
//! A [`BranchFunction`] is the building block of every circle map in this
//! crate: a strictly increasing function on a closed interval, given by knots
//! carrying position, value and derivative. Between knots the function is the
//! unique cubic matching the two endpoint values and slopes, so derivatives at
//! the ends of a branch are exactly the stored knot slopes.

use alloc::vec::Vec;

use crate::roots::solve_increasing;
use crate::{Error, Result};

/// Expansion margin used when none is given explicitly.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// Residual bound `|b(x) - y|` for [`BranchFunction::invert`].
pub const INVERSION_TOL: f64 = 1e-12;

/// Evaluation slack accepted outside `[lo, hi]`; positions within it are clamped.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Knots closer than this are merged when branches are cut or combined.
pub(crate) const KNOT_MERGE: f64 = 1e-13;

/// One Hermite interpolation node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub x: f64,
    pub y: f64,
    pub dy: f64,
}

impl Knot {
    pub const fn new(x: f64, y: f64, dy: f64) -> Self {
        Self { x, y, dy }
    }
}

impl From<(f64, f64, f64)> for Knot {
    fn from((x, y, dy): (f64, f64, f64)) -> Self {
        Self { x, y, dy }
    }
}

impl From<[f64; 3]> for Knot {
    fn from([x, y, dy]: [f64; 3]) -> Self {
        Self { x, y, dy }
    }
}

/// Whether a branch must be expanding or only increasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    /// Derivative strictly above `1 + margin` everywhere.
    Expanding { margin: f64 },
    /// Derivative strictly positive everywhere.
    Increasing,
}

impl Slope {
    fn floor(self) -> f64 {
        match self {
            Slope::Expanding { margin } => 1.0 + margin,
            Slope::Increasing => 0.0,
        }
    }
}

/// A strictly increasing C¹ piecewise-cubic Hermite function.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchFunction {
    knots: Vec<Knot>,
    slope: Slope,
}

impl BranchFunction {
    /// Builds an expanding branch: every knot slope and the whole interpolant
    /// derivative must exceed `1 + margin`.
    pub fn new<K: Into<Knot>, I: IntoIterator<Item = K>>(knots: I, margin: f64) -> Result<Self> {
        Self::with_slope(knots, Slope::Expanding { margin: margin.max(0.0) })
    }

    /// Builds a strictly increasing (not necessarily expanding) branch.
    pub fn increasing<K: Into<Knot>, I: IntoIterator<Item = K>>(knots: I) -> Result<Self> {
        Self::with_slope(knots, Slope::Increasing)
    }

    pub fn with_slope<K: Into<Knot>, I: IntoIterator<Item = K>>(knots: I, slope: Slope) -> Result<Self> {
        let knots: Vec<Knot> = knots.into_iter().map(Into::into).collect();
        if knots.len() < 2 {
            return Err(Error::TooFewKnots(knots.len()));
        }
        let floor = slope.floor();
        for (index, k) in knots.iter().enumerate() {
            if !(k.x.is_finite() && k.y.is_finite() && k.dy.is_finite()) {
                return Err(Error::NonFinite { index });
            }
            if index > 0 {
                let prev = &knots[index - 1];
                if k.x <= prev.x || k.y <= prev.y {
                    return Err(Error::NonMonotoneInput { index });
                }
            }
            if k.dy <= floor {
                return match slope {
                    Slope::Expanding { margin } => Err(Error::NotExpanding { index, slope: k.dy, margin }),
                    Slope::Increasing => Err(Error::NonMonotoneInput { index }),
                };
            }
        }
        let branch = Self { knots, slope };
        for piece in 0..branch.knots.len() - 1 {
            let min = branch.piece_min_derivative(piece);
            if min <= floor {
                return Err(Error::InterpolantViolation { piece, min_derivative: min });
            }
        }
        Ok(branch)
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn slope(&self) -> Slope {
        self.slope
    }

    /// Expansion margin, zero for merely increasing branches.
    pub fn margin(&self) -> f64 {
        match self.slope {
            Slope::Expanding { margin } => margin,
            Slope::Increasing => 0.0,
        }
    }

    pub fn lo(&self) -> f64 {
        self.knots[0].x
    }

    pub fn hi(&self) -> f64 {
        self.knots[self.knots.len() - 1].x
    }

    pub fn first(&self) -> Knot {
        self.knots[0]
    }

    pub fn last(&self) -> Knot {
        self.knots[self.knots.len() - 1]
    }

    pub fn pieces(&self) -> usize {
        self.knots.len() - 1
    }

    /// Value of the interpolant; exact at knots.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_both(x).map(|(y, _)| y)
    }

    /// Derivative of the interpolant; exact at knots.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.eval_both(x).map(|(_, dy)| dy)
    }

    /// Value and derivative in one lookup.
    pub fn eval_both(&self, x: f64) -> Result<(f64, f64)> {
        let x = self.clamp_domain(x)?;
        let idx = self.knots.partition_point(|k| k.x <= x);
        // idx >= 1 because x >= lo
        let i = idx - 1;
        let k = self.knots[i];
        if k.x == x {
            return Ok((k.y, k.dy));
        }
        Ok(self.piece_eval(i, x))
    }

    /// The unique `x` with `b(x) = y`.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let first = self.first();
        let last = self.last();
        if !(y >= first.y - DOMAIN_SLACK && y <= last.y + DOMAIN_SLACK) {
            return Err(Error::OutOfRange { y, lo: first.y, hi: last.y });
        }
        let y = y.clamp(first.y, last.y);
        let idx = self.knots.partition_point(|k| k.y <= y);
        let i = idx - 1;
        let k = self.knots[i];
        if k.y == y {
            return Ok(k.x);
        }
        let next = self.knots[i + 1];
        solve_increasing(|x| self.piece_eval(i, x), k.x, next.x, y, INVERSION_TOL)
    }

    /// Exact minimum of the derivative over the whole domain.
    pub fn min_derivative(&self) -> f64 {
        (0..self.pieces()).map(|p| self.piece_min_derivative(p)).fold(f64::INFINITY, f64::min)
    }

    /// Exact maximum of the derivative over the whole domain.
    pub fn max_derivative(&self) -> f64 {
        (0..self.pieces()).map(|p| self.piece_max_derivative(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Translates the graph by `(dx, dy)`; the shape is unchanged.
    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        let knots = self.knots.iter().map(|k| Knot::new(k.x + dx, k.y + dy, k.dy)).collect();
        Self { knots, slope: self.slope }
    }

    /// Same interpolant with a different slope requirement, re-checked.
    pub fn reclassified(&self, slope: Slope) -> Result<Self> {
        Self::with_slope(self.knots.iter().copied(), slope)
    }

    fn clamp_domain(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.lo(), self.hi());
        if x >= lo && x <= hi {
            Ok(x)
        } else if x >= lo - DOMAIN_SLACK && x <= hi + DOMAIN_SLACK {
            Ok(x.clamp(lo, hi))
        } else {
            Err(Error::OutOfDomain { x, lo, hi })
        }
    }

    /// Power-basis coefficients of piece `i` in the local variable `t`:
    /// `y = y0 + h (d0 t + q t² + r t³)`.
    fn piece_coeffs(&self, i: usize) -> (Knot, f64, f64, f64) {
        let k0 = self.knots[i];
        let k1 = self.knots[i + 1];
        let h = k1.x - k0.x;
        let delta = (k1.y - k0.y) / h;
        let q = 3.0 * delta - 2.0 * k0.dy - k1.dy;
        let r = k0.dy + k1.dy - 2.0 * delta;
        (k0, h, q, r)
    }

    fn piece_eval(&self, i: usize, x: f64) -> (f64, f64) {
        let (k0, h, q, r) = self.piece_coeffs(i);
        let k1 = self.knots[i + 1];
        if x == k1.x {
            return (k1.y, k1.dy);
        }
        let t = (x - k0.x) / h;
        let y = k0.y + h * t * (k0.dy + t * (q + t * r));
        let dy = k0.dy + t * (2.0 * q + 3.0 * r * t);
        (y, dy)
    }

    /// Derivative on piece `i` is the quadratic `d0 + 2q t + 3r t²`.
    fn piece_derivative_extrema(&self, i: usize) -> (f64, f64) {
        let (k0, _, q, r) = self.piece_coeffs(i);
        let k1 = self.knots[i + 1];
        let mut lo = k0.dy.min(k1.dy);
        let mut hi = k0.dy.max(k1.dy);
        if r != 0.0 {
            let t = -q / (3.0 * r);
            if t > 0.0 && t < 1.0 {
                let v = k0.dy + t * (2.0 * q + 3.0 * r * t);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    fn piece_min_derivative(&self, i: usize) -> f64 {
        self.piece_derivative_extrema(i).0
    }

    fn piece_max_derivative(&self, i: usize) -> f64 {
        self.piece_derivative_extrema(i).1
    }
}

/// Sorts knots by position and merges near-duplicates, keeping the later entry's
/// value and averaging slopes.
pub(crate) fn merge_knots(mut knots: Vec<Knot>) -> Vec<Knot> {
    knots.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut out: Vec<Knot> = Vec::with_capacity(knots.len());
    for k in knots {
        match out.last_mut() {
            Some(prev) if (k.x - prev.x).abs() <= KNOT_MERGE => {
                prev.dy = 0.5 * (prev.dy + k.dy);
            }
            _ => out.push(k),
        }
    }
    out
}
