//! Transfer operator `Ph(x) = Σ_{f(y) = x} h(y) / f'(y)` on uniform density grids.
//!
//! Densities are piecewise linear on the nodes `i / N`, `i = 0..=N`. The
//! operator is evaluated node by node through exact branch inversion, never
//! through a matrix discretization.

use alloc::vec::Vec;

use crate::circle::CircleMap;
use crate::{Error, Result};

/// Grid size used by validation and density iteration unless told otherwise.
pub const DEFAULT_GRID: usize = 4096;

/// Iteration cap for [`iterate_to_invariant`] unless told otherwise.
pub const DEFAULT_ITERATIONS: usize = 200;

const MIN_GRID: usize = 16;

/// A nonnegative density sampled at `i / N` for `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    values: Vec<f64>,
}

impl DensityGrid {
    /// Wraps node values; `values.len() - 1` is the number of cells.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_GRID + 1 {
            return Err(Error::GridTooCoarse(values.len().saturating_sub(1)));
        }
        if let Some(index) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDensity { index });
        }
        Ok(Self { values })
    }

    /// The Lebesgue density `h ≡ 1`.
    pub fn uniform(cells: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0; cells + 1])
    }

    /// Samples `f` at the nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(cells: usize, f: F) -> Result<Self> {
        Self::new((0..=cells).map(|i| f(i as f64 / cells as f64)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.cells() as f64
    }

    /// Trapezoidal integral over `[0, 1]`.
    pub fn mass(&self) -> f64 {
        let n = self.cells();
        let inner: f64 = self.values[1..n].iter().sum();
        (inner + 0.5 * (self.values[0] + self.values[n])) / n as f64
    }

    /// Rescaled to unit mass.
    pub fn normalized(&self) -> Self {
        let m = self.mass();
        Self { values: self.values.iter().map(|v| v / m).collect() }
    }

    /// Linear interpolation at `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.cells();
        let s = (x * n as f64).clamp(0.0, n as f64);
        let i = (libm::floor(s) as usize).min(n - 1);
        let t = s - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Largest nodewise difference; grids must share a size.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Trapezoidal integral of `|self - other|`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.l1_distance_to(|x| other.eval(x))
    }

    /// Trapezoidal integral of `|self - f|` on this grid's nodes.
    pub fn l1_distance_to<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.cells();
        let diff = |i: usize| (self.values[i] - f(self.node(i))).abs();
        let inner: f64 = (1..n).map(diff).sum();
        (inner + 0.5 * (diff(0) + diff(n))) / n as f64
    }
}

/// One application of the transfer operator of `m` to `h`, on `h`'s grid.
pub fn apply_transfer(m: &CircleMap, h: &DensityGrid) -> Result<DensityGrid> {
    let n = h.cells();
    if n < MIN_GRID {
        return Err(Error::GridTooCoarse(n));
    }
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = h.node(i);
        let pre = m.preimages(x)?;
        out.push(pre.iter().map(|&(y, d)| h.eval(y) / d).sum());
    }
    Ok(DensityGrid { values: out })
}

/// `sup_y |λ(f⁻¹[0, y]) - y|` over `y = j / n`, using the normalized branches.
///
/// Rotation does not change the value.
pub fn preservation_residual(m: &CircleMap, n: usize) -> f64 {
    let a = m.branch_point();
    let n = n.max(1);
    (0..=n)
        .map(|j| {
            let y = j as f64 / n as f64;
            let u1 = m.branch1().invert(y).expect("full first branch");
            let u2 = m.branch2().invert(y).expect("full second branch");
            (u1 + (u2 - a) - y).abs()
        })
        .fold(0.0, f64::max)
}

/// `‖Ph - h‖∞` at the nodes.
pub fn fixed_point_residual(m: &CircleMap, h: &DensityGrid) -> Result<f64> {
    Ok(apply_transfer(m, h)?.sup_distance(h))
}

/// Result of [`iterate_to_invariant`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantDensity {
    pub density: DensityGrid,
    /// `‖P h_k - h_k‖∞` for each iterate that was examined, starting at `h0`.
    pub history: Vec<f64>,
    /// Number of operator applications performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `h ← Ph` until the sup residual drops to `tol` or `max_iters`
/// applications were made.
pub fn iterate_to_invariant(
    m: &CircleMap,
    h0: &DensityGrid,
    max_iters: usize,
    tol: f64,
) -> Result<InvariantDensity> {
    let mut h = h0.clone();
    let mut history = Vec::new();
    let mut next = apply_transfer(m, &h)?;
    for k in 0..=max_iters {
        let r = next.sup_distance(&h);
        history.push(r);
        if r <= tol {
            return Ok(InvariantDensity { density: h, history, iterations: k, converged: true });
        }
        if k == max_iters {
            break;
        }
        h = next;
        next = apply_transfer(m, &h)?;
    }
    Ok(InvariantDensity { density: h, history, iterations: max_iters, converged: false })
}
