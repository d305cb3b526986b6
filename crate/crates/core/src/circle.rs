//! Degree-2 expanding circle maps built from two full branches.
//!
//! The circle is `[0, 1)` with `0 ~ 1`. A [`CircleMap`] stores a normalized map
//! `F` with `F(0) = 0`, made of a first branch on `[0, a]` and a second branch
//! on `[a, 1]`, each onto `[0, 1]`, plus a rotation offset `θ`. The map it
//! represents is `g(z) = F(z - θ) + θ (mod 1)`, whose fixed point is `θ`.

use alloc::vec::Vec;

use crate::branch::{merge_knots, BranchFunction, Knot, Slope};
use crate::roots::solve_increasing;
use crate::transfer::{self, DEFAULT_GRID};
use crate::{Error, Result};

/// Allowed deviation of branch endpoint values from the exact full-branch values.
pub const FULL_BRANCH_TOL: f64 = 1e-9;

/// Grid size used by [`c1_distance`].
pub const DISTANCE_GRID: usize = 8192;

/// Interior knots this close to a cut point are dropped when cutting a lift.
const WINDOW_GAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CircleMap {
    branch1: BranchFunction,
    branch2: BranchFunction,
    rotation: f64,
}

/// Wraps a real number into `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let r = x - libm::floor(x);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the circle `R / Z`.
pub fn circle_distance(u: f64, v: f64) -> f64 {
    let d = wrap(u - v);
    d.min(1.0 - d)
}

impl CircleMap {
    /// Assembles a map from its two normalized branches and a rotation offset.
    ///
    /// The first branch must live on `[0, a]`, the second on `[a, 1]`, and both
    /// must be full up to [`FULL_BRANCH_TOL`].
    pub fn new(branch1: BranchFunction, branch2: BranchFunction, rotation_offset: f64) -> Result<Self> {
        if branch1.lo() != 0.0 {
            return Err(Error::DomainMismatch("first branch must start at 0"));
        }
        if branch2.hi() != 1.0 {
            return Err(Error::DomainMismatch("second branch must end at 1"));
        }
        if branch1.hi() != branch2.lo() {
            return Err(Error::DomainMismatch("branches must meet at the branch point"));
        }
        if !rotation_offset.is_finite() {
            return Err(Error::DomainMismatch("rotation offset must be finite"));
        }
        let residual = closure_of(&branch1, &branch2);
        if residual > FULL_BRANCH_TOL {
            return Err(Error::NotFullBranch { residual });
        }
        Ok(Self { branch1, branch2, rotation: wrap(rotation_offset) })
    }

    /// `x ↦ 2x mod 1`.
    pub fn doubling() -> Self {
        let b1 = BranchFunction::new([(0.0, 0.0, 2.0), (0.5, 1.0, 2.0)], crate::DEFAULT_MARGIN).unwrap();
        let b2 = BranchFunction::new([(0.5, 0.0, 2.0), (1.0, 1.0, 2.0)], crate::DEFAULT_MARGIN).unwrap();
        Self { branch1: b1, branch2: b2, rotation: 0.0 }
    }

    pub fn branch1(&self) -> &BranchFunction {
        &self.branch1
    }

    pub fn branch2(&self) -> &BranchFunction {
        &self.branch2
    }

    /// The branch point `a` of the normalized map.
    pub fn branch_point(&self) -> f64 {
        self.branch1.hi()
    }

    pub fn rotation_offset(&self) -> f64 {
        self.rotation
    }

    /// Smaller of the two branch margins.
    pub fn margin(&self) -> f64 {
        self.branch1.margin().min(self.branch2.margin())
    }

    /// Same normalized map with a different rotation offset.
    pub fn with_rotation(&self, rotation_offset: f64) -> Self {
        Self { rotation: wrap(rotation_offset), ..self.clone() }
    }

    /// The normalized map (`θ = 0`) at `u ∈ [0, 1)`, value in `[0, 1)`.
    pub fn eval_normalized(&self, u: f64) -> (f64, f64) {
        let u = wrap(u);
        let a = self.branch_point();
        let (v, d) = if u < a {
            self.branch1.eval_both(u.min(a)).expect("inside first branch")
        } else {
            self.branch2.eval_both(u).expect("inside second branch")
        };
        (wrap(v), d)
    }

    /// The represented map at a circle point, value in `[0, 1)`.
    pub fn eval(&self, z: f64) -> f64 {
        let (v, _) = self.eval_normalized(z - self.rotation);
        wrap(v + self.rotation)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        self.eval_normalized(z - self.rotation).1
    }

    /// Lift of the normalized map on the real line: `L(w + 1) = L(w) + 2`,
    /// `L(0) = branch1(0)`.
    pub fn lift(&self, w: f64) -> (f64, f64) {
        let k = libm::floor(w);
        let r = w - k;
        let a = self.branch_point();
        let (v, d) = if r < a {
            self.branch1.eval_both(r).expect("inside first branch")
        } else {
            let (v, d) = self.branch2.eval_both(r.min(1.0)).expect("inside second branch");
            (v + 1.0, d)
        };
        (v + 2.0 * k, d)
    }

    /// Solves `L(w) = value` for the lift.
    pub fn lift_inverse(&self, value: f64) -> Result<f64> {
        let k = libm::floor(value / 2.0);
        let r = value - 2.0 * k;
        let w = if r <= 1.0 {
            self.branch1.invert(r)?
        } else {
            self.branch2.invert(r - 1.0)?
        };
        Ok(w + k)
    }

    /// Knots of the lift on `[w0, w1]` (length at most one turn), positions
    /// shifted by `-w0` and values by `-offset`.
    pub(crate) fn lift_window(&self, w0: f64, w1: f64, offset: f64) -> Vec<Knot> {
        let mut knots = Vec::new();
        let k0 = libm::floor(w0) as i64;
        let k1 = libm::floor(w1) as i64;
        for k in k0..=k1 {
            let kf = k as f64;
            for kn in self.branch1.knots() {
                push_inside(&mut knots, kn.x + kf, kn.y + 2.0 * kf, kn.dy, w0, w1);
            }
            for kn in self.branch2.knots() {
                push_inside(&mut knots, kn.x + kf, kn.y + 1.0 + 2.0 * kf, kn.dy, w0, w1);
            }
        }
        let knots = merge_knots(knots);
        let mut inner: Vec<Knot> = knots
            .into_iter()
            .filter(|k| k.x - w0 > WINDOW_GAP && w1 - k.x > WINDOW_GAP)
            .collect();
        let (v0, d0) = self.lift(w0);
        let (v1, d1) = self.lift(w1);
        let mut out = Vec::with_capacity(inner.len() + 2);
        out.push(Knot::new(w0, v0, d0));
        out.append(&mut inner);
        out.push(Knot::new(w1, v1, d1));
        out.into_iter().map(|k| Knot::new(k.x - w0, k.y - offset, k.dy)).collect()
    }

    /// Rebuilds a normalized map from the lift over `[start, start + 1]` with the
    /// value at `start` moved to 0, then attaches `rotation`.
    ///
    /// `L(start) - offset` must vanish; the branches are split where the shifted
    /// lift reaches 1.
    pub(crate) fn renormalized(&self, start: f64, offset: f64, rotation: f64) -> Result<Self> {
        let split = self.lift_inverse(offset + 1.0)?;
        let slope = Slope::Expanding { margin: self.margin() };
        let mut first = self.lift_window(start, split, offset);
        let mut second = self.lift_window(split, start + 1.0, offset + 1.0);
        let a = split - start;
        pin_endpoints(&mut first);
        pin_endpoints(&mut second);
        for k in &mut second {
            k.x += a;
        }
        let last = second.len() - 1;
        second[0].x = a;
        second[last].x = 1.0;
        let b1 = BranchFunction::with_slope(first, slope)?;
        let b2 = BranchFunction::with_slope(second, slope)?;
        Self::new(b1, b2, rotation)
    }

    /// Zero crossings of the represented map, ordered as `(x, y)` so that the
    /// arc from `x` to `y` carries the first branch and contains the fixed point.
    pub fn branch_points(&self) -> (f64, f64) {
        let theta = self.rotation;
        let start = self.lift_inverse(2.0 - theta).expect("lift covers [0, 2]");
        let end = self.lift_inverse(1.0 - theta).expect("lift covers [0, 2]");
        (wrap(start + theta), wrap(end + theta))
    }

    /// The two preimages of `x` under the represented map with the map's
    /// derivative there.
    pub fn preimages(&self, x: f64) -> Result<[(f64, f64); 2]> {
        let v = wrap(x - self.rotation);
        let u1 = self.branch1.invert(v)?;
        let u2 = self.branch2.invert(v)?;
        let d1 = self.branch1.derivative(u1)?;
        let d2 = self.branch2.derivative(u2)?;
        Ok([(wrap(u1 + self.rotation), d1), (wrap(u2 + self.rotation), d2)])
    }
}

fn push_inside(knots: &mut Vec<Knot>, x: f64, y: f64, dy: f64, lo: f64, hi: f64) {
    if x >= lo && x <= hi {
        knots.push(Knot::new(x, y, dy));
    }
}

/// Snaps window endpoint values to exactly 0 and 1 after rounding.
fn pin_endpoints(knots: &mut [Knot]) {
    let last = knots.len() - 1;
    knots[0].y = 0.0;
    knots[last].y = 1.0;
    knots[0].x = 0.0;
}

fn closure_of(b1: &BranchFunction, b2: &BranchFunction) -> f64 {
    let e = [b1.first().y, b1.last().y - 1.0, b2.first().y, b2.last().y - 1.0];
    e.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Fixed point of the represented map.
pub fn find_fixed_point(m: &CircleMap) -> Result<f64> {
    // L(u) - u increases by exactly 1 over [0, 1]
    let (l0, _) = m.lift(0.0);
    let target = libm::ceil(l0);
    let g = |u: f64| {
        let (v, d) = m.lift(u);
        (v - u, d - 1.0)
    };
    let u = solve_increasing(g, 0.0, 1.0, target, crate::INVERSION_TOL)?;
    Ok(wrap(u + m.rotation))
}

/// Sup of the circle distance of values plus sup of the derivative difference,
/// both over a uniform grid of [`DISTANCE_GRID`] points.
pub fn c1_distance(m1: &CircleMap, m2: &CircleMap) -> f64 {
    c1_distance_on(m1, m2, DISTANCE_GRID)
}

pub fn c1_distance_on(m1: &CircleMap, m2: &CircleMap, n: usize) -> f64 {
    let mut values = 0.0f64;
    let mut slopes = 0.0f64;
    for j in 0..n {
        let z = j as f64 / n as f64;
        values = values.max(circle_distance(m1.eval(z), m2.eval(z)));
        slopes = slopes.max((m1.derivative(z) - m2.derivative(z)).abs());
    }
    values + slopes
}

/// Numerical membership report for a circle map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub is_full_branch: bool,
    pub is_expanding: bool,
    pub min_derivative: f64,
    pub preservation_residual: f64,
    pub gluing_residual: f64,
    pub closure_residual: f64,
}

impl ValidationReport {
    /// In the Lebesgue-preserving space up to the given tolerances.
    pub fn passes(&self, preservation_tol: f64, gluing_tol: f64) -> bool {
        self.is_full_branch
            && self.is_expanding
            && self.preservation_residual <= preservation_tol
            && self.gluing_residual <= gluing_tol
    }
}

/// Largest one-sided derivative mismatch at the two branch points.
pub fn circle_gluing_residual(m: &CircleMap) -> f64 {
    let (b1, b2) = (&m.branch1, &m.branch2);
    let at_zero = (b1.first().dy - b2.last().dy).abs();
    let at_a = (b1.last().dy - b2.first().dy).abs();
    at_zero.max(at_a)
}

pub fn validate_map(m: &CircleMap) -> ValidationReport {
    validate_map_on(m, DEFAULT_GRID)
}

pub fn validate_map_on(m: &CircleMap, grid: usize) -> ValidationReport {
    let closure_residual = closure_of(&m.branch1, &m.branch2);
    let min_derivative = m.branch1.min_derivative().min(m.branch2.min_derivative());
    ValidationReport {
        is_full_branch: closure_residual <= FULL_BRANCH_TOL,
        is_expanding: min_derivative > 1.0,
        min_derivative,
        preservation_residual: transfer::preservation_residual(m, grid),
        gluing_residual: circle_gluing_residual(m),
        closure_residual,
    }
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use crate::DEFAULT_MARGIN;
    use rand::{Rng, SeedableRng};

    fn linear(a: f64) -> CircleMap {
        let b1 = BranchFunction::new([(0.0, 0.0, 1.0 / a), (a, 1.0, 1.0 / a)], DEFAULT_MARGIN).unwrap();
        let s = 1.0 / (1.0 - a);
        let b2 = BranchFunction::new([(a, 0.0, s), (1.0, 1.0, s)], DEFAULT_MARGIN).unwrap();
        CircleMap::new(b1, b2, 0.0).unwrap()
    }

    fn sine_control(eps: f64) -> CircleMap {
        use core::f64::consts::PI;
        let f = |x: f64| (2.0 * x + eps * libm::sin(2.0 * PI * x), 2.0 + 2.0 * PI * eps * libm::cos(2.0 * PI * x));
        let n = 256;
        let k1: Vec<Knot> = (0..=n)
            .map(|i| {
                let x = 0.5 * i as f64 / n as f64;
                let (y, d) = f(x);
                Knot::new(x, y, d)
            })
            .collect();
        let k2: Vec<Knot> = (0..=n)
            .map(|i| {
                let x = 0.5 + 0.5 * i as f64 / n as f64;
                let (y, d) = f(x);
                Knot::new(x, y - 1.0, d)
            })
            .collect();
        let mut k1 = k1;
        let mut k2 = k2;
        k1[n].y = 1.0;
        k2[0].y = 0.0;
        k2[n].y = 1.0;
        k1[n].x = 0.5;
        CircleMap::new(
            BranchFunction::new(k1, DEFAULT_MARGIN).unwrap(),
            BranchFunction::new(k2, DEFAULT_MARGIN).unwrap(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn doubling_basics() {
        let d = CircleMap::doubling();
        assert_eq!(find_fixed_point(&d).unwrap(), 0.0);
        assert_eq!(d.eval(0.3), 0.6);
        assert_eq!(d.eval(0.75), 0.5);
        assert_eq!(d.branch_points(), (0.0, 0.5));
        let r = validate_map(&d);
        assert_eq!(r.preservation_residual, 0.0);
        assert_eq!(r.gluing_residual, 0.0);
        assert_eq!(r.closure_residual, 0.0);
        assert_eq!(r.min_derivative, 2.0);
        assert!(r.is_full_branch && r.is_expanding);
    }

    #[test]
    fn rotated_doubling_fixed_point() {
        // stored offset t represents x -> 2x - t
        let m = CircleMap::doubling().with_rotation(0.25);
        assert!((m.eval(0.3) - 0.35).abs() < 1e-15);
        assert!((find_fixed_point(&m).unwrap() - 0.25).abs() < 1e-12);
        let (x, y) = m.branch_points();
        assert!((x - 0.125).abs() < 1e-12 && (y - 0.625).abs() < 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t: f64 = rng.gen_range(0.0..1.0);
            let m = CircleMap::doubling().with_rotation(t);
            let p = find_fixed_point(&m).unwrap();
            assert!(circle_distance(p, t) < 1e-12, "t = {t}, p = {p}");
            assert!(circle_distance(m.eval(p), p) < 1e-12);
        }
    }

    #[test]
    fn piecewise_linear_map_report() {
        let m = linear(0.3);
        let r = validate_map(&m);
        assert!(r.preservation_residual < 1e-12);
        assert!((r.gluing_residual - (10.0 / 3.0 - 10.0 / 7.0)).abs() < 1e-12);
        assert!(!r.passes(1e-6, 1e-6));
    }

    #[test]
    fn sine_control_is_not_preserving() {
        // independent oracle: bisection on the analytic map, not the Hermite branches
        use core::f64::consts::PI;
        let f = |x: f64| 2.0 * x + 0.05 * libm::sin(2.0 * PI * x);
        let bisect = |target: f64, mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < target {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            0.5 * (lo + hi)
        };
        let mut oracle = 0.0f64;
        for j in 0..=4096 {
            let y = j as f64 / 4096.0;
            let len = bisect(y, 0.0, 0.5) + bisect(1.0 + y, 0.5, 1.0) - 0.5;
            oracle = oracle.max((len - y).abs());
        }
        let r = validate_map(&sine_control(0.05));
        assert!((r.preservation_residual - oracle).abs() < 1e-8);
        assert!((oracle - 3.895e-3).abs() < 1e-5);
        assert!(r.preservation_residual > 1e-3);
    }

    #[test]
    fn c1_distance_properties() {
        let d = CircleMap::doubling();
        assert_eq!(c1_distance(&d, &d), 0.0);
        let m = linear(0.4);
        let r = d.with_rotation(0.1);
        let ab = c1_distance(&d, &m);
        assert_eq!(ab, c1_distance(&m, &d));
        assert!(ab > 0.0);
        assert!(c1_distance(&d, &r) <= c1_distance(&d, &m) + c1_distance(&m, &r) + 1e-15);
    }

    #[test]
    fn lift_window_reproduces_map() {
        let m = sine_control(0.03);
        let moved = m.renormalized(0.0, 0.0, 0.0).unwrap();
        assert!(c1_distance(&m, &moved) < 1e-12);
        // cut the lift at its value 0.4 and rebuild the same circle map
        let start = m.lift_inverse(0.4).unwrap();
        let rebuilt = m.renormalized(start, 0.4, 0.0).unwrap();
        // rebuilt(u) = L(u + start) - 0.4, i.e. conjugation by the translation start
        for i in 0..200 {
            let u = i as f64 / 200.0;
            let expect = wrap(m.lift(u + start).0 - 0.4);
            assert!(circle_distance(rebuilt.eval(u), expect) < 1e-12);
        }
    }
}
