//! Paths inside the Lebesgue-preserving space.
//!
//! [`build_path`] joins any map to the doubling map in four legs: rotate the
//! fixed point to 0, deform the first branch linearly into the canonical branch
//! with the same endpoint slopes, slide through the canonical family to
//! `(a, c) = (1/2, 2)`, and finish at the doubling map (which is that canonical
//! branch's extension). Every intermediate first branch is extended with the
//! transport solver, so every sample is Lebesgue preserving by construction.
//!
//! [`generator_loop`] is the loop of rotation conjugates of the doubling map;
//! [`winding_number`] counts how often its branch points turn around the circle.

use alloc::vec::Vec;

use crate::branch::{BranchFunction, Knot, Slope};
use crate::circle::{c1_distance, validate_map_on, wrap, CircleMap, ValidationReport};
use crate::extension::extend_by_transport;
use crate::transfer::DEFAULT_GRID;
use crate::{Error, Result, DEFAULT_MARGIN};

/// Endpoint slopes of branches combined by [`linear_branch_leg`] may differ by this much.
pub const ENDPOINT_SLOPE_TOL: f64 = 1e-8;

/// Default number of path intervals.
pub const DEFAULT_SAMPLES: usize = 64;

/// Default preservation residual every path sample must meet.
pub const PATH_TOL: f64 = 1e-5;

/// Endpoint agreement required to call a path closed.
pub const CLOSURE_DISTANCE: f64 = 1e-9;

/// Parameters `(a, c)` of the canonical first branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalParams {
    a: f64,
    c: f64,
}

impl CanonicalParams {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        let p = Self { a, c };
        if !(a > 0.0 && a < 1.0 && c > 1.0) || p.middle_slope() <= 1.0 || !p.middle_slope().is_finite() {
            return Err(Error::OutsideValidity { a, c, middle: p.middle_slope() });
        }
        Ok(p)
    }

    /// The doubling map's parameters.
    pub fn doubling() -> Self {
        Self { a: 0.5, c: 2.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Slope at the branch point, `c / (c - 1)`.
    pub fn end_slope(&self) -> f64 {
        self.c / (self.c - 1.0)
    }

    /// Middle Bernstein control value `3/a - c - c/(c - 1)` that makes the rise 1.
    pub fn middle_slope(&self) -> f64 {
        3.0 / self.a - self.c - self.end_slope()
    }

    /// Open interval of admissible `c` for a branch point `a`: the roots of
    /// `c² - K c + K` with `K = 3/a - 1`. Empty once `a >= 3/5`.
    pub fn slope_range(a: f64) -> Option<(f64, f64)> {
        let k = 3.0 / a - 1.0;
        let disc = k * k - 4.0 * k;
        if !(a > 0.0 && a < 1.0) || disc <= 0.0 {
            return None;
        }
        let root = libm::sqrt(disc);
        Some((0.5 * (k - root), 0.5 * (k + root)))
    }

    pub fn lerp(self, other: Self, t: f64) -> (f64, f64) {
        (self.a + t * (other.a - self.a), self.c + t * (other.c - self.c))
    }
}

/// The first branch on `[0, a]` whose derivative is the quadratic Bernstein
/// polynomial with control values `c`, `m`, `c/(c-1)`. Its integral is a single
/// cubic, so it is stored exactly as a two-knot Hermite piece.
pub fn canonical_branch(p: CanonicalParams) -> Result<BranchFunction> {
    BranchFunction::new([(0.0, 0.0, p.c), (p.a, 1.0, p.end_slope())], DEFAULT_MARGIN)
}

/// Canonical branch plus a bump `amplitude · s²(1-s)² sin(2π k s + φ)`,
/// `s = u / a`, sampled at `knots + 1` points. The bump and its slope vanish at
/// both ends, so fullness and the gluing condition are untouched.
pub fn perturbed_canonical(
    p: CanonicalParams,
    amplitude: f64,
    frequency: f64,
    phase: f64,
    knots: usize,
) -> Result<BranchFunction> {
    use core::f64::consts::PI;
    let base = canonical_branch(p)?;
    if amplitude == 0.0 {
        return Ok(base);
    }
    let n = knots.max(2);
    let pts: Vec<Knot> = (0..=n)
        .map(|i| {
            if i == 0 {
                return base.first();
            }
            if i == n {
                return base.last();
            }
            let u = p.a * i as f64 / n as f64;
            let s = u / p.a;
            let (v, d) = base.eval_both(u).expect("inside canonical branch");
            let w = 2.0 * PI * frequency * s + phase;
            let env = s * s * (1.0 - s) * (1.0 - s);
            let denv = 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
            let bump = amplitude * env * libm::sin(w);
            let dbump = amplitude * (denv * libm::sin(w) + env * 2.0 * PI * frequency * libm::cos(w)) / p.a;
            Knot::new(u, v + bump, d + dbump)
        })
        .collect();
    BranchFunction::new(pts, DEFAULT_MARGIN)
}

/// `(1 - t) b0 + t b1` for two full branches on the same domain with the same
/// endpoint slopes.
pub fn linear_branch_leg(b0: &BranchFunction, b1: &BranchFunction, t: f64) -> Result<BranchFunction> {
    if b0.lo() != b1.lo() || (b0.hi() - b1.hi()).abs() > 1e-12 {
        return Err(Error::DomainMismatch("leg endpoints live on different domains"));
    }
    for b in [b0, b1] {
        let residual = b.first().y.abs().max((b.last().y - 1.0).abs());
        if residual > crate::circle::FULL_BRANCH_TOL {
            return Err(Error::NotFullBranch { residual });
        }
    }
    let difference = (b0.first().dy - b1.first().dy).abs().max((b0.last().dy - b1.last().dy).abs());
    if difference > ENDPOINT_SLOPE_TOL {
        return Err(Error::EndpointMismatch { difference });
    }
    if t == 0.0 {
        return Ok(b0.clone());
    }
    if t == 1.0 {
        return Ok(b1.clone());
    }
    let hi = b0.hi();
    let mut xs: Vec<f64> = b0.knots().iter().chain(b1.knots()).map(|k| k.x.min(hi)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= crate::branch::KNOT_MERGE);
    let knots: Vec<Knot> = xs
        .into_iter()
        .map(|x| {
            let (v0, d0) = b0.eval_both(x).expect("shared domain");
            let (v1, d1) = b1.eval_both(x).expect("shared domain");
            Knot::new(x, (1.0 - t) * v0 + t * v1, (1.0 - t) * d0 + t * d1)
        })
        .collect();
    let margin = b0.margin().min(b1.margin());
    BranchFunction::with_slope(knots, Slope::Expanding { margin })
}

/// Canonical branch at the point `t` of the straight segment from `p0` to `p1`.
pub fn slide_leg(p0: CanonicalParams, p1: CanonicalParams, t: f64) -> Result<BranchFunction> {
    let (a, c) = p0.lerp(p1, t);
    let p = CanonicalParams::new(a, c).map_err(|_| Error::PathLeavesValidity { t })?;
    canonical_branch(p).map_err(|_| Error::PathLeavesValidity { t })
}

/// `z ↦ m(z + θ) - θ`. Moves the fixed point by `-θ`.
pub fn rotate_conjugate(m: &CircleMap, theta: f64) -> CircleMap {
    m.with_rotation(m.rotation_offset() - theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegKind {
    Rotate,
    ToCanonical,
    Slide,
    ToTarget,
}

/// Samples `start..=end` of a path belong to this leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leg {
    pub kind: LegKind,
    pub start: usize,
    pub end: usize,
}

/// Sampled path of maps with a validation report per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyPath {
    samples: Vec<CircleMap>,
    reports: Vec<ValidationReport>,
    legs: Vec<Leg>,
}

impl HomotopyPath {
    pub fn samples(&self) -> &[CircleMap] {
        &self.samples
    }

    pub fn reports(&self) -> &[ValidationReport] {
        &self.reports
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    /// Number of intervals `K`; there are `K + 1` samples.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    /// Parameter of sample `k`, `k / K` (0 for a single-sample path).
    pub fn time(&self, k: usize) -> f64 {
        if self.intervals() == 0 {
            0.0
        } else {
            k as f64 / self.intervals() as f64
        }
    }

    pub fn first(&self) -> &CircleMap {
        &self.samples[0]
    }

    pub fn last(&self) -> &CircleMap {
        &self.samples[self.samples.len() - 1]
    }

    /// `c1_distance` between consecutive samples.
    pub fn step_distances(&self) -> Vec<f64> {
        self.samples.windows(2).map(|w| c1_distance(&w[0], &w[1])).collect()
    }

    pub fn is_closed(&self) -> bool {
        c1_distance(self.first(), self.last()) <= CLOSURE_DISTANCE
    }

    /// `self` followed by `other`; `other` must start where `self` ends.
    pub fn concat(&self, other: &HomotopyPath) -> Result<HomotopyPath> {
        let distance = c1_distance(self.last(), other.first());
        if distance > CLOSURE_DISTANCE {
            return Err(Error::NotClosed { distance });
        }
        let offset = self.samples.len() - 1;
        let mut samples = self.samples.clone();
        samples.extend(other.samples[1..].iter().cloned());
        let mut reports = self.reports.clone();
        reports.extend(other.reports[1..].iter().copied());
        let mut legs = self.legs.clone();
        legs.extend(other.legs.iter().map(|l| Leg { kind: l.kind, start: l.start + offset, end: l.end + offset }));
        Ok(HomotopyPath { samples, reports, legs })
    }
}

/// Tuning of [`build_path_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Number of intervals `K` shared among the active legs.
    pub samples: usize,
    /// Preservation residual every sample must meet.
    pub preservation_tol: f64,
    /// Grid used for the per-sample validation.
    pub grid: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { samples: DEFAULT_SAMPLES, preservation_tol: PATH_TOL, grid: DEFAULT_GRID }
    }
}

enum Segment {
    Rotate { by: f64 },
    ToCanonical { from: BranchFunction, to: BranchFunction },
    Slide { from: CanonicalParams, to: CanonicalParams },
}

impl Segment {
    fn kind(&self) -> LegKind {
        match self {
            Segment::Rotate { .. } => LegKind::Rotate,
            Segment::ToCanonical { .. } => LegKind::ToCanonical,
            Segment::Slide { .. } => LegKind::Slide,
        }
    }
}

/// [`build_path_with`] with `K` intervals and default tolerances.
pub fn build_path(g: &CircleMap, samples: usize) -> Result<HomotopyPath> {
    build_path_with(g, PathOptions { samples, ..PathOptions::default() })
}

/// Path from `g` to the doubling map.
pub fn build_path_with(g: &CircleMap, options: PathOptions) -> Result<HomotopyPath> {
    let report = validate_map_on(g, options.grid);
    if !(report.is_full_branch && report.is_expanding) {
        return Err(Error::NotInSpace { reason: "min_derivative", value: report.min_derivative });
    }
    if report.preservation_residual > options.preservation_tol {
        return Err(Error::NotInSpace { reason: "preservation_residual", value: report.preservation_residual });
    }
    if report.gluing_residual > crate::gamma::SPACE_TOL {
        return Err(Error::NotInSpace { reason: "gluing_residual", value: report.gluing_residual });
    }

    let mut segments = Vec::new();
    let p = g.rotation_offset();
    if p != 0.0 {
        segments.push(Segment::Rotate { by: p });
    }
    let normalized = g.with_rotation(0.0);
    let start_branch = normalized.branch1().clone();
    let params = CanonicalParams::new(start_branch.hi(), start_branch.first().dy)
        .map_err(|_| Error::PathLeavesValidity { t: 0.0 })?;
    let canonical = canonical_branch(params).map_err(|_| Error::PathLeavesValidity { t: 0.0 })?;
    if branch_gap(&start_branch, &canonical) > 1e-12 {
        segments.push(Segment::ToCanonical { from: start_branch, to: canonical });
    }
    let target = CanonicalParams::doubling();
    if params != target {
        let straight_ok = (0..=256).all(|i| slide_leg(params, target, i as f64 / 256.0).is_ok());
        if straight_ok {
            segments.push(Segment::Slide { from: params, to: target });
        } else {
            let waypoint = CanonicalParams::new(0.5, params.c()).map_err(|_| Error::PathLeavesValidity { t: 0.0 })?;
            if waypoint != params {
                segments.push(Segment::Slide { from: params, to: waypoint });
            }
            segments.push(Segment::Slide { from: waypoint, to: target });
        }
    }

    let n = segments.len();
    if n > 0 && options.samples < n {
        return Err(Error::InvalidSampleCount { got: options.samples, min: n });
    }
    let total = if n == 0 { 0 } else { options.samples };
    let mut samples = alloc::vec![g.clone()];
    let mut legs = Vec::new();
    for (i, segment) in segments.iter().enumerate() {
        let steps = total / n + usize::from(i < total % n);
        let start = samples.len() - 1;
        for j in 1..=steps {
            let tau = j as f64 / steps as f64;
            let t = (start + j) as f64 / total as f64;
            let map = match segment {
                Segment::Rotate { by } => rotate_conjugate(g, tau * by),
                Segment::ToCanonical { from, to } => {
                    let b = linear_branch_leg(from, to, tau)?;
                    extend_by_transport(&b).map_err(|_| Error::PathLeavesValidity { t })?.map
                }
                Segment::Slide { from, to } => {
                    let b = slide_leg(*from, *to, tau).map_err(|_| Error::PathLeavesValidity { t })?;
                    extend_by_transport(&b).map_err(|_| Error::PathLeavesValidity { t })?.map
                }
            };
            samples.push(map);
        }
        legs.push(Leg { kind: segment.kind(), start, end: samples.len() - 1 });
    }
    let last = samples.len() - 1;
    legs.push(Leg { kind: LegKind::ToTarget, start: last, end: last });

    let reports = validate_samples(&samples, options)?;
    Ok(HomotopyPath { samples, reports, legs })
}

fn validate_samples(samples: &[CircleMap], options: PathOptions) -> Result<Vec<ValidationReport>> {
    samples
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let r = validate_map_on(m, options.grid);
            if !r.is_expanding {
                return Err(Error::SampleInvalid { index, reason: "min_derivative", value: r.min_derivative });
            }
            if r.preservation_residual > options.preservation_tol {
                return Err(Error::SampleInvalid {
                    index,
                    reason: "preservation_residual",
                    value: r.preservation_residual,
                });
            }
            Ok(r)
        })
        .collect()
}

/// Sup over a grid of value and slope differences of two branches on one domain.
fn branch_gap(b0: &BranchFunction, b1: &BranchFunction) -> f64 {
    let n = 512;
    (0..=n)
        .map(|i| {
            let x = (b0.lo() + (b0.hi() - b0.lo()) * i as f64 / n as f64).min(b0.hi());
            let (v0, d0) = b0.eval_both(x).unwrap();
            let (v1, d1) = b1.eval_both(x).unwrap();
            (v0 - v1).abs().max((d0 - d1).abs())
        })
        .fold(0.0, f64::max)
}

/// The loop `t ↦ (z ↦ 2z - t mod 1)`, `t = k / K`, whose fixed point goes once
/// around the circle. Sample `k` is `rotate_conjugate(doubling, -k/K)`.
pub fn generator_loop(samples: usize) -> Result<HomotopyPath> {
    if samples < 8 {
        return Err(Error::InvalidSampleCount { got: samples, min: 8 });
    }
    let doubling = CircleMap::doubling();
    let maps: Vec<CircleMap> = (0..=samples)
        .map(|k| rotate_conjugate(&doubling, -(k as f64) / samples as f64))
        .collect();
    let options = PathOptions { samples, ..PathOptions::default() };
    let reports = validate_samples(&maps, options)?;
    Ok(HomotopyPath { samples: maps, reports, legs: alloc::vec![Leg { kind: LegKind::Rotate, start: 0, end: samples }] })
}

/// Signed shortest displacement from `u` to `v` on the circle, in `[-1/2, 1/2)`.
fn displacement(u: f64, v: f64) -> f64 {
    wrap(v - u + 0.5) - 0.5
}

/// Net number of turns of the branch points along a closed path.
///
/// Both branch points are followed continuously (each step matched to the
/// nearest new position); the loop may exchange them, so the integer reported
/// is the total lifted displacement of the pair, which is what one full turn
/// of the configuration adds up to.
pub fn winding_number(path: &HomotopyPath) -> Result<i64> {
    if !path.is_closed() {
        return Err(Error::NotClosed { distance: c1_distance(path.first(), path.last()) });
    }
    let (mut p, mut q) = path.first().branch_points();
    let mut total = 0.0;
    for (index, m) in path.samples()[1..].iter().enumerate() {
        let (r, s) = m.branch_points();
        let keep = [displacement(p, r), displacement(q, s)];
        let swap = [displacement(p, s), displacement(q, r)];
        let worst = |d: [f64; 2]| d[0].abs().max(d[1].abs());
        let (d, next) = if worst(keep) <= worst(swap) { (keep, (r, s)) } else { (swap, (s, r)) };
        let jump = worst(d);
        if jump >= 0.5 - 1e-12 {
            return Err(Error::SamplingTooCoarse { index, jump });
        }
        total += d[0] + d[1];
        (p, q) = next;
    }
    let turns = libm::round(total);
    if (total - turns).abs() > 1e-6 {
        return Err(Error::NotClosed { distance: (total - turns).abs() });
    }
    Ok(turns as i64)
}
