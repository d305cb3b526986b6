//! Coordinates on the Lebesgue-preserving space.
//!
//! A [`GammaElement`] is an arc `[x, y]` of the circle together with an
//! expanding profile mapping the arc onto `[0, 1]` that satisfies the gluing
//! condition `f'(x) = f'(y) / (f'(y) - 1)`. [`gamma_to_map`] translates the arc
//! to the origin, extends the profile to the unique Lebesgue-preserving map and
//! translates back; [`map_to_gamma`] reads the arc and profile off a map.
//!
//! Every map arises from two arcs (either branch can play the first one).
//! [`map_to_gamma`] always returns the arc whose half-open interval `[x, y)`
//! contains the fixed point; for it `0 <= x < y <= 1` holds, and on such
//! elements the two maps are mutually inverse.

use crate::branch::{BranchFunction, Slope};
use crate::circle::{validate_map, wrap, CircleMap};
use crate::extension::{extend_by_ode, extend_by_transport, second_branch_gap, DEFAULT_STEP};
use crate::roots::solve_increasing;
use crate::{check_gluing, Error, Result};

/// Gluing residual accepted for a profile.
pub const GAMMA_GLUING_TOL: f64 = 1e-8;

/// Residual bounds a map must meet before [`map_to_gamma`] accepts it.
pub const SPACE_TOL: f64 = 1e-6;

const ENDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaElement {
    x: f64,
    y: f64,
    profile: BranchFunction,
}

impl GammaElement {
    /// `profile` lives on the lifted arc `[x, x + L]` with `L = (y - x) mod 1`,
    /// where `x` is taken in `[0, 1)`.
    pub fn new(x: f64, y: f64, profile: BranchFunction) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::DegenerateArc { length: f64::NAN });
        }
        let (x, y) = (wrap(x), wrap(y));
        let length = wrap(y - x);
        if length <= 0.0 {
            return Err(Error::DegenerateArc { length });
        }
        if (profile.lo() - x).abs() > ENDPOINT_TOL || (profile.hi() - (x + length)).abs() > ENDPOINT_TOL {
            return Err(Error::DomainMismatch("profile domain must be the arc [x, x + L]"));
        }
        let residual = profile.first().y.abs().max((profile.last().y - 1.0).abs());
        if residual > ENDPOINT_TOL {
            return Err(Error::NotFullBranch { residual });
        }
        if !matches!(profile.slope(), Slope::Expanding { margin } if margin > 0.0) {
            return Err(Error::NotExpanding { index: 0, slope: profile.min_derivative(), margin: 0.0 });
        }
        let (ok, residual) = check_gluing(&profile, GAMMA_GLUING_TOL);
        if !ok {
            return Err(Error::GluingViolation { residual, tol: GAMMA_GLUING_TOL });
        }
        Ok(Self { x, y, profile })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn arc_length(&self) -> f64 {
        self.profile.hi() - self.profile.lo()
    }

    pub fn profile(&self) -> &BranchFunction {
        &self.profile
    }

    /// The profile moved to `[0, L]`.
    pub fn first_branch(&self) -> BranchFunction {
        self.profile.shifted(-self.profile.lo(), 0.0)
    }
}

/// Extension check run by [`gamma_to_map_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub ode_step: f64,
    pub tol: f64,
}

impl Default for CrossCheck {
    fn default() -> Self {
        Self { ode_step: DEFAULT_STEP, tol: 1e-6 }
    }
}

/// [`gamma_to_map_with`] with the default ODE cross-check.
pub fn gamma_to_map(g: &GammaElement) -> Result<CircleMap> {
    gamma_to_map_with(g, Some(CrossCheck::default()))
}

/// The Lebesgue-preserving map whose first branch is `g`'s profile on its arc.
///
/// The second branch comes from the transport extension; with `check` set the
/// ODE extension is computed as well and must agree within `check.tol`.
pub fn gamma_to_map_with(g: &GammaElement, check: Option<CrossCheck>) -> Result<CircleMap> {
    let f1 = g.first_branch();
    let ext = extend_by_transport(&f1)?;
    if let Some(check) = check {
        let ode = extend_by_ode(&f1, check.ode_step, check.tol)?;
        let difference = second_branch_gap(&ext.map, &ode.map, 1000);
        if difference > check.tol {
            return Err(Error::ExtensionMismatch { difference });
        }
    }
    // ext.map is z ↦ F(z) with F(0) = 0; the element's map is z ↦ F(z - x).
    // Its fixed point x + w solves L(w) - w = x for the lift L of F.
    let base = &ext.map;
    let x = g.x;
    let w = solve_increasing(
        |w| {
            let (v, d) = base.lift(w);
            (v - w, d - 1.0)
        },
        0.0,
        1.0,
        x,
        crate::INVERSION_TOL,
    )?;
    base.renormalized(w, x + w, x + w)
}

/// Arc and profile of a map in the space; the arc is the one containing the
/// fixed point.
pub fn map_to_gamma(m: &CircleMap) -> Result<GammaElement> {
    let report = validate_map(m);
    if !report.is_expanding {
        return Err(Error::NotInSpace { reason: "min_derivative", value: report.min_derivative });
    }
    if report.preservation_residual > SPACE_TOL {
        return Err(Error::NotInSpace { reason: "preservation_residual", value: report.preservation_residual });
    }
    if report.gluing_residual > SPACE_TOL {
        return Err(Error::NotInSpace { reason: "gluing_residual", value: report.gluing_residual });
    }
    let theta = m.rotation_offset();
    // the represented map vanishes where the normalized lift takes the values 2 - θ and 3 - θ
    let start = m.lift_inverse(2.0 - theta)?;
    let end = m.lift_inverse(3.0 - theta)?;
    let mut knots = m.lift_window(start, end, 2.0 - theta);
    let last = knots.len() - 1;
    knots[0].y = 0.0;
    knots[last].y = 1.0;
    let x = wrap(start + theta);
    let length = end - start;
    for k in &mut knots {
        k.x += x;
    }
    knots[0].x = x;
    let profile = BranchFunction::with_slope(knots, Slope::Expanding { margin: m.margin() })?;
    GammaElement::new(x, wrap(x + length), profile)
}

/// The profile rescaled affinely onto `[0, 1/2]`; slopes scale by `2 L`.
///
/// The result is increasing but need not be expanding.
pub fn normalize_profile(g: &GammaElement) -> BranchFunction {
    rescale_to_half(&g.profile)
}

/// Affine change of variables taking `b`'s domain onto `[0, 1/2]`.
pub fn rescale_to_half(b: &BranchFunction) -> BranchFunction {
    let lo = b.lo();
    let scale = 0.5 / (b.hi() - lo);
    let mut knots: alloc::vec::Vec<_> =
        b.knots().iter().map(|k| crate::Knot::new((k.x - lo) * scale, k.y, k.dy / scale)).collect();
    let last = knots.len() - 1;
    knots[last].x = 0.5;
    BranchFunction::increasing(knots).expect("affine image of an increasing branch")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{c1_distance, circle_distance, find_fixed_point};
    use crate::homotopy::{canonical_branch, CanonicalParams};
    use crate::DEFAULT_MARGIN;

    fn element(x: f64, params: CanonicalParams) -> GammaElement {
        let b = canonical_branch(params).unwrap().shifted(x, 0.0);
        GammaElement::new(x, x + params.a(), b).unwrap()
    }

    #[test]
    fn doubling_coordinates() {
        let g = GammaElement::new(0.0, 0.5, BranchFunction::new([(0.0, 0.0, 2.0), (0.5, 1.0, 2.0)], DEFAULT_MARGIN).unwrap())
            .unwrap();
        let m = gamma_to_map(&g).unwrap();
        assert!(c1_distance(&m, &CircleMap::doubling()) < 1e-12);
        let back = map_to_gamma(&CircleMap::doubling()).unwrap();
        assert_eq!((back.x(), back.y()), (0.0, 0.5));
        assert!((back.profile().eval(0.3).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn translated_arc_gives_shifted_doubling() {
        let b = BranchFunction::new([(0.25, 0.0, 2.0), (0.75, 1.0, 2.0)], DEFAULT_MARGIN).unwrap();
        let g = GammaElement::new(0.25, 0.75, b).unwrap();
        let m = gamma_to_map(&g).unwrap();
        for i in 0..100 {
            let z = i as f64 / 100.0;
            assert!(circle_distance(m.eval(z), 2.0 * z - 0.5) < 1e-12);
        }
        assert!((find_fixed_point(&m).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rotated_doubling_arc() {
        let m = CircleMap::doubling().with_rotation(0.25);
        let g = map_to_gamma(&m).unwrap();
        assert!((g.x() - 0.125).abs() < 1e-12 && (g.y() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn non_gluing_profile_rejected() {
        let b = BranchFunction::new([(0.0, 0.0, 3.0), (1.0 / 3.0, 1.0, 3.0)], DEFAULT_MARGIN).unwrap();
        match GammaElement::new(0.0, 1.0 / 3.0, b) {
            Err(Error::GluingViolation { residual, .. }) => assert!((residual - 1.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_on_canonical_elements() {
        for (x, a, c) in [(0.1, 0.4, 2.0), (0.3, 0.5, 2.5), (0.0, 0.45, 1.8), (0.35, 0.3, 4.0)] {
            let g = element(x, CanonicalParams::new(a, c).unwrap());
            let m = gamma_to_map(&g).unwrap();
            let r = validate_map(&m);
            assert!(r.preservation_residual < 1e-6 && r.gluing_residual < 1e-6);
            let back = map_to_gamma(&m).unwrap();
            assert!((back.x() - g.x()).abs() < 1e-9 && (back.y() - g.y()).abs() < 1e-9, "{x} {a} {c}");
            for i in 0..=100 {
                let z = g.profile().lo() + g.arc_length() * i as f64 / 100.0;
                let (v0, d0) = g.profile().eval_both(z).unwrap();
                let (v1, d1) = back.profile().eval_both(z).unwrap();
                assert!((v0 - v1).abs() < 1e-9 && (d0 - d1).abs() < 1e-7);
            }
            let again = gamma_to_map(&back).unwrap();
            // the two transport extensions interpolate different knot sets
            assert!(c1_distance(&again, &m) < 1e-4);
            for i in 0..=1000 {
                let z = i as f64 / 1000.0;
                assert!(circle_distance(again.eval(z), m.eval(z)) < 1e-8);
            }
        }
    }

    #[test]
    fn wrapping_arc_maps_like_its_partner() {
        let g = element(0.8, CanonicalParams::new(0.4, 2.2).unwrap());
        let m = gamma_to_map(&g).unwrap();
        let partner = map_to_gamma(&m).unwrap();
        // the partner arc starts where g's arc ends
        assert!(circle_distance(partner.x(), g.y()) < 1e-9);
        assert!(c1_distance(&gamma_to_map(&partner).unwrap(), &m) < 1e-6);
    }

    #[test]
    fn normalized_profile() {
        let g = element(0.2, CanonicalParams::new(0.3, 4.0).unwrap());
        let n = normalize_profile(&g);
        assert_eq!((n.lo(), n.hi()), (0.0, 0.5));
        assert!((n.first().dy - 4.0 * 0.6).abs() < 1e-12);
        // total rise is the integral of the rescaled derivative
        let steps = 20_000;
        let integral: f64 = (0..steps)
            .map(|i| n.derivative(0.5 * (i as f64 + 0.5) / steps as f64).unwrap())
            .sum::<f64>()
            * 0.5
            / steps as f64;
        assert!((integral - 1.0).abs() < 1e-8);
        let b = BranchFunction::new([(0.0, 0.0, 3.0), (1.0 / 3.0, 1.0, 3.0)], DEFAULT_MARGIN).unwrap();
        let scaled = rescale_to_half(&b);
        assert!((scaled.first().dy - 2.0).abs() < 1e-15 && (scaled.last().dy - 2.0).abs() < 1e-15);
    }
}
