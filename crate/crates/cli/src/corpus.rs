//! Reproducible test inputs: first branches to extend, maps outside the
//! Lebesgue-preserving space, and random Γ elements.

use std::f64::consts::PI;

use lebesgue_circle::{
    canonical_branch, extend_by_transport, gamma_to_map, perturbed_canonical, BranchFunction, CanonicalParams, CircleMap, GammaElement,
    Knot, Result, DEFAULT_MARGIN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Knots used when a smooth function is sampled into a branch.
pub const SAMPLE_KNOTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ConstantSlope,
    SinePerturbed,
    Canonical,
}

#[derive(Debug, Clone)]
pub struct CorpusBranch {
    pub name: String,
    pub family: Family,
    pub branch: BranchFunction,
}

/// `u ↦ s u` on `[0, 1/s]`.
pub fn constant_slope(s: f64) -> Result<BranchFunction> {
    BranchFunction::new([(0.0, 0.0, s), (1.0 / s, 1.0, s)], DEFAULT_MARGIN)
}

/// `u ↦ u/a + ε sin(π k u / a)` on `[0, a]`; `k` must be an integer so the
/// branch stays full.
pub fn sine_branch(a: f64, amplitude: f64, k: u32) -> Result<BranchFunction> {
    let w = PI * k as f64 / a;
    sampled_branch(0.0, a, SAMPLE_KNOTS, |u| (u / a + amplitude * (w * u).sin(), 1.0 / a + amplitude * w * (w * u).cos()))
}

/// Branch through `(x, f(x), f'(x))` at `n + 1` uniform points of `[lo, hi]`
/// with the end values pinned to 0 and 1.
pub fn sampled_branch<F: Fn(f64) -> (f64, f64)>(lo: f64, hi: f64, n: usize, f: F) -> Result<BranchFunction> {
    let mut knots: Vec<Knot> = (0..=n)
        .map(|i| {
            let x = if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
            let (y, dy) = f(x);
            Knot::new(x, y, dy)
        })
        .collect();
    knots[0].y = 0.0;
    knots[n].y = 1.0;
    BranchFunction::new(knots, DEFAULT_MARGIN)
}

/// At least twenty first branches: constant slopes, sine perturbations with
/// amplitudes 0.02, 0.05 and 0.1, and canonical branches across the
/// admissible `(a, c)` region.
pub fn first_branches() -> Vec<CorpusBranch> {
    let mut out = Vec::new();
    for s in [1.5, 2.0, 2.5, 3.0, 4.0] {
        out.push(CorpusBranch {
            name: format!("constant slope {s}"),
            family: Family::ConstantSlope,
            branch: constant_slope(s).expect("constant slope above one"),
        });
    }
    for a in [0.4, 0.5, 0.6] {
        for amplitude in [0.02, 0.05, 0.1] {
            out.push(CorpusBranch {
                name: format!("sine a={a} eps={amplitude}"),
                family: Family::SinePerturbed,
                branch: sine_branch(a, amplitude, 1).expect("sine branch stays expanding"),
            });
        }
    }
    out.push(CorpusBranch {
        name: "sine a=0.3 eps=0.02 k=3".into(),
        family: Family::SinePerturbed,
        branch: sine_branch(0.3, 0.02, 3).expect("sine branch stays expanding"),
    });
    for (a, frac) in [(0.25, 0.5), (0.3, 0.2), (0.3, 0.8), (0.4, 0.1), (0.4, 0.5), (0.4, 0.9), (0.5, 0.3), (0.5, 0.7), (0.55, 0.5)] {
        let (lo, hi) = CanonicalParams::slope_range(a).expect("a below 3/5");
        let c = lo + frac * (hi - lo);
        out.push(CorpusBranch {
            name: format!("canonical a={a} c={c:.4}"),
            family: Family::Canonical,
            branch: canonical_branch(CanonicalParams::new(a, c).expect("inside range")).expect("valid canonical"),
        });
    }
    out
}

/// Normalized map from a lift `F` on `[0, 1]` with `F(0) = 0`, `F(a) = 1`,
/// `F(1) = 2`, sampled with `n` pieces per branch.
pub fn sampled_map<F: Fn(f64) -> (f64, f64)>(lift: F, a: f64, n: usize) -> Result<CircleMap> {
    let b1 = sampled_branch(0.0, a, n, &lift)?;
    let b2 = sampled_branch(a, 1.0, n, |x| {
        let (y, d) = lift(x);
        (y - 1.0, d)
    })?;
    CircleMap::new(b1, b2, 0.0)
}

/// `x ↦ 2x + 0.05 sin(2πx)`: expanding and C¹ but not Lebesgue preserving.
pub fn control_map() -> CircleMap {
    sampled_map(|x| (2.0 * x + 0.05 * (2.0 * PI * x).sin(), 2.0 + 0.1 * PI * (2.0 * PI * x).cos()), 0.5, 1024)
        .expect("control map is expanding")
}

/// `φ(x) = x + 0.1 sin(2πx) / (2π)`.
pub fn phi(x: f64) -> f64 {
    x + 0.1 * (2.0 * PI * x).sin() / (2.0 * PI)
}

pub fn phi_prime(x: f64) -> f64 {
    1.0 + 0.1 * (2.0 * PI * x).cos()
}

/// Inverse of [`phi`] on `[0, 1]` by bisection.
pub fn phi_inverse(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `φ ∘ D ∘ φ⁻¹` for the doubling map `D`, sampled at `n` knots per branch
/// placed at the images under `φ` of a uniform grid.
pub fn conjugated_doubling(n: usize) -> CircleMap {
    let branch = |w0: f64, shift: f64| {
        let mut knots: Vec<Knot> = (0..=n)
            .map(|i| {
                let w = w0 + 0.5 * i as f64 / n as f64;
                Knot::new(phi(w), phi(2.0 * w) - shift, 2.0 * phi_prime(2.0 * w) / phi_prime(w))
            })
            .collect();
        knots[0].x = w0;
        knots[0].y = 0.0;
        knots[n].x = w0 + 0.5;
        knots[n].y = 1.0;
        BranchFunction::new(knots, DEFAULT_MARGIN).expect("conjugate of doubling is expanding")
    };
    CircleMap::new(branch(0.0, 0.0), branch(0.5, 1.0), 0.0).expect("full branches")
}

/// Invariant density of [`conjugated_doubling`]: `1 / φ'(φ⁻¹(x))`.
pub fn conjugated_density(x: f64) -> f64 {
    1.0 / phi_prime(phi_inverse(x))
}

/// Arc lengths of random Γ elements; the canonical family is empty from 3/5 on.
pub const RANDOM_ARC: std::ops::Range<f64> = 0.2..0.6;

/// A random element on a non-wrapping arc: uniform length, uniform admissible
/// endpoint slope, and for every other draw a gluing-preserving bump.
pub fn random_gamma<R: Rng>(rng: &mut R) -> GammaElement {
    let length = rng.gen_range(RANDOM_ARC);
    let (lo, hi) = CanonicalParams::slope_range(length).expect("length below 3/5");
    let params = loop {
        if let Ok(p) = CanonicalParams::new(length, rng.gen_range(lo..hi)) {
            break p;
        }
    };
    let x = rng.gen_range(0.0..1.0 - length);
    let mut branch = canonical_branch(params).expect("admissible parameters");
    if rng.gen_bool(0.5) {
        let mut amplitude = rng.gen_range(-0.05..0.05) * length;
        let frequency = rng.gen_range(1..=3) as f64;
        let phase = rng.gen_range(0.0..2.0 * PI);
        for _ in 0..20 {
            if let Ok(b) = perturbed_canonical(params, amplitude, frequency, phase, 64) {
                branch = b;
                break;
            }
            amplitude *= 0.5;
        }
    }
    GammaElement::new(x, x + length, branch.shifted(x, 0.0)).expect("canonical profiles glue")
}

pub fn random_gammas(seed: u64, n: usize) -> Vec<GammaElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_gamma(&mut rng)).collect()
}

/// Maps of random Γ elements.
pub fn random_maps(seed: u64, n: usize) -> Result<Vec<CircleMap>> {
    random_gammas(seed, n).iter().map(gamma_to_map).collect()
}

/// Branch points of [`random_path_maps`]: inside the canonical family with
/// room on both sides of the admissible slope interval.
pub const PATH_BRANCH_POINT: std::ops::Range<f64> = 0.3..0.58;

/// Random maps that [`build_path`](lebesgue_circle::build_path) accepts: a
/// canonical first branch, bumped for every other draw, extended and rotated
/// by a uniform offset.
pub fn random_path_maps(seed: u64, n: usize) -> Result<Vec<CircleMap>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = rng.gen_range(PATH_BRANCH_POINT);
            let (lo, hi) = CanonicalParams::slope_range(a).expect("branch point below 3/5");
            let params = loop {
                if let Ok(p) = CanonicalParams::new(a, rng.gen_range(lo..hi)) {
                    break p;
                }
            };
            let mut branch = canonical_branch(params)?;
            if rng.gen_bool(0.5) {
                let mut amplitude = rng.gen_range(-0.05..0.05) * a;
                let frequency = rng.gen_range(1..=3) as f64;
                let phase = rng.gen_range(0.0..2.0 * PI);
                for _ in 0..20 {
                    if let Ok(b) = perturbed_canonical(params, amplitude, frequency, phase, 64) {
                        branch = b;
                        break;
                    }
                    amplitude *= 0.5;
                }
            }
            let rotation = rng.gen_range(0.0..1.0);
            Ok(extend_by_transport(&branch)?.map.with_rotation(rotation))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_large_enough() {
        let corpus = first_branches();
        assert!(corpus.len() >= 20);
        for family in [Family::ConstantSlope, Family::SinePerturbed, Family::Canonical] {
            assert!(corpus.iter().any(|c| c.family == family));
        }
        for c in &corpus {
            assert_eq!(c.branch.first().y, 0.0);
            assert_eq!(c.branch.last().y, 1.0);
        }
    }

    #[test]
    fn sine_branch_matches_formula() {
        let b = sine_branch(0.5, 0.1, 1).unwrap();
        let u = 0.3;
        let exact = 2.0 * u + 0.1 * (2.0 * PI * u).sin();
        assert!((b.eval(u).unwrap() - exact).abs() < 1e-9);
    }

    #[test]
    fn phi_inverts() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((phi(phi_inverse(x)) - x).abs() < 1e-15);
        }
        let m = conjugated_doubling(512);
        for i in 0..50 {
            let w = i as f64 / 50.0;
            let expect = lebesgue_circle::wrap(phi(2.0 * w));
            assert!(lebesgue_circle::circle_distance(m.eval(phi(w)), expect) < 1e-9);
        }
    }

    #[test]
    fn random_elements_are_reproducible() {
        let a = random_gammas(7, 5);
        let b = random_gammas(7, 5);
        assert_eq!(a, b);
        for g in &a {
            assert!(RANDOM_ARC.contains(&g.arc_length()));
            assert!(g.x() >= 0.0 && g.x() + g.arc_length() <= 1.0 + 1e-12);
        }
    }
}
