//! Expanding circle maps of degree two that preserve Lebesgue measure.
//!
//! A map is stored as two increasing cubic Hermite branches plus a rotation.
//! The crate extends a first branch to a Lebesgue-preserving map, applies the
//! transfer operator on density grids, moves between maps and their
//! `(x, y, profile)` coordinates, and builds paths to the doubling map.
//!
//! Everything here is `no_std` with `alloc`.

#![no_std]

extern crate alloc;

mod error;
mod roots;

pub mod branch;
pub mod circle;
pub mod extension;
pub mod gamma;
pub mod homotopy;
pub mod transfer;

pub use branch::{BranchFunction, Knot, Slope, DEFAULT_MARGIN, INVERSION_TOL};
pub use circle::{
    c1_distance, c1_distance_on, circle_distance, find_fixed_point, validate_map, validate_map_on, wrap, CircleMap,
    ValidationReport,
};
pub use error::{Error, Result};
pub use extension::{
    check_gluing, extend_by_ode, extend_by_transport, integrate_extension, ExtensionResult, Method, Trajectory,
};
pub use gamma::{gamma_to_map, gamma_to_map_with, map_to_gamma, normalize_profile, CrossCheck, GammaElement};
pub use homotopy::{
    build_path, build_path_with, canonical_branch, generator_loop, linear_branch_leg, perturbed_canonical,
    rotate_conjugate, slide_leg, winding_number, CanonicalParams, HomotopyPath, Leg, LegKind, PathOptions,
};
pub use transfer::{apply_transfer, iterate_to_invariant, preservation_residual, DensityGrid, InvariantDensity};
