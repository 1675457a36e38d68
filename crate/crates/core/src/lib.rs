//! Toric Bézier patches over lattice polygons.
//!
//! A finite set of lattice points `A`, control points `f: A → R²` (or `R³`)
//! and positive weights define a rational patch on the convex hull of `A`.
//! The [`compatibility`] module decides whether that patch is injective for
//! every choice of weights; the [`oracle`] module checks the answer
//! empirically by dense sampling.

pub mod basis;
pub mod compatibility;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod oracle;
pub mod patch;

pub use basis::{
    eval_basis, tensor_lattice, tensor_weights, triangle_lattice, triangle_weights, DomainPoint,
    ToricBasis,
};
pub use compatibility::{
    check_compatible, check_weak, halfspace_diagnostic, pl_map_check, CompatibilityReport, Verdict,
};
pub use error::{Error, Result};
pub use lattice::{convex_hull, LatticePoint, LatticeSet, Polygon, Sign};
pub use oracle::{
    find_collisions, random_weights, sample_patch, stress_certificate, CollisionReport, SampleCloud,
};
pub use patch::{eval_patch, ControlAssignment, PatchSpec, Weights};
