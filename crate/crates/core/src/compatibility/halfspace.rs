//! Edge-by-edge geometric audit of a weakly compatible assignment.
//!
//! For an edge `δ` with lattice points `d_0, …, d_m` (listed so that
//! `d_i, d_j, a` is positively oriented for `i < j` and `a ∉ δ`), every control
//! point `f(a)` with `a ∉ δ` must lie in the closed halfplane on the positive
//! side of each line `f(d_i) f(d_j)` with `f(d_i) ≠ f(d_j)`, after adjusting for
//! the global orientation sign. The intersection of those halfplanes lies
//! outside the relative interior of `conv f(δ ∩ A)`.

use serde::Serialize;

use super::{check_weak, validate, ImageOrientation, ORIENT_EPS};
use crate::error::{Error, Result};
use crate::geometry::{self, Point2};
use crate::lattice::{convex_hull, LatticeSet};
use crate::patch::ControlAssignment;

/// `normal · x + offset >= 0`, spanned by the images of lattice points `from`
/// and `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Halfspace {
    pub from: usize,
    pub to: usize,
    pub normal: Point2,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HullSide {
    Exterior,
    InteriorViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfspaceDiagnostic {
    pub edge: usize,
    /// Lattice indices of the edge points in halfspace order.
    pub edge_points: Vec<usize>,
    pub halfspaces: Vec<Halfspace>,
    /// `(lattice index, halfspace index)` pairs where containment fails.
    pub violations: Vec<(usize, usize)>,
    pub contained: bool,
    /// The intersection of the halfspaces has nonempty interior.
    pub feasible: bool,
    /// Fewer than two distinct images among the edge points.
    pub degenerate: bool,
    pub side: HullSide,
    /// Control points off the edge that fall in the relative interior of the
    /// hull of the edge's control points.
    pub interior_points: Vec<usize>,
}

impl HalfspaceDiagnostic {
    pub fn passes(&self) -> bool {
        self.contained && self.feasible && self.side == HullSide::Exterior
    }
}

pub fn halfspace_diagnostic(
    lattice: &LatticeSet,
    control: &ControlAssignment,
    edge: usize,
) -> Result<HalfspaceDiagnostic> {
    validate(lattice, control)?;
    let poly = convex_hull(lattice)?;
    if edge >= poly.edge_count() {
        return Err(Error::InvalidEdge {
            index: edge,
            edges: poly.edge_count(),
        });
    }
    let weak = check_weak(lattice, control)?;
    let sign = match (weak.is_weakly_compatible(), weak.global_sign) {
        (true, Some(s)) => s,
        _ => return Err(Error::NotWeaklyCompatible),
    };
    let s = sign.as_i8() as f64;

    let h = poly.edges[edge];
    let (start, _) = poly.edge_endpoints(edge);
    let (dir, _) = poly.edge_direction(edge);
    let mut edge_points: Vec<usize> = (0..lattice.len())
        .filter(|&k| h.at(lattice.get(k)) == 0)
        .collect();
    edge_points.sort_by_key(|&k| {
        let p = lattice.get(k);
        (p.i - start.i) * dir.0 + (p.j - start.j) * dir.1
    });
    let others: Vec<usize> = (0..lattice.len())
        .filter(|&k| h.at(lattice.get(k)) != 0)
        .collect();

    let image = ImageOrientation::new(control, ORIENT_EPS);
    let pts = control.planar_points();

    let mut halfspaces = Vec::new();
    for (a, &i) in edge_points.iter().enumerate() {
        for &j in &edge_points[a + 1..] {
            if image.coincide(i, j) {
                continue;
            }
            let (p, q) = (pts[i], pts[j]);
            let normal = [-s * (q[1] - p[1]), s * (q[0] - p[0])];
            halfspaces.push(Halfspace {
                from: i,
                to: j,
                normal,
                offset: -(normal[0] * p[0] + normal[1] * p[1]),
            });
        }
    }
    let degenerate = halfspaces.is_empty();

    let mut violations = Vec::new();
    for &a in &others {
        for (k, hs) in halfspaces.iter().enumerate() {
            // same predicate (and threshold) as the triple scan
            if image.orient(hs.from, hs.to, a).sign == -sign {
                violations.push((a, k));
            }
        }
    }

    // clip a box around the controls by every halfspace
    let spread = control.spread().max(1.0);
    let (lo, hi) = bounds(&pts);
    let pad = 10.0 * spread;
    let mut region = vec![
        [lo[0] - pad, lo[1] - pad],
        [hi[0] + pad, lo[1] - pad],
        [hi[0] + pad, hi[1] + pad],
        [lo[0] - pad, hi[1] + pad],
    ];
    for hs in &halfspaces {
        region = geometry::clip_halfplane(&region, hs.normal, hs.offset);
    }
    let area_tol = ORIENT_EPS * spread * spread;
    let feasible = region.len() >= 3 && geometry::polygon_area(&region) > area_tol;

    let edge_images: Vec<Point2> = edge_points.iter().map(|&k| pts[k]).collect();
    let hull = geometry::convex_hull(&edge_images);
    let dist_tol = ORIENT_EPS * spread;
    let interior_points: Vec<usize> = others
        .iter()
        .copied()
        .filter(|&a| in_relative_interior(&hull, pts[a], dist_tol))
        .collect();
    let overlap = if hull.len() >= 3 && feasible {
        geometry::polygon_area(&geometry::clip_convex(&region, &hull))
    } else {
        0.0
    };
    let side = if interior_points.is_empty() && overlap <= area_tol {
        HullSide::Exterior
    } else {
        HullSide::InteriorViolation
    };

    Ok(HalfspaceDiagnostic {
        edge,
        edge_points,
        halfspaces,
        contained: violations.is_empty(),
        violations,
        feasible,
        degenerate,
        side,
        interior_points,
    })
}

fn bounds(pts: &[Point2]) -> (Point2, Point2) {
    pts.iter().fold(
        ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
        |(lo, hi), p| {
            (
                [lo[0].min(p[0]), lo[1].min(p[1])],
                [hi[0].max(p[0]), hi[1].max(p[1])],
            )
        },
    )
}

fn in_relative_interior(hull: &[Point2], p: Point2, tol: f64) -> bool {
    match hull {
        [] => false,
        [q] => geometry::distance(*q, p) <= tol,
        [a, b] => {
            let len = geometry::distance(*a, *b);
            let off_line = geometry::cross(*a, *b, p).abs() / len;
            let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
            off_line <= tol && t * len > tol && (1.0 - t) * len > tol
        }
        _ => geometry::signed_distance_to_convex(hull, p) > tol,
    }
}
