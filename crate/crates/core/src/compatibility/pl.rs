use serde::Serialize;

use super::{validate, ImageOrientation, ORIENT_EPS};
use crate::error::{Error, Result};
use crate::lattice::{convex_hull, cross, LatticeSet, Sign};
use crate::patch::ControlAssignment;

/// Orientation audit of the piecewise linear map a triangulation and the
/// control points induce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlMapReport {
    /// All nonzero image orientations agree.
    pub consistent: bool,
    /// Triangles whose image is degenerate.
    pub collapsed: Vec<[usize; 3]>,
    /// Triangles whose image orientation is in the minority (ties broken
    /// against the first nondegenerate triangle).
    pub violating: Vec<[usize; 3]>,
    /// Image orientation of each triangle, in input order.
    pub signs: Vec<Sign>,
    pub reference_sign: Option<Sign>,
}

/// Checks the orientation of every image triangle.
///
/// The triangulation must use lattice indices, be counterclockwise in the
/// domain and cover `Δ_A` exactly; coverage is checked through the exact
/// doubled-area sum. Collapsed triangles are listed but do not break
/// consistency.
pub fn pl_map_check(
    lattice: &LatticeSet,
    control: &ControlAssignment,
    triangulation: &[[usize; 3]],
) -> Result<PlMapReport> {
    validate(lattice, control)?;
    let poly = convex_hull(lattice)?;
    let mut area: i128 = 0;
    for t in triangulation {
        if let Some(&k) = t.iter().find(|&&k| k >= lattice.len()) {
            return Err(Error::InvalidTriangulation(format!(
                "vertex index {k} out of range"
            )));
        }
        let d = cross(lattice.get(t[0]), lattice.get(t[1]), lattice.get(t[2]));
        if d <= 0 {
            return Err(Error::InvalidTriangulation(format!(
                "triangle {t:?} is not counterclockwise in the domain"
            )));
        }
        area += d as i128;
    }
    if area != poly.doubled_area() {
        return Err(Error::InvalidTriangulation(format!(
            "doubled area {area} differs from the polygon's {}",
            poly.doubled_area()
        )));
    }

    let image = ImageOrientation::new(control, ORIENT_EPS);
    let signs: Vec<Sign> = triangulation
        .iter()
        .map(|&[a, b, c]| image.orient(a, b, c).sign)
        .collect();
    let pos = signs.iter().filter(|&&s| s == Sign::Positive).count();
    let neg = signs.iter().filter(|&&s| s == Sign::Negative).count();
    let first = signs.iter().copied().find(|s| !s.is_zero());
    let reference_sign = match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Some(Sign::Positive),
        std::cmp::Ordering::Less => Some(Sign::Negative),
        std::cmp::Ordering::Equal => first,
    };
    let pick = |pred: &dyn Fn(Sign) -> bool| {
        triangulation
            .iter()
            .zip(&signs)
            .filter(|(_, &s)| pred(s))
            .map(|(t, _)| *t)
            .collect::<Vec<_>>()
    };
    let collapsed = pick(&|s: Sign| s.is_zero());
    let violating = match reference_sign {
        Some(r) => pick(&|s: Sign| !s.is_zero() && s != r),
        None => Vec::new(),
    };
    Ok(PlMapReport {
        consistent: violating.is_empty(),
        collapsed,
        violating,
        signs,
        reference_sign,
    })
}
