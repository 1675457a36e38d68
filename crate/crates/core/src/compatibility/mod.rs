//! Weak compatibility and compatibility of a planar control assignment.
//!
//! An assignment `f: A → R²` is weakly compatible when some triple of lattice
//! points and its image are both affinely independent, and every triple that
//! is affinely independent on both sides has the same product of domain and
//! image orientation. It is compatible when, in addition, no two hull vertices
//! share an image. Compatibility is equivalent to injectivity of the patch on
//! the closed domain for every choice of positive weights.

mod halfspace;
mod orient;
mod pl;
mod triangulation;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{convex_hull, LatticeSet, Sign};
use crate::patch::ControlAssignment;

pub use halfspace::{halfspace_diagnostic, Halfspace, HalfspaceDiagnostic, HullSide};
pub use orient::ORIENT_EPS;
pub use pl::{pl_map_check, PlMapReport};
pub use triangulation::{default_triangulation, random_triangulation, triangulate_in_order};

pub(crate) use orient::ImageOrientation;

/// Default cap on the number of witnesses kept in a report.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrientedTriple {
    pub indices: [usize; 3],
    pub domain_sign: Sign,
    pub image_sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    WeaklyCompatibleOnly,
    NotWeaklyCompatible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A doubly independent triple whose orientation product differs from the
    /// reference triple's.
    ViolatingTriple { triple: OrientedTriple },
    /// Two hull vertices (lattice indices) with the same image.
    CoincidentVertices {
        vertices: [usize; 2],
        image: [f64; 2],
    },
}

/// Triple whose float image determinant sits near the independence threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FragileTriple {
    pub indices: [usize; 3],
    pub det: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityReport {
    /// For [`check_weak`] a passing assignment is reported as
    /// `WeaklyCompatibleOnly` with `vertices_checked == false`.
    pub verdict: Verdict,
    /// Orientation product of the reference triple; `+1` when `f` preserves
    /// orientation, `-1` when it reverses it.
    pub global_sign: Option<Sign>,
    pub reference: Option<[usize; 3]>,
    pub witnesses: Vec<Witness>,
    pub violation_count: u64,
    pub fragile: Vec<FragileTriple>,
    pub fragile_count: u64,
    pub triples_checked: u64,
    /// Condition (1) failed: no triple is independent in both domain and image.
    pub no_independent_triple: bool,
    pub vertices_checked: bool,
    pub exact: bool,
}

impl CompatibilityReport {
    pub fn is_weakly_compatible(&self) -> bool {
        self.verdict != Verdict::NotWeaklyCompatible
    }

    pub fn is_compatible(&self) -> bool {
        self.verdict == Verdict::Compatible
    }

    pub fn violating_triples(&self) -> impl Iterator<Item = &OrientedTriple> {
        self.witnesses.iter().filter_map(|w| match w {
            Witness::ViolatingTriple { triple } => Some(triple),
            _ => None,
        })
    }

    pub fn coincident_vertices(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.witnesses.iter().filter_map(|w| match w {
            Witness::CoincidentVertices { vertices, .. } => Some(*vertices),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub max_witnesses: usize,
    /// Stop at the first violation instead of scanning every triple.
    pub fast: bool,
    pub orient_eps: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            max_witnesses: MAX_WITNESSES,
            fast: false,
            orient_eps: ORIENT_EPS,
        }
    }
}

fn validate(lattice: &LatticeSet, control: &ControlAssignment) -> Result<()> {
    if control.dim() != 2 {
        return Err(Error::Dimension(control.dim()));
    }
    if control.len() != lattice.len() {
        return Err(Error::LengthMismatch {
            what: "control points",
            expected: lattice.len(),
            found: control.len(),
        });
    }
    if lattice.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "compatibility needs at least 3 lattice points, got {}",
            lattice.len()
        )));
    }
    Ok(())
}

pub fn check_weak(
    lattice: &LatticeSet,
    control: &ControlAssignment,
) -> Result<CompatibilityReport> {
    check_weak_with(lattice, control, &CheckOptions::default())
}

/// Scans all `C(|A|, 3)` triples in lexicographic order. The first triple that
/// is independent on both sides is the reference; every later doubly
/// independent triple must reproduce its orientation product.
#[allow(clippy::needless_range_loop)]
pub fn check_weak_with(
    lattice: &LatticeSet,
    control: &ControlAssignment,
    opts: &CheckOptions,
) -> Result<CompatibilityReport> {
    validate(lattice, control)?;
    let image = ImageOrientation::new(control, opts.orient_eps);
    let pts: Vec<(i64, i64)> = lattice.iter().map(|p| (p.i, p.j)).collect();
    let n = pts.len();

    let mut reference: Option<([usize; 3], Sign)> = None;
    let mut witnesses = Vec::new();
    let mut violation_count = 0u64;
    let mut fragile = Vec::new();
    let mut fragile_count = 0u64;
    let mut checked = 0u64;

    'scan: for i in 0..n {
        let (pi, pj) = pts[i];
        for j in i + 1..n {
            let (ux, uy) = (pts[j].0 - pi, pts[j].1 - pj);
            for k in j + 1..n {
                checked += 1;
                let (vx, vy) = (pts[k].0 - pi, pts[k].1 - pj);
                // |coords| <= 2^20 keeps this exact in i64
                let domain_sign = Sign::of(ux * vy - uy * vx);
                if domain_sign.is_zero() {
                    continue;
                }
                let o = image.orient(i, j, k);
                if o.fragile {
                    fragile_count += 1;
                    if fragile.len() < opts.max_witnesses {
                        fragile.push(FragileTriple {
                            indices: [i, j, k],
                            det: o.det.unwrap_or(0.0),
                            threshold: image.threshold().unwrap_or(0.0),
                        });
                    }
                }
                if o.sign.is_zero() {
                    continue;
                }
                let product = domain_sign * o.sign;
                match reference {
                    None => reference = Some(([i, j, k], product)),
                    Some((_, s)) if s == product => {}
                    Some(_) => {
                        violation_count += 1;
                        if witnesses.len() < opts.max_witnesses {
                            witnesses.push(Witness::ViolatingTriple {
                                triple: OrientedTriple {
                                    indices: [i, j, k],
                                    domain_sign,
                                    image_sign: o.sign,
                                },
                            });
                        }
                        if opts.fast {
                            break 'scan;
                        }
                    }
                }
            }
        }
    }

    let weak = reference.is_some() && violation_count == 0;
    Ok(CompatibilityReport {
        verdict: if weak {
            Verdict::WeaklyCompatibleOnly
        } else {
            Verdict::NotWeaklyCompatible
        },
        global_sign: if weak {
            reference.map(|(_, s)| s)
        } else {
            None
        },
        reference: reference.map(|(t, _)| t),
        witnesses,
        violation_count,
        fragile,
        fragile_count,
        triples_checked: checked,
        no_independent_triple: reference.is_none(),
        vertices_checked: false,
        exact: image.is_exact(),
    })
}

pub fn check_compatible(
    lattice: &LatticeSet,
    control: &ControlAssignment,
) -> Result<CompatibilityReport> {
    check_compatible_with(lattice, control, &CheckOptions::default())
}

/// [`check_weak_with`] plus pairwise distinctness of the hull vertex images.
pub fn check_compatible_with(
    lattice: &LatticeSet,
    control: &ControlAssignment,
    opts: &CheckOptions,
) -> Result<CompatibilityReport> {
    let mut report = check_weak_with(lattice, control, opts)?;
    // a collinear lattice set already fails condition (1)
    let Ok(poly) = convex_hull(lattice) else {
        return Ok(report);
    };
    let image = ImageOrientation::new(control, opts.orient_eps);
    let vertices: Vec<usize> = poly
        .vertices
        .iter()
        .map(|&v| lattice.index_of(v).expect("hull vertex in set"))
        .collect();
    let mut coincident = false;
    for (a, &u) in vertices.iter().enumerate() {
        for &v in &vertices[a + 1..] {
            if image.coincide(u, v) {
                coincident = true;
                let [lo, hi] = if u < v { [u, v] } else { [v, u] };
                report.witnesses.push(Witness::CoincidentVertices {
                    vertices: [lo, hi],
                    image: control.planar_point(u),
                });
            }
        }
    }
    report.vertices_checked = true;
    if report.verdict == Verdict::WeaklyCompatibleOnly && !coincident {
        report.verdict = Verdict::Compatible;
    }
    Ok(report)
}
