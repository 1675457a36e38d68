#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toric_core::compatibility::Verdict;
use toric_core::lattice::convex_hull;
use toric_core::{
    check_compatible, tensor_lattice, triangle_lattice, ControlAssignment, LatticeSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Identity,
    Perturbed,
    CornerSwap,
    /// One hull edge pinched onto a vertex image.
    EdgeCollapse,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub kind: Kind,
    pub lattice: LatticeSet,
    pub control: ControlAssignment,
}

/// Grids up to 3×3 and triangles up to degree 3.
pub fn lattices() -> Vec<(String, LatticeSet)> {
    let mut out = Vec::new();
    for m in 1..=3 {
        for n in 1..=3 {
            out.push((format!("grid{m}x{n}"), tensor_lattice(m, n)));
        }
    }
    for m in 1..=3 {
        out.push((format!("tri{m}"), triangle_lattice(m)));
    }
    out
}

const MAGNITUDES: [f64; 7] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6];

/// Identity, random perturbations of magnitude up to 0.6 lattice spacings,
/// and every swap of two adjacent hull vertex images.
pub fn instances() -> Vec<Instance> {
    let mut out = Vec::new();
    for (name, lattice) in lattices() {
        let identity = ControlAssignment::identity(&lattice);
        out.push(Instance {
            name: format!("{name}/identity"),
            kind: Kind::Identity,
            lattice: lattice.clone(),
            control: identity.clone(),
        });
        for rep in 0..2 {
            for (k, &mag) in MAGNITUDES.iter().enumerate() {
                let seed = (out.len() * 7919 + rep * 31 + k) as u64;
                out.push(Instance {
                    name: format!("{name}/perturbed{mag}/{rep}"),
                    kind: Kind::Perturbed,
                    lattice: lattice.clone(),
                    control: perturb(&identity, mag, seed),
                });
            }
        }
        if let Some(control) = pinch(&lattice) {
            out.push(Instance {
                name: format!("{name}/pinched"),
                kind: Kind::EdgeCollapse,
                lattice: lattice.clone(),
                control,
            });
        }
        if lattice.len() == 3 {
            // on a bare triangle every vertex permutation is affine
            continue;
        }
        let poly = convex_hull(&lattice).unwrap();
        let verts: Vec<usize> = poly
            .vertices
            .iter()
            .map(|&v| lattice.index_of(v).unwrap())
            .collect();
        for k in 0..verts.len() {
            let (a, b) = (verts[k], verts[(k + 1) % verts.len()]);
            out.push(Instance {
                name: format!("{name}/swap{a}-{b}"),
                kind: Kind::CornerSwap,
                lattice: lattice.clone(),
                control: swap(&identity, a, b),
            });
        }
    }
    out
}

/// Moves every control point by a uniform random vector of length at most `mag`.
pub fn perturb(control: &ControlAssignment, mag: f64, seed: u64) -> ControlAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ControlAssignment::planar(control.planar_points().into_iter().map(|[x, y]| {
        let r = mag * rng.random::<f64>().sqrt();
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        [x + r * t.cos(), y + r * t.sin()]
    }))
}

pub fn swap(control: &ControlAssignment, a: usize, b: usize) -> ControlAssignment {
    let mut pts = control.planar_points();
    pts.swap(a, b);
    ControlAssignment::planar(pts)
}

/// Squeezes the lattice towards the line `y = 0` so that the edge farthest in
/// `x` collapses onto one point: `(x, y) -> (x, y (M - x) / M)` on grids and
/// `(x + y, y (M - x - y) / M)` on triangles. Returned only when the result is
/// weakly compatible with coincident vertex images.
pub fn pinch(lattice: &LatticeSet) -> Option<ControlAssignment> {
    let max_x = lattice.iter().map(|p| p.i).max()? as f64;
    let triangle = lattice.iter().all(|p| p.i + p.j <= max_x as i64);
    let control = ControlAssignment::planar(lattice.iter().map(|p| {
        let (x, y) = (p.i as f64, p.j as f64);
        if triangle {
            [x + y, y * (max_x - x - y) / max_x]
        } else {
            [x, y * (max_x - x) / max_x]
        }
    }));
    let report = check_compatible(lattice, &control).ok()?;
    (report.verdict == Verdict::WeaklyCompatibleOnly).then_some(control)
}
