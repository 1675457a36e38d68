//! Sampling oracle: dense evaluation of `F_w`, collision search, random weights
//! and the certificate stress loop.
//!
//! The oracle is one-sided. Pairs closer than `ε_img` in the image are only
//! candidates; a pair is reported once its images agree to within
//! `REFINE_TARGET` of the image diameter, either as sampled or after
//! refinement. Finding nothing is evidence of injectivity for the sampled
//! weights, never a proof.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};
use serde::Serialize;
use sha2::{Digest, Sha256};
use spade::{DelaunayTriangulation, HasPosition, Triangulation};

use crate::basis::DomainPoint;
use crate::compatibility::{check_compatible, CompatibilityReport, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{self, Point2};
use crate::lattice::{LatticeSet, Polygon};
use crate::patch::{ControlAssignment, ImagePoint, PatchSpec, Weights};

pub const DEFAULT_RESOLUTION: usize = 128;
pub const MIN_RESOLUTION: usize = 2;
/// Default `δ_dom` as a fraction of the domain diameter.
pub const DEFAULT_DOMAIN_SEPARATION: f64 = 0.05;
/// Default `ε_img` as a fraction of the control hull diameter.
pub const DEFAULT_IMAGE_TOLERANCE: f64 = 1e-7;
/// Reported pairs kept per category (boundary, interior).
pub const MAX_REPORTED_PAIRS: usize = 16;

/// Refinement runs per collision search.
const REFINE_BUDGET: usize = 256;
const REFINE_ITERATIONS: usize = 40;
/// Points within this fraction of the domain diameter from the boundary are
/// snapped onto it after refinement.
const SNAP_FRACTION: f64 = 1e-6;
/// Refinement stops at `|F(p) - F(q)|` below this fraction of the image
/// diameter. Transverse crossings converge there in place; pairs that are
/// merely squeezed together by a degenerating map drift toward the collapse.
const REFINE_TARGET: f64 = 1e-13;
const BOUNDARY_FRACTION: f64 = 1e-9;

pub const NO_PROOF_NOTE: &str =
    "no collision among the sampled points; this is evidence for injectivity at these weights, not a proof";

/// Domain samples, independent of weights and controls, shared between trials.
#[derive(Debug, Clone)]
pub struct DomainSampling {
    pub resolution: usize,
    pub points: Vec<DomainPoint>,
    pub on_boundary: Vec<bool>,
    /// Delaunay triangles over `points`, counterclockwise.
    pub triangles: Vec<[u32; 3]>,
    /// Sample indices around the domain boundary, counterclockwise.
    pub boundary_cycle: Vec<u32>,
    pub grid_spacing: f64,
}

#[derive(Debug, Clone, Copy)]
struct Site {
    pos: spade::Point2<f64>,
    index: u32,
}

impl HasPosition for Site {
    type Scalar = f64;

    fn position(&self) -> spade::Point2<f64> {
        self.pos
    }
}

impl DomainSampling {
    /// Bounding-box `n × n` grid clipped to the polygon, `n` points per hull
    /// edge and every hull vertex, deduplicated exactly.
    pub fn new(poly: &Polygon, n: usize) -> Result<Self> {
        if n < MIN_RESOLUTION {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be at least {MIN_RESOLUTION}, got {n}"
            )));
        }
        let (lo, hi) = poly.bounding_box();
        let axis = |k: usize, d: usize| {
            if k == n - 1 {
                hi[d]
            } else {
                lo[d] + (hi[d] - lo[d]) * k as f64 / (n - 1) as f64
            }
        };
        let mut raw = Vec::with_capacity(n * n + n * poly.edge_count() + poly.vertices.len());
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (axis(i, 0), axis(j, 1));
                if poly.contains(x, y, crate::basis::MEMBERSHIP_EPS) {
                    raw.push([x, y]);
                }
            }
        }
        for k in 0..poly.edge_count() {
            let (s, e) = poly.edge_endpoints(k);
            for t in 0..n {
                let t = t as f64 / n as f64;
                raw.push([
                    s.i as f64 + t * (e.i - s.i) as f64,
                    s.j as f64 + t * (e.j - s.j) as f64,
                ]);
            }
        }
        raw.extend(poly.vertices.iter().map(|v| v.as_f64()));

        let mut seen = std::collections::HashSet::with_capacity(raw.len());
        raw.retain(|p| seen.insert([p[0].to_bits(), p[1].to_bits()]));

        let tol = BOUNDARY_FRACTION * poly.diameter().max(1.0);
        let on_boundary = raw
            .iter()
            .map(|&[x, y]| {
                poly.edges
                    .iter()
                    .any(|h| h.eval(x, y) / h.normal_norm() <= tol)
            })
            .collect();

        let mut dt: DelaunayTriangulation<Site> = DelaunayTriangulation::new();
        for (k, &[x, y]) in raw.iter().enumerate() {
            dt.insert(Site {
                pos: spade::Point2::new(x, y),
                index: k as u32,
            })
            .map_err(|e| Error::DegenerateInput(format!("domain triangulation failed: {e:?}")))?;
        }
        let triangles: Vec<[u32; 3]> = dt
            .inner_faces()
            .map(|f| {
                let [a, b, c] = f.vertices();
                [a.data().index, b.data().index, c.data().index]
            })
            .collect();
        let boundary_cycle = boundary_cycle(&triangles);

        Ok(Self {
            resolution: n,
            points: raw.into_iter().map(DomainPoint::from).collect(),
            on_boundary,
            triangles,
            boundary_cycle,
            grid_spacing: (hi[0] - lo[0]).max(hi[1] - lo[1]) / (n - 1) as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Follows the edges that belong to a single triangle.
fn boundary_cycle(triangles: &[[u32; 3]]) -> Vec<u32> {
    let directed: std::collections::HashSet<(u32, u32)> = triangles
        .iter()
        .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
        .collect();
    let next: HashMap<u32, u32> = directed
        .iter()
        .copied()
        .filter(|&(a, b)| !directed.contains(&(b, a)))
        .collect();
    let Some(&start) = next.keys().min() else {
        return Vec::new();
    };
    let mut cycle = vec![start];
    let mut v = next[&start];
    while v != start && cycle.len() <= next.len() {
        cycle.push(v);
        v = next[&v];
    }
    cycle
}

/// Domain samples with their images under one weight vector.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    pub sampling: Arc<DomainSampling>,
    pub images: Vec<ImagePoint>,
    pub weight_hash: u64,
}

impl SampleCloud {
    pub fn evaluate(spec: &PatchSpec, sampling: Arc<DomainSampling>) -> Result<Self> {
        let images = sampling
            .points
            .iter()
            .map(|&p| spec.eval(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sampling,
            images,
            weight_hash: weight_hash(spec.weights()),
        })
    }

    pub fn resolution(&self) -> usize {
        self.sampling.resolution
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (DomainPoint, ImagePoint)> + '_ {
        self.sampling
            .points
            .iter()
            .copied()
            .zip(self.images.iter().copied())
    }
}

pub fn sample_patch(spec: &PatchSpec, n: usize) -> Result<SampleCloud> {
    let sampling = DomainSampling::new(spec.polygon(), n)?;
    SampleCloud::evaluate(spec, Arc::new(sampling))
}

/// First eight bytes of the SHA-256 of the weights' little-endian bytes.
pub fn weight_hash(weights: &Weights) -> u64 {
    let mut h = Sha256::new();
    for w in weights.values() {
        h.update(w.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionThresholds {
    pub domain_separation: f64,
    pub image_tolerance: f64,
}

impl CollisionThresholds {
    pub fn for_spec(spec: &PatchSpec) -> Self {
        Self {
            domain_separation: DEFAULT_DOMAIN_SEPARATION * spec.domain_diameter(),
            image_tolerance: DEFAULT_IMAGE_TOLERANCE * spec.image_diameter().max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionVerdict {
    NoCollisionFound,
    Collision,
    BoundaryCollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    /// Both points are samples of the cloud.
    Sample,
    /// Found by refining an overlap of image triangles.
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionPair {
    pub p: DomainPoint,
    pub q: DomainPoint,
    pub image_p: Point2,
    pub image_q: Point2,
    pub image_distance: f64,
    pub domain_distance: f64,
    pub p_on_boundary: bool,
    pub q_on_boundary: bool,
    pub source: PairSource,
}

impl CollisionPair {
    pub fn on_boundary(&self) -> bool {
        self.p_on_boundary && self.q_on_boundary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionReport {
    pub verdict: CollisionVerdict,
    pub thresholds: CollisionThresholds,
    pub resolution: usize,
    pub samples: usize,
    pub weight_hash: u64,
    /// Up to [`MAX_REPORTED_PAIRS`] boundary pairs followed by up to as many
    /// interior pairs.
    pub pairs: Vec<CollisionPair>,
    pub boundary_pairs: usize,
    pub interior_pairs: usize,
    /// Sample pairs and overlapping image triangle pairs refined.
    pub refinements: usize,
    /// Candidate pairs within `ε_img` whose refinement neither reached an exact
    /// root nor settled on the boundary. They do not affect the verdict.
    pub unresolved_pairs: usize,
    pub note: Option<String>,
}

struct PairSink {
    boundary: Vec<CollisionPair>,
    interior: Vec<CollisionPair>,
    boundary_count: usize,
    interior_count: usize,
}

impl PairSink {
    fn push(&mut self, pair: CollisionPair) {
        let (list, count) = if pair.on_boundary() {
            (&mut self.boundary, &mut self.boundary_count)
        } else {
            (&mut self.interior, &mut self.interior_count)
        };
        *count += 1;
        if list.len() < MAX_REPORTED_PAIRS {
            list.push(pair);
        }
    }
}

/// Searches the cloud for pairs of points far apart in the domain whose images
/// nearly coincide: first among the samples themselves (spatial hash with
/// cell size `ε_img`), then by refining overlaps between images of
/// non-adjacent domain triangles, which catches folds the samples straddle.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN
pub fn find_collisions(
    spec: &PatchSpec,
    cloud: &SampleCloud,
    thresholds: CollisionThresholds,
) -> Result<CollisionReport> {
    if spec.dim() != 2 {
        return Err(Error::Dimension(spec.dim()));
    }
    let CollisionThresholds {
        domain_separation: delta,
        image_tolerance: eps,
    } = thresholds;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "image tolerance must be positive, got {eps}"
        )));
    }
    let sampling = &cloud.sampling;
    if !(delta > 2.0 * sampling.grid_spacing) {
        return Err(Error::InvalidParameter(format!(
            "domain separation {delta} must exceed twice the grid spacing {}",
            sampling.grid_spacing
        )));
    }
    if cloud.images.len() != sampling.points.len() {
        return Err(Error::LengthMismatch {
            what: "cloud images",
            expected: sampling.points.len(),
            found: cloud.images.len(),
        });
    }

    let pts = &sampling.points;
    let img: Vec<Point2> = cloud.images.iter().map(|&[x, y, _]| [x, y]).collect();
    let mut sink = PairSink {
        boundary: Vec::new(),
        interior: Vec::new(),
        boundary_count: 0,
        interior_count: 0,
    };

    // sample pairs; only exact coincidences are taken as they are, the rest
    // must survive refinement
    let refiner = Refiner::new(spec, delta, eps);
    let mut unconfirmed = Vec::new();
    let cell = |p: Point2| ((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (k, &p) in img.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    let j = j as usize;
                    let d_img = geometry::distance(p, img[j]);
                    let d_dom = pts[k].distance(pts[j]);
                    if d_img < eps && d_dom > delta {
                        let pair = CollisionPair {
                            p: pts[j],
                            q: pts[k],
                            image_p: img[j],
                            image_q: p,
                            image_distance: d_img,
                            domain_distance: d_dom,
                            p_on_boundary: sampling.on_boundary[j],
                            q_on_boundary: sampling.on_boundary[k],
                            source: PairSource::Sample,
                        };
                        if d_img <= refiner.target {
                            sink.push(pair);
                        } else {
                            unconfirmed.push(pair);
                        }
                    }
                }
            }
        }
        grid.entry((cx, cy)).or_default().push(k as u32);
    }

    let mut refinements = 0;
    let mut unresolved = 0;
    for pair in unconfirmed {
        if refinements >= REFINE_BUDGET || sink.interior.len() >= MAX_REPORTED_PAIRS {
            unresolved += 1;
            continue;
        }
        refinements += 1;
        match refiner.refine(pair.p, pair.q) {
            Refined::Pair(refined) => sink.push(refined),
            Refined::Unresolved => unresolved += 1,
            Refined::Lost => {}
        }
    }

    // triangle overlaps
    if !pl_image_is_embedded(sampling, &img) {
        for_each_overlap(sampling, &img, delta, |a, b, seed| {
            refinements += 1;
            let tri = |t: usize| sampling.triangles[t].map(|v| v as usize);
            let p = preimage(pts, &img, tri(a), seed);
            let q = preimage(pts, &img, tri(b), seed);
            match refiner.refine(p, q) {
                Refined::Pair(pair) => sink.push(pair),
                Refined::Unresolved => unresolved += 1,
                Refined::Lost => {}
            }
            refinements < REFINE_BUDGET && sink.interior.len() < MAX_REPORTED_PAIRS
        });
    }

    let verdict = if sink.interior_count > 0 {
        CollisionVerdict::Collision
    } else if sink.boundary_count > 0 {
        CollisionVerdict::BoundaryCollapse
    } else {
        CollisionVerdict::NoCollisionFound
    };
    let mut pairs = sink.boundary;
    pairs.extend(sink.interior);
    Ok(CollisionReport {
        verdict,
        thresholds,
        resolution: sampling.resolution,
        samples: pts.len(),
        weight_hash: cloud.weight_hash,
        pairs,
        boundary_pairs: sink.boundary_count,
        interior_pairs: sink.interior_count,
        refinements,
        unresolved_pairs: unresolved,
        note: (verdict == CollisionVerdict::NoCollisionFound).then(|| NO_PROOF_NOTE.to_string()),
    })
}

/// True when every nondegenerate image triangle has the same orientation and
/// the image of the boundary cycle, with collapsed runs merged, is a simple
/// polygon. Then every image point is covered by at most one nondegenerate
/// triangle (the covering count equals the winding number of the boundary
/// image), so no two image triangles overlap.
fn pl_image_is_embedded(sampling: &DomainSampling, img: &[Point2]) -> bool {
    let scale = geometry::diameter(img);
    if scale == 0.0 {
        return false;
    }
    let floor = 2e-14 * scale * scale;
    let mut sign = 0.0;
    for t in &sampling.triangles {
        let [a, b, c] = t.map(|v| img[v as usize]);
        let d = geometry::cross(a, b, c);
        if d.abs() <= floor {
            continue;
        }
        if d * sign < 0.0 {
            return false;
        }
        sign = d;
    }
    if sign == 0.0 {
        return false;
    }

    let merge = 1e-12 * scale;
    let mut ring: Vec<Point2> = Vec::with_capacity(sampling.boundary_cycle.len());
    for &v in &sampling.boundary_cycle {
        let p = img[v as usize];
        if ring
            .last()
            .is_none_or(|&q| geometry::distance(p, q) > merge)
        {
            ring.push(p);
        }
    }
    while ring.len() > 1 && geometry::distance(ring[0], ring[ring.len() - 1]) <= merge {
        ring.pop();
    }
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for k in 0..n {
        let (prev, here, next) = (ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]);
        // consecutive segments doubling back along a line
        let dot =
            (prev[0] - here[0]) * (next[0] - here[0]) + (prev[1] - here[1]) * (next[1] - here[1]);
        if geometry::cross(prev, here, next) == 0.0 && dot > 0.0 {
            return false;
        }
    }
    let seg = |k: usize| (ring[k], ring[(k + 1) % n]);
    let mut order: Vec<usize> = (0..n).collect();
    let left = |k: usize| ring[k][0].min(ring[(k + 1) % n][0]);
    order.sort_by(|&a, &b| left(a).total_cmp(&left(b)));
    // sweep over segments sorted by their left end
    let mut active: Vec<usize> = Vec::new();
    for &k in &order {
        let x0 = left(k);
        active.retain(|&j| ring[j][0].max(ring[(j + 1) % n][0]) >= x0);
        for &j in &active {
            let adjacent = (j + 1) % n == k || (k + 1) % n == j;
            if !adjacent && segments_touch(seg(j), seg(k)) {
                return false;
            }
        }
        active.push(k);
    }
    true
}

fn segments_touch((a, b): (Point2, Point2), (c, d): (Point2, Point2)) -> bool {
    let d1 = geometry::cross(a, b, c);
    let d2 = geometry::cross(a, b, d);
    let d3 = geometry::cross(c, d, a);
    let d4 = geometry::cross(c, d, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2, d: f64| {
        d == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

/// Calls `visit(a, b, x)` for pairs of image triangles, far apart in the
/// domain, whose interiors overlap at `x`, until it returns false.
fn for_each_overlap(
    sampling: &DomainSampling,
    img: &[Point2],
    delta: f64,
    mut visit: impl FnMut(usize, usize, Point2) -> bool,
) {
    let tris: Vec<[Point2; 3]> = sampling
        .triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|v| img[v as usize]);
            if geometry::cross(a, b, c) < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .collect();
    let scale = geometry::diameter(img).max(f64::MIN_POSITIVE);
    let area_floor = 1e-14 * scale * scale;
    let live: Vec<usize> = (0..tris.len())
        .filter(|&t| geometry::cross(tris[t][0], tris[t][1], tris[t][2]) > 2.0 * area_floor)
        .collect();
    if live.is_empty() {
        return;
    }
    let bbox = |t: &[Point2; 3]| {
        let lo = [
            t[0][0].min(t[1][0]).min(t[2][0]),
            t[0][1].min(t[1][1]).min(t[2][1]),
        ];
        let hi = [
            t[0][0].max(t[1][0]).max(t[2][0]),
            t[0][1].max(t[1][1]).max(t[2][1]),
        ];
        (lo, hi)
    };
    let boxes: Vec<GeomWithData<Rectangle<Point2>, usize>> = live
        .iter()
        .map(|&t| {
            let (lo, hi) = bbox(&tris[t]);
            GeomWithData::new(Rectangle::from_corners(lo, hi), t)
        })
        .collect();
    let tree = RTree::bulk_load(boxes);

    let centroid = |t: usize| {
        let [a, b, c] = sampling.triangles[t].map(|v| sampling.points[v as usize]);
        DomainPoint::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    };
    let depth_floor = 1e-12 * scale;
    for &a in &live {
        let (lo, hi) = bbox(&tris[a]);
        let mut hits: Vec<usize> = tree
            .locate_in_envelope_intersecting(&AABB::from_corners(lo, hi))
            .map(|g| g.data)
            .filter(|&b| b > a)
            .collect();
        hits.sort_unstable();
        for b in hits {
            if centroid(a).distance(centroid(b)) <= delta {
                continue;
            }
            if separation_depth(&tris[a], &tris[b]) <= depth_floor {
                continue;
            }
            let overlap = geometry::clip_convex(&tris[a], &tris[b]);
            if overlap.len() >= 3 && !visit(a, b, geometry::centroid(&overlap)) {
                return;
            }
        }
    }
}

/// Smallest penetration depth over the separating-axis candidates of two
/// counterclockwise triangles; nonpositive when they are separated.
fn separation_depth(a: &[Point2; 3], b: &[Point2; 3]) -> f64 {
    let mut depth = f64::INFINITY;
    for tri in [a, b] {
        for k in 0..3 {
            let (p, q) = (tri[k], tri[(k + 1) % 3]);
            let len = geometry::distance(p, q);
            if len == 0.0 {
                continue;
            }
            let n = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
            let proj = |t: &[Point2; 3]| {
                let v = t.map(|r| n[0] * r[0] + n[1] * r[1]);
                (v[0].min(v[1]).min(v[2]), v[0].max(v[1]).max(v[2]))
            };
            let (a0, a1) = proj(a);
            let (b0, b1) = proj(b);
            depth = depth.min(a1.min(b1) - a0.max(b0));
        }
    }
    depth
}

/// Preimage of `x` under the affine map taking the domain triangle to its
/// image triangle.
fn preimage(pts: &[DomainPoint], img: &[Point2], tri: [usize; 3], x: Point2) -> DomainPoint {
    let [a, b, c] = tri.map(|v| img[v]);
    let det = geometry::cross(a, b, c);
    let l1 = geometry::cross(x, b, c) / det;
    let l2 = geometry::cross(a, x, c) / det;
    let l3 = 1.0 - l1 - l2;
    let [pa, pb, pc] = tri.map(|v| pts[v]);
    DomainPoint::new(
        l1 * pa.x + l2 * pb.x + l3 * pc.x,
        l1 * pa.y + l2 * pb.y + l3 * pc.y,
    )
}

enum Refined {
    Pair(CollisionPair),
    /// Still within `ε_img` and `δ_dom` apart, but not an exact root.
    Unresolved,
    /// Merged, left the tolerance, or failed to evaluate.
    Lost,
}

/// Damped Gauss-Newton on `G(p, q) = F(p) - F(q)` with minimum-norm steps,
/// keeping both points in the domain.
struct Refiner<'a> {
    spec: &'a PatchSpec,
    delta: f64,
    eps: f64,
    step: f64,
    target: f64,
    snap: f64,
    boundary_tol: f64,
    max_move: f64,
}

impl<'a> Refiner<'a> {
    fn new(spec: &'a PatchSpec, delta: f64, eps: f64) -> Self {
        let diam = spec.domain_diameter();
        Self {
            spec,
            delta,
            eps,
            step: 1e-7 * diam,
            target: REFINE_TARGET * spec.image_diameter().max(f64::MIN_POSITIVE),
            snap: SNAP_FRACTION * diam,
            boundary_tol: BOUNDARY_FRACTION * diam.max(1.0),
            max_move: 0.25 * diam,
        }
    }

    fn project(&self, p: DomainPoint) -> DomainPoint {
        self.spec.polygon().project(p.x, p.y).into()
    }

    fn eval(&self, p: DomainPoint) -> Option<Point2> {
        self.spec.eval_planar(p).ok()
    }

    fn residual(&self, p: DomainPoint, q: DomainPoint) -> Option<(Point2, f64)> {
        let (fp, fq) = (self.eval(p)?, self.eval(q)?);
        let g = [fp[0] - fq[0], fp[1] - fq[1]];
        Some((g, g[0].hypot(g[1])))
    }

    /// Columns `∂F/∂x`, `∂F/∂y` by differences of projected points.
    fn jacobian(&self, p: DomainPoint) -> Option<[Point2; 2]> {
        let mut cols = [[0.0; 2]; 2];
        for (axis, col) in cols.iter_mut().enumerate() {
            let offset = |s: f64| {
                let mut r = p;
                if axis == 0 {
                    r.x += s * self.step;
                } else {
                    r.y += s * self.step;
                }
                self.project(r)
            };
            let (plus, minus) = (offset(1.0), offset(-1.0));
            let span = if axis == 0 {
                plus.x - minus.x
            } else {
                plus.y - minus.y
            };
            if span <= 0.0 {
                continue;
            }
            let (fp, fm) = (self.eval(plus)?, self.eval(minus)?);
            *col = [(fp[0] - fm[0]) / span, (fp[1] - fm[1]) / span];
        }
        Some(cols)
    }

    fn refine(&self, p0: DomainPoint, q0: DomainPoint) -> Refined {
        let (mut p, mut q) = (self.project(p0), self.project(q0));
        let Some((mut g, mut norm)) = self.residual(p, q) else {
            return Refined::Lost;
        };
        let mut lambda = 1e-6;
        for _ in 0..REFINE_ITERATIONS {
            if norm <= self.target {
                break;
            }
            let (Some(jp), Some(jq)) = (self.jacobian(p), self.jacobian(q)) else {
                break;
            };
            // J = [Jp | -Jq], 2×4; step = -Jᵀ (J Jᵀ + λ I)⁻¹ g
            let rows = [
                [jp[0][0], jp[1][0], -jq[0][0], -jq[1][0]],
                [jp[0][1], jp[1][1], -jq[0][1], -jq[1][1]],
            ];
            let dot = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let m = [
                [dot(&rows[0], &rows[0]), dot(&rows[0], &rows[1])],
                [dot(&rows[1], &rows[0]), dot(&rows[1], &rows[1])],
            ];
            let trace = (m[0][0] + m[1][1]).max(f64::MIN_POSITIVE);
            let mut improved = false;
            for _ in 0..8 {
                let l = lambda * trace;
                let (a, b, c, d) = (m[0][0] + l, m[0][1], m[1][0], m[1][1] + l);
                let det = a * d - b * c;
                if det == 0.0 || !det.is_finite() {
                    lambda *= 10.0;
                    continue;
                }
                let y = [(d * g[0] - b * g[1]) / det, (-c * g[0] + a * g[1]) / det];
                let mut s: [f64; 4] =
                    std::array::from_fn(|k| -(rows[0][k] * y[0] + rows[1][k] * y[1]));
                let len = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len > self.max_move {
                    s.iter_mut().for_each(|v| *v *= self.max_move / len);
                }
                let np = self.project(DomainPoint::new(p.x + s[0], p.y + s[1]));
                let nq = self.project(DomainPoint::new(q.x + s[2], q.y + s[3]));
                if let Some((ng, nn)) = self.residual(np, nq) {
                    if nn < norm {
                        (p, q, g, norm) = (np, nq, ng, nn);
                        lambda = (lambda * 0.1).max(1e-12);
                        improved = true;
                        break;
                    }
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }

        let (sp, bp) = self.snap_point(p);
        let (sq, bq) = self.snap_point(q);
        if bp && bq {
            if let Some((_, n)) = self.residual(sp, sq).filter(|r| r.1 <= self.target) {
                if let Some(pair) = self.accept(sp, sq, n, true, true) {
                    return Refined::Pair(pair);
                }
            }
        }
        if !(norm < self.eps && p.distance(q) > self.delta) {
            return Refined::Lost;
        }
        // an interior claim needs a numerically exact root
        if norm > self.target {
            return Refined::Unresolved;
        }
        match self.accept(p, q, norm, self.on_boundary(p), self.on_boundary(q)) {
            Some(pair) => Refined::Pair(pair),
            None => Refined::Lost,
        }
    }

    /// Moves points onto the nearest edge when they are close to it in the
    /// domain or their image is within `ε_img` of the image of that edge point.
    fn snap_point(&self, p: DomainPoint) -> (DomainPoint, bool) {
        let poly = self.spec.polygon();
        let (k, d) = poly
            .edges
            .iter()
            .enumerate()
            .map(|(k, h)| (k, h.eval(p.x, p.y) / h.normal_norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("polygon has edges");
        if d <= 0.0 {
            return (p, true);
        }
        let h = poly.edges[k];
        let n = h.normal_norm();
        let (a, b) = (h.a as f64 / n, h.b as f64 / n);
        let s = self.project(DomainPoint::new(p.x - d * a, p.y - d * b));
        if d <= self.snap {
            return (s, true);
        }
        // farther points snap only where the map cannot tell them from the edge
        match (self.eval(p), self.eval(s)) {
            (Some(fp), Some(fs)) if geometry::distance(fp, fs) < self.eps => (s, true),
            _ => (p, false),
        }
    }

    fn on_boundary(&self, p: DomainPoint) -> bool {
        self.spec
            .polygon()
            .edges
            .iter()
            .any(|h| h.eval(p.x, p.y) / h.normal_norm() <= self.boundary_tol)
    }

    fn accept(
        &self,
        p: DomainPoint,
        q: DomainPoint,
        norm: f64,
        bp: bool,
        bq: bool,
    ) -> Option<CollisionPair> {
        let d_dom = p.distance(q);
        if !(norm < self.eps && d_dom > self.delta) {
            return None;
        }
        Some(CollisionPair {
            p,
            q,
            image_p: self.eval(p)?,
            image_q: self.eval(q)?,
            image_distance: norm,
            domain_distance: d_dom,
            p_on_boundary: bp,
            q_on_boundary: bq,
            source: PairSource::Refined,
        })
    }
}

/// Weights `exp(u)` with `u` uniform in `[-ln s, ln s]`, deterministic per seed.
pub fn random_weights(lattice: &LatticeSet, seed: u64, spread: f64) -> Result<Weights> {
    if !(spread >= 1.0 && spread.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weight spread must be a finite number >= 1, got {spread}"
        )));
    }
    if spread == 1.0 {
        return Ok(Weights::uniform(lattice.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = spread.ln();
    let values = (0..lattice.len())
        .map(|_| rng.random_range(-l..=l).exp().clamp(1.0 / spread, spread))
        .collect();
    Weights::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StressConfig {
    pub trials: usize,
    pub resolution: usize,
    pub spread: f64,
    pub seed: u64,
    /// `None` uses [`CollisionThresholds::for_spec`].
    pub thresholds: Option<CollisionThresholds>,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            trials: 25,
            resolution: DEFAULT_RESOLUTION,
            spread: 100.0,
            seed: 0,
            thresholds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// `None` for the uniform-weight trial.
    pub seed: Option<u64>,
    pub report: CollisionReport,
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressSummary {
    pub certificate: CompatibilityReport,
    /// Oracle verdict implied by the certificate; `None` when it makes no claim.
    pub expected: Option<CollisionVerdict>,
    pub config: StressConfig,
    pub trials: Vec<TrialOutcome>,
    pub agreements: usize,
    pub disagreements: Vec<usize>,
    pub collisions_found: usize,
    pub note: String,
}

/// Certifies once, then runs the oracle for `trials` weight vectors: trial 0
/// uses uniform weights, trial `t > 0` uses `random_weights(seed + t)`.
///
/// A compatible assignment must show no collision in any trial; a weakly
/// compatible one with coincident vertex images must show a boundary collapse
/// in every trial. Any mismatch is returned as
/// [`Error::CertificateDisagreement`].
pub fn stress_certificate(
    lattice: &LatticeSet,
    control: &ControlAssignment,
    config: StressConfig,
) -> Result<StressSummary> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter(
            "at least one trial is required".into(),
        ));
    }
    let certificate = check_compatible(lattice, control)?;
    let expected = match certificate.verdict {
        Verdict::Compatible => Some(CollisionVerdict::NoCollisionFound),
        Verdict::WeaklyCompatibleOnly => Some(CollisionVerdict::BoundaryCollapse),
        Verdict::NotWeaklyCompatible => None,
    };
    // reject bad parameters before spawning trials
    random_weights(lattice, config.seed, config.spread)?;
    let base = PatchSpec::new(
        lattice.clone(),
        control.without_exact(),
        Weights::uniform(lattice.len()),
    )?;
    let sampling = Arc::new(DomainSampling::new(base.polygon(), config.resolution)?);
    let thresholds = config
        .thresholds
        .unwrap_or_else(|| CollisionThresholds::for_spec(&base));

    let trials = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let seed = (t > 0).then(|| config.seed.wrapping_add(t as u64));
            let spec = match seed {
                None => base.clone(),
                Some(s) => base.with_weights(random_weights(lattice, s, config.spread)?)?,
            };
            let cloud = SampleCloud::evaluate(&spec, Arc::clone(&sampling))?;
            let report = find_collisions(&spec, &cloud, thresholds)?;
            let agrees = expected.map(|e| e == report.verdict);
            Ok(TrialOutcome {
                trial: t,
                seed,
                report,
                agrees,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let agreements = trials.iter().filter(|t| t.agrees == Some(true)).count();
    let disagreements: Vec<usize> = trials
        .iter()
        .filter(|t| t.agrees == Some(false))
        .map(|t| t.trial)
        .collect();
    let collisions_found = trials
        .iter()
        .filter(|t| t.report.verdict != CollisionVerdict::NoCollisionFound)
        .count();
    let note = format!(
        "{} weight vectors sampled; the oracle does not verify the statement for all weights",
        trials.len()
    );
    let summary = StressSummary {
        certificate,
        expected,
        config,
        trials,
        agreements,
        disagreements,
        collisions_found,
        note,
    };
    if summary.disagreements.is_empty() {
        Ok(summary)
    } else {
        Err(Error::CertificateDisagreement(Box::new(summary)))
    }
}
