//! Floating-point planar helpers for image-side geometry.

pub type Point2 = [f64; 2];

pub fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn distance(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Counterclockwise convex hull without collinear points. Degenerate inputs
/// give one or two points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        // collinear input: keep the extreme points
        return vec![pts[0], pts[pts.len() - 1]];
    }
    hull
}

/// Largest pairwise distance.
pub fn diameter(points: &[Point2]) -> f64 {
    let hull = convex_hull(points);
    let mut d: f64 = 0.0;
    for (k, &p) in hull.iter().enumerate() {
        for &q in &hull[k + 1..] {
            d = d.max(distance(p, q));
        }
    }
    d
}

/// Signed distance from `p` to the boundary of a counterclockwise convex
/// polygon: positive inside, negative outside.
pub fn signed_distance_to_convex(poly: &[Point2], p: Point2) -> f64 {
    let n = poly.len();
    let mut best = f64::INFINITY;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let len = distance(a, b);
        if len > 0.0 {
            best = best.min(cross(a, b, p) / len);
        }
    }
    best
}

pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|k| {
            let p = poly[k];
            let q = poly[(k + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        / 2.0
}

/// Clips a convex polygon to the halfplane `normal · x + offset >= 0`.
pub fn clip_halfplane(poly: &[Point2], normal: Point2, offset: f64) -> Vec<Point2> {
    let value = |p: Point2| normal[0] * p[0] + normal[1] * p[1] + offset;
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let (va, vb) = (value(a), value(b));
        if va >= 0.0 {
            out.push(a);
        }
        if (va >= 0.0) != (vb >= 0.0) {
            let t = va / (va - vb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Intersection of two convex polygons, the second one counterclockwise.
pub fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let n = clip.len();
    let mut out = subject.to_vec();
    for k in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[k];
        let b = clip[(k + 1) % n];
        let normal = [-(b[1] - a[1]), b[0] - a[0]];
        let offset = -(normal[0] * a[0] + normal[1] * a[1]);
        out = clip_halfplane(&out, normal, offset);
    }
    out
}

pub fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}
