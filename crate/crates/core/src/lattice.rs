//! Exact integer geometry of finite lattice point sets: convex hull with
//! primitive edge inequalities, orientation predicates and point classification.
//!
//! Everything here works on `i64` coordinates bounded by [`MAX_COORD`], so
//! determinants and edge-inequality values are exact.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible absolute lattice coordinate.
pub const MAX_COORD: i64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct LatticePoint {
    pub i: i64,
    pub j: i64,
}

impl LatticePoint {
    pub const fn new(i: i64, j: i64) -> Self {
        Self { i, j }
    }

    pub fn as_f64(self) -> [f64; 2] {
        [self.i as f64, self.j as f64]
    }
}

impl From<[i64; 2]> for LatticePoint {
    fn from([i, j]: [i64; 2]) -> Self {
        Self { i, j }
    }
}

impl From<LatticePoint> for [i64; 2] {
    fn from(p: LatticePoint) -> Self {
        [p.i, p.j]
    }
}

impl From<(i64, i64)> for LatticePoint {
    fn from((i, j): (i64, i64)) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// Sign of an orientation determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of<T: PartialOrd + Default>(value: T) -> Self {
        let zero = T::default();
        if value > zero {
            Sign::Positive
        } else if value < zero {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    pub fn is_zero(self) -> bool {
        self == Sign::Zero
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        match (self, rhs) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.as_i8()
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Sign::Negative),
            0 => Ok(Sign::Zero),
            1 => Ok(Sign::Positive),
            other => Err(format!("invalid sign {other}")),
        }
    }
}

/// Orientation of the ordered triple `(p, q, r)`: the sign of `det(q - p, r - p)`.
///
/// Computed in checked 128-bit arithmetic, so it is exact for any `i64` input
/// that does not overflow; inputs within [`MAX_COORD`] never do.
pub fn orient_lattice(p: LatticePoint, q: LatticePoint, r: LatticePoint) -> Result<Sign> {
    let d = |a: i64, b: i64| (a as i128).checked_sub(b as i128).ok_or(Error::Overflow);
    let (ux, uy) = (d(q.i, p.i)?, d(q.j, p.j)?);
    let (vx, vy) = (d(r.i, p.i)?, d(r.j, p.j)?);
    let lhs = ux.checked_mul(vy).ok_or(Error::Overflow)?;
    let rhs = uy.checked_mul(vx).ok_or(Error::Overflow)?;
    Ok(Sign::of(lhs.checked_sub(rhs).ok_or(Error::Overflow)?))
}

/// Doubled signed area of `(p, q, r)`. Only valid for bounded coordinates.
pub(crate) fn cross(p: LatticePoint, q: LatticePoint, r: LatticePoint) -> i64 {
    (q.i - p.i) * (r.j - p.j) - (q.j - p.j) * (r.i - p.i)
}

/// A finite, duplicate-free, ordered set of lattice points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSet {
    points: Vec<LatticePoint>,
    index: HashMap<LatticePoint, usize>,
}

impl LatticeSet {
    /// Builds a set from `points`, keeping the first occurrence of duplicates.
    pub fn new<I, P>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: Into<LatticePoint>,
    {
        let mut out = Vec::new();
        let mut index = HashMap::new();
        for p in points {
            let p = p.into();
            if p.i.abs() > MAX_COORD || p.j.abs() > MAX_COORD {
                return Err(Error::CoordinateOutOfRange { i: p.i, j: p.j });
            }
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(p) {
                e.insert(out.len());
                out.push(p);
            }
        }
        Ok(Self { points: out, index })
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, k: usize) -> LatticePoint {
        self.points[k]
    }

    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        self.index.get(&p).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.points.iter().copied()
    }

    /// Returns the same points in the order given by `perm` (`perm[k]` is the
    /// old index of the new `k`-th point).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::new(perm.iter().map(|&k| self.points[k])).expect("permutation of a valid set")
    }
}

/// Integer affine function `h(x, y) = a x + b y + c` with a primitive normal `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeInequality {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl EdgeInequality {
    pub fn at(&self, p: LatticePoint) -> i64 {
        self.a * p.i + self.b * p.j + self.c
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a as f64 * x + self.b as f64 * y + self.c as f64
    }

    pub fn normal_norm(&self) -> f64 {
        (self.a as f64).hypot(self.b as f64)
    }
}

/// Lattice polygon `Δ_A`: counterclockwise vertices and one inward edge
/// inequality per edge. Edge `k` joins `vertices[k]` to `vertices[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<LatticePoint>,
    pub edges: Vec<EdgeInequality>,
}

impl Polygon {
    /// Number of edges, `ℓ`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_endpoints(&self, k: usize) -> (LatticePoint, LatticePoint) {
        let n = self.vertices.len();
        (self.vertices[k % n], self.vertices[(k + 1) % n])
    }

    /// Primitive direction of edge `k` and its lattice length `g`, so that the
    /// edge is `start + t * dir` for `t` in `[0, g]`.
    pub fn edge_direction(&self, k: usize) -> ((i64, i64), i64) {
        let (s, e) = self.edge_endpoints(k);
        let (dx, dy) = (e.i - s.i, e.j - s.j);
        let g = gcd(dx.abs(), dy.abs());
        ((dx / g, dy / g), g)
    }

    pub fn doubled_area(&self) -> i128 {
        let n = self.vertices.len();
        (0..n)
            .map(|k| {
                let p = self.vertices[k];
                let q = self.vertices[(k + 1) % n];
                p.i as i128 * q.j as i128 - q.i as i128 * p.j as i128
            })
            .sum()
    }

    pub fn edge_values(&self, x: f64, y: f64) -> impl Iterator<Item = f64> + '_ {
        self.edges.iter().map(move |h| h.eval(x, y))
    }

    pub fn contains(&self, x: f64, y: f64, eps: f64) -> bool {
        self.edge_values(x, y).all(|h| h >= -eps)
    }

    pub fn contains_lattice(&self, p: LatticePoint) -> bool {
        self.edges.iter().all(|h| h.at(p) >= 0)
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (k, p) in self.vertices.iter().enumerate() {
            for q in &self.vertices[k + 1..] {
                d = d.max(((p.i - q.i) as f64).hypot((p.j - q.j) as f64));
            }
        }
        d
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let xs = self.vertices.iter().map(|p| p.i);
        let ys = self.vertices.iter().map(|p| p.j);
        (
            [
                xs.clone().min().unwrap() as f64,
                ys.clone().min().unwrap() as f64,
            ],
            [xs.max().unwrap() as f64, ys.max().unwrap() as f64],
        )
    }

    /// Closest point of the polygon to `(x, y)`.
    pub fn project(&self, x: f64, y: f64) -> [f64; 2] {
        if self.contains(x, y, 0.0) {
            return [x, y];
        }
        let mut best = [x, y];
        let mut best_d = f64::INFINITY;
        for k in 0..self.edge_count() {
            let (s, e) = self.edge_endpoints(k);
            let (sx, sy) = (s.i as f64, s.j as f64);
            let (dx, dy) = ((e.i - s.i) as f64, (e.j - s.j) as f64);
            let t = (((x - sx) * dx + (y - sy) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let c = [sx + t * dx, sy + t * dy];
            let d = (c[0] - x).hypot(c[1] - y);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }
}

pub(crate) fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Convex hull of `s` by Andrew's monotone chain in exact arithmetic.
///
/// Lattice points in the relative interior of an edge are not vertices. Each
/// edge gets the inward inequality with primitive normal, so `h = 0` on the
/// edge and `h > 0` in the interior.
pub fn convex_hull(s: &LatticeSet) -> Result<Polygon> {
    if s.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "convex hull needs at least 3 points, got {}",
            s.len()
        )));
    }
    let mut pts: Vec<LatticePoint> = s.points().to_vec();
    pts.sort();

    let mut lower: Vec<LatticePoint> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<LatticePoint> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let vertices = lower;
    if vertices.len() < 3 {
        return Err(Error::DegenerateInput(
            "all lattice points are collinear".into(),
        ));
    }

    let n = vertices.len();
    let edges = (0..n)
        .map(|k| {
            let p = vertices[k];
            let q = vertices[(k + 1) % n];
            let (dx, dy) = (q.i - p.i, q.j - p.j);
            let g = gcd(dx.abs(), dy.abs());
            // left normal of a counterclockwise edge points inward
            let (a, b) = (-dy / g, dx / g);
            EdgeInequality {
                a,
                b,
                c: -(a * p.i + b * p.j),
            }
        })
        .collect();
    Ok(Polygon { vertices, edges })
}

/// Position of a lattice point relative to the polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum PointClass {
    /// Index into `Polygon::vertices`.
    Vertex(usize),
    /// Index into `Polygon::edges`.
    EdgeInterior(usize),
    Interior,
}

pub fn classify_point(poly: &Polygon, p: LatticePoint) -> Option<PointClass> {
    let mut zeros = Vec::with_capacity(2);
    for (k, h) in poly.edges.iter().enumerate() {
        match h.at(p) {
            v if v < 0 => return None,
            0 => zeros.push(k),
            _ => {}
        }
    }
    match zeros.as_slice() {
        [] => Some(PointClass::Interior),
        [k] => Some(PointClass::EdgeInterior(*k)),
        _ => poly
            .vertices
            .iter()
            .position(|&v| v == p)
            .map(PointClass::Vertex),
    }
}

/// Tags every point of `s`. `poly` is expected to be `convex_hull(s)`.
pub fn classify(s: &LatticeSet, poly: &Polygon) -> Result<Vec<PointClass>> {
    s.iter()
        .map(|p| classify_point(poly, p).ok_or(Error::OutsidePolygon { i: p.i, j: p.j }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pts: &[(i64, i64)]) -> LatticeSet {
        LatticeSet::new(pts.iter().copied()).unwrap()
    }

    fn triangle(m: i64) -> LatticeSet {
        let mut pts = Vec::new();
        for j in 0..=m {
            for i in 0..=m - j {
                pts.push((i, j));
            }
        }
        set(&pts)
    }

    #[test]
    fn unit_square_edges() {
        let poly = convex_hull(&set(&[(0, 0), (1, 0), (0, 1), (1, 1)])).unwrap();
        assert_eq!(poly.edge_count(), 4);
        let mut edges: Vec<_> = poly.edges.iter().map(|h| (h.a, h.b, h.c)).collect();
        edges.sort();
        // x, 1 - x, y, 1 - y
        let mut expected = vec![(1, 0, 0), (-1, 0, 1), (0, 1, 0), (0, -1, 1)];
        expected.sort();
        assert_eq!(edges, expected);
        assert_eq!(poly.doubled_area(), 2);
    }

    #[test]
    fn collinear_edge_point_is_not_a_vertex() {
        let s = set(&[(0, 0), (2, 0), (0, 2), (1, 1)]);
        let poly = convex_hull(&s).unwrap();
        assert_eq!(
            poly.vertices,
            vec![(0, 0).into(), (2, 0).into(), (0, 2).into()]
        );
        let diag = poly
            .edges
            .iter()
            .find(|h| h.at((1, 1).into()) == 0)
            .unwrap();
        assert_eq!((diag.a, diag.b, diag.c), (-1, -1, 2));
        assert_eq!(classify(&s, &poly).unwrap()[3], PointClass::EdgeInterior(1));
    }

    #[test]
    fn degree_three_triangle_inequalities() {
        let s = triangle(3);
        assert_eq!(s.len(), 10);
        let poly = convex_hull(&s).unwrap();
        let diag = poly.edges.iter().find(|h| h.c == 3).unwrap();
        assert_eq!((diag.a, diag.b), (-1, -1));
        for p in s.iter() {
            for h in &poly.edges {
                assert!(h.at(p) >= 0, "{p} violates {h:?}");
            }
        }
    }

    #[test]
    fn classification() {
        let sq = set(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let poly = convex_hull(&sq).unwrap();
        assert_eq!(
            classify_point(&poly, (0, 0).into()),
            Some(PointClass::Vertex(0))
        );

        let t2 = triangle(2);
        let poly = convex_hull(&t2).unwrap();
        let bottom = poly
            .edges
            .iter()
            .position(|h| (h.a, h.b, h.c) == (0, 1, 0))
            .unwrap();
        assert_eq!(
            classify_point(&poly, (1, 0).into()),
            Some(PointClass::EdgeInterior(bottom))
        );
        assert!(classify(&t2, &poly)
            .unwrap()
            .iter()
            .all(|c| *c != PointClass::Interior));

        let poly = convex_hull(&triangle(3)).unwrap();
        assert!(poly.edges.iter().all(|h| h.at((1, 1).into()) == 1));
        assert_eq!(
            classify_point(&poly, (1, 1).into()),
            Some(PointClass::Interior)
        );
        assert_eq!(classify_point(&poly, (5, 5).into()), None);
    }

    #[test]
    fn orientation_examples() {
        let p = |i, j| LatticePoint::new(i, j);
        assert_eq!(
            orient_lattice(p(0, 0), p(1, 0), p(0, 1)).unwrap(),
            Sign::Positive
        );
        assert_eq!(
            orient_lattice(p(0, 0), p(1, 1), p(2, 2)).unwrap(),
            Sign::Zero
        );
        assert_eq!(
            orient_lattice(p(0, 0), p(0, 1), p(1, 0)).unwrap(),
            Sign::Negative
        );
        assert!(matches!(
            orient_lattice(
                p(i64::MIN, i64::MIN),
                p(i64::MAX, i64::MIN),
                p(i64::MIN, i64::MAX)
            ),
            Err(Error::Overflow)
        ));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            convex_hull(&set(&[(0, 0), (1, 1)])),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            convex_hull(&set(&[(0, 0), (1, 1), (2, 2), (5, 5)])),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            LatticeSet::new([(0, 0), (MAX_COORD + 1, 0)]),
            Err(Error::CoordinateOutOfRange { .. })
        ));
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let s = set(&[(1, 1), (0, 0), (1, 1), (2, 0)]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.index_of((2, 0).into()), Some(2));
    }
}
