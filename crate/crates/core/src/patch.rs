//! The rational toric patch map
//!
//! ```text
//! F_w(x) = Σ w_a f(a) β_a(x) / Σ w_a β_a(x)
//! ```
//!
//! with exact vertex interpolation, boundary evaluation through the
//! restricted edge curves, and a finite-difference Jacobian diagnostic.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::basis::{binomial, DomainPoint, EvalMode, ToricBasis, MEMBERSHIP_EPS};
use crate::error::{Error, Result};
use crate::geometry::{self, Point2};
use crate::lattice::{convex_hull, LatticePoint, LatticeSet, Polygon, Sign};

pub type ImagePoint = [f64; 3];

/// Denominators below this trigger the log-domain retry.
const UNDERFLOW_LIMIT: f64 = 1e-300;

/// Control points `f(a)`, one per lattice point, in the plane or in space.
///
/// Planar assignments may also carry exact rational coordinates, used by the
/// compatibility check; the float coordinates are then their nearest doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlAssignment {
    dim: usize,
    points: Vec<ImagePoint>,
    exact: Option<Vec<[BigRational; 2]>>,
}

impl ControlAssignment {
    pub fn planar<I: IntoIterator<Item = Point2>>(points: I) -> Self {
        Self {
            dim: 2,
            points: points.into_iter().map(|[x, y]| [x, y, 0.0]).collect(),
            exact: None,
        }
    }

    pub fn spatial<I: IntoIterator<Item = ImagePoint>>(points: I) -> Self {
        Self {
            dim: 3,
            points: points.into_iter().collect(),
            exact: None,
        }
    }

    pub fn exact(points: Vec<[BigRational; 2]>) -> Self {
        let approx = points
            .iter()
            .map(|[x, y]| [ratio_to_f64(x), ratio_to_f64(y), 0.0])
            .collect();
        Self {
            dim: 2,
            points: approx,
            exact: Some(points),
        }
    }

    /// `f(a) = a`.
    pub fn identity(lattice: &LatticeSet) -> Self {
        Self::planar(lattice.iter().map(LatticePoint::as_f64))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> ImagePoint {
        self.points[k]
    }

    pub fn points(&self) -> &[ImagePoint] {
        &self.points
    }

    pub fn planar_point(&self, k: usize) -> Point2 {
        let [x, y, _] = self.points[k];
        [x, y]
    }

    pub fn planar_points(&self) -> Vec<Point2> {
        self.points.iter().map(|&[x, y, _]| [x, y]).collect()
    }

    pub fn exact_points(&self) -> Option<&[[BigRational; 2]]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Exact copy of a planar assignment: every finite double is a dyadic rational.
    pub fn to_exact(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::Dimension(self.dim));
        }
        if self.exact.is_some() {
            return Ok(self.clone());
        }
        let exact = self
            .points
            .iter()
            .enumerate()
            .map(|(index, &[x, y, _])| {
                match (BigRational::from_float(x), BigRational::from_float(y)) {
                    (Some(x), Some(y)) => Ok([x, y]),
                    _ => Err(Error::NonFiniteControl { index }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: 2,
            points: self.points.clone(),
            exact: Some(exact),
        })
    }

    pub fn without_exact(&self) -> Self {
        Self {
            exact: None,
            ..self.clone()
        }
    }

    /// Reorders the points: the new `k`-th point is the old `perm[k]`-th.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            dim: self.dim,
            points: perm.iter().map(|&k| self.points[k]).collect(),
            exact: self
                .exact
                .as_ref()
                .map(|e| perm.iter().map(|&k| e[k].clone()).collect()),
        }
    }

    /// Applies `map` to every planar point. Drops exact coordinates.
    pub fn map_planar(&self, map: impl Fn(Point2) -> Point2) -> Self {
        Self::planar(self.planar_points().into_iter().map(map))
    }

    pub(crate) fn validate(&self, expected: usize) -> Result<()> {
        if self.points.len() != expected {
            return Err(Error::LengthMismatch {
                what: "control points",
                expected,
                found: self.points.len(),
            });
        }
        if !(2..=3).contains(&self.dim) {
            return Err(Error::Dimension(self.dim));
        }
        match self
            .points
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            Some(index) => Err(Error::NonFiniteControl { index }),
            None => Ok(()),
        }
    }

    /// Largest coordinate spread of the planar control points.
    pub fn spread(&self) -> f64 {
        let pts = self.planar_points();
        let span = |axis: usize| {
            let lo = pts.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
            let hi = pts
                .iter()
                .map(|p| p[axis])
                .fold(f64::NEG_INFINITY, f64::max);
            (hi - lo).max(0.0)
        };
        span(0).max(span(1))
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Strictly positive weights, one per lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::NonPositiveWeight {
                index,
                value: values[index],
            });
        }
        Ok(Self(values))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    /// Weights read off an integer weight map (e.g. `tensor_weights`),
    /// aligned to `lattice`. Missing points are an error.
    pub fn from_map(
        lattice: &LatticeSet,
        map: &std::collections::BTreeMap<LatticePoint, u128>,
    ) -> Result<Self> {
        let values = lattice
            .iter()
            .enumerate()
            .map(|(index, p)| match map.get(&p) {
                Some(&w) if w > 0 => Ok(w as f64),
                _ => Err(Error::NonPositiveWeight { index, value: 0.0 }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lattice point on an edge, at integer parameter `param` from the edge start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeNode {
    pub index: usize,
    pub point: LatticePoint,
    pub param: i64,
    pub control: ImagePoint,
    pub weight: f64,
}

/// `h_j(start + t·dir) = offset + slope·t` for an edge `j` other than this one.
/// The exponent of node `k` is the same affine function at its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct EdgeFactor {
    offset: i64,
    slope: i64,
}

/// Restriction of a patch to one edge of its domain.
///
/// The edge is `start + t·direction` for `t ∈ [0, length]`, with `direction`
/// primitive, so lattice points sit at integer `t`. [`EdgeCurve::eval`] is the
/// one-dimensional product formula in `t`; [`EdgeCurve::eval_bezier`] is the same
/// curve written as a rational Bézier curve of degree `length`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeCurve {
    pub edge: usize,
    pub start: LatticePoint,
    pub end: LatticePoint,
    pub direction: (i64, i64),
    pub length: i64,
    pub nodes: Vec<EdgeNode>,
    factors: Vec<EdgeFactor>,
    dim: usize,
}

impl EdgeCurve {
    fn build(
        lattice: &LatticeSet,
        poly: &Polygon,
        edge: usize,
        control: &ControlAssignment,
        weights: &Weights,
    ) -> Self {
        let (start, end) = poly.edge_endpoints(edge);
        let (direction, length) = poly.edge_direction(edge);
        let h = poly.edges[edge];
        let mut nodes: Vec<EdgeNode> = lattice
            .iter()
            .enumerate()
            .filter(|&(_, p)| h.at(p) == 0)
            .map(|(index, point)| {
                let param = if direction.0 != 0 {
                    (point.i - start.i) / direction.0
                } else {
                    (point.j - start.j) / direction.1
                };
                EdgeNode {
                    index,
                    point,
                    param,
                    control: control.point(index),
                    weight: weights.values()[index],
                }
            })
            .collect();
        nodes.sort_by_key(|n| n.param);
        let factors = poly
            .edges
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != edge)
            .map(|(_, g)| EdgeFactor {
                offset: g.at(start),
                slope: g.a * direction.0 + g.b * direction.1,
            })
            .collect();
        Self {
            edge,
            start,
            end,
            direction,
            length,
            nodes,
            factors,
            dim: control.dim(),
        }
    }

    pub fn domain_point(&self, t: f64) -> DomainPoint {
        DomainPoint::new(
            self.start.i as f64 + t * self.direction.0 as f64,
            self.start.j as f64 + t * self.direction.1 as f64,
        )
    }

    /// Parameter of the orthogonal projection of `p` onto the edge, clamped.
    pub fn param_of(&self, p: DomainPoint) -> f64 {
        let (dx, dy) = (self.direction.0 as f64, self.direction.1 as f64);
        let t = ((p.x - self.start.i as f64) * dx + (p.y - self.start.j as f64) * dy)
            / (dx * dx + dy * dy);
        t.clamp(0.0, self.length as f64)
    }

    fn log_basis(&self, t: f64) -> Vec<f64> {
        let logs: Vec<f64> = self
            .factors
            .iter()
            .map(|f| (f.offset as f64 + f.slope as f64 * t).max(0.0).ln())
            .collect();
        self.nodes
            .iter()
            .map(|n| {
                self.factors
                    .iter()
                    .zip(&logs)
                    .map(|(f, &l)| {
                        let e = f.offset + f.slope * n.param;
                        if e == 0 {
                            0.0
                        } else {
                            e as f64 * l
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// Evaluates the restricted patch at edge parameter `t`.
    pub fn eval(&self, t: f64) -> ImagePoint {
        let t = t.clamp(0.0, self.length as f64);
        if let Some(n) = self
            .nodes
            .iter()
            .find(|n| n.param as f64 == t && (n.param == 0 || n.param == self.length))
        {
            return n.control;
        }
        let logs = self.log_basis(t);
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        weighted_average(
            self.nodes
                .iter()
                .zip(&logs)
                .map(|(n, &l)| (n.weight * (l - max).exp(), n.control)),
        )
        .expect("edge curve has a nonvanishing basis function")
    }

    /// Weights of the equivalent rational Bézier curve: `w_k / C(length, k)`,
    /// zero where the edge has no lattice point of the set.
    pub fn bezier_weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.length as usize + 1];
        for n in &self.nodes {
            out[n.param as usize] = n.weight / binomial(self.length as u32, n.param as u32) as f64;
        }
        out
    }

    /// Bézier parameter `τ ∈ [0, 1]` corresponding to edge parameter `t`.
    ///
    /// On the edge every basis function is a common factor times `ρ(t)^k`, where
    /// `ln ρ = Σ_j slope_j · ln h_j`; then `τ = ρ / (1 + ρ)`.
    pub fn bezier_parameter(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.length as f64);
        let log_rho: f64 = self
            .factors
            .iter()
            .filter(|f| f.slope != 0)
            .map(|f| f.slope as f64 * (f.offset as f64 + f.slope as f64 * t).max(0.0).ln())
            .sum();
        if log_rho.is_nan() {
            // both adjacent factors vanish only on a degenerate edge
            return 0.5;
        }
        1.0 / (1.0 + (-log_rho).exp())
    }

    /// Rational de Casteljau evaluation of the Bézier form at `tau`.
    #[allow(clippy::needless_range_loop)]
    pub fn eval_bezier(&self, tau: f64) -> ImagePoint {
        let weights = self.bezier_weights();
        let mut pts: Vec<[f64; 4]> = weights.iter().map(|&w| [0.0, 0.0, 0.0, w]).collect();
        for n in &self.nodes {
            let w = weights[n.param as usize];
            let c = n.control;
            pts[n.param as usize] = [w * c[0], w * c[1], w * c[2], w];
        }
        let deg = pts.len();
        for r in 1..deg {
            for k in 0..deg - r {
                for c in 0..4 {
                    pts[k][c] = (1.0 - tau) * pts[k][c] + tau * pts[k + 1][c];
                }
            }
        }
        let [x, y, z, w] = pts[0];
        [x / w, y / w, z / w]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn weighted_average(terms: impl Iterator<Item = (f64, ImagePoint)>) -> Option<ImagePoint> {
    let mut num = [0.0; 3];
    let mut den = 0.0;
    for (w, c) in terms {
        if w == 0.0 {
            continue;
        }
        den += w;
        for k in 0..3 {
            num[k] += w * c[k];
        }
    }
    (den > UNDERFLOW_LIMIT).then(|| [num[0] / den, num[1] / den, num[2] / den])
}

/// Everything needed to evaluate `F_w`: lattice, hull, controls and weights,
/// aligned to the lattice ordering.
#[derive(Debug, Clone)]
pub struct PatchSpec {
    lattice: LatticeSet,
    basis: ToricBasis,
    control: ControlAssignment,
    weights: Weights,
    edges: Vec<EdgeCurve>,
    /// Lattice index of each polygon vertex.
    vertex_indices: Vec<usize>,
}

impl PatchSpec {
    pub fn new(lattice: LatticeSet, control: ControlAssignment, weights: Weights) -> Result<Self> {
        let poly = convex_hull(&lattice)?;
        control.validate(lattice.len())?;
        if weights.len() != lattice.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                expected: lattice.len(),
                found: weights.len(),
            });
        }
        let basis = ToricBasis::new(poly, &lattice)?;
        let poly = basis.polygon();
        let edges = (0..poly.edge_count())
            .map(|k| EdgeCurve::build(&lattice, poly, k, &control, &weights))
            .collect();
        let vertex_indices = poly
            .vertices
            .iter()
            .map(|&v| {
                lattice
                    .index_of(v)
                    .expect("hull vertices belong to the set")
            })
            .collect();
        Ok(Self {
            lattice,
            basis,
            control,
            weights,
            edges,
            vertex_indices,
        })
    }

    /// Same lattice and controls with new weights.
    pub fn with_weights(&self, weights: Weights) -> Result<Self> {
        Self::new(self.lattice.clone(), self.control.clone(), weights)
    }

    pub fn lattice(&self) -> &LatticeSet {
        &self.lattice
    }

    pub fn polygon(&self) -> &Polygon {
        self.basis.polygon()
    }

    pub fn basis(&self) -> &ToricBasis {
        &self.basis
    }

    pub fn control(&self) -> &ControlAssignment {
        &self.control
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.control.dim()
    }

    pub fn edge(&self, k: usize) -> Option<&EdgeCurve> {
        self.edges.get(k)
    }

    pub fn edges(&self) -> &[EdgeCurve] {
        &self.edges
    }

    pub fn vertex_indices(&self) -> &[usize] {
        &self.vertex_indices
    }

    pub fn domain_diameter(&self) -> f64 {
        self.polygon().diameter()
    }

    /// Diameter of the control point set (equivalently of its hull).
    pub fn image_diameter(&self) -> f64 {
        geometry::diameter(&self.control.planar_points())
    }

    pub fn eval(&self, p: DomainPoint) -> Result<ImagePoint> {
        let hs = self.basis.edge_values(p)?;
        let on: Vec<usize> = (0..hs.len()).filter(|&k| hs[k] <= MEMBERSHIP_EPS).collect();
        let n = hs.len();
        match on.as_slice() {
            [] => self.eval_interior(p, &hs),
            [k] => {
                let edge = &self.edges[*k];
                Ok(edge.eval(edge.param_of(p)))
            }
            [a, b, ..] => {
                // two vanishing edges meet at a vertex
                let v = if (a + 1) % n == *b {
                    *b
                } else if (b + 1) % n == *a {
                    *a
                } else {
                    let verts = &self.polygon().vertices;
                    (0..n)
                        .min_by(|&i, &j| {
                            let d = |k: usize| DomainPoint::from(verts[k].as_f64()).distance(p);
                            d(i).total_cmp(&d(j))
                        })
                        .unwrap()
                };
                Ok(self.control.point(self.vertex_indices[v]))
            }
        }
    }

    pub fn eval_planar(&self, p: DomainPoint) -> Result<Point2> {
        let [x, y, _] = self.eval(p)?;
        Ok([x, y])
    }

    fn eval_interior(&self, p: DomainPoint, hs: &[f64]) -> Result<ImagePoint> {
        let combine = |mode| {
            let b = self.basis.eval_edges(hs, mode);
            weighted_average(
                b.scaled()
                    .iter()
                    .zip(self.weights.values())
                    .zip(self.control.points())
                    .map(|((&beta, &w), &c)| (w * beta, c)),
            )
        };
        combine(EvalMode::Auto)
            .or_else(|| combine(EvalMode::Log))
            .ok_or(Error::NumericalUnderflow { x: p.x, y: p.y })
    }
}

pub fn eval_patch(spec: &PatchSpec, p: DomainPoint) -> Result<ImagePoint> {
    spec.eval(p)
}

pub fn restrict_to_edge(spec: &PatchSpec, edge: usize) -> Result<EdgeCurve> {
    spec.edge(edge).cloned().ok_or(Error::InvalidEdge {
        index: edge,
        edges: spec.polygon().edge_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianSample {
    pub point: DomainPoint,
    pub det: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianReport {
    pub samples: Vec<JacobianSample>,
    /// Both signs occur among the samples that are not near zero.
    pub sign_change: bool,
    /// Indices of samples with `|det| < 1e-9 · scale²`.
    pub near_zero: Vec<usize>,
    /// Image diameter over domain diameter.
    pub scale: f64,
}

/// Central-difference Jacobian determinants on an `n × n` grid over the
/// bounding box, restricted to points well inside the domain. A diagnostic
/// only: it does not certify the absence of critical points.
pub fn jacobian_sign_samples(spec: &PatchSpec, n: usize) -> Result<JacobianReport> {
    if spec.dim() != 2 {
        return Err(Error::Dimension(spec.dim()));
    }
    let poly = spec.polygon();
    let diam = poly.diameter();
    let step = 1e-6 * diam;
    let scale = spec.image_diameter() / diam;
    let threshold = 1e-9 * scale * scale;
    let ([x0, y0], [x1, y1]) = poly.bounding_box();
    let coord = |lo: f64, hi: f64, k: usize| {
        if n <= 1 {
            (lo + hi) / 2.0
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };

    let mut samples = Vec::new();
    for jy in 0..n {
        for ix in 0..n {
            let p = DomainPoint::new(coord(x0, x1, ix), coord(y0, y1, jy));
            let inside = poly
                .edges
                .iter()
                .all(|h| h.eval(p.x, p.y) > 1e-6_f64.max(2.0 * step * h.normal_norm()));
            if !inside {
                continue;
            }
            let f = |dx: f64, dy: f64| spec.eval_planar(DomainPoint::new(p.x + dx, p.y + dy));
            let (xp, xm, yp, ym) = (f(step, 0.0)?, f(-step, 0.0)?, f(0.0, step)?, f(0.0, -step)?);
            let fx = [
                (xp[0] - xm[0]) / (2.0 * step),
                (xp[1] - xm[1]) / (2.0 * step),
            ];
            let fy = [
                (yp[0] - ym[0]) / (2.0 * step),
                (yp[1] - ym[1]) / (2.0 * step),
            ];
            let det = fx[0] * fy[1] - fx[1] * fy[0];
            samples.push(JacobianSample {
                point: p,
                det,
                sign: Sign::of(det),
            });
        }
    }
    let near_zero: Vec<usize> = (0..samples.len())
        .filter(|&k| samples[k].det.abs() < threshold)
        .collect();
    let firm = samples.iter().filter(|s| s.det.abs() >= threshold);
    let has = |sign| firm.clone().any(|s| s.sign == sign);
    let sign_change = has(Sign::Positive) && has(Sign::Negative);
    Ok(JacobianReport {
        samples,
        sign_change,
        near_zero,
        scale,
    })
}
