//! Toric Bernstein polynomials `β_a(x) = ∏ h_i(x)^{h_i(a)}` and the classical
//! weight systems for tensor-product and triangular patches.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, LatticeSet, Polygon};

/// Tolerance for domain membership, in units of the edge inequalities.
pub const MEMBERSHIP_EPS: f64 = 1e-12;

/// Exponent above which evaluation switches to the log domain.
const LOG_EXPONENT_THRESHOLD: u32 = 40;
/// Edge values below this (with a positive exponent) also force the log domain.
const LOG_EDGE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub x: f64,
    pub y: f64,
}

impl DomainPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: DomainPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for DomainPoint {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<DomainPoint> for [f64; 2] {
    fn from(p: DomainPoint) -> Self {
        [p.x, p.y]
    }
}

/// Basis values stored as `scaled[k] * exp(log_scale)`.
///
/// The direct path has `log_scale == 0`; the log-domain path normalizes the
/// largest entry to one so that high-degree patches do not underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValue {
    scaled: Vec<f64>,
    log_scale: f64,
}

impl BasisValue {
    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    /// `β_a(p)` for the `k`-th lattice point. May underflow to zero or
    /// overflow to infinity for high degrees; use [`Self::scaled`] for ratios.
    pub fn value(&self, k: usize) -> f64 {
        let v = self.scaled[k];
        if v == 0.0 {
            0.0
        } else {
            (v.ln() + self.log_scale).exp()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.value(k)).collect()
    }

    pub fn scaled(&self) -> &[f64] {
        &self.scaled
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Log domain when an exponent is large or an edge value is tiny.
    Auto,
    Direct,
    Log,
}

/// Basis for a lattice set with its exponents `h_i(a)` precomputed.
#[derive(Debug, Clone)]
pub struct ToricBasis {
    poly: Polygon,
    /// `exponents[a][i] = h_i(a)`
    exponents: Vec<Vec<u32>>,
    max_exponent: u32,
}

impl ToricBasis {
    pub fn new(poly: Polygon, lattice: &LatticeSet) -> Result<Self> {
        let mut exponents = Vec::with_capacity(lattice.len());
        for p in lattice.iter() {
            let row = poly
                .edges
                .iter()
                .map(|h| {
                    u32::try_from(h.at(p)).map_err(|_| Error::OutsidePolygon { i: p.i, j: p.j })
                })
                .collect::<Result<Vec<_>>>()?;
            exponents.push(row);
        }
        let max_exponent = exponents.iter().flatten().copied().max().unwrap_or(0);
        Ok(Self {
            poly,
            exponents,
            max_exponent,
        })
    }

    pub fn polygon(&self) -> &Polygon {
        &self.poly
    }

    pub fn exponents(&self, k: usize) -> &[u32] {
        &self.exponents[k]
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Edge values `h_i(p)`, clamped at zero, or `OutsideDomain`.
    pub fn edge_values(&self, p: DomainPoint) -> Result<Vec<f64>> {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        self.poly
            .edge_values(p.x, p.y)
            .map(|h| {
                if h < -MEMBERSHIP_EPS {
                    Err(Error::OutsideDomain { x: p.x, y: p.y })
                } else {
                    Ok(h.max(0.0))
                }
            })
            .collect()
    }

    pub fn eval(&self, p: DomainPoint) -> Result<BasisValue> {
        self.eval_with(p, EvalMode::Auto)
    }

    pub fn eval_with(&self, p: DomainPoint, mode: EvalMode) -> Result<BasisValue> {
        let hs = self.edge_values(p)?;
        Ok(self.eval_edges(&hs, mode))
    }

    pub(crate) fn needs_log(&self, hs: &[f64]) -> bool {
        self.max_exponent > LOG_EXPONENT_THRESHOLD || hs.iter().any(|&h| h < LOG_EDGE_THRESHOLD)
    }

    pub(crate) fn eval_edges(&self, hs: &[f64], mode: EvalMode) -> BasisValue {
        let use_log = match mode {
            EvalMode::Auto => self.needs_log(hs),
            EvalMode::Direct => false,
            EvalMode::Log => true,
        };
        if use_log {
            let logs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
            let terms: Vec<f64> = self
                .exponents
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&logs)
                        .filter(|(&e, _)| e > 0)
                        .map(|(&e, &l)| e as f64 * l)
                        .sum()
                })
                .collect();
            let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // no common zeros on the domain, so max is finite
            let scaled = terms.iter().map(|t| (t - max).exp()).collect();
            BasisValue {
                scaled,
                log_scale: max,
            }
        } else {
            let scaled = self
                .exponents
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(hs)
                        .map(|(&e, &h)| h.powi(e as i32))
                        .product()
                })
                .collect();
            BasisValue {
                scaled,
                log_scale: 0.0,
            }
        }
    }
}

/// Evaluates every `β_a` at `p`. Exponents are the exact integers `h_i(a)` and `0^0 = 1`.
pub fn eval_basis(poly: &Polygon, s: &LatticeSet, p: DomainPoint) -> Result<BasisValue> {
    ToricBasis::new(poly.clone(), s)?.eval(p)
}

pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, t| acc * (n - t) as u128 / (t + 1) as u128)
}

/// Points of the `m × n` rectangle, row by row.
pub fn tensor_lattice(m: u32, n: u32) -> LatticeSet {
    LatticeSet::new((0..=n as i64).flat_map(|j| (0..=m as i64).map(move |i| (i, j))))
        .expect("grid within range")
}

/// Points of the triangle with vertices `(0,0), (m,0), (0,m)`, row by row.
pub fn triangle_lattice(m: u32) -> LatticeSet {
    let m = m as i64;
    LatticeSet::new((0..=m).flat_map(|j| (0..=m - j).map(move |i| (i, j))))
        .expect("triangle within range")
}

/// `w_(i,j) = C(m,i) C(n,j)`: turns the toric patch on the rectangle into the
/// classical rational tensor-product patch of bidegree `(m, n)`.
pub fn tensor_weights(m: u32, n: u32) -> BTreeMap<LatticePoint, u128> {
    tensor_lattice(m, n)
        .iter()
        .map(|p| (p, binomial(m, p.i as u32) * binomial(n, p.j as u32)))
        .collect()
}

/// `w_(i,j) = m! / (i! j! (m-i-j)!)`: recovers the rational Bézier triangle of degree `m`.
pub fn triangle_weights(m: u32) -> BTreeMap<LatticePoint, u128> {
    triangle_lattice(m)
        .iter()
        .map(|p| {
            (
                p,
                binomial(m, p.i as u32) * binomial(m - p.i as u32, p.j as u32),
            )
        })
        .collect()
}
