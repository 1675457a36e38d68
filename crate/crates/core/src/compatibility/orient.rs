//! Image-side orientation predicate: thresholded floats or exact rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::lattice::Sign;
use crate::patch::ControlAssignment;

/// Relative threshold below which a float determinant counts as zero.
pub const ORIENT_EPS: f64 = 1e-9;

/// Fragile band around the threshold, as a factor on either side.
const FRAGILE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone)]
pub(crate) enum ImageOrientation {
    Float {
        points: Vec<[f64; 2]>,
        threshold: f64,
        distinct_tol: f64,
    },
    /// Coordinates over common denominators, small enough for `i128` determinants.
    SmallInt(Vec<[i64; 2]>),
    BigInt(Vec<[BigInt; 2]>),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Orientation {
    pub sign: Sign,
    /// Float determinant; `None` in exact mode.
    pub det: Option<f64>,
    pub fragile: bool,
}

impl ImageOrientation {
    pub fn new(control: &ControlAssignment, eps: f64) -> Self {
        match control.exact_points() {
            Some(exact) => Self::exact(exact),
            None => {
                let scale = control.spread();
                Self::Float {
                    points: control.planar_points(),
                    threshold: eps * scale * scale,
                    distinct_tol: eps * scale,
                }
            }
        }
    }

    fn exact(points: &[[num_rational::BigRational; 2]]) -> Self {
        let lcm = |axis: usize| {
            points
                .iter()
                .fold(BigInt::one(), |acc, p| acc.lcm(p[axis].denom()))
        };
        let (lx, ly) = (lcm(0), lcm(1));
        let scaled: Vec<[BigInt; 2]> = points
            .iter()
            .map(|[x, y]| [x.numer() * (&lx / x.denom()), y.numer() * (&ly / y.denom())])
            .collect();
        let limit = BigInt::from(1i64 << 61);
        if scaled.iter().flatten().all(|v| v.abs() < limit) {
            Self::SmallInt(
                scaled
                    .iter()
                    .map(|[x, y]| [x.to_i64().unwrap(), y.to_i64().unwrap()])
                    .collect(),
            )
        } else {
            Self::BigInt(scaled)
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::Float { .. })
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Self::Float { threshold, .. } => Some(*threshold),
            _ => None,
        }
    }

    pub fn orient(&self, i: usize, j: usize, k: usize) -> Orientation {
        match self {
            Self::Float {
                points, threshold, ..
            } => {
                let (p, q, r) = (points[i], points[j], points[k]);
                let det = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
                let mag = det.abs();
                let sign = if mag > *threshold {
                    Sign::of(det)
                } else {
                    Sign::Zero
                };
                let fragile = mag != 0.0
                    && mag > threshold / FRAGILE_FACTOR
                    && mag < threshold * FRAGILE_FACTOR;
                Orientation {
                    sign,
                    det: Some(det),
                    fragile,
                }
            }
            Self::SmallInt(points) => {
                let (p, q, r) = (points[i], points[j], points[k]);
                let d = |a: i64, b: i64| a as i128 - b as i128;
                let det = d(q[0], p[0]) * d(r[1], p[1]) - d(q[1], p[1]) * d(r[0], p[0]);
                Orientation {
                    sign: Sign::of(det),
                    det: None,
                    fragile: false,
                }
            }
            Self::BigInt(points) => {
                let (p, q, r) = (&points[i], &points[j], &points[k]);
                let det = (&q[0] - &p[0]) * (&r[1] - &p[1]) - (&q[1] - &p[1]) * (&r[0] - &p[0]);
                let sign = if det.is_zero() {
                    Sign::Zero
                } else if det.is_positive() {
                    Sign::Positive
                } else {
                    Sign::Negative
                };
                Orientation {
                    sign,
                    det: None,
                    fragile: false,
                }
            }
        }
    }

    /// Whether the images of `i` and `j` coincide (exactly, or within
    /// `eps · spread` in float mode).
    pub fn coincide(&self, i: usize, j: usize) -> bool {
        match self {
            Self::Float {
                points,
                distinct_tol,
                ..
            } => {
                let (p, q) = (points[i], points[j]);
                (p[0] - q[0]).hypot(p[1] - q[1]) <= *distinct_tol
            }
            Self::SmallInt(points) => points[i] == points[j],
            Self::BigInt(points) => points[i] == points[j],
        }
    }
}
