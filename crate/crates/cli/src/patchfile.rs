//! On-disk and over-the-wire patch description.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use toric_core::{
    tensor_lattice, tensor_weights, triangle_lattice, triangle_weights, ControlAssignment,
    Error as CoreError, LatticePoint, LatticeSet, PatchSpec, Weights,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchFile {
    pub format_version: u32,
    pub lattice_points: Vec<[i64; 2]>,
    pub control_points: Vec<ControlPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// `[x, y]`, `[x, y, z]` or `[[num, den], [num, den]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlPoint {
    Float(Vec<f64>),
    Rational([[i64; 2]; 2]),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or wrongly shaped input.
    InvalidBody,
    /// Well-formed input the geometry rejects.
    Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchError {
    pub kind: ErrorKind,
    pub code: &'static str,
    pub message: String,
}

impl PatchError {
    pub fn invalid(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::InvalidBody,
            code,
            message: message.into(),
        }
    }

    pub fn domain(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Domain,
            code,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for PatchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for PatchError {}

impl From<CoreError> for PatchError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::DegenerateInput(_) => "degenerate_input",
            CoreError::CoordinateOutOfRange { .. } => "coordinate_out_of_range",
            CoreError::Overflow => "overflow",
            CoreError::OutsideDomain { .. } => "outside_domain",
            CoreError::OutsidePolygon { .. } => "outside_polygon",
            CoreError::NumericalUnderflow { .. } => "numerical_underflow",
            CoreError::NonPositiveWeight { .. } => "nonpositive_weight",
            CoreError::NonFiniteControl { .. } => "non_finite_control",
            CoreError::LengthMismatch { .. } => "length_mismatch",
            CoreError::Dimension(_) => "dimension",
            CoreError::InvalidEdge { .. } => "invalid_edge",
            CoreError::InvalidParameter(_) => "invalid_parameter",
            CoreError::NotWeaklyCompatible => "not_weakly_compatible",
            CoreError::InvalidTriangulation(_) => "invalid_triangulation",
            CoreError::CertificateDisagreement(_) => "certificate_disagreement",
        };
        Self::domain(code, e.to_string())
    }
}

/// A validated patch file.
#[derive(Debug, Clone)]
pub struct Patch {
    pub lattice: LatticeSet,
    pub control: ControlAssignment,
    pub weights: Weights,
}

impl Patch {
    pub fn spec(&self) -> Result<PatchSpec, PatchError> {
        Ok(PatchSpec::new(
            self.lattice.clone(),
            self.control.clone(),
            self.weights.clone(),
        )?)
    }

    pub fn dim(&self) -> usize {
        self.control.dim()
    }

    /// Controls used by the certificate: exact rationals when `exact`, floats
    /// otherwise.
    pub fn certificate_control(&self, exact: bool) -> Result<ControlAssignment, PatchError> {
        if exact {
            Ok(self.control.to_exact()?)
        } else {
            Ok(self.control.without_exact())
        }
    }
}

impl PatchFile {
    pub fn from_json(text: &str) -> Result<Self, PatchError> {
        serde_json::from_str(text).map_err(|e| PatchError::invalid("invalid_json", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("patch files serialize")
    }

    pub fn validate(&self) -> Result<Patch, PatchError> {
        if self.format_version != FORMAT_VERSION {
            return Err(PatchError::invalid(
                "unsupported_version",
                format!(
                    "format_version must be {FORMAT_VERSION}, got {}",
                    self.format_version
                ),
            ));
        }
        let n = self.lattice_points.len();
        if self.control_points.len() != n {
            return Err(PatchError::domain(
                "length_mismatch",
                format!(
                    "{n} lattice points but {} control points",
                    self.control_points.len()
                ),
            ));
        }
        let lattice = LatticeSet::new(self.lattice_points.iter().copied().map(LatticePoint::from))?;
        if lattice.len() != n {
            let dup = self
                .lattice_points
                .iter()
                .enumerate()
                .find(|&(k, p)| lattice.index_of(LatticePoint::from(*p)) != Some(k))
                .map(|(_, p)| *p)
                .expect("a duplicate exists");
            return Err(PatchError::domain(
                "duplicate_lattice_point",
                format!("lattice point ({}, {}) is listed twice", dup[0], dup[1]),
            ));
        }
        let control = self.control()?;
        let weights = match &self.weights {
            Some(w) if w.len() != n => {
                return Err(PatchError::domain(
                    "length_mismatch",
                    format!("{n} lattice points but {} weights", w.len()),
                ))
            }
            Some(w) => Weights::new(w.clone())?,
            None => Weights::uniform(n),
        };
        Ok(Patch {
            lattice,
            control,
            weights,
        })
    }

    fn control(&self) -> Result<ControlAssignment, PatchError> {
        let rational = self
            .control_points
            .iter()
            .any(|c| matches!(c, ControlPoint::Rational(_)));
        if rational {
            let mut exact = Vec::with_capacity(self.control_points.len());
            for (k, c) in self.control_points.iter().enumerate() {
                exact.push(match c {
                    ControlPoint::Rational([x, y]) => [ratio(k, *x)?, ratio(k, *y)?],
                    ControlPoint::Float(v) if v.len() == 2 => {
                        let conv = |x: f64| {
                            BigRational::from_float(x).ok_or_else(|| {
                                PatchError::domain("non_finite_control", format!("control point {k} is not finite"))
                            })
                        };
                        [conv(v[0])?, conv(v[1])?]
                    }
                    ControlPoint::Float(_) => {
                        return Err(PatchError::invalid(
                            "mixed_dimensions",
                            "rational control points are planar; every control point must have 2 coordinates",
                        ))
                    }
                });
            }
            return Ok(ControlAssignment::exact(exact));
        }
        let dim = match self.control_points.first() {
            Some(ControlPoint::Float(v)) => v.len(),
            _ => 2,
        };
        if !(dim == 2 || dim == 3) {
            return Err(PatchError::invalid(
                "invalid_control_point",
                format!("control points need 2 or 3 coordinates, got {dim}"),
            ));
        }
        let mut pts = Vec::with_capacity(self.control_points.len());
        for (k, c) in self.control_points.iter().enumerate() {
            let ControlPoint::Float(v) = c else {
                unreachable!()
            };
            if v.len() != dim {
                return Err(PatchError::invalid(
                    "mixed_dimensions",
                    format!(
                        "control point {k} has {} coordinates, expected {dim}",
                        v.len()
                    ),
                ));
            }
            pts.push([v[0], v[1], if dim == 3 { v[2] } else { 0.0 }]);
        }
        Ok(if dim == 2 {
            ControlAssignment::planar(pts.into_iter().map(|[x, y, _]| [x, y]))
        } else {
            ControlAssignment::spatial(pts)
        })
    }

    /// Classical patch with identity controls: bidegree `(m, n)` tensor
    /// product or degree `m` triangle, weights the binomial (multinomial)
    /// coefficients.
    pub fn classical(kind: Kind, m: u32, n: Option<u32>) -> Result<Self, PatchError> {
        if m == 0 {
            return Err(PatchError::domain(
                "invalid_degree",
                "degree m must be at least 1",
            ));
        }
        let (lattice, weights) = match kind {
            Kind::Tensor => {
                let n = n.ok_or_else(|| {
                    PatchError::domain("invalid_degree", "tensor patches need a degree n")
                })?;
                if n == 0 {
                    return Err(PatchError::domain(
                        "invalid_degree",
                        "degree n must be at least 1",
                    ));
                }
                let lattice = tensor_lattice(m, n);
                let w = Weights::from_map(&lattice, &tensor_weights(m, n))?;
                (lattice, w)
            }
            Kind::Triangle => {
                if n.is_some() {
                    return Err(PatchError::domain(
                        "invalid_degree",
                        "triangle patches take a single degree",
                    ));
                }
                let lattice = triangle_lattice(m);
                let w = Weights::from_map(&lattice, &triangle_weights(m))?;
                (lattice, w)
            }
        };
        Ok(Self {
            format_version: FORMAT_VERSION,
            lattice_points: lattice.iter().map(<[i64; 2]>::from).collect(),
            control_points: lattice
                .iter()
                .map(|p| ControlPoint::Float(p.as_f64().to_vec()))
                .collect(),
            weights: Some(weights.values().to_vec()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Tensor,
    Triangle,
}

fn ratio(k: usize, [num, den]: [i64; 2]) -> Result<BigRational, PatchError> {
    if den == 0 {
        return Err(PatchError::domain(
            "zero_denominator",
            format!("control point {k} has a zero denominator"),
        ));
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}
