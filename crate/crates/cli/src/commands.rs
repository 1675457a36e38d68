//! Operations shared by the command line and the HTTP service.

use serde::Deserialize;
use toric_core::oracle::{StressConfig, StressSummary, DEFAULT_RESOLUTION};
use toric_core::{
    check_compatible, stress_certificate, CompatibilityReport, DomainPoint, Error as CoreError,
    PatchSpec, Polygon, Verdict,
};

use crate::patchfile::{Patch, PatchError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_WEAK_ONLY: i32 = 2;
pub const EXIT_NOT_WEAK: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;

pub fn verdict_exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Compatible => EXIT_OK,
        Verdict::WeaklyCompatibleOnly => EXIT_WEAK_ONLY,
        Verdict::NotWeaklyCompatible => EXIT_NOT_WEAK,
    }
}

pub fn check(patch: &Patch, exact: bool) -> Result<CompatibilityReport, PatchError> {
    if patch.dim() != 2 {
        return Err(CoreError::Dimension(patch.dim()).into());
    }
    Ok(check_compatible(
        &patch.lattice,
        &patch.certificate_control(exact)?,
    )?)
}

/// A domain point and its image; planar images leave the last slot zero.
pub type EvalRow = ([f64; 2], [f64; 3]);

/// Images of the points inside the domain; points outside are counted and
/// skipped.
pub fn eval_points(
    spec: &PatchSpec,
    points: &[[f64; 2]],
) -> Result<(Vec<EvalRow>, usize), PatchError> {
    let mut rows = Vec::with_capacity(points.len());
    let mut skipped = 0;
    for &[x, y] in points {
        match spec.eval(DomainPoint::new(x, y)) {
            Ok(image) => rows.push(([x, y], image)),
            Err(CoreError::OutsideDomain { .. }) => skipped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok((rows, skipped))
}

/// Row-major `n × n` grid over the bounding box, clipped to the polygon.
pub fn grid_points(poly: &Polygon, n: usize) -> Result<Vec<[f64; 2]>, PatchError> {
    if n < 2 {
        return Err(PatchError::domain(
            "invalid_parameter",
            "grid must be at least 2",
        ));
    }
    let (lo, hi) = poly.bounding_box();
    let at = |k: usize, d: usize| {
        if k == n - 1 {
            hi[d]
        } else {
            lo[d] + (hi[d] - lo[d]) * k as f64 / (n - 1) as f64
        }
    };
    Ok((0..n)
        .flat_map(|j| (0..n).map(move |i| [at(i, 0), at(j, 1)]))
        .filter(|&[x, y]| poly.contains(x, y, toric_core::basis::MEMBERSHIP_EPS))
        .collect())
}

/// `x,y,Fx,Fy[,Fz]` with a header row and shortest round-trip numbers.
pub fn csv_rows(dim: usize, rows: &[EvalRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x", "y", "Fx", "Fy"];
    if dim == 3 {
        header.push("Fz");
    }
    w.write_record(&header).expect("in-memory write");
    for ([x, y], f) in rows {
        let mut rec = vec![
            x.to_string(),
            y.to_string(),
            f[0].to_string(),
            f[1].to_string(),
        ];
        if dim == 3 {
            rec.push(f[2].to_string());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default)]
pub struct StressParams {
    pub trials: usize,
    pub grid: usize,
    pub spread: f64,
    pub seed: u64,
    pub exact: bool,
}

impl Default for StressParams {
    fn default() -> Self {
        let c = StressConfig::default();
        Self {
            trials: c.trials,
            grid: DEFAULT_RESOLUTION,
            spread: c.spread,
            seed: c.seed,
            exact: false,
        }
    }
}

pub enum StressOutcome {
    Agreed(Box<StressSummary>),
    Disagreed(Box<StressSummary>),
}

impl StressOutcome {
    pub fn summary(&self) -> &StressSummary {
        match self {
            StressOutcome::Agreed(s) => s,
            StressOutcome::Disagreed(s) => s,
        }
    }
}

pub fn stress(patch: &Patch, params: StressParams) -> Result<StressOutcome, PatchError> {
    if patch.dim() != 2 {
        return Err(CoreError::Dimension(patch.dim()).into());
    }
    let config = StressConfig {
        trials: params.trials,
        resolution: params.grid,
        spread: params.spread,
        seed: params.seed,
        thresholds: None,
    };
    match stress_certificate(
        &patch.lattice,
        &patch.certificate_control(params.exact)?,
        config,
    ) {
        Ok(summary) => Ok(StressOutcome::Agreed(Box::new(summary))),
        Err(CoreError::CertificateDisagreement(summary)) => Ok(StressOutcome::Disagreed(summary)),
        Err(e) => Err(e.into()),
    }
}
