//! Deterministic SVG drawing of a planar patch.

use std::fmt::Write;

use toric_core::{DomainPoint, PatchSpec, Polygon};

use crate::patchfile::PatchError;

pub const DEFAULT_ISO_LINES: usize = 8;
/// Samples along every drawn curve.
const CURVE_SAMPLES: usize = 96;
const MARGIN: f64 = 0.05;
const WIDTH_PX: f64 = 800.0;

/// Boundary curves, `n - 1` interior iso-parameter curves per axis and the
/// control net, in layers `boundary`, `isocurves` and `controls`. The y axis
/// points up.
pub fn render_svg(spec: &PatchSpec, n: usize) -> Result<String, PatchError> {
    if spec.dim() != 2 {
        return Err(PatchError::domain(
            "dimension",
            format!(
                "render supports planar patches only, got dimension {}",
                spec.dim()
            ),
        ));
    }
    if n < 1 {
        return Err(PatchError::domain(
            "invalid_parameter",
            "grid must be at least 1",
        ));
    }

    let mut boundary = Vec::new();
    for edge in spec.edges() {
        let len = edge.length as f64;
        let curve = (0..=CURVE_SAMPLES)
            .map(|k| {
                let p = edge.eval(len * k as f64 / CURVE_SAMPLES as f64);
                [p[0], p[1]]
            })
            .collect::<Vec<_>>();
        boundary.push(curve);
    }

    let poly = spec.polygon();
    let (lo, hi) = poly.bounding_box();
    let mut iso = Vec::new();
    for axis in 0..2 {
        for k in 1..n {
            let c = lo[axis] + (hi[axis] - lo[axis]) * k as f64 / n as f64;
            let Some((a, b)) = chord(poly, axis, c) else {
                continue;
            };
            let mut curve = Vec::with_capacity(CURVE_SAMPLES + 1);
            for s in 0..=CURVE_SAMPLES {
                let t = a + (b - a) * s as f64 / CURVE_SAMPLES as f64;
                let p = if axis == 0 {
                    DomainPoint::new(c, t)
                } else {
                    DomainPoint::new(t, c)
                };
                curve.push(spec.eval_planar(p)?);
            }
            iso.push(curve);
        }
    }

    let controls = spec.control().planar_points();
    let nets: Vec<Vec<[f64; 2]>> = spec
        .edges()
        .iter()
        .map(|e| {
            e.nodes
                .iter()
                .map(|node| [node.control[0], node.control[1]])
                .collect()
        })
        .collect();

    let all = boundary.iter().chain(&iso).flatten().chain(&controls);
    let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for d in 0..2 {
            min[d] = min[d].min(p[d]);
            max[d] = max[d].max(p[d]);
        }
    }
    let mut size = [max[0] - min[0], max[1] - min[1]];
    let fallback = size[0].max(size[1]).max(1e-9);
    for (d, s) in size.iter_mut().enumerate() {
        if *s <= 0.0 {
            min[d] -= fallback / 2.0;
            *s = fallback;
        }
    }
    let pad = [size[0] * MARGIN, size[1] * MARGIN];
    // flip y so that the image reads with y up
    let view = [
        min[0] - pad[0],
        -(max[1] + pad[1]),
        size[0] + 2.0 * pad[0],
        size[1] + 2.0 * pad[1],
    ];
    let stroke = 0.004 * view[2].max(view[3]);
    let height_px = WIDTH_PX * view[3] / view[2];

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}">"#,
        num(view[0]),
        num(view[1]),
        num(view[2]),
        num(view[3]),
        num(WIDTH_PX),
        num(height_px)
    )
    .unwrap();
    layer(&mut out, "boundary", "#000000", 2.0 * stroke, &boundary);
    layer(&mut out, "isocurves", "#808080", stroke, &iso);
    writeln!(out, r#"<g id="controls">"#).unwrap();
    for net in &nets {
        writeln!(
            out,
            r##"<path class="control-polygon" d="{}" fill="none" stroke="#c03020" stroke-width="{}"/>"##,
            path(net),
            num(2.0 * stroke)
        )
        .unwrap();
    }
    for (k, p) in controls.iter().enumerate() {
        writeln!(
            out,
            r##"<circle data-index="{k}" cx="{}" cy="{}" r="{}" fill="#c03020"/>"##,
            num(p[0]),
            num(-p[1]),
            num(3.0 * stroke)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    out.push_str("</svg>\n");
    Ok(out)
}

/// Parameter interval of the line `coordinate[axis] = c` inside the polygon.
fn chord(poly: &Polygon, axis: usize, c: f64) -> Option<(f64, f64)> {
    let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
    for h in &poly.edges {
        // h = along * t + fixed * c + h.c >= 0
        let (along, fixed) = if axis == 0 { (h.b, h.a) } else { (h.a, h.b) };
        let rest = fixed as f64 * c + h.c as f64;
        match along.signum() {
            1 => a = a.max(-rest / along as f64),
            -1 => b = b.min(-rest / along as f64),
            _ if rest < 0.0 => return None,
            _ => {}
        }
    }
    (b > a).then_some((a, b))
}

fn layer(out: &mut String, id: &str, color: &str, width: f64, curves: &[Vec<[f64; 2]>]) {
    writeln!(
        out,
        r#"<g id="{id}" fill="none" stroke="{color}" stroke-width="{}" stroke-linejoin="round">"#,
        num(width)
    )
    .unwrap();
    for c in curves {
        writeln!(out, r#"<path d="{}"/>"#, path(c)).unwrap();
    }
    writeln!(out, "</g>").unwrap();
}

fn path(points: &[[f64; 2]]) -> String {
    let mut d = String::new();
    for (k, p) in points.iter().enumerate() {
        if k > 0 {
            d.push(' ');
        }
        d.push(if k == 0 { 'M' } else { 'L' });
        write!(d, "{} {}", num(p[0]), num(-p[1])).unwrap();
    }
    d
}

/// Fixed six-decimal formatting without negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0.000000".to_string()
    } else {
        s
    }
}
