//! SVG figures: orthographic sphere with the far side dimmed, the Poincaré
//! disc for the hyperboloid, the exponential chart for S³ and the first two
//! coordinates for Eᵐ.

use std::fmt::Write as _;

use condex_core::space_forms::poincare_map;
use condex_core::{qlog, DVector, ManifoldTag, Quat, Signature};

use crate::error::{CliError, CliResult};
use crate::runner::CurveData;

const SIZE: f64 = 480.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Unit view direction and screen axes of the sphere projection.
fn sphere_frame() -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (el, az) = (0.45f64, 0.6f64);
    let view = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
    let right = [-az.sin(), az.cos(), 0.0];
    let up = [-el.sin() * az.cos(), -el.sin() * az.sin(), el.cos()];
    (view, right, up)
}

fn dot(a: &[f64; 3], x: &DVector<f64>) -> f64 {
    a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
}

/// A projected point with a visibility flag.
type Projected = ([f64; 2], bool);

fn project(m: ManifoldTag, x: &DVector<f64>) -> Option<Projected> {
    match m {
        ManifoldTag::SpaceForm(Signature::Sphere) => {
            let (view, right, up) = sphere_frame();
            Some(([dot(&right, x), dot(&up, x)], dot(&view, x) >= 0.0))
        }
        ManifoldTag::SpaceForm(Signature::Hyperbolic) => poincare_map(x.as_slice()).ok().map(|p| (p, true)),
        ManifoldTag::UnitQuaternions => {
            let q = Quat::from_dvector(x);
            let l = qlog(q).ok()?;
            // oblique parallel projection of the chart
            Some(([l.x + 0.45 * l.z, l.y + 0.3 * l.z], true))
        }
        ManifoldTag::Euclidean(d) => Some(([x[0], if d > 1 { x[1] } else { 0.0 }], true)),
    }
}

struct View {
    cx: f64,
    cy: f64,
    scale: f64,
}

impl View {
    fn fixed() -> Self {
        View { cx: 0.0, cy: 0.0, scale: SIZE / 2.3 }
    }

    fn fit(pts: &[[f64; 2]]) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            return View::fixed();
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        View { cx: 0.5 * (lo[0] + hi[0]), cy: 0.5 * (lo[1] + hi[1]), scale: 0.9 * SIZE / span }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (SIZE / 2.0 + (p[0] - self.cx) * self.scale, SIZE / 2.0 - (p[1] - self.cy) * self.scale)
    }
}

fn polyline(out: &mut String, view: &View, pts: &[[f64; 2]], stroke: &str, width: f64, opacity: f64) {
    if pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = view.map(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    writeln!(
        out,
        r#"<polyline fill="none" stroke="{stroke}" stroke-width="{width}" stroke-opacity="{opacity}" points="{}"/>"#,
        coords.join(" ")
    )
    .unwrap();
}

/// Split a projected path into runs of equal visibility.
fn runs(pts: &[Projected]) -> Vec<(bool, Vec<[f64; 2]>)> {
    let mut out: Vec<(bool, Vec<[f64; 2]>)> = Vec::new();
    for &(p, vis) in pts {
        match out.last_mut() {
            Some((v, run)) if *v == vis => run.push(p),
            Some((_, run)) => {
                let joint = *run.last().unwrap();
                out.push((vis, vec![joint, p]));
            }
            None => out.push((vis, vec![p])),
        }
    }
    out
}

fn draw(out: &mut String, view: &View, pts: &[Projected], stroke: &str, width: f64, opacity: f64) {
    for (vis, run) in runs(pts) {
        polyline(out, view, &run, stroke, width, if vis { opacity } else { 0.25 * opacity });
    }
}

/// Render curves over the prior orbits.
pub fn emit_figure(manifold: ManifoldTag, curves: &[CurveData], orbits: &[Vec<DVector<f64>>], title: &str) -> CliResult<String> {
    for c in curves {
        if c.manifold != manifold {
            return Err(CliError::Solver {
                solver: "figure",
                source: condex_core::Error::ManifoldMismatch { expected: manifold, found: c.manifold },
            });
        }
    }
    let proj = |pts: &[DVector<f64>]| -> Vec<Projected> { pts.iter().filter_map(|x| project(manifold, x)).collect() };
    let curve_pts: Vec<Vec<Projected>> = curves.iter().map(|c| proj(&c.points)).collect();
    let orbit_pts: Vec<Vec<Projected>> = orbits.iter().map(|o| proj(o)).collect();
    let view = match manifold {
        ManifoldTag::SpaceForm(_) => View::fixed(),
        _ => View::fit(&curve_pts.iter().flatten().map(|p| p.0).collect::<Vec<_>>()),
    };
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#).unwrap();
    writeln!(out, "<title>{}</title>", escape(title)).unwrap();
    writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#).unwrap();
    if let ManifoldTag::SpaceForm(_) = manifold {
        let (cx, cy) = view.map([0.0, 0.0]);
        writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="gray" stroke-width="1"/>"#, view.scale).unwrap();
    }
    writeln!(out, r#"<g id="orbits">"#).unwrap();
    for o in &orbit_pts {
        // keep clear of the frame when a chart blows up
        let clipped: Vec<Projected> = o.iter().copied().filter(|(p, _)| p[0].abs() < 1e3 && p[1].abs() < 1e3).collect();
        draw(&mut out, &view, &clipped, "black", 0.6, 0.5);
    }
    writeln!(out, "</g>").unwrap();
    for (k, (c, pts)) in curves.iter().zip(&curve_pts).enumerate() {
        writeln!(out, r#"<g id="{}">"#, escape(&c.label)).unwrap();
        draw(&mut out, &view, pts, PALETTE[k % PALETTE.len()], 2.0, 1.0);
        writeln!(out, "</g>").unwrap();
    }
    for (k, c) in curves.iter().enumerate() {
        writeln!(
            out,
            r#"<text x="8" y="{}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            16 + 14 * k,
            PALETTE[k % PALETTE.len()],
            escape(&c.label)
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn curve(m: ManifoldTag, points: Vec<DVector<f64>>) -> CurveData {
        let n = points.len();
        CurveData {
            label: "c".into(),
            manifold: m,
            times: (0..n).map(|i| i as f64).collect(),
            velocities: points.clone(),
            points,
            integrand: vec![0.0; n],
            res_b: vec![0.0; n],
            res_c: vec![0.0; n],
        }
    }

    #[test]
    fn equator_is_closed() {
        let s2 = ManifoldTag::SpaceForm(Signature::Sphere);
        let pts: Vec<DVector<f64>> = (0..=64).map(|i| 2.0 * PI * i as f64 / 64.0).map(|t| DVector::from_vec(vec![t.cos(), t.sin(), 0.0])).collect();
        let svg = emit_figure(s2, &[curve(s2, pts)], &[], "equator").unwrap();
        let group = svg.split(r#"<g id="c">"#).nth(1).unwrap();
        let coords: Vec<&str> = group.split("points=\"").skip(1).flat_map(|p| p.split('"').next().unwrap().split(' ')).collect();
        assert_eq!(coords.first(), coords.last());
        // the far half is dimmed
        assert!(group.contains(r#"stroke-opacity="0.25""#) && group.contains(r#"stroke-opacity="1""#));
    }

    #[test]
    fn mismatch_rejected() {
        let s2 = ManifoldTag::SpaceForm(Signature::Sphere);
        let c = curve(ManifoldTag::Euclidean(3), vec![DVector::zeros(3); 2]);
        assert!(emit_figure(s2, &[c], &[], "x").is_err());
    }

    #[test]
    fn disc_and_chart() {
        let h2 = ManifoldTag::SpaceForm(Signature::Hyperbolic);
        let pts: Vec<DVector<f64>> = (0..10).map(|i| 0.2 * i as f64).map(|r| DVector::from_vec(vec![r.sinh(), 0.0, r.cosh()])).collect();
        let svg = emit_figure(h2, &[curve(h2, pts)], &[], "disc").unwrap();
        assert!(svg.contains("<circle"));
        let s3 = ManifoldTag::UnitQuaternions;
        let pts: Vec<DVector<f64>> = (0..10).map(|i| 0.1 * i as f64).map(|t| DVector::from_vec(vec![t.cos(), t.sin(), 0.0, 0.0])).collect();
        let svg = emit_figure(s3, &[curve(s3, pts)], &[], "chart").unwrap();
        assert!(svg.contains("<polyline") && !svg.contains("<circle"));
    }
}
