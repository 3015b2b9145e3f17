//! Hand-rolled static SVG plots: field heatmaps and quivers over a mesh,
//! vortex paths, flow streamlines, and polar heatmaps. No plotting runtime;
//! every artifact is a standalone file.

use num_complex::Complex64;

use crate::frame::FlowResult;
use crate::mesh::TriMesh;

/// Five-anchor approximation of the viridis ramp, perceptually ordered.
const RAMP: [(f64, f64, f64); 5] = [
    (0.267, 0.005, 0.329),
    (0.229, 0.322, 0.546),
    (0.128, 0.567, 0.551),
    (0.369, 0.789, 0.383),
    (0.993, 0.906, 0.144),
];

fn ramp_color(v: f64) -> String {
    let v = v.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (v.floor() as usize).min(RAMP.len() - 2);
    let t = v - i as f64;
    let mix = |a: f64, b: f64| ((a + (b - a) * t) * 255.0).round() as u8;
    let (r0, g0, b0) = RAMP[i];
    let (r1, g1, b1) = RAMP[i + 1];
    format!("#{:02x}{:02x}{:02x}", mix(r0, r1), mix(g0, g1), mix(b0, b1))
}

/// SVG header with a viewBox fitted to the points, 5% margin, y flipped so
/// the mathematical orientation is preserved on screen.
fn open_svg(points: impl Iterator<Item = Complex64>, title: &str) -> (String, f64) {
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    if !(x0.is_finite() && y0.is_finite()) {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let m = 0.05 * (x1 - x0).max(y1 - y0).max(1e-9);
    let (w, h) = (x1 - x0 + 2.0 * m, y1 - y0 + 2.0 * m);
    let header = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"{:.0}\" \
         viewBox=\"{:.5} {:.5} {:.5} {:.5}\">\n<title>{}</title>\n\
         <rect x=\"{:.5}\" y=\"{:.5}\" width=\"{:.5}\" height=\"{:.5}\" fill=\"white\"/>\n",
        720.0 * h / w,
        x0 - m,
        -(y1 + m),
        w,
        h,
        title,
        x0 - m,
        -(y1 + m),
        w,
        h
    );
    (header, w)
}

fn xy(p: Complex64) -> String {
    format!("{:.5},{:.5}", p.re, -p.im)
}

/// Heatmap of |u| per triangle (flat fill at the vertex mean).
pub fn field_heatmap(mesh: &TriMesh, u: &[Complex64], title: &str) -> String {
    let mods: Vec<f64> = u.iter().map(|v| v.norm()).collect();
    let lo = mods.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mods.iter().cloned().fold(0.0_f64, f64::max).max(lo + 1e-12);
    let (mut out, _) = open_svg(mesh.vertices.iter().cloned(), title);
    for tri in &mesh.triangles {
        let mean = (mods[tri[0]] + mods[tri[1]] + mods[tri[2]]) / 3.0;
        out.push_str(&format!(
            "<polygon points=\"{} {} {}\" fill=\"{}\"/>\n",
            xy(mesh.vertices[tri[0]]),
            xy(mesh.vertices[tri[1]]),
            xy(mesh.vertices[tri[2]]),
            ramp_color((mean - lo) / (hi - lo))
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Arrow field of the direction u/|u| on a vertex subsample.
pub fn field_quiver(mesh: &TriMesh, u: &[Complex64], title: &str) -> String {
    let (mut out, w) = open_svg(mesh.vertices.iter().cloned(), title);
    let target = 700usize;
    let stride = (mesh.vertices.len() / target).max(1);
    let len = (2.0 * mesh.h).min(0.04 * w);
    let sw = 0.15 * len;
    for (v, &p) in mesh.vertices.iter().enumerate().step_by(stride) {
        let dir = u[v];
        if dir.norm() < 1e-9 {
            continue;
        }
        let d = dir / dir.norm() * len;
        let tip = p + d;
        // Barbs: tip minus the direction rotated +-150 degrees.
        let barb = Complex64::from_polar(0.35 * len, 150.0_f64.to_radians());
        let unit = d / d.norm();
        out.push_str(&format!(
            "<path d=\"M {} L {} L {} M {} L {}\" stroke=\"#1a3a6b\" \
             stroke-width=\"{:.5}\" fill=\"none\"/>\n",
            xy(p),
            xy(tip),
            xy(tip - unit * barb.re + unit * Complex64::i() * barb.im),
            xy(tip),
            xy(tip - unit * barb.re - unit * Complex64::i() * barb.im),
            sw
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Vortex-cluster centers across the continuation schedule over the domain
/// outline; markers shrink with eps.
pub fn vortex_path(outline: &[Complex64], path: &[(f64, Complex64)], title: &str) -> String {
    let (mut out, w) = open_svg(outline.iter().cloned().chain(path.iter().map(|p| p.1)), title);
    let pts: Vec<String> = outline.iter().map(|&p| xy(p)).collect();
    out.push_str(&format!(
        "<polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{:.5}\"/>\n",
        pts.join(" "),
        0.004 * w
    ));
    if path.len() > 1 {
        let line: Vec<String> = path.iter().map(|p| xy(p.1)).collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#b03030\" \
             stroke-width=\"{:.5}\" stroke-dasharray=\"{:.5}\"/>\n",
            line.join(" "),
            0.004 * w,
            0.015 * w
        ));
    }
    let eps_hi = path.iter().map(|p| p.0).fold(0.0_f64, f64::max).max(1e-12);
    for &(eps, c) in path {
        out.push_str(&format!(
            "<circle cx=\"{:.5}\" cy=\"{:.5}\" r=\"{:.5}\" fill=\"#b03030\"/>\n\
             <text x=\"{:.5}\" y=\"{:.5}\" font-size=\"{:.5}\">eps={}</text>\n",
            c.re,
            -c.im,
            0.02 * w * (eps / eps_hi).sqrt(),
            c.re + 0.03 * w,
            -c.im,
            0.03 * w,
            eps
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Both flow families: theta orbits (closed loops, one per s row) and the
/// inward s trajectories (one per theta column).
pub fn streamlines(flow: &FlowResult, title: &str) -> String {
    let all = flow.psi.iter().flatten().cloned();
    let (mut out, w) = open_svg(all, title);
    let sw = 0.003 * w;
    for (i, row) in flow.psi.iter().enumerate() {
        let pts: Vec<String> = row.iter().map(|&p| xy(p)).collect();
        let shade = 0.2 + 0.6 * i as f64 / flow.psi.len().max(1) as f64;
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{:.5}\"/>\n",
            pts.join(" "),
            ramp_color(shade),
            sw
        ));
    }
    for j in 0..flow.theta_values.len() {
        let pts: Vec<String> = flow.psi.iter().map(|row| xy(row[j])).collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#777777\" \
             stroke-width=\"{:.5}\"/>\n",
            pts.join(" "),
            0.6 * sw
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Colored quadrilaterals with per-cell values, e.g. a renormalized-energy
/// landscape on an image of a polar grid. `cells` are (corners, value).
pub fn cell_heatmap(cells: &[([Complex64; 4], f64)], title: &str) -> String {
    let lo = cells.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let hi = cells.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max).max(lo + 1e-12);
    let (mut out, _) = open_svg(cells.iter().flat_map(|c| c.0.iter().cloned()), title);
    for (quad, v) in cells {
        let pts: Vec<String> = quad.iter().map(|&p| xy(p)).collect();
        // Low values bright: landscapes here are minimized.
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"{}\"/>\n",
            pts.join(" "),
            ramp_color(1.0 - (v - lo) / (hi - lo))
        ));
    }
    out.push_str("</svg>\n");
    out
}
