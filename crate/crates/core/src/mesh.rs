//! Conforming Delaunay triangulation of Jordan domains with quality
//! refinement, plus boundary bookkeeping (loop order and curve parameters)
//! needed to impose boundary data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};
use std::collections::{HashMap, HashSet};

use crate::conformal::{check_simple, dist_point_segment};
use crate::curves::JordanCurve;
use crate::error::{Error, Result};

pub const MIN_ANGLE_CONTRACT_DEG: f64 = 20.0;
const REFINE_ANGLE_DEG: f64 = 25.0;

/// Triangulated planar domain. Triangles are counterclockwise index triples;
/// `boundary_loop` walks the boundary counterclockwise and `boundary_param`
/// gives each loop vertex's parameter on the generating curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Complex64>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_loop: Vec<usize>,
    pub boundary_param: Vec<f64>,
    pub h: f64,
    pub min_angle_deg: f64,
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for &v in &self.boundary_loop {
            mask[v] = true;
        }
        mask
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb - pa).re * (pc - pa).im - (pb - pa).im * (pc - pa).re)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Lumped vertex masses: one third of the adjacent triangle areas.
    pub fn vertex_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.vertices.len()];
        for t in 0..self.triangles.len() {
            let third = self.triangle_area(t) / 3.0;
            for &v in &self.triangles[t] {
                m[v] += third;
            }
        }
        m
    }

    /// Barycentric interpolation of per-vertex values at an interior point.
    pub fn interpolate(&self, values: &[Complex64], p: Complex64) -> Option<Complex64> {
        let t = self.locate(p)?;
        let [a, b, c] = self.triangles[t];
        let (wa, wb, wc) = barycentric(self.vertices[a], self.vertices[b], self.vertices[c], p);
        Some(values[a] * wa + values[b] * wb + values[c] * wc)
    }

    pub fn locate(&self, p: Complex64) -> Option<usize> {
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangles[t];
            let (wa, wb, wc) = barycentric(self.vertices[a], self.vertices[b], self.vertices[c], p);
            if wa >= -1e-12 && wb >= -1e-12 && wc >= -1e-12 {
                return Some(t);
            }
        }
        None
    }

    /// Distance from a point to the boundary polyline.
    pub fn boundary_distance(&self, p: Complex64) -> f64 {
        let n = self.boundary_loop.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[self.boundary_loop[i]];
            let b = self.vertices[self.boundary_loop[(i + 1) % n]];
            best = best.min(dist_point_segment(p, a, b));
        }
        best
    }
}

fn barycentric(a: Complex64, b: Complex64, c: Complex64, p: Complex64) -> (f64, f64, f64) {
    let area2 = (b - a).re * (c - a).im - (b - a).im * (c - a).re;
    let wa = ((b - p).re * (c - p).im - (b - p).im * (c - p).re) / area2;
    let wb = ((c - p).re * (a - p).im - (c - p).im * (a - p).re) / area2;
    (wa, wb, 1.0 - wa - wb)
}

/// Boundary nodes for meshing: spacing <= h, with polyline corners kept
/// exactly and smooth curves resampled by arclength. Returns points and
/// their curve parameters.
pub fn boundary_nodes(curve: &JordanCurve, h: f64) -> Result<(Vec<Complex64>, Vec<f64>)> {
    if h <= 0.0 {
        return Err(Error::Config(format!("mesh size h = {h} must be positive")));
    }
    match curve {
        JordanCurve::Polyline { points } => {
            let n = points.len();
            let mut pts = Vec::new();
            let mut params = Vec::new();
            for i in 0..n {
                let a = points[i];
                let b = points[(i + 1) % n];
                let k = ((b - a).norm() / h).ceil().max(1.0) as usize;
                for j in 0..k {
                    let f = j as f64 / k as f64;
                    pts.push(a + (b - a) * f);
                    params.push((i as f64 + f) / n as f64);
                }
            }
            Ok((pts, params))
        }
        _ => {
            let probe = curve.arclength_table(4096);
            let total = probe[4096];
            let m = ((total / h).ceil() as usize).max(32);
            let fine_n = (8 * m).max(4096);
            let table = curve.arclength_table(fine_n);
            let total = table[fine_n];
            let mut pts = Vec::with_capacity(m);
            let mut params = Vec::with_capacity(m);
            let mut k = 0usize;
            for j in 0..m {
                let target = total * j as f64 / m as f64;
                while k + 1 < fine_n && table[k + 1] < target {
                    k += 1;
                }
                let seg = (table[k + 1] - table[k]).max(1e-300);
                let f = ((target - table[k]) / seg).clamp(0.0, 1.0);
                let t = (k as f64 + f) / fine_n as f64;
                pts.push(curve.param(t));
                params.push(t);
            }
            Ok((pts, params))
        }
    }
}

/// Delaunay-refined triangulation of the region bounded by a simple closed
/// polyline. Boundary edges stay on the input segments; interior quality is
/// driven to the refinement angle, and the result is rejected below the
/// 20-degree contract.
pub fn triangulate(polyline: &[Complex64], params: &[f64], h: f64) -> Result<TriMesh> {
    let n = polyline.len();
    if n < 16 {
        return Err(Error::MeshFailure(format!("boundary polyline has {n} < 16 vertices")));
    }
    if let Err(e) = check_simple(polyline) {
        return Err(Error::MeshFailure(format!("boundary input rejected: {e}")));
    }
    let points: Vec<Point2<f64>> = polyline.iter().map(|z| Point2::new(z.re, z.im)).collect();
    let edges: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(points, edges)
        .map_err(|e| Error::MeshFailure(format!("constrained triangulation failed: {e:?}")))?;
    let max_area = 3.0f64.sqrt() / 4.0 * h * h;
    let outcome = cdt.refine(
        RefinementParameters::new()
            .exclude_outer_faces(true)
            .with_angle_limit(AngleLimit::from_deg(REFINE_ANGLE_DEG))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices((40 * n).max(200_000)),
    );
    if !outcome.refinement_complete {
        return Err(Error::MeshFailure("refinement hit its vertex budget".into()));
    }
    let excluded: HashSet<usize> = outcome.excluded_faces.iter().map(|f| f.index()).collect();

    let all_vertices: Vec<Complex64> = cdt
        .vertices()
        .map(|v| Complex64::new(v.position().x, v.position().y))
        .collect();
    let mut raw_tris: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix().index()) {
            continue;
        }
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        raw_tris.push(orient_ccw([a, b, c], &all_vertices));
    }
    if raw_tris.is_empty() {
        return Err(Error::MeshFailure("no interior faces kept".into()));
    }

    // Compact to used vertices; initial boundary vertices keep their order.
    let mut used: Vec<usize> = raw_tris.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::with_capacity(used.len());
    for (new, &old) in used.iter().enumerate() {
        remap.insert(old, new);
        vertices.push(all_vertices[old]);
    }
    let mut triangles: Vec<[usize; 3]> = raw_tris
        .into_iter()
        .map(|t| rotate_min(t.map(|v| remap[&v])))
        .collect();
    triangles.sort_unstable();

    let (boundary_loop, boundary_param) =
        trace_boundary(&vertices, &triangles, polyline, params, n, &remap)?;

    let min_angle_deg = min_angle(&vertices, &triangles);
    if min_angle_deg < MIN_ANGLE_CONTRACT_DEG {
        return Err(Error::MeshFailure(format!(
            "mesh quality below contract: min angle {min_angle_deg:.2} deg"
        )));
    }
    Ok(TriMesh { vertices, triangles, boundary_loop, boundary_param, h, min_angle_deg })
}

/// Mesh a catalog curve at target edge length h. Boundary vertices inserted
/// by refinement land on chords; snap them back onto the curve and re-verify
/// element quality afterwards.
pub fn triangulate_curve(curve: &JordanCurve, h: f64) -> Result<TriMesh> {
    let (pts, params) = boundary_nodes(curve, h)?;
    let mut mesh = triangulate(&pts, &params, h)?;
    for (k, &v) in mesh.boundary_loop.iter().enumerate() {
        mesh.vertices[v] = curve.param(mesh.boundary_param[k]);
    }
    for t in 0..mesh.triangles.len() {
        if mesh.triangle_area(t) <= 0.0 {
            return Err(Error::MeshFailure(format!(
                "boundary snap inverted triangle {t}"
            )));
        }
    }
    mesh.min_angle_deg = min_angle(&mesh.vertices, &mesh.triangles);
    if mesh.min_angle_deg < MIN_ANGLE_CONTRACT_DEG {
        return Err(Error::MeshFailure(format!(
            "mesh quality below contract after boundary snap: min angle {:.2} deg",
            mesh.min_angle_deg
        )));
    }
    Ok(mesh)
}

fn orient_ccw(t: [usize; 3], vs: &[Complex64]) -> [usize; 3] {
    let (a, b, c) = (vs[t[0]], vs[t[1]], vs[t[2]]);
    if (b - a).re * (c - a).im - (b - a).im * (c - a).re < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

fn rotate_min(t: [usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| t[k]).unwrap();
    [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
}

fn min_angle(vertices: &[Complex64], triangles: &[[usize; 3]]) -> f64 {
    let mut worst = f64::INFINITY;
    for t in triangles {
        for k in 0..3 {
            let p = vertices[t[k]];
            let q = vertices[t[(k + 1) % 3]];
            let r = vertices[t[(k + 2) % 3]];
            let u = q - p;
            let v = r - p;
            let dot = u.re * v.re + u.im * v.im;
            let angle = (dot / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
            worst = worst.min(angle.to_degrees());
        }
    }
    worst
}

/// Boundary edges of counterclockwise triangles occur once and wind
/// counterclockwise around the domain; walk them into a single cycle and
/// assign curve parameters (input vertices keep theirs, split vertices
/// project onto their host segment).
fn trace_boundary(
    vertices: &[Complex64],
    triangles: &[[usize; 3]],
    polyline: &[Complex64],
    params: &[f64],
    n_input: usize,
    remap: &HashMap<usize, usize>,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut count: HashMap<(usize, usize), i32> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            *count.entry(key).or_insert(0) += 1;
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut n_boundary_edges = 0;
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                if next.insert(a, b).is_some() {
                    return Err(Error::MeshFailure(format!(
                        "boundary branches at vertex {a}"
                    )));
                }
                n_boundary_edges += 1;
            }
        }
    }
    let start = *next.keys().min().ok_or_else(|| {
        Error::MeshFailure("mesh has no boundary".into())
    })?;
    let mut boundary_loop = Vec::with_capacity(n_boundary_edges);
    let mut cur = start;
    loop {
        boundary_loop.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| Error::MeshFailure(format!("boundary walk stuck at {cur}")))?;
        if cur == start {
            break;
        }
        if boundary_loop.len() > n_boundary_edges {
            return Err(Error::MeshFailure("boundary walk does not close".into()));
        }
    }
    if boundary_loop.len() != n_boundary_edges {
        return Err(Error::MeshFailure("boundary is not a single cycle".into()));
    }

    // Parameters: original boundary vertices are remapped 0..n_input in order.
    let mut original: HashMap<usize, f64> = HashMap::new();
    for i in 0..n_input {
        if let Some(&new) = remap.get(&i) {
            original.insert(new, params[i]);
        }
    }
    let mut boundary_param = Vec::with_capacity(boundary_loop.len());
    for &v in &boundary_loop {
        if let Some(&t) = original.get(&v) {
            boundary_param.push(t);
            continue;
        }
        // Refinement split point: locate the host segment of the input
        // polyline and interpolate its parameter range.
        let p = vertices[v];
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for i in 0..n_input {
            let a = polyline[i];
            let b = polyline[(i + 1) % n_input];
            let ab = b - a;
            let len2 = ab.norm_sqr().max(1e-300);
            let f = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
            let d = (p - (a + ab * f)).norm();
            if d < best.0 {
                best = (d, i, f);
            }
        }
        let (_, i, f) = best;
        let t0 = params[i];
        let mut t1 = params[(i + 1) % n_input];
        if t1 <= t0 {
            t1 += 1.0;
        }
        boundary_param.push((t0 + f * (t1 - t0)).rem_euclid(1.0));
    }
    Ok((boundary_loop, boundary_param))
}
