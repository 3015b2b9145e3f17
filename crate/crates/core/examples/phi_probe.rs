use glvortex::curves::{BoundaryData, JordanCurve};
use glvortex::frame::{frame_from_gl, frame_from_conformal};
use glvortex::conformal::identity_map;
use glvortex::gl::{bad_disks, continuation, GLConfig};
use glvortex::mesh::triangulate_curve;
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() {
    let curve = JordanCurve::unit_circle();
    let mesh = triangulate_curve(&curve, 0.025).unwrap();
    let data = BoundaryData::Tangential { curve: curve.clone() };
    let g: Vec<Complex64> = mesh.boundary_param.iter().map(|&t| data.value(t)).collect();
    let sols = continuation(&mesh, &g, &[0.2, 0.1, 0.05], &GLConfig::default()).unwrap();
    let sol = sols.into_iter().last().unwrap();
    let report = bad_disks(&mesh, &sol.u, sol.eps, 0.5);
    let center = report.disks[0].center;
    println!("vortex center {center}");
    let frame = frame_from_gl(&mesh, &sol, Some(center)).unwrap();
    let reference = frame_from_conformal(&identity_map()).unwrap();
    for &r in &[0.3, 0.5, 0.7, 0.85, 0.92, 0.95] {
        let mut dsum = 0.0;
        let mut dmax = 0.0f64;
        let n = 64;
        for j in 0..n {
            let x = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
            let d = frame.phi(x).unwrap() - reference.phi(x).unwrap();
            dsum += d;
            dmax = dmax.max(d.abs());
        }
        println!("r = {r}: mean(phi - ln r) = {:+.5}, max |.| = {:.5}", dsum / n as f64, dmax);
    }
    println!("anchor {} phi(anchor) {:+.5} ln|anchor| {:+.5}",
        frame.anchor, frame.phi(frame.anchor).unwrap(), frame.anchor.norm().ln());
}
