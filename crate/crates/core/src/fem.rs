//! Piecewise-linear finite elements on triangle meshes: Dirichlet energy,
//! the Ginzburg-Landau functional with lumped-mass potential, its gradient,
//! a preconditioned CG Laplace solver, and the Green function regularization
//! used for point masses.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

const CG_TOL: f64 = 1e-10;

/// Energy split of the Ginzburg-Landau functional
/// E = 1/2 int |grad u|^2 + 1/(4 eps^2) int (1 - |u|^2)^2.
#[derive(Debug, Clone, Copy)]
pub struct EnergySplit {
    pub dirichlet: f64,
    pub potential: f64,
}

impl EnergySplit {
    pub fn total(&self) -> f64 {
        self.dirichlet + self.potential
    }
}

/// Barycentric gradients of a triangle: area and the constant vectors
/// grad lambda_i, encoded as complex numbers (x, y) -> x + iy.
fn tri_gradients(mesh: &TriMesh, t: usize) -> (f64, [Complex64; 3]) {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    let area = 0.5 * ((pb - pa).re * (pc - pa).im - (pb - pa).im * (pc - pa).re);
    let perp = |v: Complex64| Complex64::new(-v.im, v.re);
    let s = 1.0 / (2.0 * area);
    (area, [perp(pc - pb) * s, perp(pa - pc) * s, perp(pb - pa) * s])
}

/// Gradient of a complex P1 field on one triangle: a pair (d/dx, d/dy) of
/// complex values.
fn field_gradient(
    grads: &[Complex64; 3],
    u: [Complex64; 3],
) -> (Complex64, Complex64) {
    let mut gx = Complex64::ZERO;
    let mut gy = Complex64::ZERO;
    for k in 0..3 {
        gx += u[k] * grads[k].re;
        gy += u[k] * grads[k].im;
    }
    (gx, gy)
}

/// 1/2 int_Omega |grad u|^2 for a complex-valued P1 field.
pub fn dirichlet_energy(mesh: &TriMesh, u: &[Complex64]) -> f64 {
    (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let (area, grads) = tri_gradients(mesh, t);
            let [a, b, c] = mesh.triangles[t];
            let (gx, gy) = field_gradient(&grads, [u[a], u[b], u[c]]);
            0.5 * area * (gx.norm_sqr() + gy.norm_sqr())
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Ginzburg-Landau energy at coupling eps; the potential term uses the
/// lumped vertex quadrature so that energy and gradient are exactly
/// consistent.
pub fn gl_energy(mesh: &TriMesh, u: &[Complex64], eps: f64) -> EnergySplit {
    let dirichlet = dirichlet_energy(mesh, u);
    let masses = mesh.vertex_masses();
    let potential: f64 = masses
        .iter()
        .zip(u.iter())
        .map(|(&m, &uv)| {
            let w = 1.0 - uv.norm_sqr();
            m * w * w
        })
        .sum::<f64>()
        / (4.0 * eps * eps);
    EnergySplit { dirichlet, potential }
}

/// Stiffness matrix action K u (the gradient of the Dirichlet part).
pub fn apply_stiffness(mesh: &TriMesh, u: &[Complex64]) -> Vec<Complex64> {
    let per_tri: Vec<(usize, [Complex64; 3])> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let (area, grads) = tri_gradients(mesh, t);
            let [a, b, c] = mesh.triangles[t];
            let (gx, gy) = field_gradient(&grads, [u[a], u[b], u[c]]);
            let mut out = [Complex64::ZERO; 3];
            for k in 0..3 {
                out[k] = (gx * grads[k].re + gy * grads[k].im) * area;
            }
            (t, out)
        })
        .collect();
    let mut ku = vec![Complex64::ZERO; u.len()];
    for (t, contrib) in per_tri {
        for (k, &v) in mesh.triangles[t].iter().enumerate() {
            ku[v] += contrib[k];
        }
    }
    ku
}

/// Diagonal of the stiffness matrix, for Jacobi preconditioning.
pub fn stiffness_diagonal(mesh: &TriMesh) -> Vec<f64> {
    let mut diag = vec![0.0; mesh.vertices.len()];
    for t in 0..mesh.triangles.len() {
        let (area, grads) = tri_gradients(mesh, t);
        for (k, &v) in mesh.triangles[t].iter().enumerate() {
            diag[v] += area * grads[k].norm_sqr();
        }
    }
    diag
}

/// Gradient of the Ginzburg-Landau energy with respect to vertex values,
/// zeroed on the boundary (Dirichlet constraint).
pub fn gl_gradient(mesh: &TriMesh, u: &[Complex64], eps: f64) -> Vec<Complex64> {
    let mut g = apply_stiffness(mesh, u);
    let masses = mesh.vertex_masses();
    let inv_eps2 = 1.0 / (eps * eps);
    for v in 0..g.len() {
        g[v] -= u[v] * (masses[v] * inv_eps2 * (1.0 - u[v].norm_sqr()));
    }
    for &v in &mesh.boundary_loop {
        g[v] = Complex64::ZERO;
    }
    g
}

fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Solve the discrete Laplace equation with the given boundary values
/// (aligned with `mesh.boundary_loop`) by Jacobi-preconditioned conjugate
/// gradients on the interior unknowns.
pub fn solve_laplace_dirichlet(
    mesh: &TriMesh,
    boundary_values: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = mesh.vertices.len();
    if boundary_values.len() != mesh.boundary_loop.len() {
        return Err(Error::Config(format!(
            "expected {} boundary values, got {}",
            mesh.boundary_loop.len(),
            boundary_values.len()
        )));
    }
    let is_boundary = mesh.is_boundary();
    let mut u = vec![Complex64::ZERO; n];
    for (k, &v) in mesh.boundary_loop.iter().enumerate() {
        u[v] = boundary_values[k];
    }
    let diag = stiffness_diagonal(mesh);
    let free = |x: &mut Vec<Complex64>| {
        for v in 0..n {
            if is_boundary[v] {
                x[v] = Complex64::ZERO;
            }
        }
    };
    let mut r: Vec<Complex64> = apply_stiffness(mesh, &u).iter().map(|&x| -x).collect();
    free(&mut r);
    let r0 = real_dot(&r, &r).sqrt();
    if r0 == 0.0 {
        return Ok(u);
    }
    let tol = CG_TOL * r0.max(1.0);
    let mut z: Vec<Complex64> = r.iter().zip(&diag).map(|(&x, &d)| x / d).collect();
    free(&mut z);
    let mut p = z.clone();
    let mut rz = real_dot(&r, &z);
    let max_iter = 40 * (n as f64).sqrt() as usize + 400;
    for _ in 0..max_iter {
        let mut ap = apply_stiffness(mesh, &p);
        free(&mut ap);
        let pap = real_dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverFailure("stiffness lost positivity".into()));
        }
        let alpha = rz / pap;
        for v in 0..n {
            u[v] += p[v] * alpha;
            r[v] -= ap[v] * alpha;
        }
        if real_dot(&r, &r).sqrt() <= tol {
            return Ok(u);
        }
        z = r.iter().zip(&diag).map(|(&x, &d)| x / d).collect();
        free(&mut z);
        let rz_new = real_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for v in 0..n {
            p[v] = z[v] + p[v] * beta;
        }
    }
    Err(Error::SolverFailure(format!(
        "conjugate gradients did not reach {tol:.3e} in {max_iter} iterations"
    )))
}

/// Dirichlet Green function with pole at `a`, split as
/// G(x) = ln|x - a| + h(x) with h harmonic and G = 0 on the boundary.
/// Returns the vertex values of G (the pole vertex carries h only; the
/// log is singular there) together with the Robin mass h(a).
pub struct GreenFem {
    pub values: Vec<Complex64>,
    pub regular_part: Vec<Complex64>,
    pub mass: f64,
}

pub fn green_dirichlet_fem(mesh: &TriMesh, a: Complex64) -> Result<GreenFem> {
    let dist = mesh.boundary_distance(a);
    let limit = 2.0 * mesh.h;
    if dist <= limit {
        return Err(Error::TooCloseToBoundary { dist, limit });
    }
    if mesh.locate(a).is_none() {
        return Err(Error::TooCloseToBoundary { dist: 0.0, limit });
    }
    let boundary_values: Vec<Complex64> = mesh
        .boundary_loop
        .iter()
        .map(|&v| Complex64::new(-(mesh.vertices[v] - a).norm().ln(), 0.0))
        .collect();
    let regular_part = solve_laplace_dirichlet(mesh, &boundary_values)?;
    let mass = mesh
        .interpolate(&regular_part, a)
        .ok_or_else(|| Error::SolverFailure("mass interpolation failed".into()))?
        .re;
    let values: Vec<Complex64> = regular_part
        .iter()
        .zip(&mesh.vertices)
        .map(|(&h, &x)| {
            let r = (x - a).norm();
            if r == 0.0 {
                h
            } else {
                h + r.ln()
            }
        })
        .collect();
    Ok(GreenFem { values, regular_part, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::JordanCurve;
    use crate::mesh::triangulate_curve;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk_mesh(h: f64) -> TriMesh {
        triangulate_curve(&JordanCurve::unit_circle(), h).unwrap()
    }

    #[test]
    fn dirichlet_energy_of_linear_and_harmonic_fields() {
        let mesh = disk_mesh(0.05);
        // u = x + iy has |grad|^2 = 2, energy = area.
        let u: Vec<Complex64> = mesh.vertices.clone();
        let e = dirichlet_energy(&mesh, &u);
        assert!((e - mesh.total_area()).abs() < 1e-12 * mesh.total_area().max(1.0) + 1e-12);
        // Real part of z^2: |grad|^2 = 4|z|^2, integral over disk = 2 pi,
        // energy = pi. P1 interpolation converges at O(h^2).
        let u2: Vec<Complex64> = mesh.vertices.iter().map(|&z| (z * z).re.into()).collect();
        let e2 = dirichlet_energy(&mesh, &u2);
        assert!((e2 - PI).abs() < 0.01, "got {e2}");
    }

    #[test]
    fn gl_energy_potential_term_uses_lumped_masses() {
        let mesh = disk_mesh(0.08);
        let u = vec![Complex64::ZERO; mesh.num_vertices()];
        let eps = 0.5;
        let split = gl_energy(&mesh, &u, eps);
        assert_eq!(split.dirichlet, 0.0);
        // (1 - 0)^2 / (4 eps^2) * area with area = pi + O(h^2).
        let expected = mesh.total_area() / (4.0 * eps * eps);
        assert!((split.potential - expected).abs() < 1e-12);
        assert!((split.total() - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mesh = disk_mesh(0.15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = mesh.num_vertices();
        let is_b = mesh.is_boundary();
        let u: Vec<Complex64> = (0..n)
            .map(|_| c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        let eps = 0.4;
        let g = gl_gradient(&mesh, &u, eps);
        let delta: Vec<Complex64> = (0..n)
            .map(|v| {
                if is_b[v] {
                    Complex64::ZERO
                } else {
                    c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
                }
            })
            .collect();
        let t = 1e-6;
        let shift = |s: f64| -> Vec<Complex64> {
            u.iter().zip(&delta).map(|(&a, &d)| a + d * s).collect()
        };
        let ep = gl_energy(&mesh, &shift(t), eps).total();
        let em = gl_energy(&mesh, &shift(-t), eps).total();
        let fd = (ep - em) / (2.0 * t);
        let gd = real_dot(&g, &delta);
        assert!(
            (fd - gd).abs() <= 1e-5 * gd.abs().max(1.0),
            "fd {fd} vs gradient {gd}"
        );
    }

    #[test]
    fn laplace_solver_reproduces_harmonic_polynomials() {
        let mesh = disk_mesh(0.06);
        // Boundary data from Re(z^2) + i Im(z^3); the discrete solution
        // approximates the harmonic extension at O(h^2).
        let bv: Vec<Complex64> = mesh
            .boundary_loop
            .iter()
            .map(|&v| {
                let z = mesh.vertices[v];
                c((z * z).re, (z * z * z).im)
            })
            .collect();
        let u = solve_laplace_dirichlet(&mesh, &bv).unwrap();
        let mut worst = 0.0f64;
        for (v, &z) in mesh.vertices.iter().enumerate() {
            let exact = c((z * z).re, (z * z * z).im);
            worst = worst.max((u[v] - exact).norm());
        }
        assert!(worst < 5e-3, "worst nodal error {worst}");
    }

    #[test]
    fn laplace_solution_satisfies_maximum_principle() {
        let mesh = disk_mesh(0.1);
        let bv: Vec<Complex64> = mesh
            .boundary_loop
            .iter()
            .map(|&v| {
                let z = mesh.vertices[v];
                c(z.arg().sin() + 0.3 * (3.0 * z.arg()).cos(), 0.0)
            })
            .collect();
        let u = solve_laplace_dirichlet(&mesh, &bv).unwrap();
        let bmax = bv.iter().map(|b| b.re).fold(f64::NEG_INFINITY, f64::max);
        let bmin = bv.iter().map(|b| b.re).fold(f64::INFINITY, f64::min);
        for &uv in &u {
            assert!(uv.re <= bmax + 1e-10 && uv.re >= bmin - 1e-10);
        }
    }

    #[test]
    fn green_mass_on_the_disk_matches_closed_form() {
        // On the unit disk h(x) = -ln|1 - conj(a) x|, so the mass is
        // h(a) = -ln(1 - |a|^2).
        let mesh = disk_mesh(0.04);
        let g0 = green_dirichlet_fem(&mesh, Complex64::ZERO).unwrap();
        assert!(g0.mass.abs() < 4e-3, "mass at center {}", g0.mass);
        let a = c(0.3, 0.0);
        let g = green_dirichlet_fem(&mesh, a).unwrap();
        let exact = -(1.0 - 0.09f64).ln();
        assert!((g.mass - exact).abs() < 4e-3, "mass {} vs {}", g.mass, exact);
        // Boundary values of G vanish.
        for &v in &mesh.boundary_loop {
            assert!(g.values[v].norm() < 1e-9);
        }
        // Symmetry of the Green function: G_a(b) = G_b(a).
        let b = c(-0.2, 0.4);
        let gb = green_dirichlet_fem(&mesh, b).unwrap();
        let gab = mesh.interpolate(&g.values, b).unwrap().re;
        let gba = mesh.interpolate(&gb.values, a).unwrap().re;
        assert!((gab - gba).abs() < 5e-3, "{gab} vs {gba}");
    }

    #[test]
    fn green_rejects_poles_near_the_boundary() {
        let mesh = disk_mesh(0.1);
        match green_dirichlet_fem(&mesh, c(0.95, 0.0)) {
            Err(Error::TooCloseToBoundary { .. }) => {}
            other => panic!("expected TooCloseToBoundary, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn dirichlet_energy_converges_at_second_order() {
        // Energy of the P1 interpolant of Re(z^2) on the disk overshoots
        // pi by c h^2; halving h should cut the error by about 4.
        let errs: Vec<f64> = [0.2, 0.1]
            .iter()
            .map(|&h| {
                let mesh = disk_mesh(h);
                let u: Vec<Complex64> =
                    mesh.vertices.iter().map(|&z| (z * z).re.into()).collect();
                (dirichlet_energy(&mesh, &u) - PI).abs()
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 1.5, "convergence rate {rate} from errors {errs:?}");
    }
}
