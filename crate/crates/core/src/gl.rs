//! Ginzburg-Landau energy minimization on triangulated domains, vortex
//! (bad disk) detection, and the logarithmic energy bookkeeping used to
//! track the eps -> 0 asymptotics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{apply_stiffness, gl_energy, gl_gradient};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GLConfig {
    /// Convergence threshold on the gradient norm, relative to the energy
    /// scale max(1, E).
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Vertices with |u| below this count as part of a vortex core.
    pub bad_disk_threshold: f64,
}

impl Default for GLConfig {
    fn default() -> Self {
        GLConfig { grad_tol: 1e-8, max_iter: 50_000, bad_disk_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GLSolution {
    pub eps: f64,
    pub u: Vec<Complex64>,
    pub energy: f64,
    pub dirichlet: f64,
    pub potential: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BadDisk {
    pub center: Complex64,
    pub radius: f64,
    pub n_vertices: usize,
    pub min_modulus: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BadDiskReport {
    pub eps: f64,
    pub threshold: f64,
    pub disks: Vec<BadDisk>,
}

/// The mesh resolves the core scale only when h stays below eps/3.
pub fn resolution_warning(h: f64, eps: f64) -> Option<String> {
    (h > eps / 3.0).then(|| {
        format!("mesh size h = {h} does not resolve the core scale eps/3 = {}", eps / 3.0)
    })
}

fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Initial guess from boundary data: the harmonic extension, renormalized
/// away from its zeros so the modulus caps at 1 with a linear core of
/// width eps.
pub fn seed_from_boundary(
    mesh: &TriMesh,
    boundary_values: &[Complex64],
    eps: f64,
) -> Result<Vec<Complex64>> {
    let v = crate::fem::solve_laplace_dirichlet(mesh, boundary_values)?;
    Ok(v.iter().map(|&z| z / z.norm().max(eps)).collect())
}

/// Real roots of c0 + c1 t + c2 t^2 + c3 t^3.
fn cubic_roots(c0: f64, c1: f64, c2: f64, c3: f64) -> Vec<f64> {
    let scale = c0.abs().max(c1.abs()).max(c2.abs()).max(c3.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if c3.abs() < 1e-14 * scale {
        if c2.abs() < 1e-14 * scale {
            if c1.abs() < 1e-14 * scale {
                return Vec::new();
            }
            return vec![-c0 / c1];
        }
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            return Vec::new();
        }
        let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
        let mut roots = vec![q / c2];
        if q != 0.0 {
            roots.push(c0 / q);
        }
        return roots;
    }
    let b = c2 / c3;
    let c = c1 / c3;
    let d = c0 / c3;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-0.5 * q + s).cbrt();
        let v = (-0.5 * q - s).cbrt();
        vec![u + v + shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (-0.5 * q / (r * r * r)).clamp(-1.0, 1.0).acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + shift)
            .collect()
    };
    // One Newton polish per root.
    for t in roots.iter_mut() {
        let f = c0 + *t * (c1 + *t * (c2 + *t * c3));
        let df = c1 + *t * (2.0 * c2 + *t * 3.0 * c3);
        if df != 0.0 {
            *t -= f / df;
        }
    }
    roots
}

/// Exact line search for the GL energy along u + t d. The restriction is a
/// quartic polynomial in t; returns (t*, E(t*) - E(0)).
fn line_search(
    mesh: &TriMesh,
    masses: &[f64],
    u: &[Complex64],
    ku: &[Complex64],
    d: &[Complex64],
    eps: f64,
) -> (f64, f64) {
    let kd = apply_stiffness(mesh, d);
    let inv4e2 = 0.25 / (eps * eps);
    let mut a1 = real_dot(ku, d);
    let mut a2 = 0.5 * real_dot(&kd, d);
    let mut a3 = 0.0;
    let mut a4 = 0.0;
    for v in 0..u.len() {
        let w = 1.0 - u[v].norm_sqr();
        let p = u[v].re * d[v].re + u[v].im * d[v].im;
        let q = d[v].norm_sqr();
        let m = masses[v] * inv4e2;
        a1 -= 4.0 * m * w * p;
        a2 += m * (4.0 * p * p - 2.0 * w * q);
        a3 += 4.0 * m * p * q;
        a4 += m * q * q;
    }
    let de = |t: f64| t * (a1 + t * (a2 + t * (a3 + t * a4)));
    let mut best = (0.0, 0.0);
    for t in cubic_roots(a1, 2.0 * a2, 3.0 * a3, 4.0 * a4) {
        if t > 0.0 && t.is_finite() {
            let e = de(t);
            if e < best.1 {
                best = (t, e);
            }
        }
    }
    best
}

/// Minimize the GL energy over P1 fields with the given boundary values
/// (aligned with `mesh.boundary_loop`) by nonlinear conjugate gradients
/// with Polak-Ribiere updates and exact quartic line searches.
pub fn minimize(
    mesh: &TriMesh,
    boundary_values: &[Complex64],
    eps: f64,
    cfg: &GLConfig,
    initial: Option<&[Complex64]>,
) -> Result<GLSolution> {
    if eps <= 0.0 {
        return Err(Error::Config(format!("eps = {eps} must be positive")));
    }
    let n = mesh.num_vertices();
    let mut u = match initial {
        Some(u0) => {
            if u0.len() != n {
                return Err(Error::Config(format!(
                    "initial field has {} values for {} vertices",
                    u0.len(),
                    n
                )));
            }
            u0.to_vec()
        }
        None => seed_from_boundary(mesh, boundary_values, eps)?,
    };
    for (k, &v) in mesh.boundary_loop.iter().enumerate() {
        u[v] = boundary_values[k];
    }
    let masses = mesh.vertex_masses();
    let diag_k = {
        let mut diag = vec![0.0; n];
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangles[t];
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let area = 0.5 * ((pb - pa).re * (pc - pa).im - (pb - pa).im * (pc - pa).re);
            let s = 1.0 / (4.0 * area);
            diag[a] += (pc - pb).norm_sqr() * s;
            diag[b] += (pa - pc).norm_sqr() * s;
            diag[c] += (pb - pa).norm_sqr() * s;
        }
        diag
    };
    let precond = |g: &[Complex64], u: &[Complex64]| -> Vec<Complex64> {
        let inv_e2 = 1.0 / (eps * eps);
        g.iter()
            .enumerate()
            .map(|(v, &gv)| {
                let curv = diag_k[v] + masses[v] * inv_e2 * (3.0 * u[v].norm_sqr() - 1.0);
                gv / curv.max(0.1 * diag_k[v])
            })
            .collect()
    };

    let mut energy = gl_energy(mesh, &u, eps).total();
    let mut g = gl_gradient(mesh, &u, eps);
    let mut z = precond(&g, &u);
    let mut gz = real_dot(&g, &z);
    let mut d: Vec<Complex64> = z.iter().map(|&x| -x).collect();
    let mut iterations = 0;
    for iter in 0..cfg.max_iter {
        let gnorm = real_dot(&g, &g).sqrt();
        if gnorm <= cfg.grad_tol * energy.abs().max(1.0) {
            break;
        }
        iterations = iter + 1;
        if real_dot(&g, &d) >= 0.0 {
            d = z.iter().map(|&x| -x).collect();
        }
        let ku = apply_stiffness(mesh, &u);
        let (t, de) = line_search(mesh, &masses, &u, &ku, &d, eps);
        if t <= 0.0 || de >= 0.0 {
            // The exact search found no descent along d; fall back to the
            // preconditioned gradient before giving up.
            d = z.iter().map(|&x| -x).collect();
            let (t2, de2) = line_search(mesh, &masses, &u, &ku, &d, eps);
            if t2 <= 0.0 || de2 >= 0.0 {
                return Err(Error::NonMonotone { iter });
            }
            for v in 0..n {
                u[v] += d[v] * t2;
            }
            energy += de2;
        } else {
            for v in 0..n {
                u[v] += d[v] * t;
            }
            energy += de;
        }
        if iter % 64 == 63 {
            energy = gl_energy(mesh, &u, eps).total();
        }
        let g_new = gl_gradient(mesh, &u, eps);
        let z_new = precond(&g_new, &u);
        let gz_new = real_dot(&g_new, &z_new);
        // Polak-Ribiere with a nonnegativity restart.
        let mixed = real_dot(&g_new, &z_new) - real_dot(&g_new, &z);
        let beta = (mixed / gz).max(0.0);
        for v in 0..n {
            d[v] = -z_new[v] + d[v] * beta;
        }
        g = g_new;
        z = z_new;
        gz = gz_new;
    }
    let grad_norm = real_dot(&g, &g).sqrt();
    if grad_norm > cfg.grad_tol * energy.abs().max(1.0) {
        return Err(Error::SolverFailure(format!(
            "gradient norm {grad_norm:.3e} after {} iterations",
            cfg.max_iter
        )));
    }
    let split = gl_energy(mesh, &u, eps);
    Ok(GLSolution {
        eps,
        u,
        energy: split.total(),
        dirichlet: split.dirichlet,
        potential: split.potential,
        iterations,
        grad_norm,
    })
}

/// Minimize along a decreasing eps schedule, warm-starting each solve from
/// the previous minimizer.
pub fn continuation(
    mesh: &TriMesh,
    boundary_values: &[Complex64],
    eps_list: &[f64],
    cfg: &GLConfig,
) -> Result<Vec<GLSolution>> {
    if eps_list.is_empty() {
        return Err(Error::Config("empty eps schedule".into()));
    }
    for w in eps_list.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config(format!(
                "eps schedule must decrease: {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut out: Vec<GLSolution> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let warm = out.last().map(|s| s.u.as_slice());
        out.push(minimize(mesh, boundary_values, eps, cfg, warm)?);
    }
    Ok(out)
}

/// Vortex cores: vertices with |u| below the threshold, grouped into
/// connected clusters at the eps linking scale, each reported as a disk
/// around the deficit-weighted centroid.
pub fn bad_disks(mesh: &TriMesh, u: &[Complex64], eps: f64, threshold: f64) -> BadDiskReport {
    let bad: Vec<usize> = (0..u.len()).filter(|&v| u[v].norm() < threshold).collect();
    let link = 2.5 * eps;
    let mut parent: Vec<usize> = (0..bad.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..bad.len() {
        for j in (i + 1)..bad.len() {
            if (mesh.vertices[bad[i]] - mesh.vertices[bad[j]]).norm() <= link {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut clusters: std::collections::HashMap<usize, Vec<usize>> =
        std::collections::HashMap::new();
    for i in 0..bad.len() {
        let root = find(&mut parent, i);
        clusters.entry(root).or_default().push(bad[i]);
    }
    let mut disks: Vec<BadDisk> = clusters
        .values()
        .map(|members| {
            let mut wsum = 0.0;
            let mut centroid = Complex64::ZERO;
            let mut min_modulus = f64::INFINITY;
            for &v in members {
                let w = threshold * threshold - u[v].norm_sqr();
                wsum += w;
                centroid += mesh.vertices[v] * w;
                min_modulus = min_modulus.min(u[v].norm());
            }
            let center = centroid / wsum;
            let spread = members
                .iter()
                .map(|&v| (mesh.vertices[v] - center).norm())
                .fold(0.0, f64::max);
            BadDisk {
                center,
                radius: spread.max(eps),
                n_vertices: members.len(),
                min_modulus,
            }
        })
        .collect();
    disks.sort_by(|a, b| {
        (a.center.re, a.center.im)
            .partial_cmp(&(b.center.re, b.center.im))
            .unwrap()
    });
    BadDiskReport { eps, threshold, disks }
}

/// Distance from every vortex core to the boundary; fails when a core sits
/// within 5 eps of it, where the core-boundary interaction is unresolved.
pub fn boundary_clearance_check(mesh: &TriMesh, report: &BadDiskReport) -> Result<f64> {
    let limit = 5.0 * report.eps;
    let mut clearance = f64::INFINITY;
    for disk in &report.disks {
        clearance = clearance.min(mesh.boundary_distance(disk.center));
    }
    if clearance < limit {
        return Err(Error::TooCloseToBoundary { dist: clearance, limit });
    }
    Ok(clearance)
}

/// Discrete maximum principle check: minimizers satisfy |u| <= 1 up to
/// roundoff at the nodes.
pub fn max_modulus_check(u: &[Complex64]) -> Result<f64> {
    let max = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max > 1.0 + 1e-6 {
        return Err(Error::SolverFailure(format!(
            "nodal modulus {max:.8} exceeds the maximum principle bound"
        )));
    }
    Ok(max)
}

/// Local potential energy (1/4 eps^2) integral of (1-|u|^2)^2 over the disk
/// of radius r around `center`, in the lumped vertex quadrature of
/// gl_energy. Every vortex core carries at least a fixed quantum of this;
/// a core-free disk carries next to none.
pub fn energy_quantum(
    mesh: &TriMesh,
    u: &[Complex64],
    eps: f64,
    center: Complex64,
    r: f64,
) -> f64 {
    let masses = mesh.vertex_masses();
    (0..u.len())
        .filter(|&v| (mesh.vertices[v] - center).norm() <= r)
        .map(|v| {
            let w = 1.0 - u[v].norm_sqr();
            masses[v] * w * w
        })
        .sum::<f64>()
        / (4.0 * eps * eps)
}

/// Least-squares slope of energy against ln(1/eps), divided by pi. For a
/// degree-d minimizing family this estimates |d|.
pub fn energy_slope(solutions: &[GLSolution]) -> f64 {
    let n = solutions.len() as f64;
    let xs: Vec<f64> = solutions.iter().map(|s| (1.0 / s.eps).ln()).collect();
    let ys: Vec<f64> = solutions.iter().map(|s| s.energy).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let var: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    cov / var / std::f64::consts::PI
}

/// E - pi |d| ln(1/eps): the eps-independent part of the energy, bounded
/// along a minimizing family.
pub fn log_energy_gap(solution: &GLSolution, degree: i64) -> f64 {
    solution.energy - std::f64::consts::PI * degree.abs() as f64 * (1.0 / solution.eps).ln()
}

/// Strong-form Euler-Lagrange residual sqrt(sum |g_v|^2 / m_v) over
/// interior vertices.
pub fn el_residual(mesh: &TriMesh, u: &[Complex64], eps: f64) -> f64 {
    let g = gl_gradient(mesh, u, eps);
    let masses = mesh.vertex_masses();
    let is_b = mesh.is_boundary();
    (0..u.len())
        .filter(|&v| !is_b[v])
        .map(|v| g[v].norm_sqr() / masses[v])
        .sum::<f64>()
        .sqrt()
}
