//! End-to-end checks of the renormalized energy: closed forms on the disk,
//! minimality of the optimal vortex, transport of the log-derivative
//! Dirichlet energy, and a radial ODE oracle for the vortex profile.

use glvortex::conformal::{identity_map, mobius, taylor_map, ConformalMap};
use glvortex::curves::{BoundaryData, JordanCurve};
use glvortex::fem::{dirichlet_energy, solve_laplace_dirichlet};
use glvortex::gl::{bad_disks, minimize, GLConfig};
use glvortex::mesh::triangulate_curve;
use glvortex::renorm::{
    invert_multi_seed, optimal_vortex, renormalized_energy_direct, renormalized_energy_formula,
    CanonicalMapSpec,
};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn quad_map() -> ConformalMap {
    taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.2, 0.0)])
}

#[test]
fn disk_energy_matches_closed_form_across_centers() {
    let id = identity_map();
    for &a in &[c(0.0, 0.0), c(0.3, 0.0), c(0.0, -0.5), c(0.4, 0.4), c(0.7, 0.0)] {
        let spec = CanonicalMapSpec::tangential(&id, a).unwrap();
        let w = renormalized_energy_formula(&spec, 256).unwrap();
        let oracle = -2.0 * PI * (1.0 - a.norm_sqr()).ln();
        assert!((w - oracle).abs() < 1e-3, "a = {a}: {w} vs {oracle}");
    }
}

#[test]
fn direct_and_formula_routes_agree_off_axis() {
    let spec = CanonicalMapSpec::tangential(&identity_map(), c(0.3, 0.2)).unwrap();
    let formula = renormalized_energy_formula(&spec, 256).unwrap();
    let map = glvortex::renorm::canonical_harmonic_map(&spec).unwrap();
    let (direct, _table) = renormalized_energy_direct(&map, &[0.02, 0.01, 0.005]).unwrap();
    assert!((direct - formula).abs() < 1e-2, "direct {direct} vs formula {formula}");
}

#[test]
fn optimal_vortex_minimizes_the_energy_landscape() {
    use rand::Rng;
    let catalog: Vec<ConformalMap> =
        vec![identity_map(), quad_map(), mobius(c(0.3, 0.0), 0.7).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for f0 in &catalog {
        let opt = optimal_vortex(f0).unwrap();
        let spec = CanonicalMapSpec::tangential(f0, opt.omega).unwrap();
        let w_star = renormalized_energy_formula(&spec, 128).unwrap();
        for _ in 0..20 {
            let r = 0.8 * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            let omega = Complex64::from_polar(r, phi);
            let spec = CanonicalMapSpec::tangential(f0, omega).unwrap();
            let w = renormalized_energy_formula(&spec, 128).unwrap();
            assert!(w >= w_star - 1e-8, "W({omega}) = {w} beats optimum {w_star}");
        }
    }
}

/// mu = ln|f'| transported to the image domain is harmonic there, and its
/// Dirichlet energy over the image equals the disk integral of |f''/f'|^2.
/// For f = z + 0.2 z^2 the disk integral sums to pi * -ln(0.84).
#[test]
fn log_derivative_energy_transports_to_the_image_domain() {
    let f = quad_map();
    let curve = JordanCurve::from_map(f.clone(), 1.0).unwrap();
    let mesh = triangulate_curve(&curve, 0.04).unwrap();
    let boundary: Vec<Complex64> = mesh
        .boundary_loop
        .iter()
        .map(|&v| {
            let z = invert_multi_seed(&f, mesh.vertices[v]).unwrap();
            c(f.d1(z).norm().ln(), 0.0)
        })
        .collect();
    let mu = solve_laplace_dirichlet(&mesh, &boundary).unwrap();
    let lhs = 2.0 * dirichlet_energy(&mesh, &mu);
    let oracle = -PI * 0.84f64.ln();
    assert!(
        (lhs - oracle).abs() / oracle < 1e-2,
        "FEM energy {lhs} vs disk integral {oracle}"
    );
}

/// Shooting oracle for the equivariant vortex profile on the unit disk:
/// f'' + f'/r - f/r^2 + (1 - f^2) f / eps^2 = 0, f(0) = 0, f(1) = 1.
fn radial_profile(eps: f64) -> impl Fn(f64) -> f64 {
    let n = 20_000usize;
    let r0 = 1e-6;
    let dr = (1.0 - r0) / n as f64;
    let rhs = |r: f64, f: f64, fp: f64| -fp / r + f / (r * r) - (1.0 - f * f) * f / (eps * eps);
    let shoot = |alpha: f64| -> Vec<f64> {
        let mut f = alpha * r0;
        let mut fp = alpha;
        let mut values = Vec::with_capacity(n + 1);
        values.push(f);
        for i in 0..n {
            let r = r0 + i as f64 * dr;
            let k1 = (fp, rhs(r, f, fp));
            let k2 = (fp + 0.5 * dr * k1.1, rhs(r + 0.5 * dr, f + 0.5 * dr * k1.0, fp + 0.5 * dr * k1.1));
            let k3 = (fp + 0.5 * dr * k2.1, rhs(r + 0.5 * dr, f + 0.5 * dr * k2.0, fp + 0.5 * dr * k2.1));
            let k4 = (fp + dr * k3.1, rhs(r + dr, f + dr * k3.0, fp + dr * k3.1));
            f += dr / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            fp += dr / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            values.push(f);
        }
        values
    };
    let (mut lo, mut hi) = (0.1, 20.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if *shoot(mid).last().unwrap() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let profile = shoot(0.5 * (lo + hi));
    move |r: f64| {
        let x = ((r - r0) / dr).clamp(0.0, n as f64);
        let i = (x as usize).min(n - 1);
        let frac = x - i as f64;
        profile[i] * (1.0 - frac) + profile[i + 1] * frac
    }
}

#[test]
fn gl_disk_cross_section_matches_radial_ode() {
    let eps = 0.2;
    let oracle = radial_profile(eps);
    assert!((oracle(1.0) - 1.0).abs() < 1e-6, "shooting misses the boundary");

    let curve = JordanCurve::unit_circle();
    let mesh = triangulate_curve(&curve, 0.04).unwrap();
    let data = BoundaryData::Tangential { curve: curve.clone() };
    let g: Vec<Complex64> =
        mesh.boundary_param.iter().map(|&t| data.value(t)).collect();
    let sol = minimize(&mesh, &g, eps, &GLConfig::default(), None).unwrap();
    let report = bad_disks(&mesh, &sol.u, eps, 0.5);
    let center = report.disks.first().map_or(Complex64::ZERO, |d| d.center);

    let mut worst = 0.0f64;
    for (v, &z) in mesh.vertices.iter().enumerate() {
        let r = (z - center).norm();
        if (0.25..=0.95).contains(&r) {
            worst = worst.max((sol.u[v].norm() - oracle(r)).abs());
        }
    }
    assert!(worst < 0.05, "profile mismatch {worst}");
}
