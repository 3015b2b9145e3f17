//! Conformal maps of the unit disk: disk automorphisms, Taylor maps and
//! their compositions, with derivative evaluation, Newton inversion,
//! distortion diagnostics and the Dirichlet-type map energy
//! `wp = integral over D of |f''/f'|^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Disk automorphism `psi(z) = e^{i theta} (z - omega) / (conj(omega) z - 1)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MobiusMap {
    pub omega: Complex64,
    pub theta: f64,
}

impl MobiusMap {
    pub fn new(omega: Complex64, theta: f64) -> Result<Self> {
        if omega.norm() >= 1.0 {
            return Err(Error::OutsideDisk(omega.re, omega.im));
        }
        Ok(MobiusMap { omega, theta })
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let rot = Complex64::from_polar(1.0, self.theta);
        rot * (z - self.omega) / (self.omega.conj() * z - 1.0)
    }

    /// Value and first two derivatives at `z`.
    pub fn at(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let rot = Complex64::from_polar(1.0, self.theta);
        let den = self.omega.conj() * z - 1.0;
        let c = rot * (self.omega.norm_sqr() - 1.0);
        let f = rot * (z - self.omega) / den;
        let d1 = c / (den * den);
        let d2 = -2.0 * self.omega.conj() * c / (den * den * den);
        (f, d1, d2)
    }

    /// The inverse is again a disk automorphism.
    pub fn inverse(&self) -> MobiusMap {
        let rot = Complex64::from_polar(1.0, self.theta);
        MobiusMap { omega: rot * self.omega, theta: -self.theta }
    }

    /// Composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let omega = other.inverse().apply(self.inverse().apply(Complex64::ZERO));
        // Recover the rotation from a probe point away from the new omega.
        let z0 = if omega.norm() > 0.5 { Complex64::ZERO } else { Complex64::new(0.7, 0.0) };
        let val = self.apply(other.apply(z0));
        let rot = val * (omega.conj() * z0 - 1.0) / (z0 - omega);
        MobiusMap { omega, theta: rot.arg() }
    }
}

/// Polynomial map `f(z) = sum c_k z^k` about the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorMap {
    pub coeffs: Vec<Complex64>,
}

impl TaylorMap {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        TaylorMap { coeffs }
    }

    pub fn at(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        // Horner evaluation of f, f' and f'' in one sweep.
        let mut f = Complex64::ZERO;
        let mut d1 = Complex64::ZERO;
        let mut d2 = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * z + 2.0 * d1;
            d1 = d1 * z + f;
            f = f * z + c;
        }
        (f, d1, d2)
    }
}

/// A conformal map of the unit disk, evaluable with two derivatives on
/// the closed disk (Taylor maps extend past it; Mobius maps up to the
/// reflected pole).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalMap {
    Mobius(MobiusMap),
    Taylor(TaylorMap),
    /// `outer . inner`, the result of rebasing a Taylor map.
    Composite { outer: TaylorMap, inner: MobiusMap },
}

/// Disk automorphism constructor; `psi(omega) = 0`.
pub fn mobius(omega: Complex64, theta: f64) -> Result<ConformalMap> {
    Ok(ConformalMap::Mobius(MobiusMap::new(omega, theta)?))
}

/// Map given by Taylor coefficients `c_0..c_N` about 0. Injectivity is not
/// checked here; `boundary_trace` detects self-intersecting images.
pub fn taylor_map(coeffs: Vec<Complex64>) -> ConformalMap {
    ConformalMap::Taylor(TaylorMap::new(coeffs))
}

pub fn identity_map() -> ConformalMap {
    taylor_map(vec![Complex64::ZERO, Complex64::ONE])
}

impl ConformalMap {
    pub fn at(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        match self {
            ConformalMap::Mobius(m) => m.at(z),
            ConformalMap::Taylor(t) => t.at(z),
            ConformalMap::Composite { outer, inner } => {
                let (m, m1, m2) = inner.at(z);
                let (g, g1, g2) = outer.at(m);
                (g, g1 * m1, g2 * m1 * m1 + g1 * m2)
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.at(z).0
    }

    pub fn d1(&self, z: Complex64) -> Complex64 {
        self.at(z).1
    }

    /// Newton inversion of `w = f(z)` from an initial guess. Fails if the
    /// iteration leaves the 1.25-disk or stalls.
    pub fn invert(&self, w: Complex64, seed: Complex64) -> Result<Complex64> {
        let mut z = seed;
        let scale = 1.0 + w.norm();
        for _ in 0..60 {
            let (f, d1, _) = self.at(z);
            let r = f - w;
            if r.norm() <= 1e-14 * scale {
                return Ok(z);
            }
            if d1.norm() < 1e-14 {
                break;
            }
            let step = r / d1;
            z -= step;
            if z.norm() > 1.25 {
                break;
            }
        }
        let (f, _, _) = self.at(z);
        if (f - w).norm() <= 1e-10 * scale && z.norm() <= 1.25 {
            Ok(z)
        } else {
            Err(Error::InverseFailure { failures: 1, total: 1 })
        }
    }

    /// Rebase: `f = f0 . psi_omega^{-1}` with `psi_omega = mobius(omega, 0)`,
    /// so `f(0) = f0(omega)` and `|f'(0)| = |f0'(omega)| (1 - |omega|^2)`.
    pub fn rebase(&self, omega: Complex64) -> Result<ConformalMap> {
        let psi = MobiusMap::new(omega, 0.0)?;
        let psi_inv = psi.inverse();
        Ok(match self {
            ConformalMap::Mobius(m) => ConformalMap::Mobius(m.compose(&psi_inv)),
            ConformalMap::Taylor(t) => {
                ConformalMap::Composite { outer: t.clone(), inner: psi_inv }
            }
            ConformalMap::Composite { outer, inner } => ConformalMap::Composite {
                outer: outer.clone(),
                inner: inner.compose(&psi_inv),
            },
        })
    }
}

const GL4_NODES: [f64; 4] = [
    -0.8611363115940526,
    -0.3399810435848563,
    0.3399810435848563,
    0.8611363115940526,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.3478548451374538,
    0.6521451548625461,
    0.6521451548625461,
    0.3478548451374538,
];

/// Radial panel breakpoints on [0, 1], geometrically clustered toward 1
/// with ratio `q` (panel widths shrink by `q` toward the boundary).
fn radial_panels(n_panels: usize, q: f64) -> Vec<f64> {
    let mut widths: Vec<f64> = (0..n_panels).map(|k| q.powi(k as i32)).collect();
    let total: f64 = widths.iter().sum();
    for w in &mut widths {
        *w /= total;
    }
    let mut pts = Vec::with_capacity(n_panels + 1);
    let mut x = 0.0;
    pts.push(0.0);
    for w in widths {
        x += w;
        pts.push(x.min(1.0));
    }
    *pts.last_mut().unwrap() = 1.0;
    pts
}

/// One quadrature level of `integral over D of F(|f''/f'|) dA` style
/// integrands, evaluated on a clustered-radius polar grid.
fn polar_quad<G: Fn(Complex64) -> f64>(n_radial: usize, n_theta: usize, integrand: G) -> f64 {
    let n_panels = (n_radial / 4).max(2);
    let pts = radial_panels(n_panels, 0.9);
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut total = 0.0;
    for p in 0..n_panels {
        let (lo, hi) = (pts[p], pts[p + 1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (node, wt) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
            let r = mid + half * node;
            let mut ring = 0.0;
            for j in 0..n_theta {
                let z = Complex64::from_polar(r, dtheta * j as f64);
                ring += integrand(z);
            }
            total += wt * half * r * ring * dtheta;
        }
    }
    total
}

/// Map energy `integral over D of |f''/f'|^2 dA` with a two-level error
/// estimate. Fails with `NonconvergentTail` when the levels disagree by
/// more than 5% (this flags critical points of f' inside the disk).
pub fn wp_energy(f: &ConformalMap, n_quad: usize) -> Result<(f64, f64)> {
    let n_radial = n_quad.max(32);
    let n_theta = (2 * n_radial).max(256);
    let integrand = |z: Complex64| {
        let (_, d1, d2) = f.at(z);
        if d1.norm_sqr() < 1e-280 {
            return f64::INFINITY;
        }
        (d2 / d1).norm_sqr()
    };
    let fine = polar_quad(n_radial, n_theta, integrand);
    let coarse = polar_quad(n_radial / 2, n_theta / 2, integrand);
    if !fine.is_finite() || !coarse.is_finite() {
        return Err(Error::QuadratureFailure("nonfinite integrand in wp_energy".into()));
    }
    let err = (fine - coarse).abs();
    let rel = err / fine.abs().max(1e-9);
    if rel > 0.05 {
        return Err(Error::NonconvergentTail { rel });
    }
    Ok((fine, err))
}

/// Normalization-invariant part of the renormalized energy:
/// `w0 = wp_energy + 4 pi ln |f'(0)|`.
pub fn w0(f: &ConformalMap, n_quad: usize) -> Result<(f64, f64)> {
    let (wp, err) = wp_energy(f, n_quad)?;
    let d0 = f.d1(Complex64::ZERO).norm();
    if d0 < 1e-300 {
        return Err(Error::QuadratureFailure("f'(0) = 0 in w0".into()));
    }
    Ok((wp + 4.0 * PI * d0.ln(), err))
}

/// Radius of the circle traced by `boundary_trace` and used as the
/// boundary sample circle throughout.
pub const BOUNDARY_SAMPLE_RADIUS: f64 = 0.999;

/// Image polyline of the sample circle under `f`, with a self-intersection
/// scan at the sample resolution. Returns the sample points.
pub fn boundary_polyline(f: &ConformalMap, n: usize) -> Result<Vec<Complex64>> {
    let pts: Vec<Complex64> = (0..n)
        .map(|j| {
            let z = Complex64::from_polar(BOUNDARY_SAMPLE_RADIUS, 2.0 * PI * j as f64 / n as f64);
            f.eval(z)
        })
        .collect();
    check_simple(&pts)?;
    Ok(pts)
}

/// Segment-crossing scan over a closed polyline; parameters are reported
/// in [0,1) units of the sample index.
pub fn check_simple(pts: &[Complex64]) -> Result<()> {
    let n = pts.len();
    for i in 0..n {
        let a1 = pts[i];
        let a2 = pts[(i + 1) % n];
        for j in (i + 2)..n {
            // Skip the shared-endpoint pair (i, i+1) vs (n-1, 0).
            if i == 0 && j == n - 1 {
                continue;
            }
            let b1 = pts[j];
            let b2 = pts[(j + 1) % n];
            if segments_cross(a1, a2, b1, b2) {
                return Err(Error::SelfIntersection {
                    t1: i as f64 / n as f64,
                    t2: j as f64 / n as f64,
                });
            }
        }
    }
    Ok(())
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn segments_cross(a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64) -> bool {
    let d1 = orient(a1, a2, b1);
    let d2 = orient(a1, a2, b2);
    let d3 = orient(b1, b2, a1);
    let d4 = orient(b1, b2, a2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Distortion report: worst multiplicative violation of
/// `dist(f(z), boundary) / (1 - |z|^2) <= |f'(z)| <= 4 dist / (1 - |z|^2)`
/// over a polar sample grid. Ratios <= 1 mean the bound holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KoebeReport {
    pub worst_lower: f64,
    pub worst_upper: f64,
    pub holds: bool,
}

pub fn koebe_check(f: &ConformalMap, n_boundary: usize, n_grid: usize) -> Result<KoebeReport> {
    let boundary = boundary_polyline(f, n_boundary)?;
    let mut worst_lower: f64 = 0.0;
    let mut worst_upper: f64 = 0.0;
    let radii = n_grid.max(6);
    for i in 0..radii {
        let r = 0.9 * (i as f64 + 0.5) / radii as f64;
        for j in 0..(4 * radii) {
            let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / (4 * radii) as f64);
            let (w, d1, _) = f.at(z);
            let dist = dist_to_polyline(w, &boundary);
            let denom = 1.0 - z.norm_sqr();
            let lhs = dist / denom;
            let fp = d1.norm();
            // lower: lhs <= fp, upper: fp <= 4 lhs.
            worst_lower = worst_lower.max(lhs / fp.max(1e-300));
            worst_upper = worst_upper.max(fp / (4.0 * lhs).max(1e-300));
        }
    }
    let holds = worst_lower <= 1.0 + 1e-2 && worst_upper <= 1.0 + 1e-2;
    Ok(KoebeReport { worst_lower, worst_upper, holds })
}

/// Distance from a point to a closed polyline.
pub fn dist_to_polyline(p: Complex64, pts: &[Complex64]) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        best = best.min(dist_point_segment(p, a, b));
    }
    best
}

pub fn dist_point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mobius_sends_omega_to_zero_and_zero_case_is_negation() {
        let m = MobiusMap::new(c(0.3, -0.2), 0.7).unwrap();
        assert!(m.apply(c(0.3, -0.2)).norm() < 1e-15);
        let id = MobiusMap::new(Complex64::ZERO, 0.0).unwrap();
        assert_abs_diff_eq!(id.apply(c(0.4, 0.1)).re, -0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(id.apply(c(0.4, 0.1)).im, -0.1, epsilon = 1e-15);
    }

    #[test]
    fn mobius_inverse_and_compose_round_trip() {
        let m = MobiusMap::new(c(0.5, 0.2), -1.1).unwrap();
        let inv = m.inverse();
        for k in 0..8 {
            let z = Complex64::from_polar(0.8, 0.77 * k as f64);
            let w = m.apply(z);
            assert!((inv.apply(w) - z).norm() < 1e-13);
            assert!(w.norm() < 1.0);
        }
        let n = MobiusMap::new(c(-0.1, 0.6), 0.4).unwrap();
        let comp = m.compose(&n);
        for k in 0..8 {
            let z = Complex64::from_polar(0.9, 1.3 * k as f64);
            assert!((comp.apply(z) - m.apply(n.apply(z))).norm() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = taylor_map(vec![c(0.1, 0.0), c(1.0, 0.0), c(0.2, 0.1), c(0.0, -0.05)]);
        let g = f.rebase(c(0.3, 0.1)).unwrap();
        let h = 1e-5;
        for k in 0..6 {
            let z = Complex64::from_polar(0.5, k as f64);
            let (_, d1, d2) = g.at(z);
            let fd1 = (g.eval(z + h) - g.eval(z - h)) / (2.0 * h);
            let fd2 = (g.eval(z + h) - 2.0 * g.eval(z) + g.eval(z - h)) / (h * h);
            assert!((d1 - fd1).norm() < 1e-8);
            assert!((d2 - fd2).norm() < 1e-5);
        }
    }

    #[test]
    fn rebase_normalization_identities() {
        let f0 = taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.2, 0.0)]);
        let om = c(0.25, -0.4);
        let f = f0.rebase(om).unwrap();
        assert!((f.eval(Complex64::ZERO) - f0.eval(om)).norm() < 1e-14);
        let expected = f0.d1(om).norm() * (1.0 - om.norm_sqr());
        assert_abs_diff_eq!(f.d1(Complex64::ZERO).norm(), expected, epsilon = 1e-13);
    }

    #[test]
    fn wp_energy_closed_forms() {
        // wp(z + c z^2) = -pi ln(1 - 4|c|^2); wp(mobius) = -4 pi ln(1 - |omega|^2).
        let quad = taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.2, 0.0)]);
        let (v, err) = wp_energy(&quad, 128).unwrap();
        assert_abs_diff_eq!(v, -PI * (1.0 - 0.16f64).ln(), epsilon = 1e-6);
        assert!(err < 1e-6);

        let m = mobius(c(0.5, 0.0), 0.0).unwrap();
        let (v, _) = wp_energy(&m, 128).unwrap();
        assert_abs_diff_eq!(v, -4.0 * PI * (1.0 - 0.25f64).ln(), epsilon = 1e-6);

        let id = identity_map();
        let (v, _) = wp_energy(&id, 64).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wp_energy_rejects_vanishing_derivative() {
        // f' = 1 + 1.2 z vanishes inside the disk; the integral diverges.
        let bad = taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.6, 0.0)]);
        match wp_energy(&bad, 128) {
            Err(Error::NonconvergentTail { .. }) | Err(Error::QuadratureFailure(_)) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn w0_vanishes_for_mobius_maps() {
        for (om, th) in [(c(0.3, 0.1), 0.0), (c(-0.5, 0.4), 1.2), (c(0.0, 0.7), -0.3)] {
            let m = mobius(om, th).unwrap();
            let (v, _) = w0(&m, 128).unwrap();
            assert!(v.abs() < 1e-8, "w0(mobius) = {v}");
        }
    }

    #[test]
    fn boundary_trace_detects_limacon_loop() {
        let bad = taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.6, 0.0)]);
        match boundary_polyline(&bad, 512) {
            Err(Error::SelfIntersection { .. }) => {}
            other => panic!("expected self-intersection, got {:?}", other.map(|v| v.len())),
        }
        let good = taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.2, 0.0)]);
        assert_eq!(boundary_polyline(&good, 512).unwrap().len(), 512);
    }

    #[test]
    fn koebe_bounds_hold_on_catalog_maps() {
        for f in [
            identity_map(),
            taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.2, 0.0)]),
            mobius(c(0.5, 0.0), 0.3).unwrap(),
        ] {
            let rep = koebe_check(&f, 1024, 10).unwrap();
            assert!(rep.holds, "koebe violated: {rep:?}");
        }
    }

    #[test]
    fn invert_round_trips() {
        let f = taylor_map(vec![c(0.05, 0.0), Complex64::ONE, c(0.2, 0.0), c(0.0, 0.1)]);
        for k in 0..24 {
            let z = Complex64::from_polar(0.08 * (k % 12) as f64, 0.9 * k as f64);
            let w = f.eval(z);
            let back = f.invert(w, z + c(0.05, -0.03)).unwrap();
            assert!((back - z).norm() < 1e-11);
        }
    }
}
