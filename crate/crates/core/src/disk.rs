//! Spectral solvers on the unit disk: Poisson extension, Dirichlet and
//! Neumann Green functions, the singular Neumann problem for the vortex
//! potential, and the boundary Poisson-kernel limit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::curves::{degree_of_samples, BoundaryData};
use crate::error::{Error, Result};

/// Fourier coefficients of circle data, modes -n_max..=n_max.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierBoundary {
    pub n_max: usize,
    coeffs: Vec<Complex64>,
}

impl FourierBoundary {
    pub fn from_coeffs(n_max: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), 2 * n_max + 1);
        FourierBoundary { n_max, coeffs }
    }

    /// DFT of g sampled on a uniform grid; exact for band-limited data when
    /// the grid has more than 2 n_max points.
    pub fn from_fn(g: impl Fn(f64) -> Complex64, n_max: usize, n_grid: usize) -> Self {
        let m = n_grid.max(2 * n_max + 2);
        let samples: Vec<Complex64> = (0..m).map(|j| g(2.0 * PI * j as f64 / m as f64)).collect();
        Self::from_samples(&samples, n_max)
    }

    pub fn from_samples(samples: &[Complex64], n_max: usize) -> Self {
        let m = samples.len();
        let coeffs = (-(n_max as i64)..=n_max as i64)
            .map(|n| {
                let w = Complex64::from_polar(1.0, -2.0 * PI * n as f64 / m as f64);
                let mut p = Complex64::ONE;
                let mut acc = Complex64::ZERO;
                for &s in samples {
                    acc += s * p;
                    p *= w;
                }
                acc / m as f64
            })
            .collect();
        FourierBoundary { n_max, coeffs }
    }

    /// Boundary data evaluated at parameter t in [0,1); theta = 2 pi t.
    pub fn from_data(data: &BoundaryData, n_max: usize) -> Self {
        Self::from_fn(|theta| data.value(theta / (2.0 * PI)), n_max, (8 * n_max).max(1024))
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            Complex64::ZERO
        } else {
            self.coeffs[(n + self.n_max as i64) as usize]
        }
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, theta);
        let mut p = Complex64::from_polar(1.0, -theta * self.n_max as f64);
        let mut acc = Complex64::ZERO;
        for &c in &self.coeffs {
            acc += c * p;
            p *= e;
        }
        acc
    }

    pub fn derivative_theta(&self, theta: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, theta);
        let mut p = Complex64::from_polar(1.0, -theta * self.n_max as f64);
        let mut acc = Complex64::ZERO;
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let n = idx as f64 - self.n_max as f64;
            acc += c * p * Complex64::new(0.0, n);
            p *= e;
        }
        acc
    }

    /// Max | |g| - 1 | on a reconstruction grid.
    pub fn unit_residual(&self, n_grid: usize) -> f64 {
        (0..n_grid)
            .map(|j| (self.eval(2.0 * PI * j as f64 / n_grid as f64).norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// External form: [(n, re, im)] for the nonzero modes.
    pub fn record(&self) -> Vec<(i64, f64, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-14)
            .map(|(idx, c)| (idx as i64 - self.n_max as i64, c.re, c.im))
            .collect()
    }
}

/// Harmonic function on the disk: sum c_n r^|n| e^{i n theta}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarmonicSeries {
    pub n_max: usize,
    coeffs: Vec<Complex64>,
}

impl HarmonicSeries {
    /// `coeffs[k]` is the coefficient of index k - n_max, so the slice has
    /// length 2 n_max + 1.
    pub fn from_coeffs(n_max: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), 2 * n_max + 1);
        HarmonicSeries { n_max, coeffs }
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            Complex64::ZERO
        } else {
            self.coeffs[(n + self.n_max as i64) as usize]
        }
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, theta);
        let mut acc = self.coeff(0);
        let mut zp = Complex64::ONE; // (r e^{i theta})^n
        let mut zm = Complex64::ONE; // (r e^{-i theta})^n
        for n in 1..=self.n_max as i64 {
            zp *= r * e;
            zm *= r * e.conj();
            acc += self.coeff(n) * zp + self.coeff(-n) * zm;
        }
        acc
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_polar(z.norm(), z.arg())
    }

    /// d/dr on the unit circle: sum |n| c_n e^{i n theta}.
    pub fn radial_derivative_boundary(&self, theta: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, theta);
        let mut acc = Complex64::ZERO;
        let mut ep = Complex64::ONE;
        for n in 1..=self.n_max as i64 {
            ep *= e;
            acc += (self.coeff(n) * ep + self.coeff(-n) * ep.conj()) * n as f64;
        }
        acc
    }
}

/// Harmonic extension: e^{i n theta} extends to r^|n| e^{i n theta}.
pub fn poisson_extend(g: &FourierBoundary) -> HarmonicSeries {
    HarmonicSeries { n_max: g.n_max, coeffs: g.coeffs.clone() }
}

/// Min modulus of the harmonic extension over each circle of `radii`.
pub fn properness_profile(g: &FourierBoundary, radii: &[f64], n_theta: usize) -> Vec<f64> {
    let v = poisson_extend(g);
    radii
        .iter()
        .map(|&r| {
            (0..n_theta)
                .map(|j| v.eval_polar(r, 2.0 * PI * j as f64 / n_theta as f64).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Potential with a point singularity at the origin:
/// log_coeff ln r + real harmonic part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialField {
    pub log_coeff: f64,
    pub harmonic: HarmonicSeries,
}

impl PotentialField {
    pub fn eval_polar(&self, r: f64, theta: f64) -> f64 {
        self.log_coeff * r.ln() + self.harmonic.eval_polar(r, theta).re
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        self.eval_polar(z.norm(), z.arg())
    }

    /// d/dr on the unit circle.
    pub fn radial_derivative_boundary(&self, theta: f64) -> f64 {
        self.log_coeff + self.harmonic.radial_derivative_boundary(theta).re
    }
}

/// Dirichlet Green function of the disk with pole a:
/// G(z) = ln|z-a| - ln|1 - conj(a) z|, so Laplace G = 2 pi delta_a, G = 0 on S1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DirichletGreen {
    pub a: Complex64,
}

pub fn dirichlet_green_disk(a: Complex64) -> Result<DirichletGreen> {
    if a.norm() >= 1.0 {
        return Err(Error::OutsideDisk(a.re, a.im));
    }
    Ok(DirichletGreen { a })
}

impl DirichletGreen {
    pub fn eval(&self, z: Complex64) -> f64 {
        (z - self.a).norm().ln() - (1.0 - self.a.conj() * z).norm().ln()
    }

    /// Regular part h(z) = G(z) - ln|z-a|.
    pub fn regular_part(&self, z: Complex64) -> f64 {
        -(1.0 - self.a.conj() * z).norm().ln()
    }

    /// Green mass h(a) = -ln(1 - |a|^2).
    pub fn mass(&self) -> f64 {
        -(1.0 - self.a.norm_sqr()).ln()
    }

    /// Gradient of G as gx + i gy.
    pub fn gradient(&self, z: Complex64) -> Complex64 {
        let h = 1.0 / (z - self.a) + self.a.conj() / (1.0 - self.a.conj() * z);
        Complex64::new(h.re, -h.im)
    }
}

/// Neumann-type Green function of the disk with pole x:
/// G_x(y) = ln|y-x| + ln|1 - conj(x) y|.
///
/// The 2 pi flux of the pole is balanced through the boundary, so the radial
/// derivative is the constant 1 on S1 (not 0; a zero-flux condition is
/// incompatible with a single pole), and the boundary mean is 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NeumannGreen {
    pub x: Complex64,
}

pub fn neumann_green_disk(x: Complex64) -> Result<NeumannGreen> {
    if x.norm() >= 1.0 {
        return Err(Error::OutsideDisk(x.re, x.im));
    }
    Ok(NeumannGreen { x })
}

impl NeumannGreen {
    pub fn eval(&self, y: Complex64) -> f64 {
        (y - self.x).norm().ln() + (1.0 - self.x.conj() * y).norm().ln()
    }

    /// d/dr at y on S1; identically 1 in exact arithmetic.
    pub fn radial_derivative_boundary(&self, theta: f64) -> f64 {
        let y = Complex64::from_polar(1.0, theta);
        (y / (y - self.x)).re - (self.x.conj() * y / (1.0 - self.x.conj() * y)).re
    }

    pub fn gradient(&self, y: Complex64) -> Complex64 {
        let h = 1.0 / (y - self.x) - self.x.conj() / (1.0 - self.x.conj() * y);
        Complex64::new(h.re, -h.im)
    }
}

/// Singular Neumann problem for the vortex potential on the disk.
///
/// Given circle data g, forms q(theta) = <d(g)/d(theta), i g> spectrally and
/// returns Phi = d ln r + H where d = deg(g) and the harmonic part H has
/// radial boundary derivative q - d mode by mode and zero boundary mean.
pub fn solve_phi_tilde(gf: &FourierBoundary) -> Result<PotentialField> {
    let n_max = gf.n_max.max(16);
    // q is a product of two band-n_max series, so band 2 n_max; sample
    // beyond Nyquist for that band.
    let m = (8 * n_max).max(256);
    let mut g_samples = Vec::with_capacity(m);
    let mut q_samples = Vec::with_capacity(m);
    for j in 0..m {
        let theta = 2.0 * PI * j as f64 / m as f64;
        let g = gf.eval(theta);
        let gt = gf.derivative_theta(theta);
        g_samples.push(g);
        // <g_theta, i g> = Im(conj(g) g_theta).
        q_samples.push(Complex64::new((g.conj() * gt).im, 0.0));
    }
    let deg = degree_of_samples(&g_samples.iter().map(|g| g / g.norm()).collect::<Vec<_>>())?;
    let keep = 2 * n_max;
    let qf = FourierBoundary::from_samples(&q_samples, keep);
    let mean = qf.coeff(0).re;
    if (mean - deg as f64).abs() > 1e-4 {
        return Err(Error::CompatibilityFailure { mean, degree: deg });
    }
    let coeffs: Vec<Complex64> = (-(keep as i64)..=keep as i64)
        .map(|n| if n == 0 { Complex64::ZERO } else { qf.coeff(n) / n.abs() as f64 })
        .collect();
    Ok(PotentialField {
        log_coeff: deg as f64,
        harmonic: HarmonicSeries { n_max: keep, coeffs },
    })
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * (b - a) / 6.0
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    if m <= a || m >= b {
        // Interval no longer resolvable in f64; the estimate is as good as
        // it gets.
        return Ok(whole);
    }
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure(format!(
            "adaptive Simpson recursion exhausted on [{a:.6}, {b:.6}]"
        )));
    }
    let tol_next = (0.5 * tol).max(1e-15 * (left.abs() + right.abs()));
    let l = adaptive_simpson(f, a, m, left, tol_next, depth - 1)?;
    let r = adaptive_simpson(f, m, b, right, tol_next, depth - 1)?;
    Ok(l + r)
}

/// Boundary-limit study of the truncated Poisson kernel integral
/// I(r) = (1-r) int_{M(1-r)}^{2 pi - M(1-r)} dtheta / (1 + r^2 - 2 r cos theta).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonKernelReport {
    pub m: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated_limit: f64,
    /// The two candidate closed forms for the limit and their residuals.
    /// 2 arctan(1/M) is what the full-integral identity at small M supports;
    /// both are reported, neither is asserted here.
    pub candidate_2atan: f64,
    pub candidate_8atan: f64,
    pub residual_2atan: f64,
    pub residual_8atan: f64,
}

pub fn poisson_kernel_limit(m: f64, r_list: &[f64]) -> Result<PoissonKernelReport> {
    if m <= 0.0 {
        return Err(Error::Config(format!("M = {m} must be positive")));
    }
    if r_list.len() < 2 {
        return Err(Error::Config("need at least two radii to extrapolate".into()));
    }
    let mut radii = r_list.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut values = Vec::with_capacity(radii.len());
    for &r in &radii {
        if !(0.9 < r && r < 1.0) {
            return Err(Error::Config(format!("radius {r} outside (0.9, 1)")));
        }
        let cut = m * (1.0 - r);
        if cut >= PI {
            return Err(Error::Config(format!("M(1-r) = {cut} reaches pi; shrink M or raise r")));
        }
        // 1 + r^2 - 2 r cos theta written cancellation-free; the naive form
        // loses 9 digits near the peak and stalls the adaptive refinement.
        let omr = 1.0 - r;
        let f = move |theta: f64| {
            let s = (0.5 * theta).sin();
            1.0 / (omr * omr + 4.0 * r * s * s)
        };
        // The integrand is symmetric about pi.
        let whole = simpson(&f, cut, PI);
        // Error budget 1e-10 on the reported (1-r)-scaled value.
        let tol = 1e-10 / omr;
        let integral = 2.0 * adaptive_simpson(&f, cut, PI, whole, tol, 48)?;
        values.push((1.0 - r) * integral);
    }
    // Neville extrapolation to x = 1-r -> 0.
    let xs: Vec<f64> = radii.iter().map(|r| 1.0 - r).collect();
    let mut table = values.clone();
    let k = table.len();
    for level in 1..k {
        for i in 0..(k - level) {
            table[i] = (xs[i + level] * table[i] - xs[i] * table[i + 1]) / (xs[i + level] - xs[i]);
        }
    }
    let limit = table[0];
    let c2 = 2.0 * (1.0 / m).atan();
    let c8 = 8.0 * (1.0 / m).atan();
    Ok(PoissonKernelReport {
        m,
        radii,
        values,
        extrapolated_limit: limit,
        candidate_2atan: c2,
        candidate_8atan: c8,
        residual_2atan: (limit - c2).abs(),
        residual_8atan: (limit - c8).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_disk_point(rng: &mut ChaCha8Rng, max_r: f64) -> Complex64 {
        let r = max_r * rng.random::<f64>().sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        Complex64::from_polar(r, th)
    }

    #[test]
    fn poisson_extension_is_diagonal_and_matches_kernel_quadrature() {
        let g = FourierBoundary::from_fn(|th| Complex64::from_polar(1.0, th), 32, 512);
        let v = poisson_extend(&g);
        for k in 0..8 {
            let z = Complex64::from_polar(0.1 * k as f64, 0.7 * k as f64);
            assert!((v.eval(z) - z).norm() < 1e-12);
        }

        let konst = FourierBoundary::from_fn(|_| c(0.3, -0.4), 32, 512);
        assert!((poisson_extend(&konst).eval(c(0.2, 0.5)) - c(0.3, -0.4)).norm() < 1e-12);

        // Mixed-mode data against direct Poisson-kernel quadrature at z = 0.5.
        let data = |th: f64| {
            Complex64::from_polar(1.0, 2.0 * th) + 0.1 * Complex64::from_polar(1.0, -th)
        };
        let g = FourierBoundary::from_fn(data, 32, 512);
        let z = c(0.5, 0.0);
        let (r, phi) = (0.5, 0.0);
        let n = 8192;
        let mut direct = Complex64::ZERO;
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            let kernel = (1.0 - r * r) / (1.0 + r * r - 2.0 * r * (phi - th).cos());
            direct += data(th) * kernel / n as f64;
        }
        assert!((poisson_extend(&g).eval(z) - direct).norm() < 1e-8);
    }

    #[test]
    fn dirichlet_green_closed_form() {
        let g0 = dirichlet_green_disk(Complex64::ZERO).unwrap();
        assert_abs_diff_eq!(g0.eval(c(0.3, 0.4)), 0.5f64.ln(), epsilon = 1e-14);

        let g = dirichlet_green_disk(c(0.3, 0.0)).unwrap();
        assert_abs_diff_eq!(g.regular_part(g.a), -(1.0 - 0.09f64).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(g.mass(), -(0.91f64).ln(), epsilon = 1e-14);
        for j in 0..64 {
            let y = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 64.0);
            assert!(g.eval(y).abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_disk_point(&mut rng, 0.9);
            let z = random_disk_point(&mut rng, 0.9);
            if (a - z).norm() < 1e-3 {
                continue;
            }
            let gaz = dirichlet_green_disk(a).unwrap().eval(z);
            let gza = dirichlet_green_disk(z).unwrap().eval(a);
            assert_abs_diff_eq!(gaz, gza, epsilon = 1e-10);
        }
    }

    #[test]
    fn neumann_green_flux_mean_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..8 {
            let x = if k == 0 { Complex64::ZERO } else { random_disk_point(&mut rng, 0.85) };
            let g = neumann_green_disk(x).unwrap();
            let n = 4096;
            let mut mean = 0.0;
            for j in 0..n {
                let th = 2.0 * PI * j as f64 / n as f64;
                // Closed-form radial derivative is the constant 1.
                assert_abs_diff_eq!(g.radial_derivative_boundary(th), 1.0, epsilon = 1e-10);
                // Finite-difference oracle for the same quantity.
                let y = Complex64::from_polar(1.0, th);
                let h = 1e-6;
                let fd = (g.eval(y * (1.0 + h)) - g.eval(y * (1.0 - h))) / (2.0 * h);
                assert_abs_diff_eq!(fd, 1.0, epsilon = 1e-7);
                mean += g.eval(y) / n as f64;
            }
            assert!(mean.abs() < 1e-8, "boundary mean {mean}");
        }
        for _ in 0..20 {
            let x = random_disk_point(&mut rng, 0.9);
            let y = random_disk_point(&mut rng, 0.9);
            if (x - y).norm() < 1e-3 {
                continue;
            }
            let gxy = neumann_green_disk(x).unwrap().eval(y);
            let gyx = neumann_green_disk(y).unwrap().eval(x);
            assert_abs_diff_eq!(gxy, gyx, epsilon = 1e-10);
        }
    }

    #[test]
    fn phi_tilde_for_tangential_and_twisted_data() {
        for phase in [0.0, PI / 2.0] {
            let gf = FourierBoundary::from_fn(
                |th| Complex64::from_polar(1.0, th + phase),
                32,
                512,
            );
            let phi = solve_phi_tilde(&gf).unwrap();
            assert_abs_diff_eq!(phi.log_coeff, 1.0, epsilon = 1e-12);
            for n in 1..=phi.harmonic.n_max as i64 {
                assert!(phi.harmonic.coeff(n).norm() < 1e-10);
                assert!(phi.harmonic.coeff(-n).norm() < 1e-10);
            }
        }

        // g = e^{i(theta + 0.3 sin theta)}: q = 1 + 0.3 cos theta, so the
        // harmonic part is 0.3 r cos theta.
        let gf = FourierBoundary::from_fn(
            |th| Complex64::from_polar(1.0, th + 0.3 * th.sin()),
            64,
            1024,
        );
        let phi = solve_phi_tilde(&gf).unwrap();
        assert_abs_diff_eq!(phi.log_coeff, 1.0, epsilon = 1e-10);
        assert!((phi.harmonic.coeff(1) - c(0.15, 0.0)).norm() < 1e-8);
        assert!((phi.harmonic.coeff(-1) - c(0.15, 0.0)).norm() < 1e-8);
        for n in 2..=phi.harmonic.n_max as i64 {
            assert!(phi.harmonic.coeff(n).norm() < 1e-8, "mode {n} leaked");
        }
        let z = c(0.4, 0.3);
        let expected = z.norm().ln() + 0.3 * z.re;
        assert_abs_diff_eq!(phi.eval(z), expected, epsilon = 1e-8);
        // Neumann condition mode by mode: d/dr (0.3 r cos theta) = 0.3 cos theta.
        for j in 0..32 {
            let th = 2.0 * PI * j as f64 / 32.0;
            assert_abs_diff_eq!(
                phi.radial_derivative_boundary(th),
                1.0 + 0.3 * th.cos(),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn phi_tilde_rejects_incompatible_flux() {
        // Non-unit data: mean of q is |g|^2 deg = 1.21, but the winding is 1.
        let gf = FourierBoundary::from_fn(
            |th| 1.1 * Complex64::from_polar(1.0, th),
            16,
            256,
        );
        match solve_phi_tilde(&gf) {
            Err(Error::CompatibilityFailure { mean, degree }) => {
                assert_eq!(degree, 1);
                assert!((mean - 1.21).abs() < 1e-10);
            }
            other => panic!("expected CompatibilityFailure, got {other:?}"),
        }
    }

    #[test]
    fn poisson_kernel_limit_matches_quadrature_oracle() {
        // Closed-form oracle: I(r) = 2(1-r)/(1-r^2) [pi - 2 arctan(((1+r)/(1-r)) tan(M(1-r)/2))].
        let exact = |m: f64, r: f64| {
            let a = m * (1.0 - r) / 2.0;
            2.0 * (1.0 - r) / (1.0 - r * r)
                * (PI - 2.0 * (((1.0 + r) / (1.0 - r)) * a.tan()).atan())
        };
        let report = poisson_kernel_limit(1.0, &[0.999, 0.9995, 0.9999]).unwrap();
        for (r, v) in report.radii.iter().zip(report.values.iter()) {
            assert_abs_diff_eq!(*v, exact(1.0, *r), epsilon = 1e-9);
        }
        assert!((report.extrapolated_limit - report.candidate_2atan).abs() < 1e-6);
        assert!(report.residual_8atan > 1.0);

        // M -> 0 proxy: the cut vanishes and the full integral gives
        // (1-r) 2 pi/(1-r^2) -> pi.
        let tiny = poisson_kernel_limit(1e-3, &[0.995, 0.999]).unwrap();
        assert!((tiny.extrapolated_limit - PI).abs() < 0.01);

        // Monotone decreasing in M.
        let radii = [0.995, 0.999];
        let l05 = poisson_kernel_limit(0.5, &radii).unwrap().extrapolated_limit;
        let l1 = poisson_kernel_limit(1.0, &radii).unwrap().extrapolated_limit;
        let l2 = poisson_kernel_limit(2.0, &radii).unwrap().extrapolated_limit;
        assert!(l05 > l1 && l1 > l2);
    }

    #[test]
    fn properness_of_catalog_extensions() {
        let ident = FourierBoundary::from_fn(|th| Complex64::from_polar(1.0, th), 16, 256);
        let prof = properness_profile(&ident, &[0.3, 0.7, 0.95], 512);
        for (r, p) in [0.3, 0.7, 0.95].iter().zip(prof.iter()) {
            assert_abs_diff_eq!(*p, *r, epsilon = 1e-10);
        }
        let twisted = FourierBoundary::from_fn(
            |th| Complex64::from_polar(1.0, th + 0.3 * th.sin()),
            64,
            1024,
        );
        let prof = properness_profile(&twisted, &[0.99, 0.999], 1024);
        assert!(prof.iter().all(|&p| p >= 0.9), "profile {prof:?}");
    }
}
