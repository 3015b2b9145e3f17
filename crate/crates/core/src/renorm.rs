//! Canonical harmonic maps with a prescribed degree-1 singularity,
//! renormalized energy by two independent routes (truncated Dirichlet
//! integral and uniformization formula), Green-mass comparison, the
//! optimal-vortex maximization, and the mu decomposition of the Cartan
//! potential.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::conformal::{wp_energy, ConformalMap, MobiusMap};
use crate::disk::{solve_phi_tilde, FourierBoundary, PotentialField};
use crate::error::{Error, Result};
use crate::fem::green_dirichlet_fem;
use crate::mesh::TriMesh;

const DATA_MODES: usize = 128;
const DATA_GRID: usize = 1024;

/// A degree-1 singular-map problem: domain f(D), boundary data pulled back
/// to the unit circle, singularity a = f(0). `f` is the uniformization
/// rebased so the singularity sits at the disk center.
#[derive(Debug, Clone)]
pub struct CanonicalMapSpec {
    pub f: ConformalMap,
    pub a: Complex64,
    pub omega: Complex64,
    pub gf: FourierBoundary,
}

impl CanonicalMapSpec {
    /// Unit-tangent boundary data on the boundary of f0(D), singularity at
    /// f0(omega). The tangent at f(e^{i t}) is i e^{i t} f'(e^{i t})
    /// normalized, independent of the boundary parameterization.
    pub fn tangential(f0: &ConformalMap, omega: Complex64) -> Result<Self> {
        let f = f0.rebase(omega)?;
        let a = f.eval(Complex64::ZERO);
        let gf = FourierBoundary::from_fn(
            |theta| {
                let zeta = Complex64::from_polar(1.0, theta);
                let t = Complex64::i() * zeta * f.d1(zeta);
                t / t.norm()
            },
            DATA_MODES,
            DATA_GRID,
        );
        Ok(CanonicalMapSpec { f, a, omega, gf })
    }

    /// Arbitrary S^1 data given as a function of the boundary point of the
    /// original map f0 (before rebasing); the Mobius boundary
    /// reparameterization is applied internally.
    pub fn with_data(
        f0: &ConformalMap,
        omega: Complex64,
        g0: impl Fn(Complex64) -> Complex64,
    ) -> Result<Self> {
        let f = f0.rebase(omega)?;
        let a = f.eval(Complex64::ZERO);
        let psi_inv = MobiusMap::new(omega, 0.0)?.inverse();
        let gf = FourierBoundary::from_fn(
            |theta| {
                let zeta0 = psi_inv.apply(Complex64::from_polar(1.0, theta));
                let g = g0(zeta0 / zeta0.norm());
                g / g.norm()
            },
            DATA_MODES,
            DATA_GRID,
        );
        Ok(CanonicalMapSpec { f, a, omega, gf })
    }
}

/// The canonical harmonic map for a spec, represented on the disk side as
/// u~ = exp(i(d theta + Im F + c)) with F holomorphic, F(0) = 0.
#[derive(Debug, Clone)]
pub struct CanonicalMap {
    pub spec: CanonicalMapSpec,
    pub degree: i64,
    pub potential: PotentialField,
    /// F(z) = sum_{n>=1} f_series[n-1] z^n, twice the positive-frequency
    /// potential coefficients.
    pub f_series: Vec<Complex64>,
    pub phase_constant: f64,
    pub boundary_residual: f64,
}

/// Angular gain of the conjugate phase around one loop: the trapezoid
/// integral of r d_r Phi over a circle. For a consistent potential this is
/// 2 pi times the winding number.
pub fn phase_loop_gain(potential: &PotentialField, r: f64, m: usize) -> f64 {
    let n_max = potential.harmonic.n_max as i64;
    let mut sum = 0.0;
    for j in 0..m {
        let theta = 2.0 * PI * j as f64 / m as f64;
        let mut p = potential.log_coeff;
        for n in 1..=n_max {
            let rot = Complex64::from_polar(r.powi(n as i32), n as f64 * theta);
            p += 2.0 * n as f64 * (potential.harmonic.coeff(n) * rot).re;
        }
        sum += p;
    }
    sum * 2.0 * PI / m as f64
}

/// Verify the loop gain is an integer multiple of 2 pi.
pub fn check_phase_closure(potential: &PotentialField) -> Result<i64> {
    let got = phase_loop_gain(potential, 0.7, 2048);
    let winding = (got / (2.0 * PI)).round();
    let expected = winding * 2.0 * PI;
    if (got - expected).abs() > 1e-6 {
        return Err(Error::PhaseClosureFailure { got, expected });
    }
    Ok(winding as i64)
}

impl CanonicalMap {
    fn f_value(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for &c in self.f_series.iter().rev() {
            acc = (acc + c) * z;
        }
        acc
    }

    fn f_derivative(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (n, &c) in self.f_series.iter().enumerate().rev() {
            acc = acc * z + c * (n + 1) as f64;
        }
        acc
    }

    /// The map on the disk side; unit modulus away from the origin.
    pub fn eval_disk(&self, zeta: Complex64) -> Complex64 {
        if zeta.norm() == 0.0 {
            return Complex64::ZERO;
        }
        let phase = self.degree as f64 * zeta.arg() + self.f_value(zeta).im + self.phase_constant;
        Complex64::from_polar(1.0, phase)
    }

    /// The map on the domain side, via Newton inversion of f.
    pub fn eval(&self, x: Complex64) -> Result<Complex64> {
        Ok(self.eval_disk(invert_multi_seed(&self.spec.f, x)?))
    }

    /// d/z + F'(z): the derivative of the holomorphic completion of the
    /// potential, whose squared modulus is the Dirichlet integrand.
    pub fn gradient_density(&self, zeta: Complex64) -> Complex64 {
        self.degree as f64 / zeta + self.f_derivative(zeta)
    }
}

/// Invert an injective disk map at x by Newton iteration, trying a fixed
/// fan of seeds.
pub fn invert_multi_seed(f: &ConformalMap, x: Complex64) -> Result<Complex64> {
    const SEEDS: [(f64, f64); 9] = [
        (0.0, 0.0),
        (0.5, 0.0),
        (0.0, 0.5),
        (-0.5, 0.0),
        (0.0, -0.5),
        (0.6, 0.6),
        (-0.6, 0.6),
        (0.6, -0.6),
        (-0.6, -0.6),
    ];
    let mut last = Error::InverseFailure { failures: SEEDS.len(), total: SEEDS.len() };
    for &(sx, sy) in &SEEDS {
        match f.invert(x, Complex64::new(sx, sy)) {
            Ok(z) if z.norm() <= 1.0 + 1e-9 => return Ok(z),
            Ok(_) => {}
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Build the canonical harmonic map: solve the Neumann potential for the
/// pulled-back data, close the conjugate phase, and anchor the phase
/// constant at the theta = 0 boundary sample.
pub fn canonical_harmonic_map(spec: &CanonicalMapSpec) -> Result<CanonicalMap> {
    let potential = solve_phi_tilde(&spec.gf)?;
    let degree = check_phase_closure(&potential)?;
    let n_max = potential.harmonic.n_max as i64;
    let f_series: Vec<Complex64> =
        (1..=n_max).map(|n| 2.0 * potential.harmonic.coeff(n)).collect();
    let map_without_c = CanonicalMap {
        spec: spec.clone(),
        degree,
        potential,
        f_series,
        phase_constant: 0.0,
        boundary_residual: 0.0,
    };
    let g0 = spec.gf.eval(0.0);
    let phase_constant = g0.arg() - map_without_c.f_value(Complex64::ONE).im;
    let mut map = CanonicalMap { phase_constant, ..map_without_c };

    let m = 1024;
    let mut sq = 0.0;
    for j in 0..m {
        let theta = 2.0 * PI * j as f64 / m as f64;
        let diff =
            map.eval_disk(Complex64::from_polar(1.0, theta)) - spec.gf.eval(theta);
        sq += diff.norm_sqr();
    }
    map.boundary_residual = (sq / m as f64).sqrt();
    if map.boundary_residual > 1e-6 {
        return Err(Error::SolverFailure(format!(
            "canonical map boundary trace residual {:.3e}",
            map.boundary_residual
        )));
    }
    Ok(map)
}

/// Radius at which |f(r e^{i theta}) - a| = delta, by bisection. f(0) = a
/// and delta is small, so the crossing is unique on the bracket.
fn inner_radius(f: &ConformalMap, a: Complex64, theta: f64, delta: f64) -> Result<f64> {
    let dir = Complex64::from_polar(1.0, theta);
    let dist = |r: f64| (f.eval(dir * r) - a).norm();
    let mut hi = (delta / f.d1(Complex64::ZERO).norm()).min(0.5);
    let mut grow = 0;
    while dist(hi) < delta {
        hi *= 1.5;
        grow += 1;
        if hi > 1.0 || grow > 60 {
            return Err(Error::QuadratureFailure(format!(
                "no radius with |f - a| = {delta} along theta = {theta}"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..52 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
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

/// Truncated-integral route: per delta, integrate |d/z + F'|^2 over the
/// disk minus the preimage of the delta-disk around a, subtract
/// 2 pi ln(1/delta), then extrapolate the O(delta) remainder with a linear
/// fit on the last three values.
pub fn renormalized_energy_direct(
    map: &CanonicalMap,
    deltas: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    if map.degree != 1 {
        return Err(Error::Config(format!(
            "renormalized energy needs degree 1, got {}",
            map.degree
        )));
    }
    if deltas.is_empty() {
        return Err(Error::Config("empty delta list".into()));
    }
    for w in deltas.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config("delta list must decrease".into()));
        }
    }
    if deltas[deltas.len() - 1] < 1e-3 {
        return Err(Error::Config(format!(
            "smallest delta {} is below the spectral resolution 1e-3",
            deltas[deltas.len() - 1]
        )));
    }
    let m_theta = 512;
    let mut table = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let rows: Vec<Result<f64>> = (0..m_theta)
            .into_par_iter()
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / m_theta as f64;
                let r0 = inner_radius(&map.spec.f, map.spec.a, theta, delta)?;
                // Substitute t = ln r: |H'|^2 r dr = |z H'(z)|^2 dt, and
                // z H' = d + z F'(z) is analytic, so uniform panels in t
                // resolve the vortex tail exactly.
                let t0 = r0.ln();
                let n_panels = ((-t0) / 0.4).ceil().max(4.0) as usize;
                let dir = Complex64::from_polar(1.0, theta);
                let mut acc = 0.0;
                for p in 0..n_panels {
                    let a = t0 + (-t0) * p as f64 / n_panels as f64;
                    let b = t0 + (-t0) * (p + 1) as f64 / n_panels as f64;
                    let half = 0.5 * (b - a);
                    let mid = 0.5 * (a + b);
                    for (node, weight) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                        let z = dir * (mid + half * node).exp();
                        acc += weight * half * (z * map.gradient_density(z)).norm_sqr();
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut total = 0.0;
        for row in rows {
            total += row?;
        }
        total *= 2.0 * PI / m_theta as f64;
        table.push((delta, total - 2.0 * PI * (1.0 / delta).ln()));
    }
    if table.len() >= 2 {
        let spread = (table[table.len() - 1].1 - table[table.len() - 2].1).abs();
        if spread > 1e-2 {
            return Err(Error::NonconvergentLimit { spread });
        }
    }
    let fit = &table[table.len().saturating_sub(3)..];
    let w = if fit.len() == 1 {
        fit[0].1
    } else {
        // Least squares c0 + c1 delta; report c0.
        let n = fit.len() as f64;
        let sx: f64 = fit.iter().map(|p| p.0).sum();
        let sy: f64 = fit.iter().map(|p| p.1).sum();
        let sxx: f64 = fit.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = fit.iter().map(|p| p.0 * p.1).sum();
        (sy * sxx - sx * sxy) / (n * sxx - sx * sx)
    };
    Ok((w, table))
}

/// Formula route: W = wp(f) + 2 pi ln|f'(0)| for the rebased
/// uniformization (equivalently w0(f) - 2 pi ln|f'(0)|).
pub fn renormalized_energy_formula(spec: &CanonicalMapSpec, n_quad: usize) -> Result<f64> {
    let (wp, _) = wp_energy(&spec.f, n_quad)?;
    Ok(wp + 2.0 * PI * spec.f.d1(Complex64::ZERO).norm().ln())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimalVortex {
    pub omega: Complex64,
    pub point: Complex64,
    pub value: f64,
}

fn vortex_objective(f0: &ConformalMap, w: Complex64) -> f64 {
    let r2 = w.norm_sqr();
    if r2 > 0.9995 * 0.9995 {
        return f64::NEG_INFINITY;
    }
    (1.0 - r2) * f0.d1(w).norm()
}

/// Maximize (1 - |w|^2) |f0'(w)| over the disk: coarse polar grid search,
/// then Nelder-Mead refinement. The argmax is the energy-optimal vortex
/// preimage; its image under f0 is the optimal vortex location.
pub fn optimal_vortex(f0: &ConformalMap) -> Result<OptimalVortex> {
    let n = 101;
    let rows: Vec<(f64, usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = 0.99 * i as f64 / (n - 1) as f64;
            let mut best = (f64::NEG_INFINITY, i, 0);
            for j in 0..n {
                let phi = 2.0 * PI * j as f64 / n as f64;
                let v = vortex_objective(f0, Complex64::from_polar(r, phi));
                if v > best.0 {
                    best = (v, i, j);
                }
            }
            best
        })
        .collect();
    let mut best = rows[0];
    for row in rows {
        if row.0 > best.0 {
            best = row;
        }
    }
    let r = 0.99 * best.1 as f64 / (n - 1) as f64;
    let phi = 2.0 * PI * best.2 as f64 / n as f64;
    let seed = Complex64::from_polar(r, phi);
    let omega = nelder_mead_max(|w| vortex_objective(f0, w), seed, 0.02);
    if omega.norm() > 0.999 {
        return Err(Error::BoundaryArgmax { modulus: omega.norm() });
    }
    Ok(OptimalVortex {
        omega,
        point: f0.eval(omega),
        value: vortex_objective(f0, omega),
    })
}

/// Two-dimensional Nelder-Mead ascent; deterministic, no randomness.
fn nelder_mead_max(obj: impl Fn(Complex64) -> f64, seed: Complex64, scale: f64) -> Complex64 {
    let f = |p: [f64; 2]| -obj(Complex64::new(p[0], p[1]));
    let mut simplex = [
        [seed.re, seed.im],
        [seed.re + scale, seed.im],
        [seed.re, seed.im + scale],
    ];
    let mut vals = simplex.map(f);
    for _ in 0..500 {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let (b, m, w) = (order[0], order[1], order[2]);
        let diam = (0..2)
            .map(|k| {
                let lo = simplex.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max);
        if diam < 1e-10 {
            break;
        }
        let centroid = [
            0.5 * (simplex[b][0] + simplex[m][0]),
            0.5 * (simplex[b][1] + simplex[m][1]),
        ];
        let reflect = |t: f64| {
            [
                centroid[0] + t * (centroid[0] - simplex[w][0]),
                centroid[1] + t * (centroid[1] - simplex[w][1]),
            ]
        };
        let xr = reflect(1.0);
        let fr = f(xr);
        if fr < vals[b] {
            let xe = reflect(2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[w] = xe;
                vals[w] = fe;
            } else {
                simplex[w] = xr;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = xr;
            vals[w] = fr;
        } else {
            let xc = reflect(-0.5);
            let fc = f(xc);
            if fc < vals[w] {
                simplex[w] = xc;
                vals[w] = fc;
            } else {
                for k in [m, w] {
                    simplex[k] = [
                        0.5 * (simplex[k][0] + simplex[b][0]),
                        0.5 * (simplex[k][1] + simplex[b][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    Complex64::new(simplex[order[0]][0], simplex[order[0]][1])
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GreenMassReport {
    pub point: Complex64,
    pub spectral: f64,
    pub fem: f64,
    pub diff: f64,
}

/// Compare the Green mass -ln|f'(0)| (uniformization route) against the
/// finite-element Dirichlet-Green mass at a = f0(omega).
pub fn green_mass_consistency(
    f0: &ConformalMap,
    omega: Complex64,
    mesh: &TriMesh,
) -> Result<GreenMassReport> {
    let f = f0.rebase(omega)?;
    let a = f.eval(Complex64::ZERO);
    let spectral = -f.d1(Complex64::ZERO).norm().ln();
    let fem = green_dirichlet_fem(mesh, a)?.mass;
    Ok(GreenMassReport { point: a, spectral, fem, diff: (spectral - fem).abs() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuDecomposition {
    pub center: Complex64,
    pub radii: Vec<f64>,
    pub thetas: Vec<f64>,
    /// mu[i][j] at center + radii[i] e^{i thetas[j]}, normalized so the
    /// innermost-circle mean (= mu at the center, by the mean value
    /// property) is zero.
    pub mu: Vec<Vec<f64>>,
    /// Largest loop integral of eta over the grid circles; zero for an
    /// exact form, a multiple of 2 pi when a topological defect is missed.
    pub closedness_residual: f64,
    pub harmonicity_residual: f64,
}

/// Decompose the Cartan form of a unit-vector field u with singularity at
/// `center`: omega = <du, iu>, eta = *omega - dG should be exact with
/// harmonic potential mu. Samples on a polar annulus around the center,
/// path-integrates *omega to mu (spectral antiderivative along circles,
/// exact G differences), and reports closedness and harmonicity residuals.
///
/// `closedness_tol` gates NonClosedForm. Spectral evaluators support 1e-4;
/// fields interpolated from a mesh carry O(h^2/r^2) loop noise and need a
/// tolerance matched to the mesh scale.
#[allow(clippy::too_many_arguments)]
pub fn mu_decomposition(
    u: &(dyn Fn(Complex64) -> Complex64 + Sync),
    green: &(dyn Fn(Complex64) -> f64 + Sync),
    center: Complex64,
    r_min: f64,
    r_max: f64,
    n_r: usize,
    n_theta: usize,
    fd_step: f64,
    closedness_tol: f64,
) -> Result<MuDecomposition> {
    if !(0.0 < r_min && r_min < r_max) || n_r < 4 || n_theta < 16 {
        return Err(Error::Config("mu grid: need 0 < r_min < r_max, n_r >= 4, n_theta >= 16".into()));
    }
    let radii: Vec<f64> =
        (0..n_r).map(|i| r_min + (r_max - r_min) * i as f64 / (n_r - 1) as f64).collect();
    let thetas: Vec<f64> = (0..n_theta).map(|j| 2.0 * PI * j as f64 / n_theta as f64).collect();
    // Only the *omega part of eta = *omega - dG is finite-differenced; the
    // dG part integrates exactly to G differences along any path and
    // contributes nothing to closed loops, so it never touches a stencil
    // (FD of a log-singular Green function would swamp the loop residual).
    // Central differences of a direction field on a circle of radius r
    // carry a one-signed -h^2/(2 r^2) relative truncation bias (the chord
    // underestimates the arc), which the spine integral would accumulate
    // into a constant offset of mu. One Richardson step in the stencil
    // width cancels it.
    let star_omega_step = |x: Complex64, h: f64| -> (f64, f64) {
        let ux = (u(x + h) - u(x - h)) / (2.0 * h);
        let uy = (u(x + Complex64::new(0.0, h)) - u(x - Complex64::new(0.0, h))) / (2.0 * h);
        let u0 = u(x);
        let wx = (ux * u0.conj()).im;
        let wy = (uy * u0.conj()).im;
        // Hodge star on 1-forms: (wx, wy) -> (wy, -wx).
        (wy, -wx)
    };
    let star_omega_at = |x: Complex64| -> (f64, f64) {
        let full = star_omega_step(x, fd_step);
        let half = star_omega_step(x, 0.5 * fd_step);
        ((4.0 * half.0 - full.0) / 3.0, (4.0 * half.1 - full.1) / 3.0)
    };
    let star_omega: Vec<Vec<(f64, f64)>> = radii
        .par_iter()
        .map(|&r| {
            thetas
                .iter()
                .map(|&t| star_omega_at(center + Complex64::from_polar(r, t)))
                .collect()
        })
        .collect();
    for row in &star_omega {
        for &(ex, ey) in row {
            if !(ex.is_finite() && ey.is_finite()) {
                return Err(Error::QuadratureFailure("eta is not finite on the grid".into()));
            }
        }
    }

    // Tangential component scaled by r: the theta-line element.
    let ring: Vec<Vec<f64>> = (0..n_r)
        .map(|i| {
            (0..n_theta)
                .map(|j| {
                    let (ex, ey) = star_omega[i][j];
                    radii[i] * (-ex * thetas[j].sin() + ey * thetas[j].cos())
                })
                .collect()
        })
        .collect();

    // Spectral antiderivative of each ring: partial integrals of a periodic
    // sample are exact for band-limited data, unlike a partial trapezoid.
    let mut partials: Vec<Vec<f64>> = Vec::with_capacity(n_r);
    let mut closedness: f64 = 0.0;
    for row in &ring {
        let m = n_theta;
        let mut coeffs = vec![Complex64::ZERO; m / 2];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for (j, &v) in row.iter().enumerate() {
                acc += v * Complex64::from_polar(1.0, -(k as f64) * thetas[j]);
            }
            *ck = acc / m as f64;
        }
        closedness = closedness.max((coeffs[0].re * 2.0 * PI).abs());
        let mut p = Vec::with_capacity(m);
        for &t in &thetas {
            let mut v = coeffs[0].re * t;
            for (k, &ck) in coeffs.iter().enumerate().skip(1) {
                let e = Complex64::from_polar(1.0, k as f64 * t);
                v += 2.0 * (ck * (e - 1.0) / Complex64::new(0.0, k as f64)).re;
            }
            p.push(v);
        }
        partials.push(p);
    }

    // Radial spine at theta = 0, Gauss-Legendre per panel: the radial part
    // of *omega behaves like 1/r near a vortex, and a trapezoid rule leaves
    // O(dr^2) truncation that the harmonicity check would misread as noise.
    let mut spine = vec![0.0; n_r];
    for i in 1..n_r {
        let (a, b) = (radii[i - 1], radii[i]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (node, weight) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
            let r = mid + half * node;
            let (ex, _) = star_omega_at(center + Complex64::new(r, 0.0));
            acc += weight * half * ex;
        }
        spine[i] = spine[i - 1] + acc;
    }

    let g_base = green(center + Complex64::new(radii[0], 0.0));
    if !g_base.is_finite() {
        return Err(Error::QuadratureFailure("Green function not finite on the grid".into()));
    }
    let mut mu: Vec<Vec<f64>> = (0..n_r)
        .map(|i| {
            (0..n_theta)
                .map(|j| {
                    let x = center + Complex64::from_polar(radii[i], thetas[j]);
                    spine[i] + partials[i][j] - (green(x) - g_base)
                })
                .collect()
        })
        .collect();
    for row in &mu {
        for &v in row {
            if !v.is_finite() {
                return Err(Error::QuadratureFailure(
                    "Green function not finite on the grid".into(),
                ));
            }
        }
    }
    let inner_mean: f64 = mu[0].iter().sum::<f64>() / n_theta as f64;
    for row in mu.iter_mut() {
        for v in row.iter_mut() {
            *v -= inner_mean;
        }
    }

    // Harmonicity: polar five-point Laplacian scaled by dr^2.
    let dr = radii[1] - radii[0];
    let dth = 2.0 * PI / n_theta as f64;
    let mut harmonicity: f64 = 0.0;
    for i in 1..n_r - 1 {
        for j in 0..n_theta {
            let (jm, jp) = ((j + n_theta - 1) % n_theta, (j + 1) % n_theta);
            let lap = (mu[i + 1][j] - 2.0 * mu[i][j] + mu[i - 1][j]) / (dr * dr)
                + (mu[i + 1][j] - mu[i - 1][j]) / (2.0 * dr * radii[i])
                + (mu[i][jp] - 2.0 * mu[i][j] + mu[i][jm]) / (radii[i] * radii[i] * dth * dth);
            harmonicity = harmonicity.max((lap * dr * dr).abs());
        }
    }

    if closedness > closedness_tol {
        return Err(Error::NonClosedForm { residual: closedness });
    }
    Ok(MuDecomposition {
        center,
        radii,
        thetas,
        mu,
        closedness_residual: closedness,
        harmonicity_residual: harmonicity,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenormReport {
    pub vortex_omega: Complex64,
    pub vortex_point: Complex64,
    pub vortex_value: f64,
    pub w_direct: f64,
    pub delta_table: Vec<(f64, f64)>,
    pub w_formula: f64,
    pub w0: f64,
    pub route_discrepancy: f64,
    pub green_mass_spectral: f64,
    pub green_mass_fem: Option<f64>,
    pub green_mass_diff: Option<f64>,
}

/// Full renormalized-energy report for a domain f0(D) with tangential
/// data: optimal vortex, both W routes at the optimum, and the Green-mass
/// comparison (FEM column only when a mesh is supplied).
pub fn renorm_report(
    f0: &ConformalMap,
    mesh: Option<&TriMesh>,
    deltas: &[f64],
) -> Result<RenormReport> {
    let vortex = optimal_vortex(f0)?;
    let spec = CanonicalMapSpec::tangential(f0, vortex.omega)?;
    let map = canonical_harmonic_map(&spec)?;
    let (w_direct, delta_table) = renormalized_energy_direct(&map, deltas)?;
    let w_formula = renormalized_energy_formula(&spec, 256)?;
    let (w0_value, _) = crate::conformal::w0(&spec.f, 256)?;
    let spectral = -spec.f.d1(Complex64::ZERO).norm().ln();
    let (fem, diff) = match mesh {
        Some(m) => {
            let r = green_mass_consistency(f0, vortex.omega, m)?;
            (Some(r.fem), Some(r.diff))
        }
        None => (None, None),
    };
    Ok(RenormReport {
        vortex_omega: vortex.omega,
        vortex_point: vortex.point,
        vortex_value: vortex.value,
        w_direct,
        delta_table,
        w_formula,
        w0: w0_value,
        route_discrepancy: (w_direct - w_formula).abs(),
        green_mass_spectral: spectral,
        green_mass_fem: fem,
        green_mass_diff: diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{identity_map, taylor_map};
    use crate::curves::JordanCurve;
    use crate::disk::HarmonicSeries;
    use crate::mesh::triangulate_curve;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quad_map() -> ConformalMap {
        taylor_map(vec![Complex64::ZERO, Complex64::ONE, c(0.2, 0.0)])
    }

    #[test]
    fn canonical_map_disk_center_closed_forms() {
        // Tangential data: u(x) = ix/|x|.
        let spec = CanonicalMapSpec::tangential(&identity_map(), Complex64::ZERO).unwrap();
        let map = canonical_harmonic_map(&spec).unwrap();
        assert_eq!(map.degree, 1);
        assert!(map.boundary_residual < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = Complex64::from_polar(
                0.2 + 0.7 * rng.random::<f64>(),
                2.0 * PI * rng.random::<f64>(),
            );
            let expect = Complex64::i() * x / x.norm();
            assert!((map.eval(x).unwrap() - expect).norm() < 1e-9);
        }
        // Power data e^{i theta}: u(x) = x/|x|.
        let spec2 =
            CanonicalMapSpec::with_data(&identity_map(), Complex64::ZERO, |zeta| zeta).unwrap();
        let map2 = canonical_harmonic_map(&spec2).unwrap();
        let x = c(0.3, -0.4);
        assert!((map2.eval(x).unwrap() - x / x.norm()).norm() < 1e-10);
    }

    #[test]
    fn canonical_map_offcenter_matches_frame_oracle() {
        // Tangential data with the singularity at a = 0.3: the canonical
        // map is the pushforward of the polar frame through the rebased
        // Mobius map, i zeta f'(zeta)/|.| at zeta = f^{-1}(x).
        let spec = CanonicalMapSpec::tangential(&identity_map(), c(0.3, 0.0)).unwrap();
        let map = canonical_harmonic_map(&spec).unwrap();
        assert!((map.spec.a - c(0.3, 0.0)).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let x = Complex64::from_polar(
                0.8 * rng.random::<f64>(),
                2.0 * PI * rng.random::<f64>(),
            );
            if (x - map.spec.a).norm() < 0.05 {
                continue;
            }
            let zeta = invert_multi_seed(&spec.f, x).unwrap();
            let t = Complex64::i() * zeta * spec.f.d1(zeta);
            let expect = t / t.norm();
            assert!((map.eval(x).unwrap() - expect).norm() < 1e-8);
        }
    }

    #[test]
    fn phase_closure_rejects_fractional_winding() {
        let potential = PotentialField {
            log_coeff: 0.5,
            harmonic: HarmonicSeries::from_coeffs(4, vec![Complex64::ZERO; 9]),
        };
        match check_phase_closure(&potential) {
            Err(Error::PhaseClosureFailure { got, expected }) => {
                assert!((got - PI).abs() < 1e-9);
                assert!(expected.abs() < 1e-12 || (expected - 2.0 * PI).abs() < 1e-9);
            }
            other => panic!("expected PhaseClosureFailure, got {other:?}"),
        }
    }

    #[test]
    fn direct_energy_disk_closed_forms() {
        let deltas = [0.02, 0.01, 0.005];
        let spec = CanonicalMapSpec::tangential(&identity_map(), Complex64::ZERO).unwrap();
        let map = canonical_harmonic_map(&spec).unwrap();
        let (w, table) = renormalized_energy_direct(&map, &deltas).unwrap();
        assert!(w.abs() < 1e-6, "W(0) = {w}");
        assert_eq!(table.len(), 3);

        let spec5 = CanonicalMapSpec::tangential(&identity_map(), c(0.5, 0.0)).unwrap();
        let map5 = canonical_harmonic_map(&spec5).unwrap();
        let (w5, _) = renormalized_energy_direct(&map5, &deltas).unwrap();
        let exact = -2.0 * PI * (1.0 - 0.25f64).ln();
        assert!((w5 - exact).abs() < 1e-3, "W(0.5) = {w5} vs {exact}");
    }

    #[test]
    fn formula_route_closed_forms() {
        let spec = CanonicalMapSpec::tangential(&identity_map(), c(0.5, 0.0)).unwrap();
        let w = renormalized_energy_formula(&spec, 256).unwrap();
        assert!((w - 2.0 * PI * (4.0f64 / 3.0).ln()).abs() < 1e-6);

        let spec_q = CanonicalMapSpec::tangential(&quad_map(), Complex64::ZERO).unwrap();
        let w_q = renormalized_energy_formula(&spec_q, 256).unwrap();
        assert!((w_q - (-PI * (0.84f64).ln())).abs() < 1e-5, "quad W {w_q}");
    }

    #[test]
    fn routes_agree_on_the_quadratic_domain() {
        let f0 = quad_map();
        let vortex = optimal_vortex(&f0).unwrap();
        let spec = CanonicalMapSpec::tangential(&f0, vortex.omega).unwrap();
        let map = canonical_harmonic_map(&spec).unwrap();
        let (w_direct, _) = renormalized_energy_direct(&map, &[0.02, 0.01, 0.005]).unwrap();
        let w_formula = renormalized_energy_formula(&spec, 256).unwrap();
        assert!(
            (w_direct - w_formula).abs() < 1e-2,
            "direct {w_direct} vs formula {w_formula}"
        );
    }

    #[test]
    fn optimal_vortex_closed_forms() {
        let id = optimal_vortex(&identity_map()).unwrap();
        assert!(id.omega.norm() < 1e-8);
        assert!((id.value - 1.0).abs() < 1e-10);

        // Stationarity of (1-t^2)(1+0.4t): 0.6 t^2 + t - 0.2 = 0.
        let quad = optimal_vortex(&quad_map()).unwrap();
        let t = 0.18046042171636988;
        assert!((quad.omega - c(t, 0.0)).norm() < 5e-7, "omega {}", quad.omega);
        assert!((quad.point - c(t + 0.2 * t * t, 0.0)).norm() < 1e-6);
        assert!((quad.point.re - 0.18697).abs() < 1e-4);
        assert!((quad.value - 1.0372673).abs() < 1e-6, "value {}", quad.value);

        // Odd cubic map: even objective, argmax at the center.
        let cubic = taylor_map(vec![Complex64::ZERO, Complex64::ONE, Complex64::ZERO, c(0.1, 0.0)]);
        let v = optimal_vortex(&cubic).unwrap();
        assert!(v.omega.norm() < 1e-7, "cubic omega {}", v.omega);
    }

    #[test]
    fn optimal_vortex_is_rebasing_invariant() {
        let f0 = quad_map();
        let base = optimal_vortex(&f0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..3 {
            let om = Complex64::from_polar(
                0.6 * rng.random::<f64>(),
                2.0 * PI * rng.random::<f64>(),
            );
            let rebased = f0.rebase(om).unwrap();
            let v = optimal_vortex(&rebased).unwrap();
            assert!(
                (v.point - base.point).norm() < 1e-5,
                "argmax moved: {} vs {}",
                v.point,
                base.point
            );
        }
    }

    #[test]
    fn green_mass_disk_consistency() {
        let mesh = triangulate_curve(&JordanCurve::unit_circle(), 0.04).unwrap();
        let r = green_mass_consistency(&identity_map(), c(0.3, 0.0), &mesh).unwrap();
        assert!((r.spectral - (-(0.91f64).ln())).abs() < 1e-12);
        assert!(r.diff < 8e-3, "diff {}", r.diff);
        let r0 = green_mass_consistency(&identity_map(), Complex64::ZERO, &mesh).unwrap();
        assert!(r0.spectral.abs() < 1e-12);
        assert!(r0.diff < 5e-3);
    }

    #[test]
    fn mu_decomposition_disk_tangential_is_constant() {
        let u = |x: Complex64| Complex64::i() * x / x.norm();
        let green = |x: Complex64| x.norm().ln();
        let dec =
            mu_decomposition(&u, &green, Complex64::ZERO, 0.2, 0.8, 16, 64, 1e-6, 1e-4).unwrap();
        assert!(dec.closedness_residual < 1e-8);
        assert!(dec.harmonicity_residual < 1e-8);
        for row in &dec.mu {
            for &v in row {
                assert!(v.abs() < 1e-8, "mu should vanish, got {v}");
            }
        }
    }

    #[test]
    fn mu_decomposition_recovers_log_derivative() {
        // Canonical tangential map on f0(D), f0 = z + 0.2 z^2, vortex at
        // f0(0) = 0: mu(x) = ln|f0'(f0^{-1}(x))| exactly (normalization
        // fixed since f0'(0) = 1).
        let f0 = quad_map();
        let spec = CanonicalMapSpec::tangential(&f0, Complex64::ZERO).unwrap();
        let map = canonical_harmonic_map(&spec).unwrap();
        let u = move |x: Complex64| map.eval(x).unwrap();
        let f0_green = quad_map();
        let green = move |x: Complex64| invert_multi_seed(&f0_green, x).unwrap().norm().ln();
        let dec =
            mu_decomposition(&u, &green, Complex64::ZERO, 0.1, 0.55, 16, 64, 1e-6, 1e-4).unwrap();
        let f0b = quad_map();
        let mut worst = 0.0f64;
        for (i, &r) in dec.radii.iter().enumerate() {
            for (j, &t) in dec.thetas.iter().enumerate() {
                let x = Complex64::from_polar(r, t);
                let zeta = invert_multi_seed(&f0b, x).unwrap();
                let oracle = f0b.d1(zeta).norm().ln();
                worst = worst.max((dec.mu[i][j] - oracle).abs());
            }
        }
        assert!(worst < 1e-4, "mu mismatch {worst}");
        assert!(dec.closedness_residual < 1e-6, "closedness {}", dec.closedness_residual);
    }

    #[test]
    fn report_for_the_disk() {
        let report = renorm_report(&identity_map(), None, &[0.02, 0.01, 0.005]).unwrap();
        assert!(report.vortex_omega.norm() < 1e-8);
        assert!(report.w_formula.abs() < 1e-8);
        assert!(report.route_discrepancy < 1e-4);
        assert!(report.w0.abs() < 1e-8);
        assert!(report.green_mass_spectral.abs() < 1e-10);
        assert!(report.green_mass_fem.is_none());
    }
}
