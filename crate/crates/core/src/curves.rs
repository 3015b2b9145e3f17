//! Jordan boundary curves and S1-valued boundary data, with degree,
//! H^{1/2} seminorm and chord-arc diagnostics.
//!
//! All curves are parametrized counterclockwise over t in [0,1).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::PI;

use crate::conformal::{check_simple, ConformalMap};
use crate::error::{Error, Result};

/// Trigonometric interpolant sum c_k e^{2 pi i k t}, modes -half..=half.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigCoeffs {
    pub half: usize,
    pub coeffs: Vec<Complex64>,
}

impl TrigCoeffs {
    fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let e = Complex64::from_polar(1.0, 2.0 * PI * t);
        let mut p = Complex64::from_polar(1.0, -2.0 * PI * t * self.half as f64);
        let mut val = Complex64::ZERO;
        let mut der = Complex64::ZERO;
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let k = idx as f64 - self.half as f64;
            val += c * p;
            der += c * p * Complex64::new(0.0, 2.0 * PI * k);
            p *= e;
        }
        (val, der)
    }
}

/// Periodic Gaussian mollification in the curve parameter, realized as a
/// Fourier multiplier e^{-2 (pi k sigma)^2} on a direct DFT of the samples.
fn trig_fit(samples: &[Complex64], sigma: f64, half: usize) -> TrigCoeffs {
    let n = samples.len() as f64;
    let coeffs: Vec<Complex64> = (0..=2 * half)
        .map(|idx| {
            let k = idx as i64 - half as i64;
            let w = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n);
            let mut p = Complex64::ONE;
            let mut acc = Complex64::ZERO;
            for &x in samples {
                acc += x * p;
                p *= w;
            }
            let damp = (-2.0 * (PI * k as f64 * sigma).powi(2)).exp();
            acc * damp / n
        })
        .collect();
    TrigCoeffs { half, coeffs }
}

/// Truncated slow spiral t e^{i ln ln(1/t)} closed by a circular arc of the
/// outer radius and a radial segment, counterclockwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogSpiralCurve {
    pub t_min: f64,
    pub smoothing: f64,
    phi_in: f64,
    /// Parameter breakpoints: [0, s1) circle arc, [s1, s2) radial segment,
    /// [s2, 1) spiral arc from t_min outward.
    breaks: (f64, f64),
    trig: Option<TrigCoeffs>,
}

const SPIRAL_OUTER: f64 = std::f64::consts::E.recip();

impl LogSpiralCurve {
    fn raw(&self, s: f64) -> (Complex64, Complex64) {
        let (s1, s2) = self.breaks;
        let r = SPIRAL_OUTER;
        if s < s1 {
            let theta = self.phi_in * s / s1;
            let z = Complex64::from_polar(r, theta);
            (z, z * Complex64::new(0.0, self.phi_in / s1))
        } else if s < s2 {
            let w = s2 - s1;
            let rho = r + (self.t_min - r) * (s - s1) / w;
            let dir = Complex64::from_polar(1.0, self.phi_in);
            (dir * rho, dir * ((self.t_min - r) / w))
        } else {
            let w = 1.0 - s2;
            let t = self.t_min + (r - self.t_min) * (s - s2) / w;
            let phi = (1.0 / t).ln().ln();
            let z = Complex64::from_polar(t, phi);
            // gamma'(t) = e^{i phi} (1 + i t phi'), phi' = -1/(t ln(1/t)).
            let dz_dt = Complex64::from_polar(1.0, phi)
                * Complex64::new(1.0, -1.0 / (1.0 / t).ln());
            (z, dz_dt * ((r - self.t_min) / w))
        }
    }

    fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let s = t.rem_euclid(1.0);
        match &self.trig {
            Some(tc) => tc.eval(s),
            None => self.raw(s),
        }
    }
}

/// Closed curve in the plane with parameter and tangent access.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JordanCurve {
    Circle { center: Complex64, radius: f64 },
    /// Image of the circle |z| = radius under an injective analytic map.
    AnalyticImage { map: ConformalMap, radius: f64 },
    LogSpiral(LogSpiralCurve),
    Polyline { points: Vec<Complex64> },
}

impl JordanCurve {
    pub fn circle(center: Complex64, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::Config(format!("circle radius {radius} must be positive")));
        }
        Ok(JordanCurve::Circle { center, radius })
    }

    pub fn unit_circle() -> Self {
        JordanCurve::Circle { center: Complex64::ZERO, radius: 1.0 }
    }

    /// Image of the `radius`-circle; rejects maps whose image polyline
    /// self-crosses at 512-sample resolution.
    pub fn from_map(map: ConformalMap, radius: f64) -> Result<Self> {
        if !(0.0 < radius && radius <= 1.0) {
            return Err(Error::Config(format!("sample radius {radius} outside (0, 1]")));
        }
        let curve = JordanCurve::AnalyticImage { map, radius };
        check_simple(&curve.samples(512))?;
        Ok(curve)
    }

    /// Closed polyline through `points`, reoriented counterclockwise.
    pub fn from_polyline(mut points: Vec<Complex64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Config("polyline needs at least 3 vertices".into()));
        }
        let n = points.len();
        let mut area2 = 0.0;
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            if (b - a).norm() < 1e-14 {
                return Err(Error::ZeroChord { t1: i as f64 / n as f64, t2: (i + 1) as f64 / n as f64 });
            }
            area2 += a.re * b.im - a.im * b.re;
        }
        if area2.abs() < 1e-14 {
            return Err(Error::Config("polyline encloses no area".into()));
        }
        if area2 < 0.0 {
            points.reverse();
        }
        let curve = JordanCurve::Polyline { points };
        check_simple(&curve.samples(512))?;
        Ok(curve)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            JordanCurve::Circle { .. } => "circle",
            JordanCurve::AnalyticImage { .. } => "analytic-image",
            JordanCurve::LogSpiral(_) => "log-spiral",
            JordanCurve::Polyline { .. } => "polyline",
        }
    }

    pub fn param(&self, t: f64) -> Complex64 {
        let s = t.rem_euclid(1.0);
        match self {
            JordanCurve::Circle { center, radius } => {
                center + Complex64::from_polar(*radius, 2.0 * PI * s)
            }
            JordanCurve::AnalyticImage { map, radius } => {
                map.eval(Complex64::from_polar(*radius, 2.0 * PI * s))
            }
            JordanCurve::LogSpiral(spec) => spec.eval(s).0,
            JordanCurve::Polyline { points } => {
                let n = points.len();
                let u = s * n as f64;
                let i = (u as usize).min(n - 1);
                let frac = u - i as f64;
                points[i] * (1.0 - frac) + points[(i + 1) % n] * frac
            }
        }
    }

    /// d(param)/dt; one-sided (right piece) at joints of piecewise curves.
    pub fn derivative(&self, t: f64) -> Complex64 {
        let s = t.rem_euclid(1.0);
        match self {
            JordanCurve::Circle { radius, .. } => {
                Complex64::from_polar(*radius, 2.0 * PI * s) * Complex64::new(0.0, 2.0 * PI)
            }
            JordanCurve::AnalyticImage { map, radius } => {
                let z = Complex64::from_polar(*radius, 2.0 * PI * s);
                map.d1(z) * z * Complex64::new(0.0, 2.0 * PI)
            }
            JordanCurve::LogSpiral(spec) => spec.eval(s).1,
            JordanCurve::Polyline { points } => {
                let n = points.len();
                let i = ((s * n as f64) as usize).min(n - 1);
                (points[(i + 1) % n] - points[i]) * n as f64
            }
        }
    }

    pub fn samples(&self, n: usize) -> Vec<Complex64> {
        (0..n).map(|j| self.param(j as f64 / n as f64)).collect()
    }

    /// Cumulative chordal lengths at parameters j/n; entry n is the total.
    pub fn arclength_table(&self, n: usize) -> Vec<f64> {
        let pts = self.samples(n);
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for j in 0..n {
            acc += (pts[(j + 1) % n] - pts[j]).norm();
            table.push(acc);
        }
        table
    }

    pub fn record(&self, n: usize) -> CurveRecord {
        let params = match self {
            JordanCurve::Circle { center, radius } => {
                json!({"center": [center.re, center.im], "radius": radius})
            }
            JordanCurve::AnalyticImage { map, radius } => {
                json!({"map": map, "radius": radius})
            }
            JordanCurve::LogSpiral(s) => json!({"t_min": s.t_min, "smoothing": s.smoothing}),
            JordanCurve::Polyline { points } => json!({"n_vertices": points.len()}),
        };
        CurveRecord {
            kind: self.kind().to_string(),
            params,
            n_samples: n,
            samples: self.samples(n).iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// Serialization form of a curve: kind tag, construction parameters and a
/// uniform sample polyline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveRecord {
    pub kind: String,
    pub params: serde_json::Value,
    pub n_samples: usize,
    pub samples: Vec<[f64; 2]>,
}

/// Unit-modulus boundary data g: [0,1) -> S1.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryData {
    /// Unit tangent field of the carried curve.
    Tangential { curve: JordanCurve },
    /// g(t) = exp(i (degree 2 pi t + sum_k pc_k cos(2 pi k t) + ps_k sin(2 pi k t))).
    PowerPhase { degree: i64, phase_cos: Vec<f64>, phase_sin: Vec<f64> },
    /// Uniform samples, interpolated linearly and renormalized.
    Tabulated { samples: Vec<Complex64> },
}

impl BoundaryData {
    pub fn power(degree: i64) -> Self {
        BoundaryData::PowerPhase { degree, phase_cos: vec![], phase_sin: vec![] }
    }

    pub fn tabulated(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < 8 {
            return Err(Error::Config("tabulated boundary data needs >= 8 samples".into()));
        }
        let mut out = Vec::with_capacity(samples.len());
        for (j, s) in samples.iter().enumerate() {
            let m = s.norm();
            if (m - 1.0).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "tabulated boundary sample {j} has modulus {m:.8}, expected 1"
                )));
            }
            out.push(s / m);
        }
        Ok(BoundaryData::Tabulated { samples: out })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BoundaryData::Tangential { .. } => "tangential",
            BoundaryData::PowerPhase { .. } => "power-with-phase",
            BoundaryData::Tabulated { .. } => "tabulated",
        }
    }

    pub fn degree_hint(&self) -> Option<i64> {
        match self {
            BoundaryData::Tangential { .. } => None,
            BoundaryData::PowerPhase { degree, .. } => Some(*degree),
            BoundaryData::Tabulated { .. } => None,
        }
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let s = t.rem_euclid(1.0);
        match self {
            BoundaryData::Tangential { curve } => {
                let d = curve.derivative(s);
                d / d.norm().max(1e-300)
            }
            BoundaryData::PowerPhase { degree, phase_cos, phase_sin } => {
                let theta = 2.0 * PI * s;
                let mut phase = *degree as f64 * theta;
                for (k, a) in phase_cos.iter().enumerate() {
                    phase += a * ((k + 1) as f64 * theta).cos();
                }
                for (k, b) in phase_sin.iter().enumerate() {
                    phase += b * ((k + 1) as f64 * theta).sin();
                }
                Complex64::from_polar(1.0, phase)
            }
            BoundaryData::Tabulated { samples } => {
                let n = samples.len();
                let u = s * n as f64;
                let i = (u as usize).min(n - 1);
                let frac = u - i as f64;
                let v = samples[i] * (1.0 - frac) + samples[(i + 1) % n] * frac;
                v / v.norm().max(1e-300)
            }
        }
    }

    pub fn samples(&self, n: usize) -> Vec<Complex64> {
        (0..n).map(|j| self.value(j as f64 / n as f64)).collect()
    }

    pub fn record(&self, n: usize) -> BoundaryRecord {
        BoundaryRecord {
            kind: self.kind().to_string(),
            degree_hint: self.degree_hint(),
            samples: self.samples(n).iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub kind: String,
    pub degree_hint: Option<i64>,
    pub samples: Vec<[f64; 2]>,
}

/// Unit tangent field of a counterclockwise curve; the outward normal is
/// -i times the returned value.
pub fn tangent_data(curve: &JordanCurve) -> Result<BoundaryData> {
    for j in 0..512 {
        let t = j as f64 / 512.0;
        let mag = curve.derivative(t).norm();
        if mag < 1e-12 {
            return Err(Error::DegenerateTangent { t, mag });
        }
    }
    Ok(BoundaryData::Tangential { curve: curve.clone() })
}

/// Winding number of a sampled unit field. The central-difference trapezoid
/// of g x g_theta telescopes to sum_j g_j x g_{j+1} = sum_j sin(angle step).
pub fn degree_of_samples(samples: &[Complex64]) -> Result<i64> {
    let n = samples.len();
    let mut raw = 0.0;
    for j in 0..n {
        let a = samples[j];
        let b = samples[(j + 1) % n];
        let jump = (b * a.conj()).arg();
        if jump.abs() >= PI / 2.0 {
            return Err(Error::PhaseJump { index: j, jump });
        }
        raw += a.re * b.im - a.im * b.re;
    }
    raw /= 2.0 * PI;
    let rounded = raw.round();
    if (raw - rounded).abs() > 0.25 {
        return Err(Error::UnresolvedWinding { raw });
    }
    Ok(rounded as i64)
}

/// Degree of boundary data by trapezoid quadrature of (1/2 pi) g x g_theta
/// over at least 256 uniform samples.
pub fn degree(data: &BoundaryData, n_quad: usize) -> Result<i64> {
    degree_of_samples(&data.samples(n_quad.max(256)))
}

/// Squared-increment double integral
/// `int int |g(x) - g(y)|^2 / |x - y|^2 ds_x ds_y`
/// by the product midpoint rule over n x n cells. Cells within one index of
/// the diagonal use the diagonal limit (|g'| / |gamma'|)^2 of the integrand.
pub fn h_half_seminorm(data: &BoundaryData, curve: &JordanCurve, n: usize) -> Result<f64> {
    let n = n.max(512);
    let fd = 1e-6;
    let mut pts = Vec::with_capacity(n);
    let mut gs = Vec::with_capacity(n);
    let mut wts = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    for j in 0..n {
        let t = (j as f64 + 0.5) / n as f64;
        let speed = curve.derivative(t).norm();
        let gp = (data.value(t + fd) - data.value(t - fd)) / (2.0 * fd);
        pts.push(curve.param(t));
        gs.push(data.value(t));
        wts.push(speed / n as f64);
        diag.push(gp.norm_sqr() / (speed * speed).max(1e-300));
    }
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                let gap = (i as i64 - j as i64).rem_euclid(n as i64).min(
                    (j as i64 - i as i64).rem_euclid(n as i64),
                );
                let k = if gap <= 1 {
                    0.5 * (diag[i] + diag[j])
                } else {
                    (gs[i] - gs[j]).norm_sqr() / (pts[i] - pts[j]).norm_sqr()
                };
                acc += k * wts[j];
            }
            acc * wts[i]
        })
        .collect();
    let total: f64 = rows.iter().sum();
    if !total.is_finite() {
        return Err(Error::QuadratureFailure("nonfinite h^1/2 double sum".into()));
    }
    Ok(total)
}

/// Max over sampled point pairs of shorter-arc length / chord length.
pub fn chord_arc_constant(curve: &JordanCurve, n: usize) -> Result<f64> {
    let n = n.max(64);
    let pts = curve.samples(n);
    let table = curve.arclength_table(n);
    let total = table[n];
    let scale = total / n as f64;
    let rows: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst: f64 = 0.0;
            for j in (i + 1)..n {
                let chord = (pts[i] - pts[j]).norm();
                let along = table[j] - table[i];
                let arc = along.min(total - along);
                if chord < 1e-9 * scale {
                    return Err(Error::ZeroChord { t1: i as f64 / n as f64, t2: j as f64 / n as f64 });
                }
                worst = worst.max(arc / chord);
            }
            Ok(worst)
        })
        .collect();
    let mut best: f64 = 0.0;
    for r in rows {
        best = best.max(r?);
    }
    Ok(best)
}

/// Truncated slow log-spiral t -> t e^{i ln ln (1/t)} for t in [t_min, 1/e],
/// closed counterclockwise by the outer circular arc and a radial segment.
/// `smoothing` > 0 mollifies the three joint corners by a periodic Gaussian
/// of that parameter width.
pub fn log_spiral_curve(t_min: f64, smoothing: f64) -> Result<JordanCurve> {
    if !(0.0 < t_min && t_min < SPIRAL_OUTER) {
        return Err(Error::Config(format!("t_min {t_min} outside (0, 1/e)")));
    }
    if smoothing < 0.0 {
        return Err(Error::Config(format!("smoothing {smoothing} must be >= 0")));
    }
    let phi_in = (1.0 / t_min).ln().ln();
    if phi_in < 0.05 {
        // The wedge between spiral and closure arc collapses as t_min -> 1/e.
        return Err(Error::DegenerateTangent { t: t_min, mag: phi_in });
    }
    if phi_in >= 2.0 * PI {
        return Err(Error::SelfIntersection { t1: 0.0, t2: phi_in / (2.0 * PI) });
    }
    let r = SPIRAL_OUTER;
    let len_circle = r * phi_in;
    let len_radial = r - t_min;
    let m = 256;
    let mut len_spiral = 0.0;
    for k in 0..m {
        let t = t_min + (r - t_min) * (k as f64 + 0.5) / m as f64;
        let l = (1.0 / t).ln();
        len_spiral += (1.0 + 1.0 / (l * l)).sqrt() * (r - t_min) / m as f64;
    }
    let total = len_circle + len_radial + len_spiral;
    let breaks = (len_circle / total, (len_circle + len_radial) / total);
    let mut spiral = LogSpiralCurve { t_min, smoothing, phi_in, breaks, trig: None };
    if smoothing > 0.0 {
        let raw: Vec<Complex64> = (0..2048).map(|j| spiral.raw(j as f64 / 2048.0).0).collect();
        let half = ((3.0 / (PI * smoothing)).ceil() as usize).clamp(16, 1023);
        spiral.trig = Some(trig_fit(&raw, smoothing, half));
    }
    let curve = JordanCurve::LogSpiral(spiral);
    check_simple(&curve.samples(1024))?;
    Ok(curve)
}
