//! Experiment pipeline: a JSON config names a domain, boundary data, mesh
//! scale and eps schedule; `run` drives mesh -> GL continuation -> vortex
//! diagnostics -> renormalized energy -> frame flow, writing every artifact
//! (JSON reports, SVG plots) into one output directory. Outputs are
//! byte-deterministic for a fixed config: no timestamps, fixed-order
//! accumulation everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{mobius, taylor_map, ConformalMap};
use crate::curves::{degree, log_spiral_curve, BoundaryData, JordanCurve};
use crate::error::{Error, Result};
use crate::frame::{frame_from_conformal, frame_from_gl, integrate_flow, FlowResult};
use crate::gl::{
    bad_disks, continuation, log_energy_gap, max_modulus_check,
    BadDiskReport, GLConfig, GLSolution,
};
use crate::mesh::{triangulate_curve, TriMesh};
use crate::renorm::{renorm_report, RenormReport};
use crate::svg;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk,
    /// Image of the disk under z + c z^2, univalent for |c| < 1/2.
    Quadratic { c: f64 },
    Mobius { omega: [f64; 2], theta: f64 },
    /// Image under a polynomial with coefficients [c0, c1, ...] as (re, im).
    Taylor { coeffs: Vec<[f64; 2]> },
    LogSpiral { t_min: f64, smoothing: f64 },
}

impl DomainSpec {
    pub fn curve(&self) -> Result<JordanCurve> {
        match self {
            DomainSpec::Disk => Ok(JordanCurve::unit_circle()),
            DomainSpec::LogSpiral { t_min, smoothing } => log_spiral_curve(*t_min, *smoothing),
            _ => JordanCurve::from_map(self.map()?.ok_or_else(|| {
                Error::Config("domain: no uniformization available".into())
            })?, 1.0),
        }
    }

    /// Known uniformization from the disk, when the domain is given by one.
    pub fn map(&self) -> Result<Option<ConformalMap>> {
        Ok(match self {
            DomainSpec::Disk => Some(crate::conformal::identity_map()),
            DomainSpec::Quadratic { c } => {
                if c.abs() >= 0.5 {
                    return Err(Error::Config(format!(
                        "domain.c: |{c}| >= 1/2 is not univalent"
                    )));
                }
                Some(taylor_map(vec![
                    Complex64::ZERO,
                    Complex64::ONE,
                    Complex64::new(*c, 0.0),
                ]))
            }
            DomainSpec::Mobius { omega, theta } => {
                Some(mobius(Complex64::new(omega[0], omega[1]), *theta)?)
            }
            DomainSpec::Taylor { coeffs } => Some(taylor_map(
                coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
            )),
            DomainSpec::LogSpiral { .. } => None,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// Unit tangent of the boundary curve (degree 1 on a Jordan curve).
    Tangential,
    /// e^{i d theta} in the boundary parameter.
    Power { degree: i64 },
    /// e^{i(d theta + sum cos/sin modes)}.
    Phase {
        #[serde(default)]
        degree: i64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl DataSpec {
    pub fn data(&self, curve: &JordanCurve) -> BoundaryData {
        match self {
            DataSpec::Tangential => BoundaryData::Tangential { curve: curve.clone() },
            DataSpec::Power { degree } => BoundaryData::power(*degree),
            DataSpec::Phase { degree, cos, sin } => BoundaryData::PowerPhase {
                degree: *degree,
                phase_cos: cos.clone(),
                phase_sin: sin.clone(),
            },
        }
    }
}

fn default_deltas() -> Vec<f64> {
    vec![0.02, 0.01, 0.005]
}

fn default_flow() -> FlowSpec {
    FlowSpec::default()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub s_min: f64,
    pub n_s: usize,
    pub n_theta: usize,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec { s_min: -1.2, n_s: 48, n_theta: 96 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = GLConfig::default();
        SolverSpec { grad_tol: d.grad_tol, max_iter: d.max_iter }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub domain: DomainSpec,
    pub data: DataSpec,
    pub h: f64,
    pub eps_schedule: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default = "default_flow")]
    pub flow: FlowSpec,
    /// Core radii for the direct renormalized-energy limit.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Semantic checks past the serde schema; messages carry field paths.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::Config(
                "name: must be nonempty [A-Za-z0-9_-] (it names artifact files)".into(),
            ));
        }
        if !(self.h > 0.0 && self.h <= 0.5) {
            return Err(Error::Config(format!("h: {} outside (0, 0.5]", self.h)));
        }
        if self.eps_schedule.is_empty() {
            return Err(Error::Config("eps_schedule: must be nonempty".into()));
        }
        for (i, w) in self.eps_schedule.windows(2).enumerate() {
            if w[1] >= w[0] {
                return Err(Error::Config(format!(
                    "eps_schedule[{}]: {} does not decrease from {}",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        if *self.eps_schedule.last().unwrap() <= 0.0 {
            return Err(Error::Config("eps_schedule: all entries must be positive".into()));
        }
        if !(self.flow.s_min < 0.0) {
            return Err(Error::Config(format!("flow.s_min: {} must be negative", self.flow.s_min)));
        }
        if self.flow.n_s < 7 || self.flow.n_theta < 8 {
            return Err(Error::Config("flow: need n_s >= 7 and n_theta >= 8".into()));
        }
        if self.deltas.len() < 2 {
            return Err(Error::Config("deltas: need at least two core radii".into()));
        }
        if let DomainSpec::LogSpiral { t_min, .. } = self.domain {
            if !(0.0 < t_min && t_min < 0.5) {
                return Err(Error::Config(format!("domain.t_min: {t_min} outside (0, 0.5)")));
            }
        }
        Ok(())
    }

    pub fn gl_config(&self) -> GLConfig {
        GLConfig {
            grad_tol: self.solver.grad_tol,
            max_iter: self.solver.max_iter,
            ..GLConfig::default()
        }
    }
}

/// Parse and validate a config, reporting schema violations with the JSON
/// field path (e.g. `domain.kind`).
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub eps: f64,
    pub energy: f64,
    pub dirichlet: f64,
    pub potential: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub log_energy_gap: f64,
    pub max_modulus: f64,
    pub clusters: BadDiskReport,
    /// min over clusters of dist(center, boundary)/eps; None when vortex-free.
    pub clearance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub config: ExperimentConfig,
    pub package_version: String,
    pub mesh_vertices: usize,
    pub mesh_triangles: usize,
    pub boundary_degree: i64,
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(name.to_string())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<String> {
    fs::write(dir.join(name), text)?;
    Ok(name.to_string())
}

/// Mesh the configured domain and sample its boundary data.
pub fn stage_mesh(
    cfg: &ExperimentConfig,
) -> Result<(JordanCurve, TriMesh, BoundaryData, Vec<Complex64>)> {
    let curve = cfg.domain.curve()?;
    let mesh = triangulate_curve(&curve, cfg.h)?;
    let data = cfg.data.data(&curve);
    let values: Vec<Complex64> = mesh.boundary_param.iter().map(|&t| data.value(t)).collect();
    Ok((curve, mesh, data, values))
}

/// GL continuation plus the per-stage diagnostics of the vortex analysis.
pub fn stage_gl(
    cfg: &ExperimentConfig,
    mesh: &TriMesh,
    boundary_values: &[Complex64],
    data_degree: i64,
) -> Result<(Vec<GLSolution>, Vec<StageRecord>)> {
    let solutions = continuation(mesh, boundary_values, &cfg.eps_schedule, &cfg.gl_config())?;
    let mut records = Vec::with_capacity(solutions.len());
    for sol in &solutions {
        let clusters = bad_disks(mesh, &sol.u, sol.eps, 0.5);
        let clearance = clusters
            .disks
            .iter()
            .map(|d| mesh.boundary_distance(d.center) / sol.eps)
            .min_by(|a, b| a.total_cmp(b));
        records.push(StageRecord {
            eps: sol.eps,
            energy: sol.energy,
            dirichlet: sol.dirichlet,
            potential: sol.potential,
            iterations: sol.iterations,
            grad_norm: sol.grad_norm,
            log_energy_gap: log_energy_gap(sol, data_degree),
            max_modulus: max_modulus_check(&sol.u)?,
            clearance,
            clusters,
        });
    }
    Ok((solutions, records))
}

/// Renormalized-energy landscape cells for the W heatmap: images of a polar
/// grid in the uniformization variable, with W(omega) per cell, using
/// W = w0 - 2 pi ln((1-|omega|^2)|f0'(omega)|).
pub fn w_landscape_cells(
    f0: &ConformalMap,
    w0: f64,
    n_r: usize,
    n_theta: usize,
) -> Vec<([Complex64; 4], f64)> {
    let r_max = 0.92;
    let node = |i: usize, j: usize| -> Complex64 {
        let r = r_max * i as f64 / n_r as f64;
        let t = 2.0 * std::f64::consts::PI * (j % n_theta) as f64 / n_theta as f64;
        Complex64::from_polar(r, t)
    };
    let mut cells = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_r {
        for j in 0..n_theta {
            let quad =
                [node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)];
            let c = 0.25 * (quad[0] + quad[1] + quad[2] + quad[3]);
            let d1 = f0.at(c).1;
            let w = w0 - 2.0 * std::f64::consts::PI * ((1.0 - c.norm_sqr()) * d1.norm()).ln();
            cells.push((quad.map(|z| f0.eval(z)), w));
        }
    }
    cells
}

/// The frame whose flow gets integrated: the GL frame at the final eps when
/// the run produced a single vortex, otherwise the conformal frame of the
/// known uniformization rebased to put the vortex at the origin.
fn choose_frame(
    mesh: &TriMesh,
    last: &GLSolution,
    records: &[StageRecord],
    f0: &Option<ConformalMap>,
    notes: &mut Vec<String>,
) -> Result<Option<crate::frame::FrameField>> {
    let clusters = &records.last().unwrap().clusters.disks;
    if clusters.len() == 1 {
        match frame_from_gl(mesh, last, Some(clusters[0].center)) {
            Ok(frame) => return Ok(Some(frame)),
            Err(e) => notes.push(format!("gl frame unavailable ({e}); trying conformal frame")),
        }
    }
    if let Some(f0) = f0 {
        let target = crate::renorm::optimal_vortex(f0)?;
        let frame = frame_from_conformal(&f0.rebase(target.omega)?)?;
        return Ok(Some(frame));
    }
    notes.push("no frame source: multiple/no vortices and no known uniformization".into());
    Ok(None)
}

pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = out_dir.join(&cfg.name);
    fs::create_dir_all(&dir)?;
    let mut artifacts = Vec::new();
    let mut notes = Vec::new();

    let (curve, mesh, data, values) = stage_mesh(cfg)?;
    let data_degree = degree(&data, 4096)?;
    artifacts.push(write_json(&dir, "mesh.json", &mesh)?);

    let (solutions, records) = stage_gl(cfg, &mesh, &values, data_degree)?;
    for (k, sol) in solutions.iter().enumerate() {
        artifacts.push(write_json(
            &dir,
            &format!("field_{k}.json"),
            &serde_json::json!({ "eps": sol.eps, "u": sol.u }),
        )?);
        artifacts.push(write_text(
            &dir,
            &format!("modulus_{k}.svg"),
            &svg::field_heatmap(&mesh, &sol.u, &format!("|u| at eps={}", sol.eps)),
        )?);
        artifacts.push(write_text(
            &dir,
            &format!("quiver_{k}.svg"),
            &svg::field_quiver(&mesh, &sol.u, &format!("u direction at eps={}", sol.eps)),
        )?);
    }
    artifacts.push(write_json(&dir, "gl_results.json", &records)?);

    let outline: Vec<Complex64> =
        mesh.boundary_loop.iter().map(|&v| mesh.vertices[v]).collect();
    let path: Vec<(f64, Complex64)> = records
        .iter()
        .filter_map(|r| r.clusters.disks.first().map(|c| (r.eps, c.center)))
        .collect();
    artifacts.push(write_text(
        &dir,
        "vortex_path.svg",
        &svg::vortex_path(&outline, &path, "vortex path across the eps schedule"),
    )?);

    let f0 = cfg.domain.map()?;
    match (&f0, data_degree) {
        (Some(f0), 1) => {
            let report: RenormReport = renorm_report(f0, Some(&mesh), &cfg.deltas)?;
            let cells = w_landscape_cells(f0, report.w0, 16, 48);
            artifacts.push(write_json(&dir, "renorm_report.json", &report)?);
            artifacts.push(write_text(
                &dir,
                "w_heatmap.svg",
                &svg::cell_heatmap(&cells, "renormalized energy over vortex location"),
            )?);
        }
        (None, _) => notes.push("renorm skipped: no known uniformization".into()),
        (_, d) => notes.push(format!("renorm skipped: boundary degree {d} != 1")),
    }

    match choose_frame(&mesh, solutions.last().unwrap(), &records, &f0, &mut notes)? {
        Some(frame) => {
            let flow: FlowResult =
                integrate_flow(&frame, cfg.flow.s_min, cfg.flow.n_s, cfg.flow.n_theta)?;
            artifacts.push(write_json(&dir, "flow_result.json", &flow)?);
            artifacts.push(write_text(
                &dir,
                "streamlines.svg",
                &svg::streamlines(&flow, "frame flow streamlines"),
            )?);
        }
        None => notes.push("flow skipped: no frame".into()),
    }

    let manifest = Manifest {
        name: cfg.name.clone(),
        config: cfg.clone(),
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        mesh_vertices: mesh.num_vertices(),
        mesh_triangles: mesh.triangles.len(),
        boundary_degree: data_degree,
        artifacts: artifacts.clone(),
        notes,
    };
    write_json(&dir, "manifest.json", &manifest)?;
    let _ = curve;
    Ok(dir)
}
