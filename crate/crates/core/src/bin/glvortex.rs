//! Command-line front end: mesh | solve-gl | renorm | frame-flow | run |
//! verify. Exit codes: 0 ok, 1 check failure, 2 usage/config error,
//! 3 numerical failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use glvortex::checks::{run_criterion, suite};
use glvortex::curves::degree;
use glvortex::error::{Error, Result};
use glvortex::frame::{frame_from_conformal, frame_from_gl, integrate_flow};
use glvortex::gl::bad_disks;
use glvortex::pipeline::{load_config, stage_gl, stage_mesh, w_landscape_cells, write_json};
use glvortex::renorm::{optimal_vortex, renorm_report};
use glvortex::svg;

#[derive(Parser)]
#[command(name = "glvortex", version, about = "Ginzburg-Landau vortex toolkit")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Triangulate the configured domain and write mesh.json + mesh.svg.
    Mesh {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the eps continuation and write per-stage fields and diagnostics.
    SolveGl {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Renormalized-energy report and W landscape for the configured domain.
    Renorm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Integrate the frame flow and write flow_result.json + streamlines.
    FrameFlow {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Full pipeline: mesh, GL continuation, renorm, frame flow, plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Acceptance checks; prints measured vs expected vs tolerance.
    Verify {
        #[arg(long, default_value = "fast")]
        suite: String,
    },
}

fn read_config(path: &PathBuf) -> Result<glvortex::pipeline::ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    load_config(&text)
}

fn ensure_dir(cfg_name: &str, out: &PathBuf) -> Result<PathBuf> {
    let dir = out.join(cfg_name);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_mesh(config: &PathBuf, out: &PathBuf) -> Result<()> {
    let cfg = read_config(config)?;
    let (_, mesh, _, _) = stage_mesh(&cfg)?;
    let dir = ensure_dir(&cfg.name, out)?;
    write_json(&dir, "mesh.json", &mesh)?;
    let ones = vec![Complex64::ONE; mesh.num_vertices()];
    fs::write(dir.join("mesh.svg"), svg::field_heatmap(&mesh, &ones, "mesh"))?;
    println!(
        "mesh: {} vertices, {} triangles, min angle {:.1} deg -> {}",
        mesh.num_vertices(),
        mesh.triangles.len(),
        mesh.min_angle_deg,
        dir.display()
    );
    Ok(())
}

fn cmd_solve_gl(config: &PathBuf, out: &PathBuf) -> Result<()> {
    let cfg = read_config(config)?;
    let (_, mesh, data, values) = stage_mesh(&cfg)?;
    let data_degree = degree(&data, 4096)?;
    let (solutions, records) = stage_gl(&cfg, &mesh, &values, data_degree)?;
    let dir = ensure_dir(&cfg.name, out)?;
    write_json(&dir, "gl_results.json", &records)?;
    for (k, sol) in solutions.iter().enumerate() {
        write_json(
            &dir,
            &format!("field_{k}.json"),
            &serde_json::json!({ "eps": sol.eps, "u": sol.u }),
        )?;
        fs::write(
            dir.join(format!("modulus_{k}.svg")),
            svg::field_heatmap(&mesh, &sol.u, &format!("|u| at eps={}", sol.eps)),
        )?;
    }
    for r in &records {
        println!(
            "eps={:<6} energy={:.6} clusters={} max|u|={:.6}",
            r.eps,
            r.energy,
            r.clusters.disks.len(),
            r.max_modulus
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_renorm(config: &PathBuf, out: &PathBuf) -> Result<()> {
    let cfg = read_config(config)?;
    let f0 = cfg
        .domain
        .map()?
        .ok_or_else(|| Error::Config("domain: renorm needs a known uniformization".into()))?;
    let (_, mesh, _, _) = stage_mesh(&cfg)?;
    let report = renorm_report(&f0, Some(&mesh), &cfg.deltas)?;
    let dir = ensure_dir(&cfg.name, out)?;
    write_json(&dir, "renorm_report.json", &report)?;
    fs::write(
        dir.join("w_heatmap.svg"),
        svg::cell_heatmap(
            &w_landscape_cells(&f0, report.w0, 16, 48),
            "renormalized energy over vortex location",
        ),
    )?;
    println!(
        "vortex a*=({:.6}, {:.6})  W_formula={:.6}  W_direct={:.6}  discrepancy={:.2e}",
        report.vortex_point.re,
        report.vortex_point.im,
        report.w_formula,
        report.w_direct,
        report.route_discrepancy
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_frame_flow(config: &PathBuf, out: &PathBuf) -> Result<()> {
    let cfg = read_config(config)?;
    let (_, mesh, data, values) = stage_mesh(&cfg)?;
    let data_degree = degree(&data, 4096)?;
    // GL-sourced frame when the run leaves a single vortex; conformal
    // frame of the rebased uniformization otherwise.
    let frame = if data_degree == 1 {
        let (solutions, _) = stage_gl(&cfg, &mesh, &values, data_degree)?;
        let last = solutions.last().unwrap();
        let report = bad_disks(&mesh, &last.u, last.eps, 0.5);
        match report.disks.as_slice() {
            [one] => frame_from_gl(&mesh, last, Some(one.center))?,
            _ => {
                return Err(Error::Config(format!(
                    "frame-flow: expected one vortex, found {}",
                    report.disks.len()
                )))
            }
        }
    } else {
        let f0 = cfg.domain.map()?.ok_or_else(|| {
            Error::Config("domain: frame-flow needs degree-1 data or a known map".into())
        })?;
        let best = optimal_vortex(&f0)?;
        frame_from_conformal(&f0.rebase(best.omega)?)?
    };
    let flow = integrate_flow(&frame, cfg.flow.s_min, cfg.flow.n_s, cfg.flow.n_theta)?;
    let dir = ensure_dir(&cfg.name, out)?;
    write_json(&dir, "flow_result.json", &flow)?;
    fs::write(dir.join("streamlines.svg"), svg::streamlines(&flow, "frame flow streamlines"))?;
    println!(
        "rho={:.8}  closure={:.2e}  commutator={:.2e}  reconstructed={}",
        flow.rho,
        flow.closure_error,
        flow.commutator_error,
        flow.reconstructed.is_some()
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_run(config: &PathBuf, out: &PathBuf) -> Result<()> {
    let cfg = read_config(config)?;
    let dir = glvortex::pipeline::run(&cfg, out)?;
    println!("wrote {}", dir.display());
    Ok(())
}

/// Returns the process exit code: 0 all pass, 1 any failure.
fn cmd_verify(suite_name: &str) -> Result<u8> {
    let ids = suite(suite_name)?;
    let mut all_pass = true;
    println!("{:<52} {:>14} {:>14} {:>9}  {}", "check", "measured", "expected", "tol", "verdict");
    for id in ids {
        let result = run_criterion(id)?;
        all_pass &= result.pass();
        println!(
            "criterion {:2}: {} [{}] ({:.1}s)",
            result.id,
            result.title,
            if result.pass() { "PASS" } else { "FAIL" },
            result.seconds
        );
        for c in &result.checks {
            println!(
                "  {:<50} {:>14.6e} {:>14.6e} {:>9.1e}  {}",
                c.name,
                c.measured,
                c.expected,
                c.tolerance,
                if c.pass { "ok" } else { "FAIL" }
            );
        }
        for note in &result.notes {
            println!("  note: {note}");
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Mesh { config, out } => cmd_mesh(config, out).map(|()| 0),
        Command::SolveGl { config, out } => cmd_solve_gl(config, out).map(|()| 0),
        Command::Renorm { config, out } => cmd_renorm(config, out).map(|()| 0),
        Command::FrameFlow { config, out } => cmd_frame_flow(config, out).map(|()| 0),
        Command::Run { config, out } => cmd_run(config, out).map(|()| 0),
        Command::Verify { suite } => cmd_verify(suite),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
