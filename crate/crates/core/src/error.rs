use thiserror::Error;

/// Crate-wide error type. Soft conditions (iteration caps, core truncation)
/// are reported as flags on results, not as errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate tangent at parameter {t}: |curve'| = {mag:.3e}")]
    DegenerateTangent { t: f64, mag: f64 },
    #[error("winding number {raw:.6} is not within 0.25 of an integer")]
    UnresolvedWinding { raw: f64 },
    #[error("boundary data jumps {jump:.4} rad between samples {index} and {index}+1; refine the grid")]
    PhaseJump { index: usize, jump: f64 },
    #[error("curve self-intersects near parameters {t1:.4} and {t2:.4}")]
    SelfIntersection { t1: f64, t2: f64 },
    #[error("coincident samples: zero chord between parameters {t1:.4} and {t2:.4}")]
    ZeroChord { t1: f64, t2: f64 },
    #[error("point ({0}, {1}) lies outside the open unit disk")]
    OutsideDisk(f64, f64),
    #[error("quadrature tail did not converge: relative two-level difference {rel:.3e}")]
    NonconvergentTail { rel: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("Neumann data incompatible: mean {mean:.6} vs degree {degree}")]
    CompatibilityFailure { mean: f64, degree: i64 },
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("point too close to the boundary: dist {dist:.3e} <= {limit:.3e}")]
    TooCloseToBoundary { dist: f64, limit: f64 },
    #[error("line search failed to decrease the energy at iteration {iter}")]
    NonMonotone { iter: usize },
    #[error("phase loop integral {got:.8} differs from {expected:.8}")]
    PhaseClosureFailure { got: f64, expected: f64 },
    #[error("1-form not closed: max loop residual {residual:.3e}")]
    NonClosedForm { residual: f64 },
    #[error("limit extrapolation did not settle: spread {spread:.3e}")]
    NonconvergentLimit { spread: f64 },
    #[error("argmax escaped to the boundary: |omega| = {modulus:.6}")]
    BoundaryArgmax { modulus: f64 },
    #[error("conformal inverse failed at {failures} of {total} points")]
    InverseFailure { failures: usize, total: usize },
    #[error("field modulus {modulus:.3e} too small at ({x}, {y}) outside the core", x = point.0, y = point.1)]
    ModulusTooSmall { modulus: f64, point: (f64, f64) },
    #[error("flow did not return to the anchor within time {max_time:.3}")]
    NoReturn { max_time: f64 },
    #[error("flow trajectory reached the vortex core at s = {s:.4}")]
    CoreReached { s: f64 },
    #[error("holomorphy residual {residual:.3e} exceeds tolerance")]
    HolomorphyFailure { residual: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code class: 2 usage/config, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
