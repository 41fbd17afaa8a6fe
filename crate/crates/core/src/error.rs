use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants map onto the failure classes the CLI reports: everything except
/// [`Error::Usage`] is a domain error (exit status 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("ambiguous input: {0}")]
    Ambiguity(String),

    #[error("extrapolation error: t = {t} outside curve span [0, {max}]")]
    Extrapolation { t: f64, max: f64 },

    #[error("singular inversion: {0}")]
    SingularInversion(String),

    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("degenerate step: {0}")]
    DegenerateStep(String),

    #[error("parameter boundary: {0}")]
    Boundary(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("optimization failed after {restarts} restarts (best objective {best_objective})")]
    OptimizationFailed {
        restarts: usize,
        best_objective: f64,
        best_point: Vec<f64>,
    },

    #[error("ingestion failed for {path}:\n{}", .problems.join("\n"))]
    Ingestion { path: String, problems: Vec<String> },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_ordered(t: f64, maturity: f64) -> Result<()> {
    if maturity < t {
        return Err(Error::Ordering(format!(
            "maturity {maturity} precedes valuation time {t}"
        )));
    }
    Ok(())
}
