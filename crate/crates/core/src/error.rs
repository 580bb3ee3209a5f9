use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("non-finite {field} at node {node}")]
    Numeric { field: &'static str, node: usize },

    #[error("integration failed at T = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("state corruption: {0}")]
    StateCorruption(String),

    #[error("diagnostic bound violated: {0}")]
    Diagnostic(String),

    #[error(
        "Eulerian oracle stopped at t = {t}: max |u_x| = {max_slope:.3e} exceeds the blow-up guard \
         (approaching wave breaking; the Eulerian form cannot be continued)"
    )]
    PreBreakingLimit { t: f64, max_slope: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}
