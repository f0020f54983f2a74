use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exponent p = {p} is not admissible in dimension {n}: need 2 < p < {crit}")]
    InadmissibleExponent { n: usize, p: f64, crit: String },

    #[error("shooting bracket not found: {0}")]
    BracketNotFound(String),

    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },

    #[error("nonpositive coefficient {name} = {value} at {at:?}")]
    NonpositiveCoefficient {
        name: &'static str,
        value: f64,
        at: Vec<f64>,
    },

    #[error("index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("point lies outside every chart domain: {0:?}")]
    OutsideAtlas(Vec<f64>),

    #[error("geodesic left the atlas")]
    LeavesAtlas,

    #[error("epsilon = {eps} exceeds the cutoff radius r = {r}")]
    EpsilonTooLarge { eps: f64, r: f64 },

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("Gram matrix of kernel fields is singular (condition number {0:e})")]
    SingularGram(f64),

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("fixed-point map is not contracting (ratio {ratio:.3} at iteration {iteration})")]
    NoContraction { ratio: f64, iteration: usize },

    #[error("Newton iteration diverged: {0}")]
    Divergence(String),

    #[error("solution collapsed to the trivial state (sup norm {0:e})")]
    CollapseToZero(f64),

    #[error("source field is not a solution: residual {residual:e} exceeds {tolerance:e}")]
    SourceNotASolution { residual: f64, tolerance: f64 },

    #[error("curve touches the rotation axis (rho = {0})")]
    CurveTouchesAxis(f64),

    #[error("missing evaluator: {0}")]
    MissingEvaluator(&'static str),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Critical Sobolev exponent 2n/(n-2), infinite for n <= 2.
pub fn critical_exponent(n: usize) -> f64 {
    if n <= 2 {
        f64::INFINITY
    } else {
        2.0 * n as f64 / (n as f64 - 2.0)
    }
}

/// Checks 2 < p < 2*_n.
pub fn check_exponent(n: usize, p: f64) -> Result<()> {
    let crit = critical_exponent(n);
    if n == 0 || !(p > 2.0 && p < crit) {
        return Err(Error::InadmissibleExponent {
            n,
            p,
            crit: if crit.is_finite() {
                format!("{crit}")
            } else {
                "inf".to_string()
            },
        });
    }
    Ok(())
}
