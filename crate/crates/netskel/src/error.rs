//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building models, evaluating spectra,
/// solving estimation problems, or driving a reconstruction.
///
/// Node indices in messages are printed 1-based (`y1..yn`) to match the
/// file formats and CLI; the fields themselves hold 0-based indices.
#[derive(Debug, Error)]
pub enum Error {
    /// A transfer-function denominator is numerically zero at a grid frequency.
    #[error("denominator vanishes at grid frequency index {index}")]
    DenominatorVanishes { index: usize },

    /// A per-frequency matrix is singular or too ill-conditioned to invert.
    #[error("matrix singular at grid frequency index {index} (condition estimate {cond:.3e})")]
    SingularAtFrequency { index: usize, cond: f64 },

    /// The frequency grid cannot resolve the requested computation.
    #[error("frequency grid too coarse: {detail}")]
    ResolutionTooCoarse { detail: String },

    /// The zero-lag dependency graph contains a cycle, so the model is not
    /// well posed as a sample-by-sample recursion.
    #[error("algebraic loop among zero-lag edges: {}", fmt_cycle(.cycle))]
    AlgebraicLoop { cycle: Vec<usize> },

    /// A simulated trajectory left the guard band and is considered divergent.
    #[error("simulation diverged at node y{} step {step}", .node + 1)]
    DivergenceDetected { node: usize, step: usize },

    /// The regressor spectral block is singular at some grid frequency.
    #[error("regressor spectrum singular at grid frequency index {index} (condition estimate {cond:.3e})")]
    SingularRegressorSpectrum { index: usize, cond: f64 },

    /// Filter energy beyond the trusted lag range is too large for the
    /// truncated representation to be meaningful.
    #[error("filter tail carries {fraction:.3e} of total energy (limit {limit:.1e}); increase the grid size or maximum lag")]
    TailTooHeavy { fraction: f64, limit: f64 },

    /// The normal equations are singular even after ridge regularization.
    #[error("regressor Gram matrix is singular")]
    GramSingular,

    /// A neighborhood pool exceeds the configured subset-search cap.
    #[error("subset search pool has {pool} nodes, above the cap of {cap}")]
    SearchBudgetExceeded { pool: usize, cap: usize },

    /// Two computations that must agree returned different verdicts.
    #[error("inconsistent separation verdicts for pair {{y{}, y{}}}", .i + 1, .j + 1)]
    NumericalInconsistency { i: usize, j: usize },

    /// Random model generation exhausted its rejection budget.
    #[error("random model generation failed after {rounds} rejection rounds")]
    GenerationFailed { rounds: usize },

    /// A model violates a structural requirement.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A regressor specification or query violates a structural requirement.
    #[error("invalid regressor specification: {0}")]
    InvalidSpec(String),

    /// Malformed input file or command-line argument.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_cycle(cycle: &[usize]) -> String {
    cycle
        .iter()
        .map(|&v| format!("y{}", v + 1))
        .collect::<Vec<_>>()
        .join(" -> ")
}
