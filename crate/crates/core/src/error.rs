use thiserror::Error;

#[derive(Debug, Error)]
pub enum QgError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("assembly error: non-finite forcing value {value} at quadrature point ({x}, {y}), t = {t}")]
    NonFiniteLoad { x: f64, y: f64, t: f64, value: f64 },

    #[error("diverged state: residual has non-finite entries at t = {t}")]
    Diverged { t: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations at t = {t} (residual history: {history:?})")]
    NewtonFailure {
        t: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("linear solver failure: {0}")]
    LinearSolve(String),

    #[error("step {index} failed: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<QgError>,
    },

    #[error("EOC undefined: zero or non-finite error entry in row {row}")]
    EocUndefined { row: usize },

    #[error("decay fit domain error: nonpositive energy {value} at t = {t}")]
    FitDomain { t: f64, value: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QgError>;

impl QgError {
    /// Failures of the numerical solve, as opposed to bad input or I/O.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            QgError::NonFiniteLoad { .. }
                | QgError::Diverged { .. }
                | QgError::NewtonFailure { .. }
                | QgError::LinearSolve(_)
                | QgError::Step { .. }
        )
    }
}
