use thiserror::Error;

/// Errors raised by the measure, model, kernel and estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sample space: {0}")]
    InvalidSpace(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("sample space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("atom {atom} ({label}) is not dominated: base weight {base}, direction weight {direction}")]
    Domination {
        atom: usize,
        label: String,
        base: f64,
        direction: f64,
    },

    #[error("parameter {theta:?} outside plot domain: {reason}")]
    Domain { theta: Vec<f64>, reason: String },

    #[error("plot output invalid at {theta:?}: {reason}")]
    Model { theta: Vec<f64>, reason: String },

    #[error("tangent vectors live at different base points (max deviation {deviation:e})")]
    BaseMismatch { deviation: f64 },

    #[error("curve {curve} misses the base point at t = 0 (deviation {deviation:e})")]
    CurveBase { curve: usize, deviation: f64 },

    #[error("sufficiency check needs a nonempty sample")]
    EmptySample,

    #[error("tangent basis is degenerate: Gram min eigenvalue {min_eigenvalue:e}")]
    DegenerateBasis { min_eigenvalue: f64 },

    #[error("phi table has no entry for the point {0:?}")]
    TableMiss(Vec<f64>),

    #[error("measure {0:?} is not in the image of the plot")]
    NotOnPlot(Vec<f64>),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid estimator: {0}")]
    InvalidEstimator(String),

    #[error("invalid phi map: {0}")]
    InvalidPhi(String),

    #[error("Fisher norm increased under a Markov morphism: gap {gap:e}")]
    MonotonicityViolated { gap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
