use thiserror::Error;

/// Errors produced by the field samplers, mesh builders, assembly and the
/// Monte Carlo driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no closed-form spectrum for covariance kind `{kind}`")]
    SpectrumUnavailable { kind: &'static str },

    #[error("quadrature resolution m = {m} is below the requested cutoff n = {n}")]
    InsufficientResolution { m: usize, n: usize },

    #[error("eigensolve failed: {0}")]
    EigenSolve(String),

    #[error("point ({x}, {y}) lies outside the computational domain")]
    DomainPoint { x: f64, y: f64 },

    #[error(
        "coefficient query at ({x}, {y}) sits on a partition interface and no cell id was supplied"
    )]
    AmbiguousInterface { x: f64, y: f64 },

    #[error(
        "partition is degenerate: interface lines {a} and {b} are separated by less than {min_gap}"
    )]
    DegeneratePartition { a: f64, b: f64, min_gap: f64 },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("diffusion coefficient is not positive at quadrature point ({x}, {y}): a = {value}")]
    CoefficientInvalid { x: f64, y: f64, value: f64 },

    #[error("linear solve failed at time step {step}: {message}")]
    Solver { step: usize, message: String },

    #[error("invalid configuration for field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("sample with seed {seed} failed at level {level}: {source}")]
    Sample {
        seed: u64,
        level: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Attach (seed, level) provenance to a failure inside one Monte Carlo sample.
    pub fn in_sample(self, seed: u64, level: u32) -> Self {
        Error::Sample {
            seed,
            level,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
