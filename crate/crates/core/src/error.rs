use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectral model: {0}")]
    InvalidModel(String),

    #[error("spectral model mismatch: {0}")]
    ModelMismatch(String),

    #[error("{block} block is not Hermitian (violation {violation:.3e}{})", location_suffix(.location))]
    NotHermitian {
        block: &'static str,
        violation: f64,
        location: Option<(usize, usize)>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative weight {value:.3e} at {location}")]
    NegativeWeight { value: f64, location: String },

    #[error("kernel does not decay inside the grid (edge/peak ratio {ratio:.3e})")]
    EdgeDecay { ratio: f64 },

    #[error("grid too coarse: spectral tail fraction {tail:.3e} exceeds {threshold:.1e}")]
    GridTooCoarse { tail: f64, threshold: f64 },

    #[error("phase-space chart is singular at {0}")]
    SingularChart(String),

    #[error("degenerate energies {0} and {1}")]
    DegenerateEnergies(usize, usize),

    #[error("reconstructed density negative ({0:.3e})")]
    NegativeDensity(f64),

    #[error("bath model: {0}")]
    Bath(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

fn location_suffix(loc: &Option<(usize, usize)>) -> String {
    match loc {
        Some((i, j)) => format!(" at node pair ({i}, {j})"),
        None => String::new(),
    }
}
