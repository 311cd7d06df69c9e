use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dipole-dipole interaction is singular at R = 0")]
    Singular,

    #[error("eigensolver did not converge at (rho={rho}, z={z}, phi={phi})")]
    Eigensolver { rho: f64, z: f64, phi: f64 },

    #[error("near-degenerate states {n} and {m} (gap {gap:e})")]
    Degenerate { n: usize, m: usize, gap: f64 },

    #[error("ambiguous eigenvector sign for surface {label} at grid point {index} (overlap {overlap:e})")]
    AmbiguousPhase { index: usize, label: usize, overlap: f64 },

    #[error("ambiguous surface assignment for surface {label} at grid point {index}")]
    AmbiguousTracking { index: usize, label: usize },

    #[error("well state not found: {0}")]
    WellNotFound(String),

    #[error("A^(phi) is singular on the z axis (rho = 0)")]
    OnAxis,

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("trajectory left the validity window at tau={tau} (rho={rho})")]
    DomainExit { tau: f64, rho: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
