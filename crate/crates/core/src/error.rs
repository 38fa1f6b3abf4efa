use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("matrix size {sites} exceeds the dense cap of {cap} sites")]
    SizeCap { sites: usize, cap: usize },
    #[error("assembly produced eigenvalue {value:e} below -1e-10")]
    NegativeSpectrum { value: f64 },
    #[error("grid mismatch between field and operator")]
    GridMismatch,
    #[error("quadrature did not converge (achieved {achieved:e})")]
    Quadrature { achieved: f64 },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
