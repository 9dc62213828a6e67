use thiserror::Error;

use crate::variational::StationaryResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error("invalid qubit state: {0}")]
    InvalidState(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("ZeroNorm: probe norm {0:e} is not positive")]
    ZeroNorm(f64),
    #[error("OrthogonalSelection: |<f|i>| = {0:e}, weak value undefined")]
    OrthogonalSelection(f64),
    #[error("PostselectionAnnihilated: final norm {0:e}")]
    PostselectionAnnihilated(f64),
    #[error("DomainMismatch: grid [{k_min}, {k_max}] is not [-pi/2, pi/2]")]
    DomainMismatch { k_min: f64, k_max: f64 },
    #[error("EmptySpectrum: captured weight {0:e}")]
    EmptySpectrum(f64),
    #[error("DegenerateConstraints: constraint gradients are parallel")]
    DegenerateConstraints,
    #[error("KernelZero at k\u{2248}{k:.4}")]
    KernelZero { k: f64 },
    #[error("NotConverged after {} iterations (grad_norm {:e})", .0.iterations, .0.grad_norm)]
    NotConverged(Box<StationaryResult>),
    #[error("DegenerateFit: {0}")]
    DegenerateFit(String),
}

impl Error {
    /// Numerical failures as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroNorm(_)
                | Error::PostselectionAnnihilated(_)
                | Error::EmptySpectrum(_)
                | Error::DegenerateConstraints
                | Error::KernelZero { .. }
                | Error::NotConverged(_)
                | Error::DegenerateFit(_)
        )
    }
}
