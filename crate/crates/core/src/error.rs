use thiserror::Error;

pub type Result<T> = std::result::Result<T, TunnelError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TunnelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The energy sits on a barrier top, where a wavenumber vanishes and the
    /// closed-form amplitude is indeterminate.
    #[error("degenerate energy {energy} eV coincides with barrier height {height} eV")]
    DegenerateEnergy { energy: f64, height: f64 },

    #[error("wavefunction overflow at x = {x} nm (|psi| > 1e30); renormalize the integration")]
    Overflow { x: f64 },

    #[error("expected {expected} classical turning points at E = {energy} eV, found {found}")]
    TurningPoints {
        energy: f64,
        expected: usize,
        found: usize,
    },

    #[error("closed-form turning points require a - 3*sigma1 - 3*sigma2 > 0 (got {margin} nm)")]
    AssumptionViolated { margin: f64 },

    #[error("negative radicand {value} eV at x = {x} nm; turning points are inconsistent with the potential")]
    NegativeRadicand { x: f64, value: f64 },

    #[error("engine {engine} is not applicable: {reason}")]
    NotApplicable { engine: String, reason: String },

    #[error("energy grids differ: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("phase unwrapping failed near E = {energy} eV")]
    Unwrap { energy: f64 },
}

impl TunnelError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TunnelError::InvalidParameter(msg.into())
    }
}
