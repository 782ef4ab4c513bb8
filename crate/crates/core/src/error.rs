use alloc::string::String;

/// Errors raised by field construction and the numerical operators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    Stability { dt: f64, limit: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn arg(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// `max |E|` exceeds the small-strain guard of the Bravais metric.
    SmallStrainGuard { max_strain: f64, guard: f64 },
    /// A screw core radius below two grid spacings.
    UnresolvedCore { core_radius: f64, spacing: f64 },
    /// A density blob narrower than two grid spacings.
    UnresolvedBlob { width: f64, spacing: f64 },
    /// Disclination content along a path above the single-valuedness
    /// threshold; Bravais rotation and distortion are path dependent.
    PathDependent { disclination_flux: f64, threshold: f64 },
    /// `|C_I - C_V|` exceeds the point-defect guard.
    ConcentrationGuard { max_excess: f64, guard: f64 },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            Self::SmallStrainGuard { max_strain, guard } => {
                write!(f, "max |E| = {max_strain:e} exceeds the small-strain guard {guard:e}")
            }
            Self::UnresolvedCore { core_radius, spacing } => {
                write!(f, "screw core radius {core_radius:e} is under two grid spacings ({spacing:e})")
            }
            Self::UnresolvedBlob { width, spacing } => {
                write!(f, "blob width {width:e} is under two grid spacings ({spacing:e})")
            }
            Self::PathDependent { disclination_flux, threshold } => write!(
                f,
                "disclination flux {disclination_flux:e} above {threshold:e}: rotation and distortion are path dependent"
            ),
            Self::ConcentrationGuard { max_excess, guard } => {
                write!(f, "max |C_I - C_V| = {max_excess:e} exceeds the guard {guard:e}")
            }
        }
    }
}
