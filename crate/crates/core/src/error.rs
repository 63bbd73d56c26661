use thiserror::Error;

/// Errors raised by the simulation library.
///
/// Variants split into two families: input/configuration problems
/// ([`Error::is_config`]) and numerical-invariant violations detected while
/// running. The command-line front end maps them onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (only 2 and 4 are supported)")]
    UnsupportedDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unphysical decay matrix: gamma1*gamma2 = {product} < gamma12^2 = {gamma12_sq}")]
    UnphysicalDecay { product: f64, gamma12_sq: f64 },

    #[error("time step too large: jump probability {probability:.4} exceeds {limit} at t = {time}")]
    StepTooLarge {
        probability: f64,
        limit: f64,
        time: f64,
    },

    #[error("density matrix invariant violated at t = {time}: {what}")]
    DensityInvariant { time: f64, what: String },

    #[error("steady state did not converge by t = {t_max} (residual {residual:e})")]
    SteadyStateNotConverged { t_max: f64, residual: f64 },

    #[error("insufficient photons: need at least {needed}, found {found}")]
    InsufficientPhotons { needed: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("correlation grids differ: {0}")]
    GridMismatch(String),

    #[error("all emission rates are zero")]
    ZeroRates,

    #[error("position r = {r} lies inside the sphere of radius {r_tip}")]
    InsideSphere { r: f64, r_tip: f64 },

    #[error("zero field: {0}")]
    ZeroField(&'static str),

    #[error("coincident atom positions")]
    CoincidentPositions,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid input rather than a runtime
    /// numerical failure.
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::StepTooLarge { .. }
                | Error::DensityInvariant { .. }
                | Error::SteadyStateNotConverged { .. }
                | Error::InsufficientPhotons { .. }
                | Error::ZeroRates
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
