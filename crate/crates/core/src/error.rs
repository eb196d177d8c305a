use alloc::string::String;

/// Errors raised by the field, spin, geometry, topology and dynamics layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// `|B|` fell below the degeneracy threshold: the dressed bands touch.
    #[error("gap closes at (t={t}, x={x}): |B|={magnitude:e} is below {threshold:e}")]
    Degenerate {
        t: f64,
        x: f64,
        magnitude: f64,
        threshold: f64,
    },
    /// The stereographic coordinate is singular (`|B| + B3` is too small).
    #[error("z-patch is singular: |B|+B3={value:e} is below {threshold:e}")]
    PolePatch { value: f64, threshold: f64 },
    /// Two neighbouring states are (nearly) orthogonal, so the link phase is undefined.
    #[error("link overlap {modulus:e} is too small to define a phase; refine the grid")]
    ZeroOverlap { modulus: f64 },
    /// A plaquette phase is too large for the lattice sum to be trusted.
    #[error("plaquette phase {phase} exceeds pi/2; refine the grid")]
    RefineGrid { phase: f64 },
    /// The integrated velocity exceeded the configured bound.
    #[error("|v|={speed} exceeds the bound {bound} at t={t}; the adiabatic model is no longer valid")]
    VelocityBound { t: f64, speed: f64, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for every error that signals a closed gap somewhere.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate { .. })
    }
}

pub type Result<T> = core::result::Result<T, Error>;
