use std::fmt;

/// Resonance whose pole guard was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleMode {
    Readout,
    Filter,
    /// A normal mode of a lumped network.
    Hybrid,
}

impl fmt::Display for PoleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoleMode::Readout => f.write_str("readout"),
            PoleMode::Filter => f.write_str("filter"),
            PoleMode::Hybrid => f.write_str("hybrid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A field of an input value failed validation.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error(
        "{freq_hz} Hz lies within the pole guard band of the {mode} resonance at {pole_hz} Hz"
    )]
    Pole {
        mode: PoleMode,
        freq_hz: f64,
        pole_hz: f64,
    },

    #[error("no sign change between {lo_hz} Hz and {hi_hz} Hz")]
    Bracket { lo_hz: f64, hi_hz: f64 },

    #[error(
        "notch frequency {notch_hz} Hz coincides with the resonator frequency {resonator_hz} Hz"
    )]
    DegenerateNotch { notch_hz: f64, resonator_hz: f64 },

    #[error("notch coupler impedance is unbounded (cm_over_c = 0)")]
    UnboundedCoupler,

    #[error("branch {branch} reflects with gamma = -1; the admittance sum has a pole")]
    CompositionPole { branch: String },

    #[error("system matrix has a growing mode (Im lambda = {growth_rad_s} rad/s)")]
    PassivityViolation { growth_rad_s: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("dephasing integral {integral} is below 1e-30; the noise-photon bound is unbounded")]
    UnboundedBound { integral: f64 },

    #[error("condition cell {0} has no counts")]
    EmptyCell(String),

    #[error("degenerate covariance for {0} shots")]
    DegenerateCovariance(String),

    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Validation { .. } | Error::EmptyCell(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be positive and finite, got {value}"),
        ))
    }
}

pub(crate) fn require_non_negative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be non-negative and finite, got {value}"),
        ))
    }
}
