//! Crate-wide error type.

/// Errors produced by construction, simulation and search routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Matrix or state dimensions are inconsistent.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A bisection bracket where both ends behave the same way.
    #[error(
        "invalid bracket: {lo_db:.3} dB => {lo_outcome}, {hi_db:.3} dB => {hi_outcome} \
         (need failure at the low end and success at the high end)"
    )]
    InvalidBracket {
        lo_db: f64,
        hi_db: f64,
        lo_outcome: &'static str,
        hi_outcome: &'static str,
    },

    /// A mapping that cannot satisfy the column/balance constraints.
    #[error("infeasible mapping: {0}")]
    InfeasibleMapping(String),

    /// Requested SNR lies outside the cached curve lattice.
    #[error("snr {snr_db:.3} dB outside cached range [{lo:.3}, {hi:.3}] dB")]
    SnrOutOfRange { snr_db: f64, lo: f64, hi: f64 },

    /// The transfer curves do not cross often enough for an equal-area balance.
    #[error("no equal-area construction at {snr_db:.3} dB: found {found} interior intersections, need 2")]
    NoEqualArea { snr_db: f64, found: usize },

    /// Unknown code name in the registry.
    #[error("unknown code '{0}'")]
    UnknownCode(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
