use thiserror::Error;

/// Errors raised by the sensing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SenseError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("cut at {cut} leaves no mass on one side")]
    InvalidCut { cut: i64 },

    #[error("expected a vector of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} is outside 1..={max}")]
    IndexRange { index: usize, max: usize },

    #[error("depth {depth} exceeds the supported maximum {max}")]
    DepthTooLarge { depth: u32, max: u32 },

    #[error("resource budget exceeded at depth {depth}: {count} contexts > cap {cap}")]
    Budget { depth: u32, count: usize, cap: usize },

    #[error("exhaustive search over {count} candidates exceeds cap {cap}")]
    SearchBudget { count: u128, cap: u128 },

    #[error("observed prefix has zero probability at index {index}")]
    InconsistentEvidence { index: usize },

    #[error("decoding failed at index {index}: no candidate has positive likelihood")]
    DecodeFailure { index: usize },

    #[error("{0}")]
    Unsupported(&'static str),

    #[error("selection depth {selection} does not match transform depth {plan}")]
    DepthMismatch { selection: u32, plan: u32 },
}

pub type Result<T, E = SenseError> = std::result::Result<T, E>;

pub(crate) fn check_domain(
    name: &'static str,
    value: f64,
    domain: &'static str,
    ok: bool,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(SenseError::Domain {
            name,
            value,
            domain,
        })
    }
}
